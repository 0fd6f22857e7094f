#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace halo {

enum class Split { train, val, test };

std::string_view to_string(Split s);
/// Accepts "train", "val", "test"; "restval" folds into train.
Split parse_split(std::string_view label);

using ImageId = std::int64_t;

struct ImageRecord {
  ImageId image_id = 0;
  std::string file_name;
  std::vector<std::string> captions;  // annotation-id ascending
  std::optional<Split> split;         // set for records surfaced by get_records

  bool operator==(const ImageRecord&) const = default;
};

void to_json(nlohmann::json& j, const ImageRecord& r);
void from_json(const nlohmann::json& j, ImageRecord& r);

struct CaptionStore {
  std::map<ImageId, ImageRecord> records;
  std::string source_path;

  const ImageRecord& at(ImageId id) const;
  bool contains(ImageId id) const { return records.count(id) != 0; }
  std::size_t size() const { return records.size(); }
};

struct SplitMap {
  std::map<std::string, Split> assignment;  // file_name -> split

  std::size_t size() const { return assignment.size(); }
};

/// Reads a COCO caption annotation document.
///
/// Throws IoError (missing file), ParseError (malformed, names the key), or
/// IntegrityError (annotation for an unknown image id, duplicate image id).
/// Images without annotations are dropped: a record always has captions.
CaptionStore load_captions(const std::filesystem::path& path);

/// Merges several annotation files (e.g. train2014 + val2014) into one store.
CaptionStore load_captions(const std::vector<std::filesystem::path>& paths);

/// Reads a Karpathy-style split document ({"images":[{"filename","split"}]}).
SplitMap load_split(const std::filesystem::path& path);

/// Records present in both the store and the split map, with split assigned,
/// ordered by image id. `only` restricts to one split.
std::vector<ImageRecord> get_records(const CaptionStore& store, const SplitMap& splits,
                                     std::optional<Split> only = std::nullopt);

/// n distinct records drawn without replacement by a seeded partial
/// Fisher-Yates shuffle. Pure in (records, n, seed). Throws RangeError when
/// n exceeds the input size.
std::vector<ImageRecord> sample_records(std::span<const ImageRecord> records, std::size_t n,
                                        std::uint64_t seed);

/// SHA-256 over the canonical JSON serialization of the records in order.
std::string corpus_digest(std::span<const ImageRecord> records);

}  // namespace halo
