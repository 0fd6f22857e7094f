#include "halo/corpus.hpp"

#include <algorithm>
#include <numeric>

#include "halo/digest.hpp"
#include "halo/error.hpp"
#include "halo/rng.hpp"
#include "halo/text.hpp"

namespace halo {
namespace {

using nlohmann::json;

json parse_document(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  try {
    return json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(where + ": missing key '" + key + "'");
  }
  return obj.at(key);
}

template <typename T>
T require_as(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": key '" + std::string(key) + "' has wrong type");
  }
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view label) {
  if (label == "train" || label == "restval") return Split::train;
  if (label == "val") return Split::val;
  if (label == "test") return Split::test;
  throw ParseError("unknown split label '" + std::string(label) + "'");
}

void to_json(nlohmann::json& j, const ImageRecord& r) {
  j = json{{"image_id", r.image_id}, {"file_name", r.file_name}, {"captions", r.captions}};
  if (r.split) j["split"] = to_string(*r.split);
}

void from_json(const nlohmann::json& j, ImageRecord& r) {
  r.image_id = require_as<ImageId>(j, "image_id", "record");
  r.file_name = j.value("file_name", std::string{});
  r.captions = require_as<std::vector<std::string>>(j, "captions", "record");
  if (j.contains("split")) r.split = parse_split(j.at("split").get<std::string>());
}

const ImageRecord& CaptionStore::at(ImageId id) const {
  auto it = records.find(id);
  if (it == records.end()) throw IntegrityError("unknown image_id " + std::to_string(id));
  return it->second;
}

CaptionStore load_captions(const std::filesystem::path& path) {
  const json doc = parse_document(path);
  const std::string where = path.string();
  const json& images = require(doc, "images", where);
  const json& annotations = require(doc, "annotations", where);
  if (!images.is_array()) throw ParseError(where + ": key 'images' is not an array");
  if (!annotations.is_array()) throw ParseError(where + ": key 'annotations' is not an array");

  CaptionStore store;
  store.source_path = path.string();
  for (const auto& img : images) {
    ImageRecord rec;
    rec.image_id = require_as<ImageId>(img, "id", where + " images[]");
    rec.file_name = require_as<std::string>(img, "file_name", where + " images[]");
    if (!store.records.emplace(rec.image_id, std::move(rec)).second) {
      throw IntegrityError(where + ": duplicate image id " + img.at("id").dump());
    }
  }

  struct Ann {
    std::int64_t id;
    ImageId image_id;
    std::string caption;
  };
  std::vector<Ann> anns;
  anns.reserve(annotations.size());
  for (const auto& a : annotations) {
    anns.push_back({require_as<std::int64_t>(a, "id", where + " annotations[]"),
                    require_as<ImageId>(a, "image_id", where + " annotations[]"),
                    require_as<std::string>(a, "caption", where + " annotations[]")});
  }
  std::stable_sort(anns.begin(), anns.end(),
                   [](const Ann& x, const Ann& y) { return x.id < y.id; });
  for (auto& a : anns) {
    auto it = store.records.find(a.image_id);
    if (it == store.records.end()) {
      throw IntegrityError(where + ": annotation " + std::to_string(a.id) +
                           " references unknown image_id " + std::to_string(a.image_id));
    }
    it->second.captions.push_back(std::move(a.caption));
  }
  std::erase_if(store.records, [](const auto& kv) { return kv.second.captions.empty(); });
  return store;
}

CaptionStore load_captions(const std::vector<std::filesystem::path>& paths) {
  CaptionStore merged;
  for (const auto& p : paths) {
    CaptionStore part = load_captions(p);
    for (auto& [id, rec] : part.records) {
      if (!merged.records.emplace(id, std::move(rec)).second) {
        throw IntegrityError(p.string() + ": image id " + std::to_string(id) +
                             " already loaded from another file");
      }
    }
    if (!merged.source_path.empty()) merged.source_path += ";";
    merged.source_path += part.source_path;
  }
  return merged;
}

SplitMap load_split(const std::filesystem::path& path) {
  const json doc = parse_document(path);
  const std::string where = path.string();
  const json& images = require(doc, "images", where);
  if (!images.is_array()) throw ParseError(where + ": key 'images' is not an array");
  SplitMap map;
  for (const auto& img : images) {
    const auto name = require_as<std::string>(img, "filename", where + " images[]");
    const Split split = parse_split(require_as<std::string>(img, "split", where + " images[]"));
    auto [it, inserted] = map.assignment.emplace(name, split);
    if (!inserted && it->second != split) {
      throw IntegrityError(where + ": " + name + " assigned to both " +
                           std::string(to_string(it->second)) + " and " +
                           std::string(to_string(split)));
    }
  }
  return map;
}

std::vector<ImageRecord> get_records(const CaptionStore& store, const SplitMap& splits,
                                     std::optional<Split> only) {
  std::vector<ImageRecord> out;
  for (const auto& [id, rec] : store.records) {
    auto it = splits.assignment.find(rec.file_name);
    if (it == splits.assignment.end()) continue;
    if (only && it->second != *only) continue;
    ImageRecord r = rec;
    r.split = it->second;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ImageRecord> sample_records(std::span<const ImageRecord> records, std::size_t n,
                                        std::uint64_t seed) {
  if (n > records.size()) {
    throw RangeError("cannot sample " + std::to_string(n) + " of " +
                     std::to_string(records.size()) + " records");
  }
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SeededRng rng(seed);
  std::vector<ImageRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
    out.push_back(records[idx[i]]);
  }
  return out;
}

std::string corpus_digest(std::span<const ImageRecord> records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(r);
  return sha256_hex(arr.dump());
}

}  // namespace halo
