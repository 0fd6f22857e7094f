#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "halo/corpus.hpp"
#include "halo/text.hpp"

namespace halo::testing {

/// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("halo-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string golden(const std::string& name) {
  return text::read_file(std::filesystem::path(HALO_GOLDEN_DIR) / name);
}

inline ImageRecord record(ImageId id, std::vector<std::string> captions) {
  ImageRecord r;
  r.image_id = id;
  r.file_name = "img_" + std::to_string(id) + ".jpg";
  r.captions = std::move(captions);
  return r;
}

inline CaptionStore store_of(const std::vector<ImageRecord>& records) {
  CaptionStore store;
  for (const auto& r : records) store.records.emplace(r.image_id, r);
  return store;
}

}  // namespace halo::testing
