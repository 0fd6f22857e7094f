#include "halo/synthetic.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "halo/error.hpp"
#include "halo/popecheck.hpp"
#include "halo/rng.hpp"
#include "halo/text.hpp"

namespace halo::synthetic {
namespace {

using nlohmann::json;

const std::vector<std::string> kPool = {
    "dog",      "bench", "bicycle", "clock",    "bowl",  "laptop",      "pizza",
    "boat",     "train", "bird",    "sheep",    "couch", "vase",        "banana",
    "backpack", "truck", "bus",     "sandwich", "bed",   "potted plant"};

const char* const kCaptionForms[] = {
    "A {a} next to a {b}.",
    "There is a {a} and a {b} in the picture.",
    "A {a} with a {b} close by.",
    "Someone photographed a {a} near a {b}.",
    "A view of a {a} beside a {b}.",
};

const char* const kSceneForms[] = {
    "A scene with {list}.",
    "This picture contains {list}.",
    "A photograph showing {list}.",
    "An image that includes {list}.",
    "A snapshot of {list}.",
};

std::string file_name_for(ImageId id) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "synthetic_%012lld.jpg", static_cast<long long>(id));
  return buf;
}

std::string with_article_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += (i + 1 == items.size()) ? " and " : ", ";
    out += "a " + items[i];
  }
  return out;
}

}  // namespace

std::vector<ImageRecord> records(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<ImageRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ImageRecord r;
    r.image_id = static_cast<ImageId>(i + 1);
    r.file_name = file_name_for(r.image_id);
    const auto a = rng.below(kPool.size());
    auto b = rng.below(kPool.size() - 1);
    if (b >= a) ++b;
    for (const char* form : kCaptionForms) {
      r.captions.push_back(
          text::substitute(text::substitute(form, "a", kPool[a]), "b", kPool[b]));
    }
    out.push_back(std::move(r));
  }
  return out;
}

ProbeFixture probe_fixture(const reference::ProbeCounts& counts, std::size_t n_images,
                           const std::string& describe_prompt) {
  const std::size_t k = counts.items.size();
  if (counts.qh.size() != k || counts.ay.size() != k || counts.ch.size() != k) {
    throw ShapeError("probe counts for " + counts.model + " are ragged");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (counts.qh[i] < 0 || static_cast<std::size_t>(counts.qh[i]) > n_images ||
        counts.ay[i] < 0 || counts.ay[i] > counts.qh[i] || counts.ch[i] < 0 ||
        counts.ch[i] > counts.ay[i]) {
      throw RangeError("probe counts for " + counts.model + "/" + counts.items[i] +
                       " violate ch <= ay <= qh <= images");
    }
  }

  ProbeFixture fx;
  for (std::size_t j = 0; j < n_images; ++j) {
    ImageRecord r;
    r.image_id = static_cast<ImageId>(j + 1);
    r.file_name = file_name_for(r.image_id);
    std::vector<std::string> present;
    std::vector<std::string> mentioned;
    bool any_yes = false;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t first_absent = n_images - static_cast<std::size_t>(counts.qh[i]);
      const std::string& item = counts.items[i];
      if (j < first_absent) {
        present.push_back(item);
        continue;
      }
      const std::size_t rank = j - first_absent;
      const bool yes = rank < static_cast<std::size_t>(counts.ay[i]);
      if (yes && rank < static_cast<std::size_t>(counts.ch[i])) mentioned.push_back(item);
      any_yes = any_yes || yes;
      fx.transcript.push_back({r.image_id, probe_prompt(item),
                               yes ? "Yes, there is a " + item + " in the photo."
                                   : "No, there is no " + item + " in the photo."});
    }
    for (const char* form : kSceneForms) {
      r.captions.push_back(present.empty()
                               ? std::string("An empty stretch of pavement.")
                               : text::substitute(form, "list", with_article_list(present)));
    }
    if (any_yes) {
      fx.transcript.push_back({r.image_id, describe_prompt,
                               mentioned.empty()
                                   ? std::string("The photo shows a quiet outdoor scene.")
                                   : "The photo shows " + with_article_list(mentioned) + "."});
    }
    fx.records.push_back(std::move(r));
  }
  return fx;
}

void write_coco_captions(std::span<const ImageRecord> records, const std::filesystem::path& path) {
  json images = json::array();
  json annotations = json::array();
  std::int64_t ann_id = 1;
  for (const auto& r : records) {
    images.push_back({{"id", r.image_id}, {"file_name", r.file_name}});
    for (const auto& c : r.captions) {
      annotations.push_back({{"id", ann_id++}, {"image_id", r.image_id}, {"caption", c}});
    }
  }
  text::write_file(path, json{{"images", images}, {"annotations", annotations}}.dump() + "\n");
}

void write_split(std::span<const ImageRecord> records, Split split,
                 const std::filesystem::path& path) {
  json images = json::array();
  for (const auto& r : records) {
    images.push_back({{"filename", r.file_name}, {"split", std::string(to_string(split))}});
  }
  text::write_file(path, json{{"images", images}}.dump() + "\n");
}

void write_transcript(std::span<const TranscriptEntry> entries, const std::filesystem::path& path) {
  std::string out;
  for (const auto& e : entries) {
    out += json{{"image_id", e.image_id}, {"prompt", e.prompt}, {"response", e.response}}.dump();
    out += "\n";
  }
  text::write_file(path, out);
}

}  // namespace halo::synthetic
