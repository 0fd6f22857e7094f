#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "halo/corpus.hpp"
#include "halo/error.hpp"
#include "halo/rng.hpp"
#include "support.hpp"

using namespace halo;
using nlohmann::json;

namespace {

void write_json(const std::filesystem::path& p, const json& j) { text::write_file(p, j.dump()); }

json two_image_doc() {
  json images = json::array({{{"id", 7}, {"file_name", "a.jpg"}}, {{"id", 3}, {"file_name", "b.jpg"}}});
  json anns = json::array();
  // Annotation ids deliberately out of order in the file.
  for (int k = 10; k >= 1; --k) {
    anns.push_back({{"id", k}, {"image_id", k % 2 ? 7 : 3}, {"caption", "cap " + std::to_string(k)}});
  }
  return {{"images", images}, {"annotations", anns}};
}

// Independent rendering of the documented sampler: partial Fisher-Yates over
// indices, with bounded draws from std::mt19937_64 by rejection.
std::vector<ImageId> reference_sample(const std::vector<ImageRecord>& recs, std::size_t n,
                                      std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  auto below = [&](std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
      const std::uint64_t x = eng();
      if (x < limit) return x % bound;
    }
  };
  std::vector<std::size_t> idx(recs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<ImageId> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(idx[i], idx[i + below(idx.size() - i)]);
    out.push_back(recs[idx[i]].image_id);
  }
  return out;
}

std::vector<ImageRecord> hundred() {
  std::vector<ImageRecord> r;
  for (int i = 1; i <= 100; ++i) r.push_back(testing::record(i, {"c" + std::to_string(i)}));
  return r;
}

std::vector<ImageId> ids(const std::vector<ImageRecord>& recs) {
  std::vector<ImageId> out;
  for (const auto& r : recs) out.push_back(r.image_id);
  return out;
}

}  // namespace

TEST_CASE("load_captions groups five captions per image in annotation-id order") {
  testing::TempDir dir;
  write_json(dir / "c.json", two_image_doc());
  const CaptionStore s = load_captions(dir / "c.json");
  REQUIRE(s.size() == 2);
  CHECK(s.at(7).captions == std::vector<std::string>{"cap 1", "cap 3", "cap 5", "cap 7", "cap 9"});
  CHECK(s.at(3).captions == std::vector<std::string>{"cap 2", "cap 4", "cap 6", "cap 8", "cap 10"});
  CHECK(s.at(7).file_name == "a.jpg");
  CHECK(s.source_path == (dir / "c.json").string());
}

TEST_CASE("load_captions errors") {
  testing::TempDir dir;
  CHECK_THROWS_AS(load_captions(dir / "missing.json"), IoError);

  text::write_file(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(load_captions(dir / "bad.json"), ParseError);

  write_json(dir / "nokey.json", json{{"images", json::array()}});
  try {
    load_captions(dir / "nokey.json");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("annotations") != std::string::npos);
  }

  json doc = two_image_doc();
  doc["annotations"].push_back({{"id", 99}, {"image_id", 999}, {"caption", "x"}});
  write_json(dir / "orphan.json", doc);
  CHECK_THROWS_AS(load_captions(dir / "orphan.json"), IntegrityError);

  json dup = two_image_doc();
  dup["images"].push_back({{"id", 7}, {"file_name", "c.jpg"}});
  write_json(dir / "dup.json", dup);
  CHECK_THROWS_AS(load_captions(dir / "dup.json"), IntegrityError);

  json wrong = two_image_doc();
  wrong["annotations"][0]["caption"] = 5;
  write_json(dir / "wrong.json", wrong);
  CHECK_THROWS_AS(load_captions(dir / "wrong.json"), ParseError);
}

TEST_CASE("images without captions are dropped") {
  testing::TempDir dir;
  json doc = two_image_doc();
  doc["images"].push_back({{"id", 11}, {"file_name", "empty.jpg"}});
  write_json(dir / "c.json", doc);
  const auto s = load_captions(dir / "c.json");
  CHECK(s.size() == 2);
  CHECK_FALSE(s.contains(11));
  CHECK_THROWS_AS(s.at(11), IntegrityError);
}

TEST_CASE("load_captions merges files and rejects overlapping ids") {
  testing::TempDir dir;
  write_json(dir / "a.json", two_image_doc());
  json other{{"images", {{{"id", 8}, {"file_name", "z.jpg"}}}},
             {"annotations", {{{"id", 1}, {"image_id", 8}, {"caption", "z"}}}}};
  write_json(dir / "b.json", other);
  CHECK(load_captions(std::vector<std::filesystem::path>{dir / "a.json", dir / "b.json"}).size() == 3);
  CHECK_THROWS_AS(load_captions(std::vector<std::filesystem::path>{dir / "a.json", dir / "a.json"}),
                  IntegrityError);
}

TEST_CASE("property: grouping preserves the (image_id, caption) multiset") {
  std::mt19937_64 rng(11);
  testing::TempDir dir;
  for (int trial = 0; trial < 20; ++trial) {
    const int n_img = 1 + static_cast<int>(rng() % 6);
    json images = json::array();
    for (int i = 0; i < n_img; ++i) images.push_back({{"id", 100 + i}, {"file_name", std::to_string(i)}});
    std::vector<int> ann_ids(1 + rng() % 30);
    for (std::size_t k = 0; k < ann_ids.size(); ++k) ann_ids[k] = static_cast<int>(k);
    std::shuffle(ann_ids.begin(), ann_ids.end(), rng);
    json anns = json::array();
    std::multiset<std::pair<ImageId, std::string>> expected;
    for (int id : ann_ids) {
      const ImageId img = 100 + static_cast<ImageId>(rng() % n_img);
      const std::string cap = "caption " + std::to_string(rng() % 5);
      anns.push_back({{"id", id}, {"image_id", img}, {"caption", cap}});
      expected.insert({img, cap});
    }
    write_json(dir / "p.json", json{{"images", images}, {"annotations", anns}});
    std::multiset<std::pair<ImageId, std::string>> got;
    for (const auto& [id, rec] : load_captions(dir / "p.json").records) {
      CHECK_FALSE(rec.captions.empty());
      for (const auto& c : rec.captions) got.insert({id, c});
    }
    CHECK(got == expected);
  }
}

TEST_CASE("load_split") {
  testing::TempDir dir;
  write_json(dir / "s.json", json{{"images",
                                   {{{"filename", "a.jpg"}, {"split", "train"}},
                                    {{"filename", "b.jpg"}, {"split", "val"}},
                                    {{"filename", "c.jpg"}, {"split", "test"}},
                                    {{"filename", "d.jpg"}, {"split", "restval"}}}}});
  const SplitMap m = load_split(dir / "s.json");
  CHECK(m.size() == 4);
  CHECK(m.assignment.at("a.jpg") == Split::train);
  CHECK(m.assignment.at("b.jpg") == Split::val);
  CHECK(m.assignment.at("c.jpg") == Split::test);
  CHECK(m.assignment.at("d.jpg") == Split::train);

  write_json(dir / "dup.json", json{{"images",
                                     {{{"filename", "a.jpg"}, {"split", "train"}},
                                      {{"filename", "a.jpg"}, {"split", "test"}}}}});
  CHECK_THROWS_AS(load_split(dir / "dup.json"), IntegrityError);

  write_json(dir / "same.json", json{{"images",
                                      {{{"filename", "a.jpg"}, {"split", "train"}},
                                       {{"filename", "a.jpg"}, {"split", "restval"}}}}});
  CHECK(load_split(dir / "same.json").size() == 1);

  write_json(dir / "label.json", json{{"images", {{{"filename", "a.jpg"}, {"split", "dev"}}}}});
  CHECK_THROWS_AS(load_split(dir / "label.json"), ParseError);
}

TEST_CASE("get_records filters by split, excludes unmapped images and partitions") {
  CaptionStore store;
  for (int i = 1; i <= 9; ++i) store.records[i] = testing::record(i, {"c"});
  SplitMap map;
  const Split order[] = {Split::train, Split::val, Split::test};
  for (int i = 1; i <= 8; ++i) map.assignment["img_" + std::to_string(i) + ".jpg"] = order[i % 3];
  map.assignment["not_in_store.jpg"] = Split::test;

  const auto all = get_records(store, map);
  CHECK(all.size() == 8);  // image 9 has no split entry
  std::set<ImageId> seen;
  std::size_t sum = 0;
  for (Split s : order) {
    const auto part = get_records(store, map, s);
    sum += part.size();
    for (const auto& r : part) {
      REQUIRE(r.split.has_value());
      CHECK(*r.split == s);
      CHECK(seen.insert(r.image_id).second);
    }
  }
  CHECK(sum == all.size());
  CHECK(std::is_sorted(all.begin(), all.end(),
                       [](const auto& a, const auto& b) { return a.image_id < b.image_id; }));
}

TEST_CASE("sample_records") {
  const auto recs = hundred();
  CHECK(sample_records(recs, 0, 1).empty());

  auto perm = ids(sample_records(recs, 100, 3));
  std::sort(perm.begin(), perm.end());
  CHECK(perm == ids(recs));

  CHECK(ids(sample_records(recs, 10, 42)) == ids(sample_records(recs, 10, 42)));
  CHECK(ids(sample_records(recs, 10, 42)) != ids(sample_records(recs, 10, 43)));

  const auto s = ids(sample_records(recs, 50, 9));
  CHECK(std::set<ImageId>(s.begin(), s.end()).size() == 50);

  CHECK_THROWS_AS(sample_records(recs, 101, 0), RangeError);
}

TEST_CASE("sample_records follows the documented generator") {
  const auto recs = hundred();
  for (std::uint64_t seed : {0ull, 1ull, 7ull, 123456789ull}) {
    CHECK(ids(sample_records(recs, 37, seed)) == reference_sample(recs, 37, seed));
  }
}

TEST_CASE("SeededRng wraps the standard 64-bit Mersenne Twister") {
  SeededRng rng(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next();
  CHECK(x == 9981545732273789042ull);  // value fixed by the C++ standard
}

TEST_CASE("corpus_digest tracks content") {
  auto recs = hundred();
  const auto d = corpus_digest(recs);
  CHECK(d.size() == 64);
  CHECK(corpus_digest(recs) == d);
  recs[5].captions[0] += "!";
  CHECK(corpus_digest(recs) != d);
}

TEST_CASE("ImageRecord JSON round trip") {
  auto r = testing::record(5, {"a", "b"});
  r.split = Split::val;
  CHECK(json(r).get<ImageRecord>() == r);
  CHECK(parse_split("restval") == Split::train);
  CHECK(to_string(Split::test) == "test");
}
