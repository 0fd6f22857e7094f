#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <regex>

#include "halo/digest.hpp"
#include "halo/error.hpp"
#include "halo/stubs.hpp"
#include "halo/sweeps.hpp"
#include "halo/synthetic.hpp"
#include "support.hpp"

using namespace halo;

namespace {

std::vector<ImageRecord> test_records(std::size_t n) {
  auto recs = synthetic::records(n, 5);
  for (auto& r : recs) r.split = Split::test;
  return recs;
}

struct Harness {
  explicit Harness(std::vector<ImageRecord> r, stubs::PlantedLvlm::RateFn rate,
                   std::shared_ptr<ResponseCache> cache = std::make_shared<ResponseCache>())
      : records(std::move(r)),
        store(testing::store_of(records)),
        lvlm(std::make_shared<stubs::PlantedLvlm>(records, std::move(rate))),
        client(lvlm, std::move(cache), {}, 4) {}

  std::vector<ImageRecord> records;
  CaptionStore store;
  std::shared_ptr<stubs::PlantedLvlm> lvlm;
  ChatClient client;
  OracleJudge judge;
};

stubs::PlantedLvlm::RateFn constant(double r) {
  return [r](const SamplingConfig&) { return r; };
}

}  // namespace

TEST_CASE("generation prompts are byte-exact") {
  const auto& p = generation_prompts();
  REQUIRE(p.size() == 4);
  std::string joined;
  for (const auto& [id, text] : p) joined += (joined.empty() ? "" : "\n") + id + "\t" + text;
  CHECK(joined == testing::golden("generation_prompts.txt"));
  CHECK(generation_prompt("P2") == "Generate a caption for this image.");
  CHECK(generation_prompt("P4") == "What is this?");
  CHECK_THROWS_AS(generation_prompt("P5"), ArgumentError);
}

TEST_CASE("unswept sampling defaults") {
  const auto s = default_generation_sampling();
  CHECK(s.top_k == 3);
  CHECK(s.temperature == 1.0);
  CHECK(s.max_new_tokens == 512);
  CHECK_FALSE(s.greedy);
}

TEST_CASE("generation returns one response per record in order") {
  const auto recs = test_records(5);
  const auto store = testing::store_of(recs);
  auto stub = std::make_shared<stubs::LexicalStub>(&store);
  auto cache = std::make_shared<ResponseCache>();
  ChatClient client(stub, cache, {}, 3);
  const auto run = run_generation(client, {"stub", "lvlm"}, recs, "P1", "Describe this image.",
                                  default_generation_sampling());
  REQUIRE(run.responses.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(run.responses[i].first == recs[i].image_id);
    CHECK(run.responses[i].second == recs[i].captions[0]);
  }
  CHECK(stub->calls() == 5);

  ChatClient warm(stub, cache, {}, 3);
  run_generation(warm, {"stub", "lvlm"}, recs, "P1", "Describe this image.",
                 default_generation_sampling());
  CHECK(stub->calls() == 5);
  CHECK(warm.backend_calls() == 0);
}

TEST_CASE("verbatim captions evaluate to zero") {
  const auto recs = test_records(20);
  const auto store = testing::store_of(recs);
  ChatClient client(std::make_shared<stubs::LexicalStub>(&store), nullptr);
  OracleJudge judge;
  auto run = run_generation(client, {"stub", "lvlm"}, recs, "P1", "Describe this image.", {});
  const auto out = evaluate_run(run, judge, store);
  CHECK(out.ratio.percent == 0.0);
  CHECK(out.verdicts.size() == 20);
  CHECK(run.judge_id == "oracle");
}

TEST_CASE("planted rates are recovered exactly") {
  for (double rate : {0.0, 0.25, 0.5}) {
    CAPTURE(rate);
    Harness h(test_records(200), constant(rate));
    auto run = run_generation(h.client, {"planted", "lvlm"}, h.records, "P1",
                              "Describe this image.", default_generation_sampling());
    const auto out = evaluate_run(run, h.judge, h.store);
    CHECK(out.ratio.percent == 100.0 * rate);
    CHECK(out.ratio.hallucinated == static_cast<std::size_t>(200 * rate));
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < 200; ++i) hits += stubs::PlantedLvlm::planted(i, 0.25);
  CHECK(hits == 50);
}

TEST_CASE("sweeps return the scripted rate per axis value") {
  Harness h(test_records(100), [](const SamplingConfig& s) { return 0.1 * *s.top_k; });
  const auto points = sweep_axis(Axis::top_k, {1, 2, 3, 4, 5}, default_generation_sampling(),
                                 h.client, {"planted", "lvlm"}, h.records, h.judge, h.store);
  REQUIRE(points.size() == 5);
  const std::vector<double> expected = {10, 20, 30, 40, 50};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(points[i].value == i + 1);
    CHECK(points[i].ratio.percent == doctest::Approx(expected[i]));
  }
}

TEST_CASE("sweep points differ only in the swept field") {
  Harness h(test_records(20), constant(0.25));
  const auto fixed = default_generation_sampling();
  const auto points = sweep_axis(Axis::temperature, {0.2, 0.4, 0.6, 0.8, 1.0}, fixed, h.client,
                                 {"planted", "lvlm"}, h.records, h.judge, h.store);
  for (const auto& p : points) {
    auto s = p.sampling;
    CHECK(s.temperature == p.value);
    s.temperature = fixed.temperature;
    CHECK(s == fixed);
  }
  const auto lengths = sweep_axis(Axis::max_length, {128, 256}, fixed, h.client,
                                  {"planted", "lvlm"}, h.records, h.judge, h.store);
  CHECK(lengths[0].sampling.max_new_tokens == 128);
  CHECK(lengths[1].sampling.top_k == fixed.top_k);
}

TEST_CASE("axis parsing and application") {
  for (auto a : {Axis::max_length, Axis::top_k, Axis::temperature}) CHECK(parse_axis(to_string(a)) == a);
  CHECK_THROWS_AS(parse_axis("beam"), ArgumentError);
  CHECK(apply_axis({}, Axis::top_k, 5).top_k == 5);
  CHECK_THROWS(apply_axis({}, Axis::top_k, 0));
  CHECK_THROWS(apply_axis({}, Axis::max_length, 1.5));
}

TEST_CASE("a warm rerun of a sweep makes no backend calls") {
  auto cache = std::make_shared<ResponseCache>();
  Harness cold(test_records(50), constant(0.5), cache);
  const auto a = sweep_axis(Axis::top_k, {1, 2}, {}, cold.client, {"planted", "lvlm"},
                            cold.records, cold.judge, cold.store);
  Harness warm(test_records(50), constant(0.5), cache);
  const auto b = sweep_axis(Axis::top_k, {1, 2}, {}, warm.client, {"planted", "lvlm"},
                            warm.records, warm.judge, warm.store);
  CHECK(warm.lvlm->calls() == 0);
  CHECK(warm.client.request_digests() == cold.client.request_digests());
  for (std::size_t i = 0; i < 2; ++i) CHECK(a[i].ratio.percent == b[i].ratio.percent);
}

TEST_CASE("response log resumes a generation cell") {
  testing::TempDir dir;
  const ResponseLog log(dir / "responses.jsonl");
  const auto recs = test_records(30);
  const auto store = testing::store_of(recs);
  auto stub = std::make_shared<stubs::LexicalStub>(&store);
  ChatClient client(stub, nullptr, {}, 2);
  const auto first = run_generation(client, {"stub", "lvlm"}, recs, "P1", "Describe this image.",
                                    {}, &log, "prompt=P1", 8);
  CHECK(log.load("prompt=P1").size() == 30);
  CHECK(log.load("prompt=P2").empty());

  auto failing = std::make_shared<stubs::FunctionBackend>(
      [](const ChatRequest&) { return BackendReply{500, "", {}, {}, "down"}; });
  RetryPolicy no_wait;
  no_wait.sleep = [](std::chrono::milliseconds) {};
  ChatClient offline(failing, nullptr, no_wait, 2);
  const auto again = run_generation(offline, {"stub", "lvlm"}, recs, "P1", "Describe this image.",
                                    {}, &log, "prompt=P1", 8);
  CHECK(again.responses == first.responses);
  CHECK(failing->calls() == 0);
}

TEST_CASE("manifests") {
  testing::TempDir dir;
  text::write_file(dir / "a.txt", "alpha");
  text::write_file(dir / "b.txt", "beta");
  const nlohmann::json config = {{"top_k", 3}, {"seed", 1}};
  const auto m1 = build_manifest("r", "sweep", config, "c", 1, {"d1", "d2"}, dir.path(), {"a.txt", "b.txt"});
  const auto m2 = build_manifest("r", "sweep", config, "c", 1, {"d1", "d2"}, dir.path(), {"a.txt", "b.txt"});
  CHECK(m1 == m2);
  CHECK(m1.artifacts.at("a.txt") == sha256_hex("alpha"));
  CHECK(m1.config_digest == config_digest(config));

  auto changed = config;
  changed["top_k"] = 4;
  CHECK(config_digest(changed) != config_digest(config));
  CHECK(config_digest(nlohmann::json::parse(R"({"seed":1,"top_k":3})")) == config_digest(config));

  CHECK_THROWS_AS(build_manifest("r", "sweep", config, "c", 1, {}, dir.path(), {"missing.txt"}),
                  IntegrityError);

  write_manifest(dir / "manifest.json", m1);
  CHECK(nlohmann::json::parse(text::read_file(dir / "manifest.json")).get<RunManifest>() == m1);
}

TEST_CASE("run ids carry a config digest prefix and a timestamp") {
  const nlohmann::json config = {{"k", 1}};
  const auto id = make_run_id(config);
  CHECK(id.substr(0, 12) == config_digest(config).substr(0, 12));
  CHECK(std::regex_match(id, std::regex("[0-9a-f]{12}-[0-9]{8}T[0-9]{6}Z")));
}
