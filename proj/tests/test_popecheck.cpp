#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "halo/error.hpp"
#include "halo/popecheck.hpp"
#include "halo/reference_tables.hpp"
#include "halo/stubs.hpp"
#include "halo/synthetic.hpp"
#include "support.hpp"

using namespace halo;
using halo::testing::record;

namespace {

const std::string kDescribe = "Describe this image.";

stubs::ReplayBackend::Transcript to_map(const std::vector<synthetic::TranscriptEntry>& entries) {
  stubs::ReplayBackend::Transcript t;
  for (const auto& e : entries) t[{e.image_id, e.prompt}] = e.response;
  return t;
}

ProbeTally replay(const reference::ProbeCounts& counts, const ProbeStore* store = nullptr) {
  const auto fx = synthetic::probe_fixture(counts);
  ChatClient client(std::make_shared<stubs::ReplayBackend>(to_map(fx.transcript)), nullptr, {}, 4);
  const auto results =
      run_probe(client, {"replay", counts.model}, fx.records, counts.items, kDescribe, store);
  return tally(results, counts.items);
}

const reference::ProbeCounts& counts_for(const std::string& model) {
  for (const auto& c : reference::probe_counts())
    if (c.model == model) return c;
  throw std::runtime_error("no counts for " + model);
}

ChatClient scripted(std::function<std::string(const ChatRequest&)> fn) {
  auto backend = std::make_shared<stubs::FunctionBackend>(
      [fn](const ChatRequest& r) { return stubs::text_reply(r, fn(r)); });
  return ChatClient(backend, nullptr, {}, 2);
}

bool is_probe(const ChatRequest& r) { return r.last_user_text().rfind("Is there a ", 0) == 0; }

}  // namespace

TEST_CASE("absent items") {
  CHECK(absent_items(record(1, {"a person at a table"}), {"person", "table", "chair"}) ==
        std::vector<std::string>{"chair"});
  CHECK(absent_items(record(1, {"two people and some cups"}), {"person", "cup", "cat"}) ==
        std::vector<std::string>{"cat"});
  CHECK(reference::kProbeItems == std::vector<std::string>{"person", "table", "chair", "car",
                                                           "book", "bottle", "cup", "cat", "horse",
                                                           "toilet"});
}

TEST_CASE("probe prompt") {
  CHECK(probe_prompt("cat") == "Is there a cat in this photo?");
  CHECK(probe_prompt("dining table") == "Is there a dining table in this photo?");
  CHECK(probe_prompt("cat") == testing::golden("probe_prompt_cat.txt"));
}

TEST_CASE("yes answers") {
  CHECK(answered_yes("Yes, there is.").yes);
  CHECK_FALSE(answered_yes("No.").yes);
  CHECK_FALSE(answered_yes("No.").flagged);
  const auto unsure = answered_yes("I cannot tell");
  CHECK_FALSE(unsure.yes);
  CHECK(unsure.flagged);
}

TEST_CASE("caption mentions") {
  CHECK(caption_mentions("two cats on a sofa", "cat"));
  CHECK_FALSE(caption_mentions("a cathedral", "cat"));
  CHECK(caption_mentions("books piled up", "book"));
  CHECK(caption_mentions("A Dining Table set for two", "dining table"));
  CHECK(caption_mentions("several people", "person"));
}

TEST_CASE("a model that always says no") {
  const auto recs = synthetic::records(10, 1);
  auto client = scripted([](const ChatRequest&) { return "No."; });
  const auto results = run_probe(client, {"s", "m"}, recs, reference::kProbeItems, kDescribe);
  const auto t = tally(results, reference::kProbeItems);
  CHECK(t.total.qh == 100);
  CHECK(t.total.ay == 0);
  CHECK(t.total.ch == 0);
  for (const auto& r : results) CHECK(r.description.empty());
}

TEST_CASE("a model that agrees but never mentions the item") {
  const auto recs = synthetic::records(10, 1);
  int describes = 0;
  auto client = scripted([&describes](const ChatRequest& r) -> std::string {
    if (is_probe(r)) return "Yes, there is.";
    ++describes;
    return "A quiet scene.";
  });
  const auto t = tally(run_probe(client, {"s", "m"}, recs, reference::kProbeItems, kDescribe),
                       reference::kProbeItems);
  CHECK(t.total.ay == t.total.qh);
  CHECK(t.total.ch == 0);
  CHECK(describes == 10);
}

TEST_CASE("recorded transcripts reproduce the published sums") {
  const auto mp = replay(counts_for("mPLUG-Owl"));
  CHECK(mp.total == ProbeCountsRow{890, 717, 82});
  CHECK(mp.per_item.at("person") == ProbeCountsRow{48, 45, 14});
  CHECK(mp.yes_rate() == doctest::Approx(100.0 * 717 / 890));
  CHECK(mp.yes_rate() > 80.0);
  CHECK(mp.hallucination_rate() == doctest::Approx(100.0 * 82 / 717));
  CHECK(round_half_up(mp.hallucination_rate()) == 11.4);

  CHECK(replay(counts_for("LLaVA")).total == ProbeCountsRow{890, 753, 49});

  // The MiniGPT-4 per-item CH cells add up to 45; the printed sum is 46.
  const auto& mi = counts_for("MiniGPT-4");
  int cells = 0;
  for (int v : mi.ch) cells += v;
  CHECK(cells == 45);
  CHECK(mi.ch_sum == 46);
  CHECK(replay(mi).total == ProbeCountsRow{890, 432, 45});
}

TEST_CASE("tally invariants on random fixtures") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    reference::ProbeCounts c;
    c.model = "random";
    c.items = {"person", "car", "cup"};
    for (std::size_t i = 0; i < c.items.size(); ++i) {
      const int qh = static_cast<int>(rng() % 31);
      const int ay = qh ? static_cast<int>(rng() % (qh + 1)) : 0;
      const int ch = ay ? static_cast<int>(rng() % (ay + 1)) : 0;
      c.qh.push_back(qh);
      c.ay.push_back(ay);
      c.ch.push_back(ch);
    }
    const auto fx = synthetic::probe_fixture(c, 30);
    ChatClient client(std::make_shared<stubs::ReplayBackend>(to_map(fx.transcript)), nullptr);
    const auto t = tally(run_probe(client, {"r", "m"}, fx.records, c.items, kDescribe), c.items);
    for (std::size_t i = 0; i < c.items.size(); ++i) {
      const auto& row = t.per_item.at(c.items[i]);
      CHECK(row.ch <= row.ay);
      CHECK(row.ay <= row.qh);
      CHECK(row == ProbeCountsRow{std::size_t(c.qh[i]), std::size_t(c.ay[i]), std::size_t(c.ch[i])});
    }
  }
}

TEST_CASE("empty tally") {
  const auto t = tally({}, reference::kProbeItems);
  CHECK(t.total == ProbeCountsRow{});
  CHECK(t.per_item.at("cat") == ProbeCountsRow{});
}

TEST_CASE("probe fixtures reject inconsistent counts") {
  reference::ProbeCounts c;
  c.items = {"cat"};
  c.qh = {5};
  c.ay = {6};
  c.ch = {0};
  CHECK_THROWS(synthetic::probe_fixture(c, 10));
}

TEST_CASE("an interrupted probe resumes after the last chunk") {
  const auto& counts = counts_for("mPLUG-Owl");
  const auto fx = synthetic::probe_fixture(counts);
  testing::TempDir dir;
  const ProbeStore store{dir / "probe_results.jsonl", dir / "probe_cursor.json"};

  // Fails on the 40th image.
  auto transcript = to_map(fx.transcript);
  auto flaky = std::make_shared<stubs::FunctionBackend>([&transcript](const ChatRequest& r) {
    if (r.image && r.image->image_id >= 40) return BackendReply{404, "", {}, {}, "gone"};
    return stubs::text_reply(r, transcript.at({r.image->image_id, r.last_user_text()}));
  });
  ChatClient first(flaky, nullptr, {}, 2);
  CHECK_THROWS_AS(run_probe(first, {"r", "m"}, fx.records, counts.items, kDescribe, &store, 16),
                  EndpointError);
  const auto [partial, next] = store.load();
  CHECK(next == 32);
  CHECK_FALSE(partial.empty());

  auto replay_backend = std::make_shared<stubs::ReplayBackend>(transcript);
  ChatClient second(replay_backend, nullptr, {}, 2);
  const auto results =
      run_probe(second, {"r", "m"}, fx.records, counts.items, kDescribe, &store, 16);
  CHECK(tally(results, counts.items).total == ProbeCountsRow{890, 717, 82});
  CHECK(replay_backend->calls() < fx.transcript.size());
}

TEST_CASE("probe results JSON round trip") {
  ProbeResult r{7, "cat", true, true, false, true, "Yes.", "A cat."};
  const nlohmann::json j = r;
  CHECK(j.get<ProbeResult>() == r);
}
