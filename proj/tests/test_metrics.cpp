#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "halo/error.hpp"
#include "halo/metrics.hpp"
#include "halo/reference_tables.hpp"

using namespace halo;

namespace {

using Pairs = std::vector<std::pair<bool, bool>>;

struct Tally {
  int tp = 0, fp = 0, tn = 0, fn = 0;
};

Tally brute(const Pairs& pairs) {
  Tally t;
  for (const auto& [pred, truth] : pairs) {
    if (pred && truth) ++t.tp;
    if (pred && !truth) ++t.fp;
    if (!pred && !truth) ++t.tn;
    if (!pred && truth) ++t.fn;
  }
  return t;
}

double safe_pct(int num, int den) { return den == 0 ? 0.0 : 100.0 * num / den; }

Pairs random_pairs(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  Pairs p(len(rng));
  for (auto& [a, b] : p) {
    a = rng() & 1;
    b = rng() & 1;
  }
  return p;
}

Verdict verdict(std::optional<bool> h) {
  Verdict v;
  v.hallucinated = h;
  v.parse_status = h ? ParseStatus::ok : ParseStatus::unparseable;
  return v;
}

}  // namespace

TEST_CASE("confusion examples") {
  CHECK(confusion(Pairs{}) == ConfusionMatrix{});
  CHECK(confusion(Pairs{{true, true}, {true, false}, {false, true}, {false, false}}) ==
        ConfusionMatrix{1, 1, 1, 1});
}

TEST_CASE("confusion, accuracy and prf1 match a brute-force tally") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto pairs = random_pairs(rng, 50);
    const auto cm = confusion(pairs);
    const auto t = brute(pairs);
    REQUIRE(cm == ConfusionMatrix{std::size_t(t.tp), std::size_t(t.fp), std::size_t(t.tn),
                                  std::size_t(t.fn)});
    if (pairs.empty()) {
      CHECK_THROWS_AS(accuracy(cm), UndefinedMetricError);
      continue;
    }
    CHECK(accuracy(cm) == doctest::Approx(safe_pct(t.tp + t.tn, int(pairs.size()))));
    const auto m = prf1(cm);
    const double p = safe_pct(t.tp, t.tp + t.fp), r = safe_pct(t.tp, t.tp + t.fn);
    CHECK(m.precision == doctest::Approx(p));
    CHECK(m.recall == doctest::Approx(r));
    CHECK(m.f1 == doctest::Approx(p + r == 0 ? 0.0 : 2 * p * r / (p + r)));
    const auto f = prf1(cm, PositiveClass::faithful);
    CHECK(f.precision == doctest::Approx(safe_pct(t.tn, t.tn + t.fn)));
    CHECK(f.recall == doctest::Approx(safe_pct(t.tn, t.tn + t.fp)));
  }
}

TEST_CASE("class swap symmetry") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto cm = confusion(random_pairs(rng, 50));
    const auto a = prf1(cm, PositiveClass::faithful);
    const auto b = prf1(cm.swapped());
    CHECK(a.precision == b.precision);
    CHECK(a.recall == b.recall);
    CHECK(a.f1 == b.f1);
    CHECK(cm.swapped().swapped() == cm);
  }
}

TEST_CASE("accuracy examples") {
  CHECK(accuracy({10, 0, 5, 0}) == 100.0);
  CHECK(accuracy({67, 0, 0, 33}) == 67.0);
  CHECK_THROWS_AS(accuracy({}), UndefinedMetricError);
}

TEST_CASE("prf1 examples") {
  const auto m = prf1({3, 1, 0, 2});
  CHECK(m.precision == doctest::Approx(75.0));
  CHECK(m.recall == doctest::Approx(60.0));
  CHECK(round_half_up(m.f1) == 66.7);
  const auto z = prf1({0, 0, 5, 5});
  CHECK(z.precision == 0.0);
  CHECK(z.f1 == 0.0);
  CHECK(round_half_up(2 * 71.4 * 82.0 / (71.4 + 82.0)) == 76.3);
}

TEST_CASE("half-up rounding") {
  CHECK(round_half_up(19.375) == 19.4);
  CHECK(round_half_up(0.05) == 0.1);
  CHECK(round_half_up(55.025) == 55.0);
  CHECK(round_half_up((18.6 + 69.7 + 47.2) / 3) == 45.2);
  CHECK(round_half_up(2.25, 1) == 2.3);
  CHECK(round_half_up(-0.0) == 0.0);
}

TEST_CASE("hallucination ratio") {
  std::vector<Verdict> all_false(10, verdict(false));
  CHECK(halu_ratio(all_false).percent == 0.0);

  std::vector<Verdict> mixed(8, verdict(false));
  mixed.push_back(verdict(true));
  mixed.push_back(verdict(true));
  for (int i = 0; i < 3; ++i) mixed.push_back(verdict(std::nullopt));
  const auto r = halu_ratio(mixed);
  CHECK(r.percent == 20.0);
  CHECK(r.hallucinated == 2);
  CHECK(r.parseable == 10);
  CHECK(r.unparseable == 3);

  std::vector<Verdict> none(2, verdict(std::nullopt));
  CHECK_THROWS_AS(halu_ratio(none), UndefinedMetricError);
}

TEST_CASE("ratio table averages") {
  const auto t = build_ratio_table({"LLaVA", "MiniGPT-4", "mPLUG-Owl"}, {"P1"},
                                   {{"LLaVA", {{"P1", 20.0}}},
                                    {"MiniGPT-4", {{"P1", 46.1}}},
                                    {"mPLUG-Owl", {{"P1", 35.9}}}});
  CHECK(round_half_up(t.avg_p.at("P1")) == 34.0);

  const auto row = build_ratio_table(
      {"LLaVA"}, {"P1", "P2", "P3", "P4"},
      {{"LLaVA", {{"P1", 20.0}, {"P2", 19.4}, {"P3", 18.6}, {"P4", 19.5}}}});
  CHECK(row.avg_m.at("LLaVA") == doctest::Approx(19.375));
  CHECK(round_half_up(row.avg_m.at("LLaVA")) == 19.4);

  const auto one = build_ratio_table({"m"}, {"p"}, {{"m", {{"p", 12.5}}}});
  CHECK(one.avg_m.at("m") == 12.5);
  CHECK(one.avg_p.at("p") == 12.5);
  CHECK(one.cell("m", "p") == 12.5);
}

TEST_CASE("ragged or out-of-range ratio tables are rejected") {
  CHECK_THROWS_AS(build_ratio_table({"a", "b"}, {"P1", "P2"},
                                    {{"a", {{"P1", 1.0}, {"P2", 2.0}}}, {"b", {{"P1", 1.0}}}}),
                  ShapeError);
  CHECK_THROWS_AS(build_ratio_table({"a"}, {"P1"}, {{"a", {{"P1", 101.0}}}}), ShapeError);
}

TEST_CASE("f1 consistency") {
  CHECK(f1_consistent(69.4, 78.1, 73.5, 0.1));
  CHECK(f1_consistent(66.1, 65.1, 65.6, 0.1));
  CHECK_FALSE(f1_consistent(50, 50, 60, 0.1));
  CHECK(f1_consistent(0, 0, 0, 0.1));
  CHECK_FALSE(f1_consistent(0, 0, 5, 0.1));
}

TEST_CASE("subset accuracies are the class recalls") {
  const ConfusionMatrix cm{30, 10, 50, 20};
  const auto s = subset_accuracy(cm);
  CHECK(s.with_hallucination == doctest::Approx(prf1(cm).recall));
  CHECK(s.without_hallucination == doctest::Approx(prf1(cm, PositiveClass::faithful).recall));
  CHECK(s.all == doctest::Approx(accuracy(cm)));
}

TEST_CASE("transcribed tables spot checks") {
  const auto& acc = reference::judge_accuracy();
  CHECK(acc.values.at("GPT-3.5").at("w/").at("mPLUG-Owl") == 72.9);
  CHECK(acc.values.at("HaELM").at("w/o").at("mPLUG-Owl") == 60.1);
  CHECK(acc.values.at("HaELM").at("all").at("LLaVA") == 67.0);
  CHECK(acc.averages.at("HaELM").at("w/o") == 71.5);
  const auto& prf = reference::judge_prf();
  CHECK(prf.values.at("GPT-3.5").at("w/o").at("LLaVA").p == 71.4);
  CHECK(prf.values.at("HaELM").at("w/o").at("mPLUG-Owl").r == 65.1);
  CHECK(prf.values.at("HaELM").at("average").at("mPLUG-Owl").f1 == 51.7);
  const auto& rt = reference::prompt_ratios();
  CHECK(rt.cells.at("MiniGPT-4").at("P3") == 69.7);
  CHECK(rt.avg_m.at("mPLUG-Owl") == 36.2);
  CHECK(reference::topk_sweep().ratios == std::vector<double>{24.7, 33.0, 35.9, 40.3, 42.4});
  CHECK(reference::length_sweep().values == std::vector<double>{128, 256, 512, 1024});
  CHECK(reference::temperature_sweep().ratios == std::vector<double>{24.7, 26.6, 31.1, 33.0, 35.9});
  REQUIRE(reference::probe_counts().size() == 3);
  CHECK(reference::probe_counts()[1].ch == std::vector<int>{6, 7, 13, 10, 2, 0, 3, 3, 0, 1});
}

TEST_CASE("per-class F1 triplets are internally consistent") {
  CHECK(check_f1_triplets(reference::judge_prf(), 0.15).empty());
}

TEST_CASE("average rows: one printed F1 disagrees with its class rows") {
  const auto d = check_average_rows(reference::judge_prf(), 0.05);
  REQUIRE(d.size() == 1);
  CHECK(d[0].where.find("HaELM") != std::string::npos);
  CHECK(d[0].where.find("mPLUG-Owl") != std::string::npos);
  CHECK(d[0].expected == doctest::Approx((65.6 + 42.7) / 2));
  CHECK(d[0].printed == 51.7);
}

TEST_CASE("subset accuracies against recalls: one printed cell disagrees") {
  const auto d = check_accuracy_vs_recall(reference::judge_accuracy(), reference::judge_prf(), 0.2);
  REQUIRE(d.size() == 1);
  CHECK(d[0].where.find("HaELM") != std::string::npos);
  CHECK(d[0].expected == 65.1);
  CHECK(d[0].printed == 60.1);
}

TEST_CASE("accuracy averages are unweighted means") {
  CHECK(check_accuracy_averages(reference::judge_accuracy(), 0.15).empty());
}

TEST_CASE("ratio averages recompute from cells") {
  CHECK(check_ratio_averages(reference::prompt_ratios(), 0.05).empty());
  auto broken = reference::prompt_ratios();
  broken.avg_p["P2"] = 27.0;
  CHECK(check_ratio_averages(broken, 0.05).size() == 1);
}
