#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "tlr/metrics.hpp"

using namespace tlr;

namespace {

ConfusionCounts from(const std::vector<bool>& v, const std::vector<bool>& t) {
  std::unique_ptr<bool[]> vb(new bool[v.size()]), tb(new bool[t.size()]);
  std::copy(v.begin(), v.end(), vb.get());
  std::copy(t.begin(), t.end(), tb.get());
  return confusion(std::span<const bool>(vb.get(), v.size()), std::span<const bool>(tb.get(), t.size()));
}

}  // namespace

TEST_SUITE("eval_report") {

TEST_CASE("confusion counts") {
  const auto c = from({true, true, false, false, true}, {true, false, true, false, false});
  CHECK(c == ConfusionCounts{1, 2, 1, 1});
  CHECK(c.total() == 5);
  CHECK(tpr(c) == doctest::Approx(0.5));
  CHECK(fpr(c) == doctest::Approx(2.0 / 3));
  CHECK_THROWS_AS(from({true}, {true, false}), ValidationError);
}

TEST_CASE("rates with empty denominators are absent") {
  CHECK_FALSE(tpr(ConfusionCounts{0, 3, 2, 0}).has_value());
  CHECK_FALSE(fpr(ConfusionCounts{2, 0, 0, 1}).has_value());
  const auto row = metrics_row("x", ConfusionCounts{0, 3, 2, 0});
  CHECK_FALSE(row.g.has_value());
  CHECK(emit_table(BenchReport{{row}}).find("n/a") != std::string::npos);
}

TEST_CASE("g-mean examples") {
  CHECK(gmean(1, 0) == doctest::Approx(1));
  CHECK(gmean(0, 0) == doctest::Approx(0));
  CHECK(gmean(1, 1) == doctest::Approx(0));
  CHECK(gmean(0.75, 0.15) == doctest::Approx(std::sqrt(0.6375)));
  CHECK_THROWS_AS(gmean(1.1, 0), RangeError);
  CHECK_THROWS_AS(gmean(0.5, -0.1), RangeError);
  CHECK_THROWS_AS(gmean(std::nan(""), 0), RangeError);
}

TEST_CASE("reference rows reproduce the G column") {
  const std::vector<std::pair<std::string, double>> expected{
      {"systrace", 0.60}, {"tlr-negsel", 0.60}, {"sig1", 0}, {"sig2", 0}, {"sig3", 0},
      {"tlr1", 0.75},     {"tlr2", 0.69},       {"tlr3", 0.80}, {"DCA", 0.41}};
  const auto rows = comparison_rows();
  REQUIRE(rows.size() == expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].system == expected[i].first);
    CHECK(rows[i].reference);
    CHECK(std::abs(*rows[i].g - expected[i].second) <= 0.005);
  }
}

TEST_CASE("property: gmean is monotone in both rates") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 1000; ++k) {
    const double t1 = u(rng), t2 = u(rng), f1 = u(rng), f2 = u(rng);
    if (t1 <= t2) CHECK(gmean(t1, f1) <= gmean(t2, f1) + 1e-12);
    if (f1 <= f2) CHECK(gmean(t1, f1) + 1e-12 >= gmean(t1, f2));
    CHECK(gmean(t1, f1) >= 0);
    CHECK(gmean(t1, f1) <= 1);
  }
}

TEST_CASE("property: relabelling every scenario swaps the rates") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    std::vector<bool> v, t;
    for (int i = 0; i < 20; ++i) {
      v.push_back(rng() % 2);
      t.push_back(rng() % 2);
    }
    const auto c = from(v, t);
    std::vector<bool> nv, nt;
    for (bool b : v) nv.push_back(!b);
    for (bool b : t) nt.push_back(!b);
    const auto flipped = from(nv, nt);
    // Inverting verdicts and truths: TPR' = 1 - FPR... mapped through tn/fn.
    CHECK(flipped == ConfusionCounts{c.tn, c.fn, c.tp, c.fp});
    CHECK(c.total() == 20);
  }
}

TEST_CASE("table and delimited output") {
  BenchReport rep;
  rep.rows.push_back(metrics_row("tlr3", ConfusionCounts{15, 3, 17, 5}));
  rep.rows.push_back(reference_row("DCA", 1.00, 0.83));
  const auto table = emit_table(rep);
  CHECK(table.find("tlr3           0.75   0.15   0.80") != std::string::npos);
  CHECK(table.find("DCA            1.00   0.83   0.41  (reference)") != std::string::npos);
  const auto tsv = emit_delimited(rep);
  CHECK(tsv.rfind("system\ttpr\tfpr\tg\ttp\tfp\ttn\tfn\treference\n", 0) == 0);
  CHECK(tsv.find("\t15\t3\t17\t5\t0\n") != std::string::npos);
  CHECK(tsv.find("DCA\t1\t0.82999999999999996\t") != std::string::npos);
  CHECK(emit_table(BenchReport{}) == "System          TPR    FPR      G\n");
}

TEST_CASE("scatter output lists distinct levels per session") {
  const auto a = testutil::make_session("a", {1}, {5, 5, 7});
  const auto b = testutil::make_session("b", {1}, {6}, testutil::kTick, SessionLabel::attack);
  const std::vector<const Session*> both{&a, &b};
  CHECK(emit_scatter(both, "rss") == "# session_index level class\n0 5 normal\n0 7 normal\n1 6 attack\n");
  CHECK(emit_scatter(both, "num_files") == "# session_index level class\n");
  CHECK_THROWS_AS(emit_scatter(both, "bogus"), SchemaError);
}

}  // TEST_SUITE
