#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "tlr/detector.hpp"
#include "tlr/scenario.hpp"

using namespace tlr;
using testutil::FixedCycle;
using testutil::make_session;

namespace {

TrainedProfile rss_profile(std::set<std::int64_t> levels, std::set<Syscall> normal = {1, 2, 3}) {
  TrainedProfile p;
  p.normal_antigen = std::move(normal);
  p.normal_levels[Signal::rss] = std::move(levels);
  for (Syscall a = 0; a < p.universe_size; ++a)
    if (!p.normal_antigen.contains(a)) p.permissible_agr.push_back(a);
  return p;
}

Timeline timeline_of(const Session& s) {
  const Placement one{&s, 0};
  return assemble_timeline(std::span<const Placement>(&one, 1));
}

// Lymph node DC presenting `s`, made from a fresh iDC.
std::size_t presenting_dc(Tissue& t, Syscall s, CellKind kind, Rng& rng) {
  t.inject_antigen(s);
  const auto dc = t.add_immature_dc();
  t.collect_antigen(dc, rng);
  t.migrate_dc(dc, kind);
  return dc;
}

struct AtcCycle : FixedCycle {
  void activated_tc(Tissue& t, std::size_t c, Rng&) override { activated_tc_step(t, c); }
};

DetectorOptions options(Variant v, std::uint64_t seed = 0, bool exhaustive = false) {
  DetectorOptions o;
  o.variant = v;
  o.seed = seed;
  o.exhaustive = exhaustive;
  return o;
}

constexpr std::array<Variant, 4> kVariants{Variant::tlr1, Variant::tlr2, Variant::tlr3,
                                           Variant::negsel};

}  // namespace

TEST_SUITE("tlr_engine") {

TEST_CASE("training arithmetic") {
  const auto s = make_session("n", {1, 2, 3, 2}, {676, 680});
  const std::vector<Session> train_set{s};
  const auto p = train(train_set, Variant::tlr3);
  CHECK(p.normal_antigen == std::set<Syscall>{1, 2, 3});
  CHECK(p.permissible_agr.size() == 347);
  CHECK(std::ranges::is_sorted(p.permissible_agr));
  CHECK(p.normal_levels.at(Signal::rss) == std::set<std::int64_t>{676, 680});
  CHECK(p.normal_levels.at(Signal::num_files).empty());
  CHECK(p.training_ids == std::vector<std::string>{"n"});

  const auto empty = train(std::vector<Session>{}, Variant::tlr1);
  CHECK(empty.normal_antigen.empty());
  CHECK(empty.permissible_agr.size() == 350);

  auto attack = s;
  attack.label = SessionLabel::attack;
  CHECK_THROWS_AS(train(std::vector<Session>{attack}, Variant::tlr1), ContractError);
}

TEST_CASE("TLR fires only on unseen levels") {
  const auto p = rss_profile({676});
  CHECK(p.tlr_fires(Signal::rss, 681));
  CHECK_FALSE(p.tlr_fires(Signal::rss, 676));
  CHECK(tlr_activated(p, Variant::tlr1, {{Signal::rss, 681}}));
  CHECK_FALSE(tlr_activated(p, Variant::tlr1, {{Signal::rss, 676}}));
  // Nothing held yet: nothing to fire on.
  CHECK_FALSE(tlr_activated(p, Variant::tlr1, {}));
  CHECK_FALSE(tlr_activated(p, Variant::negsel, {{Signal::rss, 681}}));
}

TEST_CASE("property: tlr1 firing implies tlr2 implies tlr3") {
  Rng rng(4);
  for (int round = 0; round < 500; ++round) {
    TrainedProfile p;
    for (auto sig : monitored_signals(Variant::tlr3))
      for (int k = 0; k < 5; ++k) p.normal_levels[sig].insert(static_cast<std::int64_t>(rng() % 8));
    std::map<Signal, std::int64_t> held;
    for (auto sig : monitored_signals(Variant::tlr3))
      if (rng() % 4 != 0) held[sig] = static_cast<std::int64_t>(rng() % 8);
    const bool a1 = tlr_activated(p, Variant::tlr1, held);
    const bool a2 = tlr_activated(p, Variant::tlr2, held);
    const bool a3 = tlr_activated(p, Variant::tlr3, held);
    CHECK((!a1 || a2));
    CHECK((!a2 || a3));
  }
}

TEST_CASE("variant parameters") {
  CHECK(variant_params(Variant::tlr1, {}).max_cytokines == 1);
  CHECK(variant_params(Variant::tlr1, {}).num_cytokine_receptors_1 == 1);
  CHECK(variant_params(Variant::tlr2, {}).max_cytokines == 2);
  CHECK(variant_params(Variant::tlr3, {}) == TissueParams{});
  CHECK(variant_params(Variant::negsel, {}) == TissueParams{});
  CHECK(monitored_signals(Variant::negsel).empty());
  for (auto v : kVariants) CHECK(variant_from_string(to_string(v)) == v);
}

TEST_CASE("immature DC callback") {
  FixedCycle cycle;
  cycle.tlrs = {Signal::rss};
  Rng rng(2);
  Tissue t(testutil::tiny_params(), cycle, 350, rng);
  const auto profile = rss_profile({676});
  const auto dc = t.live_cells(CellKind::iDC).front();

  SUBCASE("no antigen: collects and stays") {
    t.set_signal(Signal::rss, 900);
    immature_dc_step(t, dc, profile, true, rng);
    CHECK(t.cell(dc).kind == CellKind::iDC);
  }
  SUBCASE("antigen and a seen level: keeps collecting") {
    t.set_signal(Signal::rss, 676);
    t.inject_antigen(200);
    immature_dc_step(t, dc, profile, true, rng);
    CHECK(t.cell(dc).antigen_store.size() == 10);
    immature_dc_step(t, dc, profile, true, rng);
    CHECK(t.cell(dc).kind == CellKind::iDC);
  }
  SUBCASE("antigen and an unseen level: matures") {
    t.inject_antigen(200);
    t.collect_antigen(dc, rng);
    t.set_signal(Signal::rss, 681);
    immature_dc_step(t, dc, profile, true, rng);
    CHECK(t.cell(dc).kind == CellKind::mDC);
    CHECK(t.population(CellKind::iDC) == 1);
  }
  SUBCASE("TLRs disabled: the unseen level is ignored") {
    t.inject_antigen(200);
    t.collect_antigen(dc, rng);
    t.set_signal(Signal::rss, 681);
    immature_dc_step(t, dc, profile, false, rng);
    CHECK(t.cell(dc).kind == CellKind::iDC);
  }
  SUBCASE("lifespan over with antigen: semimature") {
    t.inject_antigen(200);
    t.collect_antigen(dc, rng);
    t.cell(dc).iterations = 100;
    immature_dc_step(t, dc, profile, true, rng);
    CHECK(t.cell(dc).kind == CellKind::smDC);
    CHECK(t.population(CellKind::iDC) == 1);
  }
  SUBCASE("lifespan over without antigen: dies and is replaced") {
    t.cell(dc).iterations = 100;
    immature_dc_step(t, dc, profile, true, rng);
    CHECK_FALSE(t.cell(dc).alive);
    CHECK(t.population(CellKind::iDC) == 1);
  }
}

TEST_CASE("naive T cell binding") {
  FixedCycle cycle;  // every naive T cell carries lock 99
  Rng rng(2);
  Tissue t(testutil::tiny_params(), cycle, 350, rng);
  const auto tc = t.live_cells(CellKind::nTC).front();

  SUBCASE("no lymph DCs: nothing happens") {
    t.rebuild_lymph_view();
    naive_tc_step(t, tc, false, rng);
    CHECK(t.cell(tc).kind == CellKind::nTC);
  }
  SUBCASE("semimature DC: tolerance deletion") {
    const auto dc = presenting_dc(t, 99, CellKind::smDC, rng);
    t.cell(dc).iterations = 40;
    t.rebuild_lymph_view();
    naive_tc_step(t, tc, false, rng);
    CHECK_FALSE(t.cell(tc).alive);
    CHECK(t.population(CellKind::nTC) == 1);
    CHECK(t.population(CellKind::aTC) == 0);
    CHECK(t.cell(dc).iterations == 1);  // the bound DC is kept alive
  }
  SUBCASE("semimature DC expressing IL-12: activation") {
    presenting_dc(t, 99, CellKind::smDC, rng);
    t.rebuild_lymph_view();
    naive_tc_step(t, tc, true, rng);
    CHECK(t.cell(tc).kind == CellKind::aTC);
  }
  SUBCASE("mature DC: activation and alert on the matched lock") {
    presenting_dc(t, 99, CellKind::mDC, rng);
    t.rebuild_lymph_view();
    naive_tc_step(t, tc, false, rng);
    CHECK(t.cell(tc).kind == CellKind::aTC);
    CHECK(t.cell(tc).vr_locks == std::vector<Syscall>{99});
    CHECK(t.population(CellKind::nTC) == 1);
  }
  SUBCASE("lock miss: no binding") {
    presenting_dc(t, 98, CellKind::mDC, rng);
    t.rebuild_lymph_view();
    naive_tc_step(t, tc, false, rng);
    CHECK(t.cell(tc).kind == CellKind::nTC);
  }
  SUBCASE("lifespan over: replaced") {
    t.cell(tc).iterations = 10;
    t.rebuild_lymph_view();
    naive_tc_step(t, tc, false, rng);
    CHECK_FALSE(t.cell(tc).alive);
    CHECK(t.population(CellKind::nTC) == 1);
  }
}

TEST_CASE("one binding attempt succeeds with the matching DC share") {
  auto params = testutil::tiny_params();
  params.num_cell_receptors_2 = 1;
  FixedCycle cycle;
  Rng rng(11);
  const int trials = 4000;
  int bound = 0;
  for (int k = 0; k < trials; ++k) {
    Tissue t(params, cycle, 350, rng);
    for (int d = 0; d < 3; ++d) presenting_dc(t, 99, CellKind::mDC, rng);
    presenting_dc(t, 98, CellKind::mDC, rng);
    t.rebuild_lymph_view();
    const auto tc = t.live_cells(CellKind::nTC).front();
    naive_tc_step(t, tc, false, rng);
    bound += t.cell(tc).kind == CellKind::aTC;
  }
  // 3 of 4 DCs match; sd of the count is about 27.
  CHECK(std::abs(bound - trials * 3 / 4) < 150);
}

TEST_CASE("activated T cell lifespan and stay-alive") {
  AtcCycle cycle;
  Rng rng(2);
  Tissue t(testutil::tiny_params(), cycle, 350, rng);
  const auto tc = t.live_cells(CellKind::nTC).front();
  t.activate_tc(tc, 99);
  t.add_naive_tc(rng);
  const auto serial = t.cell(tc).serial;
  auto atc_alive = [&] {
    const auto v = t.live_cells(CellKind::aTC);
    return !v.empty() && t.cell(v.front()).serial == serial;
  };

  SUBCASE("without matching antigen it lives out its lifespan") {
    for (int k = 0; k < 100; ++k) t.step(rng);
    CHECK(atc_alive());
    t.step(rng);
    CHECK_FALSE(atc_alive());
  }
  SUBCASE("matching antigen in the tissue resets its age") {
    t.inject_antigen(99);
    for (int k = 0; k < 300; ++k) t.step(rng);
    CHECK(atc_alive());
    CHECK(t.cell(t.live_cells(CellKind::aTC).front()).iterations == 0);
  }
  SUBCASE("a late match restarts the count") {
    for (int k = 0; k < 60; ++k) t.step(rng);
    t.inject_antigen(99);
    t.step(rng);
    CHECK(atc_alive());
    CHECK(t.cell(t.live_cells(CellKind::aTC).front()).iterations == 0);
  }
}

TEST_CASE("receptor locks come from the permissible set only") {
  const auto profile = rss_profile({676});
  for (bool exhaustive : {false, true}) {
    TlrCellCycle cycle(profile, Variant::tlr1, exhaustive);
    cycle.set_lock_count(100);
    Rng rng(3);
    for (int k = 0; k < 20; ++k)
      for (auto l : cycle.fresh_locks(rng)) CHECK_FALSE(profile.is_normal_antigen(l));
  }
  // The sweep visits every permissible syscall in order.
  TlrCellCycle sweep(profile, Variant::tlr1, true);
  sweep.set_lock_count(static_cast<int>(profile.permissible_agr.size()));
  Rng rng(3);
  CHECK(sweep.fresh_locks(rng) == profile.permissible_agr);
  CHECK(sweep.fresh_locks(rng) == profile.permissible_agr);

  TlrCellCycle neg(profile, Variant::negsel, false);
  neg.set_receptor_count(3);
  CHECK(neg.fresh_tlrs().empty());
  TlrCellCycle three(profile, Variant::tlr3, false);
  three.set_receptor_count(3);
  CHECK(three.fresh_tlrs().size() == 3);
}

TEST_CASE("detector construction errors") {
  TrainedProfile all;
  all.universe_size = 5;
  all.normal_antigen = {0, 1, 2, 3, 4};
  all.normal_levels[Signal::rss] = {1};
  CHECK_THROWS_AS(Detector(all, options(Variant::tlr1)), ValidationError);

  auto no_levels = rss_profile({});
  no_levels.normal_levels.clear();
  CHECK_THROWS_AS(Detector(no_levels, options(Variant::tlr1)), ValidationError);
  CHECK_NOTHROW(Detector(no_levels, options(Variant::negsel)));
}

TEST_CASE("unmonitored signals are rejected") {
  Detector d(rss_profile({676}), options(Variant::tlr1));
  CHECK_THROWS_AS(d.set_signal(Signal::num_files, 3), ValidationError);
  CHECK_NOTHROW(d.set_signal(Signal::rss, 3));
  auto s = make_session("n", {1, 2});
  s.readings.push_back({0, Signal::cpu, 5});
  CHECK_THROWS_AS(d.run(timeline_of(s)), ValidationError);
  // Projection removes the offending readings.
  CHECK_NOTHROW(d.run(project_signals(timeline_of(s), monitored_signals(Variant::tlr1))));
}

TEST_CASE("replaying the training data never alerts: every vocabulary over 5 syscalls") {
  for (unsigned mask = 1; mask < 31; ++mask) {
    std::vector<Syscall> seq;
    for (int r = 0; r < 6; ++r)
      for (Syscall s = 0; s < 5; ++s)
        if (mask & (1u << s)) seq.push_back(s);
    std::vector<std::int64_t> rss;
    for (std::size_t k = 0; k < seq.size(); ++k) rss.push_back(600 + static_cast<int>(k % 3));
    const auto s = make_session("n", seq, rss);
    for (auto v : kVariants) {
      const auto p = train(std::vector<Session>{s}, v, 5);
      auto opt = options(v, mask);
      opt.exhaustive = mask % 2 == 0;
      Detector d(p, opt);
      const auto tl = project_signals(timeline_of(s), monitored_signals(v));
      const auto r = d.run(tl);
      CHECK_MESSAGE(r.alerts.empty(), "mask " << mask << " variant " << to_string(v));
      if (v == Variant::negsel) CHECK(r.tolerance_deletions == 0);
    }
  }
}

// The full universe keeps lock coverage of any one syscall near 100/347;
// with only a handful of permissible syscalls every naive T cell would
// activate each tick and the aTC population would pass max_cells.
TEST_CASE("unseen syscall under an unseen level is detected") {
  const auto normal = make_session("n", {0, 1, 2, 0, 1, 2}, {600, 601, 602});
  std::vector<Syscall> attack_seq(200, 4);
  const auto attack = make_session("x", attack_seq, std::vector<std::int64_t>(200, 900), testutil::kTick,
                                   SessionLabel::attack);
  for (auto v : kVariants) {
    const auto p = train(std::vector<Session>{normal}, v);
    auto opt = options(v, 7);
    opt.exhaustive = true;
    Detector d(p, opt);
    const auto r = d.run(project_signals(timeline_of(attack), monitored_signals(v)), "x", true);
    CHECK(r.verdict_attack());
    CHECK(r.activations == static_cast<int>(r.alerts.size()));
    for (const auto& a : r.alerts) CHECK(a.syscall == 4);
    for (const auto& tick : r.trace) {
      CHECK(tick.count(CellKind::iDC) == 100);
      CHECK(tick.count(CellKind::nTC) == 100);
    }
  }
}

TEST_CASE("unseen syscall under seen levels is tolerated by tlr detectors only") {
  const auto normal = make_session("n", {0, 1, 2, 0, 1, 2}, {600, 601, 602});
  std::vector<Syscall> seq(200, 4);
  std::vector<std::int64_t> rss;
  for (int k = 0; k < 200; ++k) rss.push_back(600 + k % 3);
  const auto quiet = make_session("q", seq, rss);
  for (auto v : kVariants) {
    const auto p = train(std::vector<Session>{normal}, v);
    auto opt = options(v, 7);
    opt.exhaustive = true;
    Detector d(p, opt);
    const auto r = d.run(project_signals(timeline_of(quiet), monitored_signals(v)));
    if (v == Variant::negsel) {
      CHECK(r.verdict_attack());
    } else {
      CHECK_FALSE(r.verdict_attack());
      CHECK(r.tolerance_deletions > 0);
    }
  }
}

TEST_CASE("drain length and determinism") {
  const auto normal = make_session("n", {0, 1, 2}, {600});
  const auto p = train(std::vector<Session>{normal}, Variant::tlr3);
  std::vector<Syscall> seq;
  for (int k = 0; k < 100; ++k) seq.push_back(static_cast<Syscall>(k % 5));
  const auto s = make_session("m", seq, std::vector<std::int64_t>(100, 650));
  const auto tl = timeline_of(s);

  Detector a(p, options(Variant::tlr3, 21));
  Detector b(p, options(Variant::tlr3, 21));
  const auto ra = a.run(tl, "m", true);
  const auto rb = b.run(tl, "m", true);
  CHECK(ra.trace == rb.trace);
  CHECK(ra.alerts == rb.alerts);
  // span / tick + 1, then 100 + 2 * 10 + 2 drain ticks.
  CHECK(ra.ticks == tl.span / testutil::kTick + 1 + 122);
  CHECK(ra.trace.size() == static_cast<std::size_t>(ra.ticks));

  auto short_drain = options(Variant::tlr3, 21);
  short_drain.drain_ticks = 0;
  Detector c(p, short_drain);
  CHECK(c.run(tl).ticks == tl.span / testutil::kTick + 1);
}

TEST_CASE("probe log writes one line per probe period") {
  const auto normal = make_session("n", {0, 1, 2}, {600});
  const auto p = train(std::vector<Session>{normal}, Variant::tlr1, 5);
  Detector d(p, options(Variant::tlr1, 1));
  std::ostringstream probe;
  const auto r = d.run(project_signals(timeline_of(normal), monitored_signals(Variant::tlr1)), "n",
                       false, &probe);
  const auto lines = std::ranges::count(probe.str(), '\n');
  CHECK(lines == (r.ticks + 9) / 10);
  CHECK(probe.str().rfind("0 100 0 0 100 0 0\n", 0) == 0);
}

TEST_CASE("profile text round trip") {
  const auto s = make_session("n", {1, 2, 3}, {676, 680});
  const auto p = train(std::vector<Session>{s}, Variant::tlr2);
  std::ostringstream out;
  write_profile(out, p);
  std::istringstream in(out.str());
  const auto back = read_profile(in);
  CHECK(back.normal_antigen == p.normal_antigen);
  CHECK(back.permissible_agr == p.permissible_agr);
  CHECK(back.normal_levels == p.normal_levels);
  CHECK(back.training_ids == p.training_ids);

  std::istringstream bad("levels bogus 1\n");
  CHECK_THROWS_AS(read_profile(bad), SchemaError);
  std::istringstream outside("universe_size 5\nnormal_antigen 7\n");
  CHECK_THROWS_AS(read_profile(outside), RangeError);
}

}  // TEST_SUITE
