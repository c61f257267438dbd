#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "tlr/scenario.hpp"

using namespace tlr;
using testutil::make_session;

namespace {

std::vector<std::string> ids(int n, const std::string& prefix = "n") {
  std::vector<std::string> v;
  for (int i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

RosterInputs inputs(int normals) {
  RosterInputs in;
  in.normals = ids(normals);
  for (auto k : kAttackKinds) in.attacks[k] = std::string(to_string(k));
  return in;
}

Session with_duration(std::string id, Nanos duration) {
  auto s = make_session(std::move(id), {1, 2});
  s.duration = duration;
  return s;
}

}  // namespace

TEST_SUITE("scenario_gen") {

TEST_CASE("two-fold partition sizes and coverage") {
  const auto all = ids(55);
  const auto plan = partition_twofold(all, 9, 3);
  CHECK(plan.fold_a.size() == 27);
  CHECK(plan.fold_b.size() == 28);
  CHECK(plan.replicate == 3);
  std::set<std::string> seen(plan.fold_a.begin(), plan.fold_a.end());
  seen.insert(plan.fold_b.begin(), plan.fold_b.end());
  CHECK(seen.size() == 55);

  const auto two = partition_twofold(ids(2), 1);
  CHECK(two.fold_a.size() == 1);
  CHECK(two.fold_b.size() == 1);
  CHECK_THROWS_AS(partition_twofold(ids(1), 1), ValidationError);
  CHECK_THROWS_AS(partition_twofold(ids(0), 1), ValidationError);
  CHECK(partition_twofold(all, 9).fold_a == plan.fold_a);
}

TEST_CASE("roster shape") {
  const auto in = inputs(55);
  const auto r = build_roster(in, 1);
  REQUIRE(r.scenarios.size() == 40);
  std::map<ScenarioKind, int> kinds;
  std::map<AttackKind, int> inserted;
  for (const auto& s : r.scenarios) {
    ++kinds[s.kind];
    if (s.inserted) ++inserted[*s.inserted];
  }
  CHECK(kinds[ScenarioKind::normal] == 16);
  CHECK(kinds[ScenarioKind::failure] == 4);
  CHECK(kinds[ScenarioKind::attack] == 20);
  CHECK(inserted[AttackKind::success01] == 6);
  CHECK(inserted[AttackKind::success02] == 6);
  CHECK(inserted[AttackKind::success03] == 4);
  CHECK(inserted[AttackKind::success04] == 4);
  CHECK(inserted[AttackKind::failure01] == 4);

  std::set<std::string> unique_ids;
  for (const auto& s : r.scenarios) {
    unique_ids.insert(s.id);
    const std::set<std::string> train(s.training_ids.begin(), s.training_ids.end());
    std::size_t normals_in_test = 0;
    for (const auto& e : s.entries) {
      CHECK_FALSE(train.contains(e.session_id));
      CHECK(e.pause_after_s >= 1);
      CHECK(e.pause_after_s <= 10);
      normals_in_test += e.session_id.front() == 'n';
    }
    CHECK(train.size() + normals_in_test == 55);
    CHECK(s.entries.size() == normals_in_test + (s.inserted ? 1 : 0));
    if (s.inserted) {
      CHECK(s.entries[s.insert_position].session_id == to_string(*s.inserted));
    }
  }
  CHECK(unique_ids.size() == 40);
  std::ostringstream first, second;
  write_roster(first, r);
  write_roster(second, build_roster(in, 1));
  CHECK(first.str() == second.str());

  auto missing = in;
  missing.attacks.erase(AttackKind::success03);
  CHECK_THROWS_AS(build_roster(missing, 1), ValidationError);
}

TEST_CASE("ground truth counts failed attacks as normal") {
  Dataset ds;
  ds.sessions.push_back(make_session("n0", {1}));
  ds.sessions.push_back(make_session("failure01", {1}, {}, testutil::kTick, SessionLabel::failed_attack));
  ds.sessions.push_back(make_session("success01", {1}, {}, testutil::kTick, SessionLabel::attack));
  Scenario s;
  s.entries = {{"n0", 1}, {"failure01", 1}};
  CHECK_FALSE(s.ground_truth_attack(ds));
  s.entries.push_back({"success01", 1});
  CHECK(s.ground_truth_attack(ds));
}

TEST_CASE("insertion position is uniform over the gaps") {
  // 10 normals give test folds of 5, so 6 positions; chi-square with 5
  // degrees of freedom, 0.001 critical value.
  const auto in = inputs(10);
  std::array<int, 6> counts{};
  int draws = 0;
  for (std::uint64_t seed = 0; draws < 10'000; ++seed)
    for (const auto& s : build_roster(in, seed).scenarios)
      if (s.inserted) {
        ++counts.at(s.insert_position);
        ++draws;
      }
  const double expected = draws / 6.0;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 20.52);
}

TEST_CASE("timeline assembly") {
  const auto a = with_duration("a", 10 * kNanosPerSecond);
  const auto b = with_duration("b", 10 * kNanosPerSecond);
  Scenario s;
  s.id = "t";
  s.entries = {{"a", 3}, {"b", 7}};
  const auto lookup = [&](const std::string& id) -> const Session& { return id == "a" ? a : b; };
  const auto tl = assemble_timeline(s, lookup);
  // The trailing pause is not part of the span.
  CHECK(tl.span == 23 * kNanosPerSecond);
  REQUIRE(tl.events.size() == 4);
  CHECK(tl.events[2].t == 13 * kNanosPerSecond);
  CHECK(std::ranges::is_sorted(tl.events, {}, &TimelineEvent::t));

  Scenario one;
  one.entries = {{"a", 1}};
  CHECK(assemble_timeline(one, lookup).span == a.duration);

  Scenario bad_pause;
  bad_pause.entries = {{"a", 11}};
  CHECK_THROWS_AS(assemble_timeline(bad_pause, lookup), ValidationError);
}

TEST_CASE("overlapping placements are rejected") {
  const auto a = with_duration("a", 10 * kNanosPerSecond);
  const auto b = with_duration("b", 10 * kNanosPerSecond);
  const std::vector<Placement> overlapping{{&a, 0}, {&b, 5 * kNanosPerSecond}};
  CHECK_THROWS_AS(assemble_timeline(overlapping), ValidationError);
  const std::vector<Placement> touching{{&a, 0}, {&b, 10 * kNanosPerSecond}};
  CHECK_NOTHROW(assemble_timeline(touching));
}

TEST_CASE("signal projection keeps only the listed signals") {
  auto a = make_session("a", {1}, {5, 6});
  a.readings.push_back({0, Signal::cpu, 1});
  const Placement p{&a, 0};
  const auto tl = assemble_timeline(std::span<const Placement>(&p, 1));
  const std::array<Signal, 1> keep{Signal::rss};
  const auto proj = project_signals(tl, keep);
  CHECK(proj.readings.size() == 2);
  CHECK(proj.events == tl.events);
  CHECK(proj.span == tl.span);
}

TEST_CASE("roster text round trip") {
  const auto r = build_roster(inputs(12), 5);
  std::ostringstream out;
  write_roster(out, r);
  std::istringstream in(out.str());
  const auto back = read_roster(in);
  std::ostringstream again;
  write_roster(again, back);
  CHECK(again.str() == out.str());
  CHECK(back.scenarios.size() == r.scenarios.size());

  std::istringstream bad("scenario x weird - 0 1 A 3\n");
  CHECK_THROWS_AS(read_roster(bad), ParseError);
}

}  // TEST_SUITE
