#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tlr/detector.hpp"
#include "tlr/synth.hpp"
#include "tlr/tissue.hpp"
#include "tlr/trace.hpp"

namespace testutil {

using namespace tlr;

inline constexpr Nanos kTick = 100'000'000;  // default cell update period

// One event per listed syscall, `gap` apart, and the given rss levels one per
// tick.
inline Session make_session(std::string id, std::vector<Syscall> syscalls,
                            std::vector<std::int64_t> rss = {}, Nanos gap = kTick,
                            SessionLabel label = SessionLabel::normal) {
  Session s;
  s.id = std::move(id);
  s.label = label;
  Nanos t = 0;
  for (auto sc : syscalls) {
    s.events.push_back({t, 42, sc});
    t += gap;
  }
  Nanos r = 0;
  for (auto level : rss) {
    s.readings.push_back({r, Signal::rss, level});
    r += kTick;
  }
  s.duration = std::max(s.last_timestamp(), t);
  return s;
}

// Small corpus that keeps bench-level tests fast.
inline SynthProfile small_profile() {
  auto p = SynthProfile::defaults();
  p.normal_sessions = 10;
  p.events_min = 30;
  p.events_max = 60;
  p.duration_min_s = 2;
  p.duration_max_s = 4;
  p.attack_events_min = 200;
  p.attack_events_max = 300;
  p.attack_duration_min_s = 8;
  p.attack_duration_max_s = 10;
  p.rare_probability = 0.05;
  return p;
}

// Cycle with fixed receptor repertoires and no-op callbacks; tests drive the
// tissue by hand.
class FixedCycle : public CellCycle {
 public:
  std::vector<Syscall> locks{99};
  std::vector<Signal> tlrs;
  std::vector<std::pair<CellKind, std::uint64_t>> calls;
  bool record = false;

  void immature_dc(Tissue& t, std::size_t c, Rng&) override { note(t, c); }
  void naive_tc(Tissue& t, std::size_t c, Rng&) override { note(t, c); }
  void semimature_dc(Tissue& t, std::size_t c, Rng&) override { note(t, c); }
  void mature_dc(Tissue& t, std::size_t c, Rng&) override { note(t, c); }
  void activated_tc(Tissue& t, std::size_t c, Rng&) override { note(t, c); }
  std::vector<Syscall> fresh_locks(Rng&) override { return locks; }
  std::vector<Signal> fresh_tlrs() override { return tlrs; }

 private:
  void note(Tissue& t, std::size_t c) {
    if (record) calls.emplace_back(t.cell(c).kind, t.cell(c).serial);
  }
};

inline TissueParams tiny_params() {
  TissueParams p;
  p.num_cells_1 = 1;
  p.num_cells_2 = 1;
  return p;
}

}  // namespace testutil
