#include "tlr/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace tlr {

namespace {

constexpr Nanos kReadingInterval = kNanosPerSecond / 10;

// Distinct attack-only syscalls used by each successful attack.
int extra_syscalls_for(AttackKind k) {
  switch (k) {
    case AttackKind::success01: return 2;
    case AttackKind::success02: return 3;
    case AttackKind::success03: return 4;
    case AttackKind::success04: return 3;
    case AttackKind::failure01: return 0;
  }
  return 0;
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

template <typename T>
T uniform_int(Rng& rng, T lo, T hi) {
  return std::uniform_int_distribution<T>(lo, hi)(rng);
}

bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

Nanos draw_duration(Rng& rng, double lo_s, double hi_s) {
  const double s = std::uniform_real_distribution<double>(lo_s, hi_s)(rng);
  // Whole reading intervals keep the signal grid aligned with the duration.
  return static_cast<Nanos>(std::llround(s * 10.0)) * kReadingInterval;
}

std::vector<Nanos> event_times(Rng& rng, std::int64_t n, Nanos duration) {
  std::vector<Nanos> t(static_cast<std::size_t>(n));
  std::uniform_int_distribution<Nanos> d(0, duration);
  for (auto& x : t) x = d(rng);
  std::sort(t.begin(), t.end());
  return t;
}

std::vector<Syscall> common_vocab(const SynthProfile& p) {
  return {p.normal_vocab.begin(), p.normal_vocab.end() - p.rare_count};
}

// Mean-reverting bounded walk around a per-session base level.
class NormalWalk {
 public:
  NormalWalk(Rng& rng, const SignalModel& m)
      : model_(m), base_(uniform_int(rng, m.normal.lo, m.normal.hi)) {}

  std::int64_t next(Rng& rng) {
    if (model_.drift > 0 && chance(rng, 0.2)) {
      offset_ += chance(rng, 0.5) ? 1 : -1;
      offset_ = std::clamp(offset_, -model_.drift, model_.drift);
    }
    return std::clamp(base_ + offset_, model_.normal.lo, model_.normal.hi);
  }

 private:
  SignalModel model_;
  std::int64_t base_;
  std::int64_t offset_ = 0;
};

void sort_readings(std::vector<SignalReading>& r) {
  std::stable_sort(r.begin(), r.end(), [](const SignalReading& a, const SignalReading& b) {
    return a.t < b.t;
  });
}

std::vector<std::int64_t> parse_list(std::string_view field, const std::vector<std::string>& toks) {
  std::vector<std::int64_t> out;
  for (const auto& t : toks) {
    const auto dash = t.find('-', 1);
    auto to_int = [&](std::string_view s) {
      std::int64_t v = 0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw ValidationError(std::string(field) + ": bad value '" + t + "'");
      return v;
    };
    if (dash == std::string::npos) {
      out.push_back(to_int(t));
    } else {
      const auto lo = to_int(std::string_view(t).substr(0, dash));
      const auto hi = to_int(std::string_view(t).substr(dash + 1));
      if (hi < lo) throw ValidationError(std::string(field) + ": empty range '" + t + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
  }
  return out;
}

double parse_real(std::string_view field, const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string(field) + ": bad number '" + tok + "'");
  }
}

std::int64_t parse_one_int(std::string_view field, const std::string& tok) {
  const auto v = parse_list(field, {tok});
  if (v.size() != 1) throw ValidationError(std::string(field) + ": expected an integer");
  return v.front();
}

void write_vocab(std::ostream& out, const std::vector<Syscall>& v) {
  // Collapse consecutive runs into a-b ranges.
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[j] + 1) ++j;
    out << ' ' << v[i];
    if (j > i) out << '-' << v[j];
    i = j + 1;
  }
}

}  // namespace

SynthProfile SynthProfile::defaults() {
  SynthProfile p;
  p.normal_vocab.resize(72);
  std::iota(p.normal_vocab.begin(), p.normal_vocab.end(), 0);
  p.rare_count = 24;
  p.rare_probability = 0.004;
  p.attack_extra_vocab.resize(30);
  std::iota(p.attack_extra_vocab.begin(), p.attack_extra_vocab.end(), 180);
  p.signals = {
      {Signal::rss, {600, 680}, 6},
      {Signal::num_files, {8, 28}, 2},
      {Signal::num_reg, {2, 12}, 1},
  };
  p.overlap = 0.25;
  p.normal_sessions = 55;
  p.events_min = 400;
  p.events_max = 1200;
  p.duration_min_s = 25;
  p.duration_max_s = 50;
  p.attack_events_min = 7000;
  p.attack_events_max = 9000;
  p.attack_duration_min_s = 180;
  p.attack_duration_max_s = 220;
  p.attack_syscall_fraction = 0.05;
  return p;
}

LevelRange SynthProfile::attack_range(const SignalModel& m) const {
  const std::int64_t w = m.normal.width();
  const auto shared = static_cast<std::int64_t>(std::llround(overlap * static_cast<double>(w)));
  const std::int64_t lo = m.normal.hi - shared + 1;
  return {lo, lo + w - 1};
}

void SynthProfile::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ValidationError("synth profile field '" + field + "': " + why);
  };
  if (universe_size <= 0) fail("universe_size", "must be positive");
  if (normal_vocab.empty()) fail("normal_vocab", "must not be empty");
  std::set<Syscall> normal(normal_vocab.begin(), normal_vocab.end());
  if (normal.size() != normal_vocab.size()) fail("normal_vocab", "duplicate syscall");
  for (auto s : normal_vocab)
    if (s < 0 || s >= universe_size) fail("normal_vocab", "syscall outside universe");
  if (rare_count < 0 || rare_count >= static_cast<int>(normal_vocab.size()))
    fail("rare_count", "must leave at least one common syscall");
  if (rare_probability < 0 || rare_probability > 1) fail("rare_probability", "must be in [0,1]");
  if (attack_extra_vocab.empty()) fail("attack_extra_vocab", "must not be empty");
  std::set<Syscall> extra(attack_extra_vocab.begin(), attack_extra_vocab.end());
  if (extra.size() != attack_extra_vocab.size()) fail("attack_extra_vocab", "duplicate syscall");
  for (auto s : attack_extra_vocab) {
    if (s < 0 || s >= universe_size) fail("attack_extra_vocab", "syscall outside universe");
    if (normal.contains(s)) fail("attack_extra_vocab", "overlaps normal_vocab");
  }
  if (!(overlap >= 0 && overlap <= 1)) fail("overlap", "must be in [0,1]");
  if (signals.empty()) fail("signal", "at least one signal required");
  std::set<Signal> seen;
  for (const auto& m : signals) {
    if (!seen.insert(m.name).second) fail("signal", "duplicate signal " + std::string(to_string(m.name)));
    if (m.normal.lo > m.normal.hi) fail("signal", "lo > hi for " + std::string(to_string(m.name)));
    if (m.drift < 0) fail("signal", "negative drift");
  }
  if (normal_sessions < 2) fail("normal_sessions", "need at least 2");
  if (events_min < 0 || events_min > events_max) fail("events_per_session", "bad range");
  if (duration_min_s <= 0 || duration_min_s > duration_max_s) fail("session_duration_s", "bad range");
  if (attack_events_min < 1 || attack_events_min > attack_events_max) fail("attack_events", "bad range");
  if (attack_duration_min_s <= 0 || attack_duration_min_s > attack_duration_max_s)
    fail("attack_duration_s", "bad range");
  if (!(attack_syscall_fraction > 0 && attack_syscall_fraction <= 1))
    fail("attack_syscall_fraction", "must be in (0,1]");
}

SynthProfile parse_synth_profile(std::istream& in) {
  SynthProfile p = SynthProfile::defaults();
  bool signals_reset = false;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::vector<std::string> v;
    for (std::string t; ls >> t;) v.push_back(t);
    auto need = [&](std::size_t n) {
      if (v.size() != n)
        throw ValidationError("synth profile field '" + key + "': expected " + std::to_string(n) +
                              " value(s)");
    };
    if (key == "universe_size") {
      need(1);
      p.universe_size = static_cast<int>(parse_one_int(key, v[0]));
    } else if (key == "normal_vocab" || key == "attack_extra_vocab") {
      const auto ints = parse_list(key, v);
      auto& dst = key == "normal_vocab" ? p.normal_vocab : p.attack_extra_vocab;
      dst.assign(ints.begin(), ints.end());
    } else if (key == "rare_count") {
      need(1);
      p.rare_count = static_cast<int>(parse_one_int(key, v[0]));
    } else if (key == "rare_probability") {
      need(1);
      p.rare_probability = parse_real(key, v[0]);
    } else if (key == "overlap") {
      need(1);
      p.overlap = parse_real(key, v[0]);
    } else if (key == "normal_sessions") {
      need(1);
      p.normal_sessions = static_cast<int>(parse_one_int(key, v[0]));
    } else if (key == "events_per_session") {
      need(2);
      p.events_min = parse_one_int(key, v[0]);
      p.events_max = parse_one_int(key, v[1]);
    } else if (key == "session_duration_s") {
      need(2);
      p.duration_min_s = parse_real(key, v[0]);
      p.duration_max_s = parse_real(key, v[1]);
    } else if (key == "attack_events") {
      need(2);
      p.attack_events_min = parse_one_int(key, v[0]);
      p.attack_events_max = parse_one_int(key, v[1]);
    } else if (key == "attack_duration_s") {
      need(2);
      p.attack_duration_min_s = parse_real(key, v[0]);
      p.attack_duration_max_s = parse_real(key, v[1]);
    } else if (key == "attack_syscall_fraction") {
      need(1);
      p.attack_syscall_fraction = parse_real(key, v[0]);
    } else if (key == "signal") {
      need(4);
      const auto name = signal_from_string(v[0]);
      if (!name) throw ValidationError("synth profile field 'signal': unknown signal '" + v[0] + "'");
      if (!signals_reset) {
        p.signals.clear();
        signals_reset = true;
      }
      p.signals.push_back({*name, {parse_one_int(key, v[1]), parse_one_int(key, v[2])},
                           parse_one_int(key, v[3])});
    } else {
      throw ValidationError("synth profile field '" + key + "': unknown field");
    }
  }
  p.validate();
  return p;
}

void write_synth_profile(std::ostream& out, const SynthProfile& p) {
  out << "universe_size " << p.universe_size << "\nnormal_vocab";
  write_vocab(out, p.normal_vocab);
  out << "\nrare_count " << p.rare_count << "\nrare_probability " << p.rare_probability
      << "\nattack_extra_vocab";
  write_vocab(out, p.attack_extra_vocab);
  out << "\noverlap " << p.overlap << "\nnormal_sessions " << p.normal_sessions
      << "\nevents_per_session " << p.events_min << ' ' << p.events_max
      << "\nsession_duration_s " << p.duration_min_s << ' ' << p.duration_max_s
      << "\nattack_events " << p.attack_events_min << ' ' << p.attack_events_max
      << "\nattack_duration_s " << p.attack_duration_min_s << ' ' << p.attack_duration_max_s
      << "\nattack_syscall_fraction " << p.attack_syscall_fraction << '\n';
  for (const auto& m : p.signals)
    out << "signal " << to_string(m.name) << ' ' << m.normal.lo << ' ' << m.normal.hi << ' '
        << m.drift << '\n';
}

std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::success01: return "success01";
    case AttackKind::success02: return "success02";
    case AttackKind::success03: return "success03";
    case AttackKind::success04: return "success04";
    case AttackKind::failure01: return "failure01";
  }
  return "?";
}

std::optional<AttackKind> attack_kind_from_string(std::string_view name) {
  for (auto k : kAttackKinds)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

Session synth_normal_session(Rng& rng, const SynthProfile& profile, std::string id) {
  Session s;
  s.id = std::move(id);
  s.label = SessionLabel::normal;
  s.duration = draw_duration(rng, profile.duration_min_s, profile.duration_max_s);
  const auto pid = uniform_int<std::int64_t>(rng, 1000, 30999);

  const auto common = common_vocab(profile);
  const auto n = uniform_int(rng, profile.events_min, profile.events_max);
  const auto times = event_times(rng, n, s.duration);
  s.events.reserve(times.size());
  for (auto t : times)
    s.events.push_back({t, pid, common[uniform_int<std::size_t>(rng, 0, common.size() - 1)]});

  // Rare syscalls replace a handful of events in the sessions that use them.
  for (auto it = profile.normal_vocab.end() - profile.rare_count; it != profile.normal_vocab.end();
       ++it) {
    if (!chance(rng, profile.rare_probability) || s.events.empty()) continue;
    const int uses = uniform_int(rng, 1, 5);
    for (int u = 0; u < uses; ++u)
      s.events[uniform_int<std::size_t>(rng, 0, s.events.size() - 1)].syscall = *it;
  }

  for (const auto& m : profile.signals) {
    NormalWalk walk(rng, m);
    for (Nanos t = 0; t <= s.duration; t += kReadingInterval)
      s.readings.push_back({t, m.name, walk.next(rng)});
  }
  sort_readings(s.readings);
  return s;
}

Session synth_attack_session(Rng& rng, const SynthProfile& profile, AttackKind kind) {
  Session s;
  s.id = std::string(to_string(kind));
  s.label = kind == AttackKind::failure01 ? SessionLabel::failed_attack : SessionLabel::attack;
  s.duration = draw_duration(rng, profile.attack_duration_min_s, profile.attack_duration_max_s);
  const auto pid = uniform_int<std::int64_t>(rng, 1000, 30999);
  const auto common = common_vocab(profile);

  // The exploit starts after a short stretch of ordinary server activity.
  const double start_frac = std::uniform_real_distribution<double>(0.1, 0.3)(rng);
  const auto attack_start =
      static_cast<Nanos>(start_frac * static_cast<double>(s.duration)) / kReadingInterval *
      kReadingInterval;

  std::vector<Syscall> extra = profile.attack_extra_vocab;
  std::shuffle(extra.begin(), extra.end(), rng);
  extra.resize(std::min<std::size_t>(extra.size(), extra_syscalls_for(kind)));

  const auto n = uniform_int(rng, profile.attack_events_min, profile.attack_events_max);
  const auto times = event_times(rng, n, s.duration);
  bool injected = false;
  std::size_t first_attack_event = times.size();
  for (std::size_t i = 0; i < times.size(); ++i) {
    Syscall sc = common[uniform_int<std::size_t>(rng, 0, common.size() - 1)];
    if (times[i] >= attack_start) {
      first_attack_event = std::min(first_attack_event, i);
      if (!extra.empty() && chance(rng, profile.attack_syscall_fraction)) {
        sc = extra[uniform_int<std::size_t>(rng, 0, extra.size() - 1)];
        injected = true;
      }
    }
    s.events.push_back({times[i], pid, sc});
  }
  if (!extra.empty() && !injected) {
    const auto at = first_attack_event < s.events.size() ? first_attack_event : s.events.size() - 1;
    s.events[at].syscall = extra.front();
  }

  for (const auto& m : profile.signals) {
    NormalWalk walk(rng, m);
    const auto attack = profile.attack_range(m);
    std::int64_t held = uniform_int(rng, attack.lo, attack.hi);
    // failure01 only touches the edges of the normal range, briefly.
    std::int64_t excursion_left = 0;
    for (Nanos t = 0; t <= s.duration; t += kReadingInterval) {
      std::int64_t level = walk.next(rng);
      if (t >= attack_start) {
        if (kind == AttackKind::failure01) {
          if (excursion_left == 0 && chance(rng, 0.01)) excursion_left = uniform_int(rng, 1, 3);
          if (excursion_left > 0) {
            --excursion_left;
            level = chance(rng, 0.5) ? m.normal.lo : m.normal.hi;
          }
        } else {
          if (chance(rng, 0.5)) held = uniform_int(rng, attack.lo, attack.hi);
          level = held;
        }
      }
      s.readings.push_back({t, m.name, level});
    }
  }
  sort_readings(s.readings);
  return s;
}

Dataset synth_dataset(std::uint64_t seed, const SynthProfile& profile) {
  profile.validate();
  Dataset ds;
  ds.universe_size = profile.universe_size;
  for (int i = 0; i < profile.normal_sessions; ++i) {
    Rng rng(sub_seed(seed, static_cast<std::uint64_t>(i)));
    char id[32];
    std::snprintf(id, sizeof id, "normal%03d", i);
    ds.sessions.push_back(synth_normal_session(rng, profile, id));
  }
  for (auto k : kAttackKinds) {
    Rng rng(sub_seed(seed, 100000 + static_cast<std::uint64_t>(k)));
    ds.sessions.push_back(synth_attack_session(rng, profile, k));
  }
  return ds;
}

}  // namespace tlr
