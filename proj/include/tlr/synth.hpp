#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string_view>
#include <vector>

#include "tlr/trace.hpp"

namespace tlr {

using Rng = std::mt19937_64;

struct LevelRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  std::int64_t width() const { return hi - lo + 1; }
  bool contains(std::int64_t v) const { return v >= lo && v <= hi; }
};

struct SignalModel {
  Signal name = Signal::rss;
  LevelRange normal;
  // Maximum distance a normal session wanders from its base level.
  std::int64_t drift = 4;
};

// Parameters of the synthetic wuftpd-like corpus.
struct SynthProfile {
  int universe_size = kDefaultUniverseSize;
  std::vector<Syscall> normal_vocab;
  // The last `rare_count` entries of normal_vocab appear in a session only
  // with probability `rare_probability` each.
  int rare_count = 0;
  double rare_probability = 0.0;
  std::vector<Syscall> attack_extra_vocab;
  std::vector<SignalModel> signals;
  double overlap = 0.25;

  int normal_sessions = 55;
  std::int64_t events_min = 0;
  std::int64_t events_max = 0;
  double duration_min_s = 0;
  double duration_max_s = 0;
  std::int64_t attack_events_min = 0;
  std::int64_t attack_events_max = 0;
  double attack_duration_min_s = 0;
  double attack_duration_max_s = 0;
  // Share of attack-phase events drawn from attack_extra_vocab.
  double attack_syscall_fraction = 0.05;

  static SynthProfile defaults();

  // Attack level range: same width as the normal range, shifted upwards so
  // that round(overlap * width) levels are shared.
  LevelRange attack_range(const SignalModel& m) const;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

// "key value..." lines; unknown keys and bad values name the field.
SynthProfile parse_synth_profile(std::istream& in);
void write_synth_profile(std::ostream& out, const SynthProfile& p);

enum class AttackKind : std::uint8_t { success01, success02, success03, success04, failure01 };

std::string_view to_string(AttackKind k);
std::optional<AttackKind> attack_kind_from_string(std::string_view name);
inline constexpr std::array<AttackKind, 5> kAttackKinds{
    AttackKind::success01, AttackKind::success02, AttackKind::success03,
    AttackKind::success04, AttackKind::failure01};

Session synth_normal_session(Rng& rng, const SynthProfile& profile, std::string id = "normal");
Session synth_attack_session(Rng& rng, const SynthProfile& profile, AttackKind kind);

// 55 normal sessions (normal000..) plus one session per attack kind.
Dataset synth_dataset(std::uint64_t seed, const SynthProfile& profile);

}  // namespace tlr
