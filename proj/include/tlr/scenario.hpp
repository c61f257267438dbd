#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tlr/synth.hpp"
#include "tlr/trace.hpp"

namespace tlr {

struct TimelineEvent {
  Nanos t = 0;
  Syscall syscall = 0;

  friend bool operator==(const TimelineEvent&, const TimelineEvent&) = default;
};

// Flattened, time-ordered input for a replay. Pauses carry nothing.
struct Timeline {
  std::vector<TimelineEvent> events;
  std::vector<SignalReading> readings;
  Nanos span = 0;
};

struct Placement {
  const Session* session = nullptr;
  Nanos start = 0;
};

// Throws ValidationError if two placed sessions overlap in time.
Timeline assemble_timeline(std::span<const Placement> placements);
// Keeps readings for `keep` only.
Timeline project_signals(const Timeline& t, std::span<const Signal> keep);

struct ScenarioEntry {
  std::string session_id;
  int pause_after_s = 1;
};

enum class ScenarioKind : std::uint8_t { normal, failure, attack };
std::string_view to_string(ScenarioKind k);

struct Scenario {
  std::string id;
  ScenarioKind kind = ScenarioKind::normal;
  std::optional<AttackKind> inserted;  // attack or failure01 session kind
  std::size_t insert_position = 0;
  int replicate = 0;          // partition index, 1-based
  bool trained_on_a = true;   // training fold is A, test fold B
  std::uint64_t partition_seed = 0;
  std::vector<ScenarioEntry> entries;
  std::vector<std::string> training_ids;

  bool ground_truth_attack(const Dataset& ds) const;
};

using SessionLookup = std::function<const Session&(const std::string&)>;

// Sessions back to back; the last pause is not part of the span.
Timeline assemble_timeline(const Scenario& s, const SessionLookup& lookup);
Timeline assemble_timeline(const Scenario& s, const Dataset& ds);

struct PartitionPlan {
  std::vector<std::string> fold_a;  // floor(N/2)
  std::vector<std::string> fold_b;  // ceil(N/2)
  int replicate = 0;
  std::uint64_t seed = 0;
};

// Uniform random split of the ids; throws ValidationError for N < 2.
PartitionPlan partition_twofold(std::span<const std::string> ids, std::uint64_t seed,
                                int replicate = 0);

struct RosterInputs {
  std::vector<std::string> normals;
  std::map<AttackKind, std::string> attacks;  // success01..04 and failure01
};

struct Roster {
  std::uint64_t seed = 0;
  std::vector<PartitionPlan> partitions;
  std::vector<Scenario> scenarios;
};

inline constexpr int kNormalReplicates = 8;

// 16 normal, 4 failure01 and 20 attack scenarios (success01/02 x6,
// success03/04 x4). Throws ValidationError when an attack kind is missing.
Roster build_roster(const RosterInputs& inputs, std::uint64_t seed);
RosterInputs roster_inputs(const Dataset& ds);

void write_roster(std::ostream& out, const Roster& r);
Roster read_roster(std::istream& in);

}  // namespace tlr
