#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tlr/detector.hpp"
#include "tlr/metrics.hpp"
#include "tlr/scenario.hpp"
#include "tlr/tissue.hpp"

namespace tlr {

// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);
std::string params_hash(const TissueParams& p);
// Digest over the canonical serialization of every session.
std::string dataset_hash(const Dataset& ds);

enum class System : std::uint8_t { systrace, negsel, sig1, sig2, sig3, tlr1, tlr2, tlr3 };
inline constexpr std::array<System, 8> kAllSystems{
    System::systrace, System::negsel, System::sig1, System::sig2,
    System::sig3,     System::tlr1,   System::tlr2, System::tlr3};

std::string_view to_string(System s);
std::optional<System> system_from_string(std::string_view name);
bool uses_tissue(System s);
Variant engine_variant(System s);

struct BenchConfig {
  std::vector<System> systems{kAllSystems.begin(), kAllSystems.end()};
  std::uint64_t seed = 1;
  TissueParams params;
  bool exhaustive_negsel = true;
  bool exhaustive_tlr = false;
  unsigned threads = 1;
};

struct ScenarioOutcome {
  bool truth_attack = false;
  std::map<System, bool> verdict;
  std::map<System, int> alerts;
};

struct BenchResult {
  Roster roster;
  std::vector<ScenarioOutcome> outcomes;  // aligned with roster.scenarios
  BenchReport report;
  std::string header;  // "# seed ... params_hash ... dataset_hash ..."
};

// Builds the roster, trains every system on each scenario's training fold and
// classifies all scenarios. Output order does not depend on `threads`.
BenchResult run_bench(const Dataset& ds, const BenchConfig& cfg);

ConfusionCounts counts_for(const BenchResult& r, System s);

std::string emit_verdicts(const BenchResult& r);

// Seed for one detector, derived from the bench seed and scenario index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace tlr
