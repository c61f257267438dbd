#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tlr/scenario.hpp"
#include "tlr/tissue.hpp"
#include "tlr/trace.hpp"

namespace tlr {

enum class Variant : std::uint8_t { tlr1, tlr2, tlr3, negsel };

std::string_view to_string(Variant v);
std::optional<Variant> variant_from_string(std::string_view name);
// Context signals watched by the variant's TLRs (empty for negsel).
std::span<const Signal> monitored_signals(Variant v);

struct TrainedProfile {
  int universe_size = kDefaultUniverseSize;
  std::set<Syscall> normal_antigen;
  std::vector<Syscall> permissible_agr;  // ascending
  std::map<Signal, std::set<std::int64_t>> normal_levels;
  std::vector<std::string> training_ids;

  bool is_normal_antigen(Syscall s) const { return normal_antigen.contains(s); }
  // A TLR for `name` fires when the level was never seen in training.
  bool tlr_fires(Signal name, std::int64_t level) const;
};

// Throws ContractError when any session is not labelled normal.
TrainedProfile train(std::span<const Session* const> sessions, Variant variant,
                     int universe_size = kDefaultUniverseSize);
TrainedProfile train(std::span<const Session> sessions, Variant variant,
                     int universe_size = kDefaultUniverseSize);

// Any monitored signal currently held at an unseen level.
bool tlr_activated(const TrainedProfile& profile, Variant variant,
                   const std::map<Signal, std::int64_t>& held);

void write_profile(std::ostream& out, const TrainedProfile& p);
TrainedProfile read_profile(std::istream& in);

struct DetectorOptions {
  Variant variant = Variant::tlr3;
  std::uint64_t seed = 0;
  TissueParams params;
  // Replace random lock draws with a cyclic sweep over the permissible set.
  bool exhaustive = false;
  // Sleep one cell update period per tick.
  bool pacing = false;
  // Extra ticks replayed after the timeline so late antigen can be presented.
  int drain_ticks = -1;  // -1: cell_lifespan_1 + 2 * cell_lifespan_2 + 2
};

// Detector variant parameters: tlr1/tlr2 use as many cytokine slots and
// receptors as they monitor signals.
TissueParams variant_params(Variant v, TissueParams base);

struct DetectionResult {
  std::string scenario_id;
  std::vector<Alert> alerts;
  std::vector<TickReport> trace;  // populated when requested
  std::int64_t ticks = 0;
  int activations = 0;
  int tolerance_deletions = 0;

  bool verdict_attack() const { return !alerts.empty(); }
};

// The five cell-cycle callbacks and the lock repertoire of a trained tlr
// detector.
class TlrCellCycle final : public CellCycle {
 public:
  TlrCellCycle(const TrainedProfile& profile, Variant variant, bool exhaustive);

  void immature_dc(Tissue& tissue, std::size_t cell, Rng& rng) override;
  void naive_tc(Tissue& tissue, std::size_t cell, Rng& rng) override;
  void semimature_dc(Tissue& tissue, std::size_t cell, Rng& rng) override;
  void mature_dc(Tissue& tissue, std::size_t cell, Rng& rng) override;
  void activated_tc(Tissue& tissue, std::size_t cell, Rng& rng) override;
  std::vector<Syscall> fresh_locks(Rng& rng) override;
  std::vector<Signal> fresh_tlrs() override;

  void set_lock_count(int n) { lock_count_ = n; }
  void set_receptor_count(int n) { receptor_count_ = n; }

 private:
  const TrainedProfile& profile_;
  Variant variant_;
  bool exhaustive_;
  int lock_count_ = 0;
  int receptor_count_ = 0;
  std::size_t sweep_cursor_ = 0;
};

// Callbacks as free functions over a tissue cell.
void immature_dc_step(Tissue& tissue, std::size_t cell, const TrainedProfile& profile,
                      bool tlrs_enabled, Rng& rng);
void naive_tc_step(Tissue& tissue, std::size_t cell, bool semimature_expresses_il12, Rng& rng);
void semimature_dc_step(Tissue& tissue, std::size_t cell);
void mature_dc_step(Tissue& tissue, std::size_t cell);
void activated_tc_step(Tissue& tissue, std::size_t cell);

class Detector {
 public:
  // Throws ValidationError when the permissible set is empty or the profile
  // lacks levels for a monitored signal.
  Detector(TrainedProfile profile, DetectorOptions options);
  Detector(const Detector&) = delete;
  Detector& operator=(const Detector&) = delete;

  const TrainedProfile& profile() const { return profile_; }
  const DetectorOptions& options() const { return options_; }
  Tissue& tissue() { return *tissue_; }
  Rng& rng() { return rng_; }

  // Throws ValidationError for signals the variant does not monitor.
  void set_signal(Signal name, std::int64_t level);
  void inject(Syscall s) { tissue_->inject_antigen(s); }
  TickReport step();

  // Replays the timeline tick by tick; readings for unmonitored signals are
  // rejected, so project the timeline first.
  DetectionResult run(const Timeline& timeline, std::string scenario_id = {},
                      bool keep_trace = false, std::ostream* probe_log = nullptr);

 private:
  TrainedProfile profile_;
  DetectorOptions options_;
  Rng rng_;
  std::unique_ptr<TlrCellCycle> cycle_;
  std::unique_ptr<Tissue> tissue_;
};

std::unique_ptr<Detector> build_detector(const TrainedProfile& profile, Variant variant,
                                         const TissueParams& params, std::uint64_t seed,
                                         bool exhaustive = false);

DetectionResult run_scenario(Detector& detector, const Timeline& timeline,
                             std::string scenario_id = {});

void write_alert_log(std::ostream& out, const std::vector<Alert>& alerts);

}  // namespace tlr
