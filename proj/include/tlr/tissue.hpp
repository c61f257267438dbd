#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "tlr/trace.hpp"

namespace tlr {

using Rng = std::mt19937_64;
using SyscallBits = boost::dynamic_bitset<std::uint64_t>;

// libtissue parameters; defaults are the standard tlr settings.
struct TissueParams {
  int max_antigen = 1000;
  int max_cytokines = 3;
  int max_cells = 10000;
  std::int64_t cell_update_rate_us = 100000;
  int antigen_multiplier = 10;
  int num_cells_1 = 100;
  int cell_lifespan_1 = 100;
  int num_antigen_1 = 100;
  int num_antigen_receptors_1 = 10;
  int num_antigen_producers_1 = 100;
  int num_cytokine_receptors_1 = 3;
  int antigen_producer_action_time = 10;
  int num_cells_2 = 100;
  int cell_lifespan_2 = 10;
  int num_cell_receptors_2 = 1000;
  int num_vr_receptors_2 = 100;
  int cell_lifespan_3 = 100;
  int cell_lifespan_4 = 100;
  int cell_lifespan_5 = 100;
  std::int64_t probe_rate_us = 1000000;

  void validate() const;
  Nanos tick_ns() const { return cell_update_rate_us * 1000; }

  // Sets a field by its parameter name; throws ValidationError on unknown
  // names or non-integer values.
  void set(std::string_view name, std::string_view value);
  // One "name value" line per field in declaration order.
  std::string to_text() const;

  friend bool operator==(const TissueParams&, const TissueParams&) = default;
};

enum class Compartment : std::uint8_t { extralymphoid, lymph_node };

enum class CellKind : std::uint8_t { iDC, smDC, mDC, nTC, aTC };
inline constexpr std::size_t kCellKindCount = 5;

std::string_view to_string(CellKind k);
constexpr Compartment home_compartment(CellKind k) {
  return (k == CellKind::iDC || k == CellKind::aTC) ? Compartment::extralymphoid
                                                    : Compartment::lymph_node;
}
constexpr bool is_dc(CellKind k) {
  return k == CellKind::iDC || k == CellKind::smDC || k == CellKind::mDC;
}

struct Cell {
  std::uint64_t serial = 0;  // creation order
  CellKind kind = CellKind::iDC;
  Compartment compartment = Compartment::extralymphoid;
  int iterations = 0;
  bool alive = true;
  // Set when a callback assigned `iterations` this tick; suppresses the
  // end-of-tick increment.
  bool touched = false;

  std::vector<Syscall> antigen_store;  // collected by an immature DC
  std::vector<Syscall> presented;      // on antigen producers after migration
  SyscallBits presented_bits;
  std::size_t presented_offset = 0;
  std::vector<Syscall> vr_locks;  // T cell receptor locks
  SyscallBits lock_bits;
  std::vector<Signal> tlr_signals;
};

struct Alert {
  std::int64_t tick = 0;
  Syscall syscall = 0;
  CellKind source = CellKind::mDC;

  friend bool operator==(const Alert&, const Alert&) = default;
};

struct TickReport {
  std::int64_t tick = 0;
  std::array<int, kCellKindCount> population{};
  std::vector<Alert> alerts;
  int activations = 0;
  int tolerance_deletions = 0;

  int count(CellKind k) const { return population[static_cast<std::size_t>(k)]; }
  friend bool operator==(const TickReport&, const TickReport&) = default;
};

class Tissue;

// Behaviour plugged into the tick loop: one callback per cell kind plus the
// receptor repertoire source for fresh naive T cells.
class CellCycle {
 public:
  virtual ~CellCycle() = default;
  virtual void immature_dc(Tissue& tissue, std::size_t cell, Rng& rng) = 0;
  virtual void naive_tc(Tissue& tissue, std::size_t cell, Rng& rng) = 0;
  virtual void semimature_dc(Tissue& tissue, std::size_t cell, Rng& rng) = 0;
  virtual void mature_dc(Tissue& tissue, std::size_t cell, Rng& rng) = 0;
  virtual void activated_tc(Tissue& tissue, std::size_t cell, Rng& rng) = 0;
  virtual std::vector<Syscall> fresh_locks(Rng& rng) = 0;
  virtual std::vector<Signal> fresh_tlrs() = 0;
};

// Two-compartment cell population with a shared antigen store and signal
// board. Per tick, callbacks run over a snapshot taken at tick start: every
// iDC in creation order, then nTCs, smDCs, mDCs and aTCs. Cells created or
// converted during a tick first run on the next one.
//
// Not thread-safe; one instance per replay.
class Tissue {
 public:
  Tissue(TissueParams params, CellCycle& cycle, int universe_size, Rng& rng);

  const TissueParams& params() const { return params_; }
  int universe_size() const { return universe_size_; }
  std::int64_t tick() const { return tick_; }

  // Appends antigen_multiplier copies, evicting the oldest tokens first.
  void inject_antigen(Syscall s);
  void set_signal(Signal name, std::int64_t level);
  std::optional<std::int64_t> signal(Signal name) const;
  const std::map<Signal, std::int64_t>& signals() const { return signals_; }

  TickReport step(Rng& rng);

  int population(CellKind k) const;
  std::size_t antigen_count() const { return store_.size(); }
  int antigen_count(Syscall s) const { return counts_[static_cast<std::size_t>(s)]; }
  std::vector<Syscall> antigen_tokens() const;

  // Cell access for callbacks and tests. Indices are stable within a tick.
  std::size_t cell_count() const { return cells_.size(); }
  Cell& cell(std::size_t i) { return cells_[i]; }
  const Cell& cell(std::size_t i) const { return cells_[i]; }
  std::vector<std::size_t> live_cells(CellKind k) const;

  // Mutations used by cell-cycle callbacks.
  std::size_t add_immature_dc();
  std::size_t add_naive_tc(Rng& rng);
  void remove(std::size_t i);
  // Turns an iDC into an smDC/mDC in the lymph node with its store loaded
  // onto antigen producers.
  void migrate_dc(std::size_t i, CellKind to);
  // Turns an nTC into an aTC in the extralymphoid compartment keeping only
  // `lock`.
  void activate_tc(std::size_t i, Syscall lock);
  // Moves up to num_antigen_receptors_1 random tokens from the store into the
  // DC, bounded by its remaining capacity num_antigen_1.
  void collect_antigen(std::size_t i, Rng& rng);
  void set_iterations(std::size_t i, int value);
  // Re-selects the presented window when the store exceeds producer slots.
  void rotate_presentation(std::size_t i);

  // Lymph node DCs that naive T cells can bind this tick.
  const std::vector<std::size_t>& lymph_dcs() const { return lymph_dcs_; }
  const SyscallBits& presented_union() const { return presented_union_; }
  // Recomputes lymph_dcs() and presented_union(); step() does this after the
  // iDC phase.
  void rebuild_lymph_view();

  void record_alert(Syscall s, CellKind source);
  void record_tolerance_deletion() { ++current_.tolerance_deletions; }

  // Throws ContractError on any homeostasis, capacity or compartment
  // violation.
  void check_invariants() const;

 private:
  struct Token {
    Syscall syscall;
    std::uint64_t seq;
  };

  std::size_t spawn(CellKind kind);
  void compact();
  void load_presentation(Cell& c);

  TissueParams params_;
  CellCycle& cycle_;
  int universe_size_;
  std::int64_t tick_ = 0;
  std::uint64_t next_serial_ = 0;
  std::uint64_t next_token_seq_ = 0;
  int live_total_ = 0;

  std::vector<Cell> cells_;
  std::deque<Token> store_;
  std::vector<int> counts_;
  std::map<Signal, std::int64_t> signals_;

  std::vector<std::size_t> lymph_dcs_;
  SyscallBits presented_union_;
  TickReport current_;
};

// Fixed-width probe line: "tick iDC smDC mDC nTC aTC alerts".
void write_probe(std::ostream& out, const TickReport& r);

}  // namespace tlr
