#include "tlr/tissue.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tlr {

namespace {

template <typename Fn>
void for_each_param(TissueParams& p, Fn&& fn) {
  fn("max_antigen", p.max_antigen);
  fn("max_cytokines", p.max_cytokines);
  fn("max_cells", p.max_cells);
  fn("cell_update_rate_us", p.cell_update_rate_us);
  fn("antigen_multiplier", p.antigen_multiplier);
  fn("num_cells_1", p.num_cells_1);
  fn("cell_lifespan_1", p.cell_lifespan_1);
  fn("num_antigen_1", p.num_antigen_1);
  fn("num_antigen_receptors_1", p.num_antigen_receptors_1);
  fn("num_antigen_producers_1", p.num_antigen_producers_1);
  fn("num_cytokine_receptors_1", p.num_cytokine_receptors_1);
  fn("antigen_producer_action_time", p.antigen_producer_action_time);
  fn("num_cells_2", p.num_cells_2);
  fn("cell_lifespan_2", p.cell_lifespan_2);
  fn("num_cell_receptors_2", p.num_cell_receptors_2);
  fn("num_vr_receptors_2", p.num_vr_receptors_2);
  fn("cell_lifespan_3", p.cell_lifespan_3);
  fn("cell_lifespan_4", p.cell_lifespan_4);
  fn("cell_lifespan_5", p.cell_lifespan_5);
  fn("probe_rate_us", p.probe_rate_us);
}

}  // namespace

void TissueParams::validate() const {
  auto copy = *this;
  for_each_param(copy, [](std::string_view name, auto value) {
    if (value <= 0) throw ValidationError("tissue parameter " + std::string(name) + " must be positive");
  });
  if (num_cytokine_receptors_1 > max_cytokines)
    throw ValidationError("num_cytokine_receptors_1 exceeds max_cytokines");
  if (num_cells_1 + num_cells_2 > max_cells)
    throw ValidationError("num_cells_1 + num_cells_2 exceeds max_cells");
}

void TissueParams::set(std::string_view name, std::string_view value) {
  bool found = false;
  for_each_param(*this, [&](std::string_view n, auto& field) {
    if (n != name) return;
    found = true;
    std::remove_reference_t<decltype(field)> v{};
    const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc{} || r.ptr != value.data() + value.size())
      throw ValidationError("tissue parameter " + std::string(name) + ": bad value '" +
                            std::string(value) + "'");
    field = v;
  });
  if (!found) throw ValidationError("unknown tissue parameter '" + std::string(name) + "'");
}

std::string TissueParams::to_text() const {
  std::ostringstream out;
  auto copy = *this;
  for_each_param(copy, [&](std::string_view n, auto v) { out << n << ' ' << v << '\n'; });
  return out.str();
}

std::string_view to_string(CellKind k) {
  switch (k) {
    case CellKind::iDC: return "iDC";
    case CellKind::smDC: return "smDC";
    case CellKind::mDC: return "mDC";
    case CellKind::nTC: return "nTC";
    case CellKind::aTC: return "aTC";
  }
  return "?";
}

Tissue::Tissue(TissueParams params, CellCycle& cycle, int universe_size, Rng& rng)
    : params_(std::move(params)),
      cycle_(cycle),
      universe_size_(universe_size),
      counts_(static_cast<std::size_t>(universe_size), 0),
      presented_union_(static_cast<std::size_t>(universe_size)) {
  params_.validate();
  if (universe_size <= 0) throw ValidationError("universe size must be positive");
  cells_.reserve(static_cast<std::size_t>(params_.num_cells_1 + params_.num_cells_2) * 2);
  for (int i = 0; i < params_.num_cells_1; ++i) add_immature_dc();
  for (int i = 0; i < params_.num_cells_2; ++i) add_naive_tc(rng);
}

void Tissue::inject_antigen(Syscall s) {
  if (s < 0 || s >= universe_size_)
    throw RangeError("antigen " + std::to_string(s) + " outside universe");
  for (int i = 0; i < params_.antigen_multiplier; ++i) {
    store_.push_back({s, next_token_seq_++});
    ++counts_[static_cast<std::size_t>(s)];
  }
  while (store_.size() > static_cast<std::size_t>(params_.max_antigen)) {
    --counts_[static_cast<std::size_t>(store_.front().syscall)];
    store_.pop_front();
  }
}

void Tissue::set_signal(Signal name, std::int64_t level) {
  if (!signals_.contains(name) &&
      signals_.size() >= static_cast<std::size_t>(params_.max_cytokines))
    throw CapacityError("signal board full: cannot track " + std::string(to_string(name)) +
                        " (max_cytokines " + std::to_string(params_.max_cytokines) + ")");
  signals_[name] = level;
}

std::optional<std::int64_t> Tissue::signal(Signal name) const {
  if (auto it = signals_.find(name); it != signals_.end()) return it->second;
  return std::nullopt;
}

int Tissue::population(CellKind k) const {
  return static_cast<int>(std::count_if(cells_.begin(), cells_.end(), [k](const Cell& c) {
    return c.alive && c.kind == k;
  }));
}

std::vector<Syscall> Tissue::antigen_tokens() const {
  std::vector<Syscall> out;
  out.reserve(store_.size());
  for (const auto& t : store_) out.push_back(t.syscall);
  return out;
}

std::vector<std::size_t> Tissue::live_cells(CellKind k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cells_.size(); ++i)
    if (cells_[i].alive && cells_[i].kind == k) out.push_back(i);
  return out;
}

std::size_t Tissue::spawn(CellKind kind) {
  if (live_total_ + 1 > params_.max_cells)
    throw CapacityError("cell population would exceed max_cells (" +
                        std::to_string(params_.max_cells) + ")");
  Cell c;
  c.serial = next_serial_++;
  c.kind = kind;
  c.compartment = home_compartment(kind);
  cells_.push_back(std::move(c));
  ++live_total_;
  return cells_.size() - 1;
}

std::size_t Tissue::add_immature_dc() {
  auto tlrs = cycle_.fresh_tlrs();
  const auto i = spawn(CellKind::iDC);
  cells_[i].tlr_signals = std::move(tlrs);
  return i;
}

std::size_t Tissue::add_naive_tc(Rng& rng) {
  auto locks = cycle_.fresh_locks(rng);
  const auto i = spawn(CellKind::nTC);
  auto& c = cells_[i];
  c.lock_bits.resize(static_cast<std::size_t>(universe_size_));
  for (auto l : locks) c.lock_bits.set(static_cast<std::size_t>(l));
  c.vr_locks = std::move(locks);
  return i;
}

void Tissue::remove(std::size_t i) {
  auto& c = cells_[i];
  if (!c.alive) return;
  c.alive = false;
  --live_total_;
}

void Tissue::load_presentation(Cell& c) {
  const auto slots = static_cast<std::size_t>(params_.num_antigen_producers_1);
  const auto n = c.antigen_store.size();
  c.presented.clear();
  for (std::size_t k = 0; k < std::min(slots, n); ++k)
    c.presented.push_back(c.antigen_store[(c.presented_offset + k) % n]);
  c.presented_bits.resize(static_cast<std::size_t>(universe_size_));
  c.presented_bits.reset();
  for (auto s : c.presented) c.presented_bits.set(static_cast<std::size_t>(s));
}

void Tissue::migrate_dc(std::size_t i, CellKind to) {
  auto& c = cells_[i];
  c.kind = to;
  c.compartment = Compartment::lymph_node;
  c.iterations = 0;
  c.touched = true;
  c.tlr_signals.clear();
  c.presented_offset = 0;
  load_presentation(c);
}

void Tissue::activate_tc(std::size_t i, Syscall lock) {
  auto& c = cells_[i];
  c.kind = CellKind::aTC;
  c.compartment = Compartment::extralymphoid;
  c.iterations = 0;
  c.touched = true;
  c.vr_locks = {lock};
  c.lock_bits.reset();
  c.lock_bits.set(static_cast<std::size_t>(lock));
  ++current_.activations;
}

void Tissue::collect_antigen(std::size_t i, Rng& rng) {
  auto& c = cells_[i];
  const auto room = static_cast<std::size_t>(params_.num_antigen_1) - c.antigen_store.size();
  const auto k = std::min({static_cast<std::size_t>(params_.num_antigen_receptors_1), room,
                           store_.size()});
  if (k == 0) return;
  const auto n = store_.size();
  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::sample(all.begin(), all.end(), std::back_inserter(picked), static_cast<std::ptrdiff_t>(k),
              rng);
  std::size_t w = 0;
  std::size_t next = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (next < picked.size() && picked[next] == r) {
      const auto s = store_[r].syscall;
      c.antigen_store.push_back(s);
      --counts_[static_cast<std::size_t>(s)];
      ++next;
    } else {
      store_[w++] = store_[r];
    }
  }
  store_.resize(w);
}

void Tissue::set_iterations(std::size_t i, int value) {
  cells_[i].iterations = value;
  cells_[i].touched = true;
}

void Tissue::rotate_presentation(std::size_t i) {
  auto& c = cells_[i];
  const auto slots = static_cast<std::size_t>(params_.num_antigen_producers_1);
  if (c.antigen_store.size() <= slots || c.iterations == 0 ||
      c.iterations % params_.antigen_producer_action_time != 0)
    return;
  c.presented_offset = (c.presented_offset + slots) % c.antigen_store.size();
  load_presentation(c);
}

void Tissue::record_alert(Syscall s, CellKind source) {
  current_.alerts.push_back({tick_, s, source});
}

void Tissue::rebuild_lymph_view() {
  lymph_dcs_.clear();
  presented_union_.reset();
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = cells_[i];
    if (!c.alive || (c.kind != CellKind::smDC && c.kind != CellKind::mDC)) continue;
    lymph_dcs_.push_back(i);
    presented_union_ |= c.presented_bits;
  }
}

void Tissue::compact() {
  std::erase_if(cells_, [](const Cell& c) { return !c.alive; });
}

TickReport Tissue::step(Rng& rng) {
  current_ = TickReport{};
  current_.tick = tick_;

  std::array<std::vector<std::size_t>, kCellKindCount> snapshot;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    auto& c = cells_[i];
    c.touched = false;
    if (c.alive) snapshot[static_cast<std::size_t>(c.kind)].push_back(i);
  }

  auto run_phase = [&](CellKind kind, auto&& callback) {
    for (auto i : snapshot[static_cast<std::size_t>(kind)]) {
      if (!cells_[i].alive || cells_[i].kind != kind) continue;
      callback(i);
    }
  };

  run_phase(CellKind::iDC, [&](std::size_t i) { cycle_.immature_dc(*this, i, rng); });
  rebuild_lymph_view();
  run_phase(CellKind::nTC, [&](std::size_t i) { cycle_.naive_tc(*this, i, rng); });
  run_phase(CellKind::smDC, [&](std::size_t i) { cycle_.semimature_dc(*this, i, rng); });
  run_phase(CellKind::mDC, [&](std::size_t i) { cycle_.mature_dc(*this, i, rng); });
  run_phase(CellKind::aTC, [&](std::size_t i) { cycle_.activated_tc(*this, i, rng); });

  for (const auto& phase : snapshot)
    for (auto i : phase) {
      auto& c = cells_[i];
      if (c.alive && !c.touched) ++c.iterations;
    }

  compact();
  for (const auto& c : cells_) ++current_.population[static_cast<std::size_t>(c.kind)];
  ++tick_;
#ifndef NDEBUG
  check_invariants();
#endif
  return std::move(current_);
}

void Tissue::check_invariants() const {
  std::array<int, kCellKindCount> pop{};
  int total = 0;
  for (const auto& c : cells_) {
    if (!c.alive) continue;
    ++total;
    ++pop[static_cast<std::size_t>(c.kind)];
    if (c.compartment != home_compartment(c.kind))
      throw ContractError(std::string(to_string(c.kind)) + " outside its compartment");
    if (c.antigen_store.size() > static_cast<std::size_t>(params_.num_antigen_1))
      throw ContractError("DC antigen store over capacity");
    if (c.presented.size() > static_cast<std::size_t>(params_.num_antigen_producers_1))
      throw ContractError("DC presents more antigen than it has producers");
  }
  if (pop[static_cast<std::size_t>(CellKind::iDC)] != params_.num_cells_1)
    throw ContractError("immature DC population drifted");
  if (pop[static_cast<std::size_t>(CellKind::nTC)] != params_.num_cells_2)
    throw ContractError("naive TC population drifted");
  if (total > params_.max_cells) throw ContractError("cell population above max_cells");
  if (store_.size() > static_cast<std::size_t>(params_.max_antigen))
    throw ContractError("antigen store above max_antigen");
}

void write_probe(std::ostream& out, const TickReport& r) {
  out << r.tick;
  for (auto n : r.population) out << ' ' << n;
  out << ' ' << r.alerts.size() << '\n';
}

}  // namespace tlr
