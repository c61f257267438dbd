#include "tlr/detector.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace tlr {

namespace {

constexpr std::array<Signal, 1> kTlr1{Signal::rss};
constexpr std::array<Signal, 2> kTlr2{Signal::rss, Signal::num_files};
constexpr std::array<Signal, 3> kTlr3{Signal::rss, Signal::num_files, Signal::num_reg};

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::tlr1: return "tlr1";
    case Variant::tlr2: return "tlr2";
    case Variant::tlr3: return "tlr3";
    case Variant::negsel: return "negsel";
  }
  return "?";
}

std::optional<Variant> variant_from_string(std::string_view name) {
  if (name == "tlr1") return Variant::tlr1;
  if (name == "tlr2") return Variant::tlr2;
  if (name == "tlr3") return Variant::tlr3;
  if (name == "negsel" || name == "tlr-negsel") return Variant::negsel;
  return std::nullopt;
}

std::span<const Signal> monitored_signals(Variant v) {
  switch (v) {
    case Variant::tlr1: return kTlr1;
    case Variant::tlr2: return kTlr2;
    case Variant::tlr3: return kTlr3;
    case Variant::negsel: return {};
  }
  return {};
}

bool TrainedProfile::tlr_fires(Signal name, std::int64_t level) const {
  const auto it = normal_levels.find(name);
  return it == normal_levels.end() || !it->second.contains(level);
}

TrainedProfile train(std::span<const Session* const> sessions, Variant variant,
                     int universe_size) {
  TrainedProfile p;
  p.universe_size = universe_size;
  const auto watched = monitored_signals(variant);
  for (auto sig : watched) p.normal_levels[sig];
  for (const Session* s : sessions) {
    if (s->label != SessionLabel::normal)
      throw ContractError("training session " + s->id + " is labelled " +
                          std::string(to_string(s->label)));
    p.training_ids.push_back(s->id);
    for (const auto& e : s->events) {
      if (e.syscall < 0 || e.syscall >= universe_size)
        throw RangeError(s->id + ": syscall outside universe");
      p.normal_antigen.insert(e.syscall);
    }
    for (const auto& r : s->readings)
      if (std::ranges::find(watched, r.name) != watched.end()) p.normal_levels[r.name].insert(r.level);
  }
  for (Syscall a = 0; a < universe_size; ++a)
    if (!p.normal_antigen.contains(a)) p.permissible_agr.push_back(a);
  return p;
}

TrainedProfile train(std::span<const Session> sessions, Variant variant, int universe_size) {
  std::vector<const Session*> ptrs;
  for (const auto& s : sessions) ptrs.push_back(&s);
  return train(std::span<const Session* const>(ptrs), variant, universe_size);
}

bool tlr_activated(const TrainedProfile& profile, Variant variant,
                   const std::map<Signal, std::int64_t>& held) {
  for (auto sig : monitored_signals(variant)) {
    const auto it = held.find(sig);
    if (it != held.end() && profile.tlr_fires(sig, it->second)) return true;
  }
  return false;
}

void write_profile(std::ostream& out, const TrainedProfile& p) {
  out << "universe_size " << p.universe_size << "\nnormal_antigen";
  for (auto a : p.normal_antigen) out << ' ' << a;
  out << "\ntraining_ids";
  for (const auto& id : p.training_ids) out << ' ' << id;
  out << '\n';
  for (const auto& [sig, levels] : p.normal_levels) {
    out << "levels " << to_string(sig);
    for (auto l : levels) out << ' ' << l;
    out << '\n';
  }
}

TrainedProfile read_profile(std::istream& in) {
  TrainedProfile p;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "universe_size") {
      if (!(ls >> p.universe_size) || p.universe_size <= 0)
        throw ParseError(line_no, "bad universe_size");
    } else if (key == "normal_antigen") {
      for (Syscall a; ls >> a;) p.normal_antigen.insert(a);
      if (!ls.eof()) throw ParseError(line_no, "bad antigen value");
    } else if (key == "training_ids") {
      for (std::string id; ls >> id;) p.training_ids.push_back(id);
    } else if (key == "levels") {
      std::string name;
      ls >> name;
      const auto sig = signal_from_string(name);
      if (!sig) throw SchemaError("unknown signal '" + name + "'");
      auto& set = p.normal_levels[*sig];
      for (std::int64_t l; ls >> l;) set.insert(l);
      if (!ls.eof()) throw ParseError(line_no, "bad level value");
    } else {
      throw SchemaError("unknown profile key '" + key + "'");
    }
  }
  for (auto a : p.normal_antigen)
    if (a < 0 || a >= p.universe_size) throw RangeError("profile antigen outside universe");
  for (Syscall a = 0; a < p.universe_size; ++a)
    if (!p.normal_antigen.contains(a)) p.permissible_agr.push_back(a);
  return p;
}

TissueParams variant_params(Variant v, TissueParams base) {
  if (v == Variant::tlr1 || v == Variant::tlr2) {
    const int n = static_cast<int>(monitored_signals(v).size());
    base.max_cytokines = n;
    base.num_cytokine_receptors_1 = n;
  }
  return base;
}

// ---------------------------------------------------------------------------
// Cell-cycle callbacks

void immature_dc_step(Tissue& tissue, std::size_t cell, const TrainedProfile& profile,
                      bool tlrs_enabled, Rng& rng) {
  const auto& c = tissue.cell(cell);
  const bool has_antigen = !c.antigen_store.empty();
  if (c.iterations >= tissue.params().cell_lifespan_1) {
    if (has_antigen) {
      tissue.migrate_dc(cell, CellKind::smDC);
    } else {
      tissue.remove(cell);
    }
    tissue.add_immature_dc();
    return;
  }
  if (tlrs_enabled && has_antigen) {
    const bool activated = std::ranges::any_of(c.tlr_signals, [&](Signal sig) {
      const auto held = tissue.signal(sig);
      return held && profile.tlr_fires(sig, *held);
    });
    if (activated) {
      tissue.migrate_dc(cell, CellKind::mDC);
      tissue.add_immature_dc();
      return;
    }
  }
  tissue.collect_antigen(cell, rng);
}

void naive_tc_step(Tissue& tissue, std::size_t cell, bool semimature_expresses_il12, Rng& rng) {
  const auto& params = tissue.params();
  if (tissue.cell(cell).iterations >= params.cell_lifespan_2) {
    tissue.remove(cell);
    tissue.add_naive_tc(rng);
    return;
  }
  const auto& dcs = tissue.lymph_dcs();
  if (dcs.empty()) return;
  // No lock can match anything on display: every bind would fail.
  if (!tissue.cell(cell).lock_bits.intersects(tissue.presented_union())) return;

  std::uniform_int_distribution<std::size_t> pick(0, dcs.size() - 1);
  for (int bind = 0; bind < params.num_cell_receptors_2; ++bind) {
    const auto dc_index = dcs[pick(rng)];
    const Cell& tc = tissue.cell(cell);
    const Cell& dc = tissue.cell(dc_index);
    if (!tc.lock_bits.intersects(dc.presented_bits)) continue;
    const auto lock = std::ranges::find_if(tc.vr_locks, [&](Syscall l) {
      return dc.presented_bits.test(static_cast<std::size_t>(l));
    });
    const Syscall matched = *lock;
    const CellKind source = dc.kind;
    tissue.set_iterations(dc_index, 1);
    if (source == CellKind::smDC && !semimature_expresses_il12) {
      tissue.remove(cell);
      tissue.record_tolerance_deletion();
      tissue.add_naive_tc(rng);
      return;
    }
    tissue.activate_tc(cell, matched);
    tissue.add_naive_tc(rng);
    tissue.record_alert(matched, source);
    return;
  }
}

void semimature_dc_step(Tissue& tissue, std::size_t cell) {
  if (tissue.cell(cell).iterations >= tissue.params().cell_lifespan_3) {
    tissue.remove(cell);
    return;
  }
  tissue.rotate_presentation(cell);
}

void mature_dc_step(Tissue& tissue, std::size_t cell) {
  if (tissue.cell(cell).iterations >= tissue.params().cell_lifespan_4) {
    tissue.remove(cell);
    return;
  }
  tissue.rotate_presentation(cell);
}

void activated_tc_step(Tissue& tissue, std::size_t cell) {
  const auto& c = tissue.cell(cell);
  if (c.iterations >= tissue.params().cell_lifespan_5) {
    tissue.remove(cell);
    return;
  }
  for (auto lock : c.vr_locks) {
    if (tissue.antigen_count(lock) > 0) {
      tissue.set_iterations(cell, 0);
      break;
    }
  }
}

TlrCellCycle::TlrCellCycle(const TrainedProfile& profile, Variant variant, bool exhaustive)
    : profile_(profile), variant_(variant), exhaustive_(exhaustive) {}

void TlrCellCycle::immature_dc(Tissue& tissue, std::size_t cell, Rng& rng) {
  immature_dc_step(tissue, cell, profile_, variant_ != Variant::negsel, rng);
}

void TlrCellCycle::naive_tc(Tissue& tissue, std::size_t cell, Rng& rng) {
  // negsel: semimature DCs are forced to express IL-12, so there is no
  // tolerance path.
  naive_tc_step(tissue, cell, variant_ == Variant::negsel, rng);
}

void TlrCellCycle::semimature_dc(Tissue& tissue, std::size_t cell, Rng&) {
  semimature_dc_step(tissue, cell);
}

void TlrCellCycle::mature_dc(Tissue& tissue, std::size_t cell, Rng&) {
  mature_dc_step(tissue, cell);
}

void TlrCellCycle::activated_tc(Tissue& tissue, std::size_t cell, Rng&) {
  activated_tc_step(tissue, cell);
}

std::vector<Syscall> TlrCellCycle::fresh_locks(Rng& rng) {
  const auto& perm = profile_.permissible_agr;
  std::vector<Syscall> locks(static_cast<std::size_t>(lock_count_));
  if (exhaustive_) {
    for (auto& l : locks) {
      l = perm[sweep_cursor_];
      sweep_cursor_ = (sweep_cursor_ + 1) % perm.size();
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, perm.size() - 1);
    for (auto& l : locks) l = perm[pick(rng)];
  }
  return locks;
}

std::vector<Signal> TlrCellCycle::fresh_tlrs() {
  if (variant_ == Variant::negsel) return {};
  const auto sigs = monitored_signals(variant_);
  const auto n = std::min<std::size_t>(sigs.size(), static_cast<std::size_t>(receptor_count_));
  return {sigs.begin(), sigs.begin() + static_cast<std::ptrdiff_t>(n)};
}

// ---------------------------------------------------------------------------

Detector::Detector(TrainedProfile profile, DetectorOptions options)
    : profile_(std::move(profile)), options_(std::move(options)), rng_(options_.seed) {
  options_.params = variant_params(options_.variant, options_.params);
  options_.params.validate();
  if (profile_.permissible_agr.empty())
    throw ValidationError("permissible receptor set is empty: nothing left to detect");
  for (auto sig : monitored_signals(options_.variant))
    if (!profile_.normal_levels.contains(sig))
      throw ValidationError("profile has no training levels for " + std::string(to_string(sig)));
  cycle_ = std::make_unique<TlrCellCycle>(profile_, options_.variant, options_.exhaustive);
  cycle_->set_lock_count(options_.params.num_vr_receptors_2);
  cycle_->set_receptor_count(options_.params.num_cytokine_receptors_1);
  tissue_ = std::make_unique<Tissue>(options_.params, *cycle_, profile_.universe_size, rng_);
}

void Detector::set_signal(Signal name, std::int64_t level) {
  const auto watched = monitored_signals(options_.variant);
  if (std::ranges::find(watched, name) == watched.end())
    throw ValidationError(std::string(to_string(options_.variant)) + " does not monitor " +
                          std::string(to_string(name)));
  tissue_->set_signal(name, level);
}

TickReport Detector::step() {
  auto report = tissue_->step(rng_);
  for (const auto& a : report.alerts)
    if (profile_.is_normal_antigen(a.syscall))
      throw ContractError("alert on trained antigen " + std::to_string(a.syscall));
  if (static_cast<std::size_t>(report.activations) != report.alerts.size())
    throw ContractError("alert count differs from T cell activations");
  if (options_.variant == Variant::negsel && report.tolerance_deletions != 0)
    throw ContractError("negsel detector performed peripheral tolerance");
  return report;
}

DetectionResult Detector::run(const Timeline& timeline, std::string scenario_id, bool keep_trace,
                              std::ostream* probe_log) {
  const auto watched = monitored_signals(options_.variant);
  for (const auto& r : timeline.readings)
    if (std::ranges::find(watched, r.name) == watched.end())
      throw ValidationError("scenario references signal " + std::string(to_string(r.name)) +
                            " not monitored by " + std::string(to_string(options_.variant)));

  const auto& p = options_.params;
  const Nanos tick_ns = p.tick_ns();
  const int drain = options_.drain_ticks >= 0
                        ? options_.drain_ticks
                        : p.cell_lifespan_1 + 2 * p.cell_lifespan_2 + 2;
  const std::int64_t ticks = timeline.span / tick_ns + 1 + drain;
  const std::int64_t probe_every = std::max<std::int64_t>(1, p.probe_rate_us / p.cell_update_rate_us);

  DetectionResult result;
  result.scenario_id = std::move(scenario_id);
  std::size_t ei = 0;
  std::size_t ri = 0;
  for (std::int64_t k = 0; k < ticks; ++k) {
    const Nanos window_end = (k + 1) * tick_ns;
    for (; ei < timeline.events.size() && timeline.events[ei].t < window_end; ++ei)
      tissue_->inject_antigen(timeline.events[ei].syscall);
    for (; ri < timeline.readings.size() && timeline.readings[ri].t < window_end; ++ri)
      tissue_->set_signal(timeline.readings[ri].name, timeline.readings[ri].level);

    auto report = step();
    result.activations += report.activations;
    result.tolerance_deletions += report.tolerance_deletions;
    result.alerts.insert(result.alerts.end(), report.alerts.begin(), report.alerts.end());
    if (probe_log && k % probe_every == 0) write_probe(*probe_log, report);
    if (keep_trace) result.trace.push_back(std::move(report));
    if (options_.pacing) std::this_thread::sleep_for(std::chrono::microseconds(p.cell_update_rate_us));
  }
  result.ticks = ticks;
  return result;
}

std::unique_ptr<Detector> build_detector(const TrainedProfile& profile, Variant variant,
                                         const TissueParams& params, std::uint64_t seed,
                                         bool exhaustive) {
  DetectorOptions opt;
  opt.variant = variant;
  opt.seed = seed;
  opt.params = params;
  opt.exhaustive = exhaustive;
  return std::make_unique<Detector>(profile, opt);
}

DetectionResult run_scenario(Detector& detector, const Timeline& timeline,
                             std::string scenario_id) {
  return detector.run(timeline, std::move(scenario_id));
}

void write_alert_log(std::ostream& out, const std::vector<Alert>& alerts) {
  for (const auto& a : alerts) out << a.tick << ' ' << a.syscall << '\n';
}

}  // namespace tlr
