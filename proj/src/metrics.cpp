#include "tlr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace tlr {

ConfusionCounts confusion(std::span<const bool> verdicts, std::span<const bool> truths) {
  if (verdicts.size() != truths.size())
    throw ValidationError("confusion: " + std::to_string(verdicts.size()) + " verdicts for " +
                          std::to_string(truths.size()) + " scenarios");
  ConfusionCounts c;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (truths[i]) {
      ++(verdicts[i] ? c.tp : c.fn);
    } else {
      ++(verdicts[i] ? c.fp : c.tn);
    }
  }
  return c;
}

std::optional<double> tpr(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) return std::nullopt;
  return static_cast<double>(c.tp) / (c.tp + c.fn);
}

std::optional<double> fpr(const ConfusionCounts& c) {
  if (c.fp + c.tn == 0) return std::nullopt;
  return static_cast<double>(c.fp) / (c.fp + c.tn);
}

double gmean(double tpr, double fpr) {
  if (!(tpr >= 0 && tpr <= 1) || !(fpr >= 0 && fpr <= 1))
    throw RangeError("g-mean inputs must lie in [0,1]");
  return std::sqrt(tpr * (1.0 - fpr));
}

MetricsRow metrics_row(std::string system, const ConfusionCounts& c) {
  MetricsRow row;
  row.system = std::move(system);
  row.tpr = tpr(c);
  row.fpr = fpr(c);
  row.counts = c;
  if (row.tpr && row.fpr) row.g = gmean(*row.tpr, *row.fpr);
  return row;
}

MetricsRow reference_row(std::string system, double t, double f) {
  MetricsRow row;
  row.system = std::move(system);
  row.tpr = t;
  row.fpr = f;
  row.g = gmean(t, f);
  row.reference = true;
  return row;
}

std::vector<MetricsRow> comparison_rows() {
  return {
      reference_row("systrace", 0.90, 0.60), reference_row("tlr-negsel", 0.90, 0.60),
      reference_row("sig1", 1.00, 1.00),     reference_row("sig2", 1.00, 1.00),
      reference_row("sig3", 1.00, 1.00),     reference_row("tlr1", 0.70, 0.20),
      reference_row("tlr2", 0.60, 0.20),     reference_row("tlr3", 0.75, 0.15),
      reference_row("DCA", 1.00, 0.83),
  };
}

namespace {

std::string fixed2(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

std::string full(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

std::string emit_table(const BenchReport& report) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-12s %6s %6s %6s\n", "System", "TPR", "FPR", "G");
  out << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%-12s %6s %6s %6s", r.system.c_str(), fixed2(r.tpr).c_str(),
                  fixed2(r.fpr).c_str(), fixed2(r.g).c_str());
    out << buf;
    if (r.reference) out << "  (reference)";
    out << '\n';
  }
  return out.str();
}

std::string emit_delimited(const BenchReport& report) {
  std::ostringstream out;
  out << "system\ttpr\tfpr\tg\ttp\tfp\ttn\tfn\treference\n";
  for (const auto& r : report.rows) {
    out << r.system << '\t' << full(r.tpr) << '\t' << full(r.fpr) << '\t' << full(r.g);
    if (r.counts)
      out << '\t' << r.counts->tp << '\t' << r.counts->fp << '\t' << r.counts->tn << '\t'
          << r.counts->fn;
    else
      out << "\tNA\tNA\tNA\tNA";
    out << '\t' << (r.reference ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string emit_scatter(std::span<const Session* const> sessions, std::string_view signal) {
  const auto sig = signal_from_string(signal);
  if (!sig) throw SchemaError("unknown signal '" + std::string(signal) + "'");
  std::ostringstream out;
  out << "# session_index level class\n";
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    std::set<std::int64_t> levels;
    for (const auto& r : sessions[i]->readings)
      if (r.name == *sig) levels.insert(r.level);
    for (auto l : levels) out << i << ' ' << l << ' ' << to_string(sessions[i]->label) << '\n';
  }
  return out.str();
}

}  // namespace tlr
