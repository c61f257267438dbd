#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlr/trace.hpp"

namespace tlr {

struct ConfusionCounts {
  int tp = 0;
  int fp = 0;
  int tn = 0;
  int fn = 0;

  int total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// verdicts[i] true means "attack"; truths are scenario ground-truth labels.
ConfusionCounts confusion(std::span<const bool> verdicts, std::span<const bool> truths);

// Absent when the denominator is zero.
std::optional<double> tpr(const ConfusionCounts& c);
std::optional<double> fpr(const ConfusionCounts& c);
// sqrt(tpr * (1 - fpr)); throws RangeError outside [0,1].
double gmean(double tpr, double fpr);

struct MetricsRow {
  std::string system;
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::optional<double> g;
  std::optional<ConfusionCounts> counts;
  bool reference = false;  // fixed comparison figures, not computed
};

MetricsRow metrics_row(std::string system, const ConfusionCounts& c);
MetricsRow reference_row(std::string system, double tpr, double fpr);

struct BenchReport {
  std::vector<MetricsRow> rows;
};

// Fixed reference rows for comparison (systrace .. DCA).
std::vector<MetricsRow> comparison_rows();

std::string emit_table(const BenchReport& report);
// Tab-separated, full precision.
std::string emit_delimited(const BenchReport& report);
// "session_index level class" rows, distinct levels per session.
std::string emit_scatter(std::span<const Session* const> sessions, std::string_view signal);

}  // namespace tlr
