#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace posthoc {

struct BinStat {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_pred = 0.0;  // 0 when the bin is empty
  double mean_true = 0.0;
};

// Equal-width bins over [0, 1] keyed by the predicted value. Bin j covers
// [j/J, (j+1)/J); the last bin also includes 1.0.
struct ReliabilityBins {
  int num_bins = 10;
  std::vector<BinStat> bins;
};

std::size_t bin_index(double predicted, int num_bins);

ReliabilityBins reliability_bins(const std::vector<double>& predicted,
                                 const std::vector<double>& truth,
                                 int num_bins);

// Expected calibration error: count-weighted mean absolute gap between each
// bin's mean truth and mean prediction. Inputs must lie in [0, 1].
double expected_calibration_error(const std::vector<double>& predicted,
                                  const std::vector<double>& truth,
                                  int num_bins = 10);

// Spearman rank correlation (Pearson correlation of average ranks, ties
// averaged). Constant input has no defined rank order: nullopt, never 0.
std::optional<double> spearman(const std::vector<double>& a,
                               const std::vector<double>& b);

// Coefficient of determination of predicted against truth. Constant truth is
// a validation error.
double r_squared(const std::vector<double>& predicted,
                 const std::vector<double>& truth);

// ECE recomputed across several bin counts, in the given order.
std::vector<std::pair<int, double>> bin_sensitivity(
    const std::vector<double>& predicted, const std::vector<double>& truth,
    const std::vector<int>& bin_counts);

struct CalibrationReport {
  std::size_t n = 0;
  double ece = 0.0;
  std::optional<double> spearman;  // nullopt when either side is constant
  std::optional<double> r2;        // nullopt when the truth is constant
  ReliabilityBins bins;
};

CalibrationReport make_report(const std::vector<double>& predicted,
                              const std::vector<double>& truth, int num_bins = 10);

// JSON rendering of the report (ordered keys, round-trip numbers) and the
// reliability bins as CSV with columns bin_lo,bin_hi,count,mean_pred,mean_true.
std::string report_to_json(const CalibrationReport& report);
std::string bins_to_csv(const ReliabilityBins& bins);

}  // namespace posthoc
