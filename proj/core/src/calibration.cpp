#include "posthoc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "posthoc/errors.hpp"
#include "posthoc/text_io.hpp"

namespace posthoc {

namespace {

void check_paired_unit_inputs(const std::vector<double>& predicted,
                              const std::vector<double>& truth) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("predicted and truth lengths differ");
  }
  if (predicted.empty()) {
    throw ValidationError("calibration inputs are empty");
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!(predicted[i] >= 0.0 && predicted[i] <= 1.0)) {
      throw ValidationError("predicted value outside [0, 1] at index " +
                            std::to_string(i));
    }
    if (!(truth[i] >= 0.0 && truth[i] <= 1.0)) {
      throw ValidationError("truth value outside [0, 1] at index " +
                            std::to_string(i));
    }
  }
}

}  // namespace

std::size_t bin_index(double predicted, int num_bins) {
  const auto j = static_cast<std::size_t>(
      std::floor(predicted * static_cast<double>(num_bins)));
  return std::min(j, static_cast<std::size_t>(num_bins - 1));
}

ReliabilityBins reliability_bins(const std::vector<double>& predicted,
                                 const std::vector<double>& truth,
                                 int num_bins) {
  if (num_bins < 1) throw ValidationError("num_bins must be >= 1");
  check_paired_unit_inputs(predicted, truth);

  ReliabilityBins out;
  out.num_bins = num_bins;
  out.bins.resize(static_cast<std::size_t>(num_bins));
  std::vector<double> sum_pred(static_cast<std::size_t>(num_bins), 0.0);
  std::vector<double> sum_true(static_cast<std::size_t>(num_bins), 0.0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto j = bin_index(predicted[i], num_bins);
    out.bins[j].count += 1;
    sum_pred[j] += predicted[i];
    sum_true[j] += truth[i];
  }
  for (std::size_t j = 0; j < out.bins.size(); ++j) {
    auto& bin = out.bins[j];
    bin.lo = static_cast<double>(j) / static_cast<double>(num_bins);
    bin.hi = static_cast<double>(j + 1) / static_cast<double>(num_bins);
    if (bin.count > 0) {
      bin.mean_pred = sum_pred[j] / static_cast<double>(bin.count);
      bin.mean_true = sum_true[j] / static_cast<double>(bin.count);
    }
  }
  return out;
}

double expected_calibration_error(const std::vector<double>& predicted,
                                  const std::vector<double>& truth,
                                  int num_bins) {
  const auto bins = reliability_bins(predicted, truth, num_bins);
  const auto n = static_cast<double>(predicted.size());
  double ece = 0.0;
  for (const auto& bin : bins.bins) {
    if (bin.count == 0) continue;
    ece += (static_cast<double>(bin.count) / n) *
           std::abs(bin.mean_true - bin.mean_pred);
  }
  return ece;
}

namespace {

// Average ranks, 1-based; ties share the mean of the ranks they occupy.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared =
        (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(const std::vector<double>& a,
                              const std::vector<double>& b) {
  const auto n = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& a,
                               const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw ValidationError("spearman inputs must have equal length");
  }
  if (a.size() < 2) {
    throw ValidationError("spearman needs at least two observations");
  }
  return pearson(average_ranks(a), average_ranks(b));
}

double r_squared(const std::vector<double>& predicted,
                 const std::vector<double>& truth) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("r_squared inputs must have equal length");
  }
  if (predicted.size() < 2) {
    throw ValidationError("r_squared needs at least two observations");
  }
  double mean_truth = 0.0;
  for (const double t : truth) mean_truth += t;
  mean_truth /= static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double res = truth[i] - predicted[i];
    const double dev = truth[i] - mean_truth;
    ss_res += res * res;
    ss_tot += dev * dev;
  }
  if (ss_tot <= 0.0) {
    throw ValidationError("r_squared is undefined for constant truth");
  }
  return 1.0 - ss_res / ss_tot;
}

std::vector<std::pair<int, double>> bin_sensitivity(
    const std::vector<double>& predicted, const std::vector<double>& truth,
    const std::vector<int>& bin_counts) {
  std::vector<std::pair<int, double>> out;
  out.reserve(bin_counts.size());
  for (const int bins : bin_counts) {
    out.emplace_back(bins, expected_calibration_error(predicted, truth, bins));
  }
  return out;
}

CalibrationReport make_report(const std::vector<double>& predicted,
                              const std::vector<double>& truth, int num_bins) {
  CalibrationReport report;
  report.n = predicted.size();
  report.bins = reliability_bins(predicted, truth, num_bins);
  report.ece = expected_calibration_error(predicted, truth, num_bins);
  report.spearman = spearman(predicted, truth);
  bool constant_truth = true;
  for (const double t : truth) {
    if (t != truth.front()) {
      constant_truth = false;
      break;
    }
  }
  if (!constant_truth) {
    report.r2 = r_squared(predicted, truth);
  }
  return report;
}

std::string report_to_json(const CalibrationReport& report) {
  nlohmann::ordered_json out;
  out["n"] = report.n;
  out["ece"] = report.ece;
  if (report.spearman) {
    out["spearman"] = *report.spearman;
  } else {
    out["spearman"] = nullptr;
  }
  if (report.r2) {
    out["r2"] = *report.r2;
  } else {
    out["r2"] = nullptr;
  }
  auto bins = nlohmann::ordered_json::array();
  for (const auto& bin : report.bins.bins) {
    nlohmann::ordered_json item;
    item["lo"] = bin.lo;
    item["hi"] = bin.hi;
    item["count"] = bin.count;
    item["mean_pred"] = bin.mean_pred;
    item["mean_true"] = bin.mean_true;
    bins.push_back(std::move(item));
  }
  out["bins"] = std::move(bins);
  return out.dump(2) + "\n";
}

std::string bins_to_csv(const ReliabilityBins& bins) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(bins.bins.size());
  for (const auto& bin : bins.bins) {
    rows.push_back({format_double(bin.lo), format_double(bin.hi),
                    std::to_string(bin.count), format_double(bin.mean_pred),
                    format_double(bin.mean_true)});
  }
  return to_csv({"bin_lo", "bin_hi", "count", "mean_pred", "mean_true"}, rows);
}

}  // namespace posthoc
