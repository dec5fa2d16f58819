#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rssiloc/channel.hpp"
#include "rssiloc/pipeline.hpp"

namespace rssiloc {

// Worst-case distance error for a (true, predicted) bin pair:
// |x - y| * l_bin + l_bin / 2.
double e_max(int true_bin, int predicted_bin, double l_bin_m);

// Mean of e_max over all test cases; throws std::invalid_argument when the
// vectors are empty or of different length.
double avg_upper_bound(std::span<const int> true_bins,
                       std::span<const int> predicted_bins, double l_bin_m);

double classification_accuracy(std::span<const int> true_bins,
                               std::span<const int> predicted_bins);

// Inverts the mean path-loss model: d = d0 * 10^((p0 - rssi) / (10 gamma)).
double baseline_pathloss_distance(double rssi_dbm, const ChannelParams& p);

struct MetricsReport {
  double accuracy = 0.0;           // the "confidence interval"
  double confidence_bound_m = 0.0; // l_bin / 2
  double avg_upper_bound_m = 0.0;  // E
  int n_bins = 0;
  std::vector<int64_t> confusion;  // n_bins x n_bins, row = true bin

  int64_t confusion_at(int true_bin, int predicted_bin) const {
    return confusion[static_cast<size_t>(true_bin) *
                         static_cast<size_t>(n_bins) +
                     static_cast<size_t>(predicted_bin)];
  }
};

MetricsReport compute_metrics(std::span<const int> true_bins,
                              std::span<const int> predicted_bins,
                              const BinningSpec& spec);

// E recomputed from the confusion matrix; must agree with the vector route.
double avg_upper_bound_from_confusion(const MetricsReport& report,
                                      double l_bin_m);

std::string format_metrics_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows);
void write_metrics_csv(
    const std::vector<std::pair<std::string, MetricsReport>>& rows,
    const std::filesystem::path& file);
void write_confusion_csv(const MetricsReport& report,
                         const std::filesystem::path& file);

}  // namespace rssiloc
