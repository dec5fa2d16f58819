#include "rssiloc/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "rssiloc/errors.hpp"

namespace rssiloc {

double e_max(int true_bin, int predicted_bin, double l_bin_m) {
  return std::abs(true_bin - predicted_bin) * l_bin_m + l_bin_m / 2.0;
}

namespace {

void require_pair(std::span<const int> xs, std::span<const int> ys,
                  const char* who) {
  if (xs.empty())
    throw std::invalid_argument(std::string(who) + ": empty label vectors");
  if (xs.size() != ys.size())
    throw std::invalid_argument(std::string(who) +
                                ": label vectors differ in length");
}

}  // namespace

double avg_upper_bound(std::span<const int> true_bins,
                       std::span<const int> predicted_bins, double l_bin_m) {
  require_pair(true_bins, predicted_bins, "avg_upper_bound");
  double sum = 0.0;
  for (size_t i = 0; i < true_bins.size(); ++i)
    sum += e_max(true_bins[i], predicted_bins[i], l_bin_m);
  return sum / static_cast<double>(true_bins.size());
}

double classification_accuracy(std::span<const int> true_bins,
                               std::span<const int> predicted_bins) {
  require_pair(true_bins, predicted_bins, "classification_accuracy");
  size_t correct = 0;
  for (size_t i = 0; i < true_bins.size(); ++i)
    if (true_bins[i] == predicted_bins[i]) ++correct;
  return static_cast<double>(correct) /
         static_cast<double>(true_bins.size());
}

double baseline_pathloss_distance(double rssi_dbm, const ChannelParams& p) {
  validate(p);
  return p.d0_m * std::pow(10.0, (p.p0_dbm - rssi_dbm) / (10.0 * p.gamma));
}

MetricsReport compute_metrics(std::span<const int> true_bins,
                              std::span<const int> predicted_bins,
                              const BinningSpec& spec) {
  require_pair(true_bins, predicted_bins, "compute_metrics");
  MetricsReport r;
  r.n_bins = spec.n_bins;
  r.confidence_bound_m = spec.l_bin_m / 2.0;
  r.confusion.assign(
      static_cast<size_t>(spec.n_bins) * static_cast<size_t>(spec.n_bins), 0);
  for (size_t i = 0; i < true_bins.size(); ++i) {
    const int x = true_bins[i], y = predicted_bins[i];
    if (x < 0 || x >= spec.n_bins || y < 0 || y >= spec.n_bins)
      throw std::invalid_argument("compute_metrics: bin index out of range");
    r.confusion[static_cast<size_t>(x) * static_cast<size_t>(spec.n_bins) +
                static_cast<size_t>(y)] += 1;
  }
  r.accuracy = classification_accuracy(true_bins, predicted_bins);
  r.avg_upper_bound_m = avg_upper_bound(true_bins, predicted_bins, spec.l_bin_m);
  return r;
}

double avg_upper_bound_from_confusion(const MetricsReport& report,
                                      double l_bin_m) {
  double sum = 0.0;
  int64_t total = 0;
  for (int x = 0; x < report.n_bins; ++x)
    for (int y = 0; y < report.n_bins; ++y) {
      const int64_t c = report.confusion_at(x, y);
      sum += static_cast<double>(c) * e_max(x, y, l_bin_m);
      total += c;
    }
  if (total == 0)
    throw std::invalid_argument("avg_upper_bound_from_confusion: empty matrix");
  return sum / static_cast<double>(total);
}

std::string format_metrics_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  size_t name_w = 8;
  for (const auto& [name, report] : rows) name_w = std::max(name_w, name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w) + 2) << "dataset"
     << std::right << std::setw(16) << "confidence (%)" << std::setw(26)
     << "avg upper bound E (cm)" << "\n";
  for (const auto& [name, report] : rows) {
    os << std::left << std::setw(static_cast<int>(name_w) + 2) << name
       << std::right << std::setw(16) << std::fixed << std::setprecision(2)
       << report.accuracy * 100.0 << std::setw(26) << std::setprecision(3)
       << report.avg_upper_bound_m * 100.0 << "\n";
  }
  return os.str();
}

void write_metrics_csv(
    const std::vector<std::pair<std::string, MetricsReport>>& rows,
    const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot write " + file.string());
  os << "dataset,accuracy,confidence_bound_m,avg_upper_bound_m\n";
  char buf[128];
  for (const auto& [name, report] : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f\n", name.c_str(),
                  report.accuracy, report.confidence_bound_m,
                  report.avg_upper_bound_m);
    os << buf;
  }
}

void write_confusion_csv(const MetricsReport& report,
                         const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot write " + file.string());
  for (int x = 0; x < report.n_bins; ++x) {
    for (int y = 0; y < report.n_bins; ++y)
      os << (y ? "," : "") << report.confusion_at(x, y);
    os << "\n";
  }
}

}  // namespace rssiloc
