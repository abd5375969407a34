#include "tempolearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tempolearn/csv.hpp"

namespace tempolearn {

namespace {
void require_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}
}  // namespace

LossResult mse_loss(std::span<const double> output, std::span<const double> target) {
  require_same_size(output, target, "mse_loss");
  LossResult r;
  r.gradient.resize(output.size());
  if (output.empty()) return r;
  const double n = static_cast<double>(output.size());
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double d = output[i] - target[i];
    r.value += d * d;
    r.gradient[i] = 2.0 * d / n;
  }
  r.value /= n;
  return r;
}

LossResult ce_loss(std::span<const double> output, std::span<const double> target) {
  require_same_size(output, target, "ce_loss");
  const double total = std::accumulate(output.begin(), output.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::invalid_argument("ce_loss: output is not a probability vector (sums to " +
                                std::to_string(total) + ")");
  }
  const std::size_t t = argmax(target);
  LossResult r;
  r.gradient.assign(output.size(), 0.0);
  const double p = output[t];
  if (p >= kCeProbabilityFloor) {
    r.value = -std::log(p);
    r.gradient[t] = -1.0 / p;
  } else {
    r.value = -std::log(kCeProbabilityFloor);
  }
  return r;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (values.empty()) throw std::invalid_argument("moving_average: empty input");
  if (window == 0) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t count = std::min(window, i + 1);
    const auto end = values.begin() + static_cast<std::ptrdiff_t>(i + 1);
    out[i] = std::accumulate(end - static_cast<std::ptrdiff_t>(count), end, 0.0) /
             static_cast<double>(count);
  }
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty input");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  require_same_size(x, y, "pearson_r");
  if (x.size() < 2) throw std::invalid_argument("pearson_r: need at least 2 points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelation("pearson_r: correlation undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SelectivityReport timescale_selectivity(const std::array<Vector, kTimescales>& hidden,
                                        const std::array<std::vector<Vector>, kTimescales>& features) {
  SelectivityReport report;
  for (std::size_t role = 0; role < kTimescales; ++role) {
    for (std::size_t ts = 0; ts < kTimescales; ++ts) {
      if (features[ts].empty()) throw std::invalid_argument("timescale_selectivity: no feature series");
      double sum = 0.0;
      for (const auto& element : features[ts]) {
        const double r = pearson_r(hidden[role], element);
        sum += r * r;
      }
      report.r_squared[role][ts] = sum / static_cast<double>(features[ts].size());
    }
    double others = 0.0;
    for (std::size_t ts = 0; ts < kTimescales; ++ts) {
      if (ts != role) others += report.r_squared[role][ts];
    }
    report.selectivity[role] =
        report.r_squared[role][role] - others / static_cast<double>(kTimescales - 1);
  }
  return report;
}

BootstrapSummary bootstrap_mean_std(std::span<const double> values, std::size_t num_bootstraps,
                                    std::size_t values_per_bootstrap, Rng& rng) {
  if (values.empty()) throw std::invalid_argument("bootstrap_mean_std: empty values");
  if (num_bootstraps == 0 || values_per_bootstrap == 0) {
    throw std::invalid_argument("bootstrap_mean_std: counts must be >= 1");
  }
  std::vector<double> means(num_bootstraps);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values_per_bootstrap; ++i) sum += values[rng.below(values.size())];
    m = sum / static_cast<double>(values_per_bootstrap);
  }
  return {mean(means), stddev(means), num_bootstraps, values_per_bootstrap};
}

bool significantly_less(const BootstrapSummary& a, const BootstrapSummary& b) {
  return a.upper() < b.lower();
}

std::vector<double> per_feature_error(const std::vector<Vector>& outputs,
                                      const std::vector<Vector>& targets,
                                      const std::vector<std::vector<std::size_t>>& partition) {
  if (outputs.size() != targets.size()) {
    throw std::invalid_argument("per_feature_error: output/target count mismatch");
  }
  if (outputs.empty()) throw std::invalid_argument("per_feature_error: no samples");
  const std::size_t dim = outputs.front().size();
  std::vector<int> owner(dim, -1);
  for (std::size_t p = 0; p < partition.size(); ++p) {
    if (partition[p].empty()) throw std::invalid_argument("per_feature_error: empty block");
    for (auto idx : partition[p]) {
      if (idx >= dim || owner[idx] != -1) {
        throw std::invalid_argument("per_feature_error: map is not a partition of the outputs");
      }
      owner[idx] = static_cast<int>(p);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw std::invalid_argument("per_feature_error: map is not a partition of the outputs");
  }
  std::vector<double> err(partition.size(), 0.0);
  for (std::size_t n = 0; n < outputs.size(); ++n) {
    require_same_size(outputs[n], targets[n], "per_feature_error");
    if (outputs[n].size() != dim) throw std::invalid_argument("per_feature_error: ragged outputs");
    for (std::size_t p = 0; p < partition.size(); ++p) {
      for (auto idx : partition[p]) {
        const double d = outputs[n][idx] - targets[n][idx];
        err[p] += d * d;
      }
    }
  }
  for (std::size_t p = 0; p < partition.size(); ++p) {
    err[p] /= static_cast<double>(outputs.size() * partition[p].size());
  }
  return err;
}

double memory_interference_scan(const std::vector<InterferencePoint>& runs) {
  if (runs.size() < kMinInterferenceRuns) {
    throw std::invalid_argument("memory_interference_scan: need at least " +
                                std::to_string(kMinInterferenceRuns) + " runs, got " +
                                std::to_string(runs.size()));
  }
  std::vector<double> x(runs.size());
  std::vector<double> y(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    x[i] = runs[i].r_squared;
    y[i] = runs[i].error_delta;
  }
  return pearson_r(x, y);
}

void write_selectivity_csv(const std::filesystem::path& path, const std::string& model,
                           const SelectivityReport& report, bool append) {
  static const char* kRoles[] = {"no_memory", "short_memory", "long_memory"};
  static const char* kScales[] = {"fast", "medium", "slow"};
  std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out) throw std::runtime_error("cannot open " + path.string());
  if (!append) out << "model,role,timescale,r_squared,selectivity\n";
  for (std::size_t role = 0; role < kTimescales; ++role) {
    for (std::size_t ts = 0; ts < kTimescales; ++ts) {
      out << model << ',' << kRoles[role] << ',' << kScales[ts] << ','
          << csv::format(report.r_squared[role][ts]) << ','
          << csv::format(report.selectivity[role]) << '\n';
    }
  }
}

}  // namespace tempolearn
