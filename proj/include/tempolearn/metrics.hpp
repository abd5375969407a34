#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempolearn/datasets.hpp"
#include "tempolearn/numerics.hpp"

namespace tempolearn {

struct LossResult {
  double value = 0.0;
  /// d(loss)/d(output).
  Vector gradient;
};

/// mean((output - target)^2); gradient 2 (output - target) / dim.
LossResult mse_loss(std::span<const double> output, std::span<const double> target);

/// -log(max(p[target], 1e-12)) for a probability vector and one-hot target.
/// Throws std::invalid_argument when the output sums to 1 +- 1e-6 fails.
LossResult ce_loss(std::span<const double> output, std::span<const double> target);

inline constexpr double kCeProbabilityFloor = 1e-12;

/// Trailing mean over min(window, i + 1) points.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Sample Pearson correlation. Throws UndefinedCorrelation for constant input.
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Rows are hidden-unit roles (no/short/long memory), columns are timescales
/// (fast/medium/slow); role i is matched with timescale i.
struct SelectivityReport {
  std::array<std::array<double, kTimescales>, kTimescales> r_squared{};
  std::array<double, kTimescales> selectivity{};
};

/// hidden[role] is one unit's activation series; features[timescale] holds the
/// element series of that subcomponent. r^2 for a (role, timescale) pair is the
/// mean r^2 over the subcomponent's elements.
SelectivityReport timescale_selectivity(const std::array<Vector, kTimescales>& hidden,
                                        const std::array<std::vector<Vector>, kTimescales>& features);

struct BootstrapSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t num_bootstraps = 0;
  std::size_t values_per_bootstrap = 0;

  double lower() const { return mean - std; }
  double upper() const { return mean + std; }
};

BootstrapSummary bootstrap_mean_std(std::span<const double> values, std::size_t num_bootstraps,
                                    std::size_t values_per_bootstrap, Rng& rng);

/// True when a's mean +- std band lies entirely below b's.
bool significantly_less(const BootstrapSummary& a, const BootstrapSummary& b);

/// MSE restricted to each block of `partition`, which must cover every output
/// index exactly once.
std::vector<double> per_feature_error(const std::vector<Vector>& outputs,
                                      const std::vector<Vector>& targets,
                                      const std::vector<std::vector<std::size_t>>& partition);

struct InterferencePoint {
  /// r^2 between a hidden unit and the fast feature.
  double r_squared = 0.0;
  /// Fast-feature error of the memory model minus that of the no-memory model.
  double error_delta = 0.0;
};

inline constexpr std::size_t kMinInterferenceRuns = 20;

/// Correlation across runs between r^2 and error delta.
double memory_interference_scan(const std::vector<InterferencePoint>& runs);

double mean(std::span<const double> values);
double stddev(std::span<const double> values);

void write_selectivity_csv(const std::filesystem::path& path, const std::string& model,
                           const SelectivityReport& report, bool append = false);

}  // namespace tempolearn
