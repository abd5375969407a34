#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tempolearn/numerics.hpp"

namespace tempolearn {

/// Mutable view of one parameter tensor, flattened.
struct ParamView {
  std::string name;
  std::span<double> values;
};

/// One flattened gradient per parameter, aligned with the model's ParamView list.
using GradientSet = std::vector<Vector>;

struct OptimizerConfig {
  enum class Kind { sgd, rmsprop };

  Kind kind = Kind::sgd;
  double learning_rate = 0.01;
  /// Momentum decay; 0 gives plain RMSprop.
  double beta1 = 0.9;
  /// Squared-gradient decay.
  double beta2 = 0.99;
  double epsilon = 1e-8;

  void validate() const;
};

/// Optimizer state for one training run. Accumulators are created on the
/// first step and shaped like the parameters.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  const OptimizerConfig& config() const { return config_; }
  void step(std::span<const ParamView> params, const GradientSet& grads);

  const std::vector<Vector>& momentum() const { return momentum_; }
  const std::vector<Vector>& second_moment() const { return second_moment_; }

 private:
  friend void sgd_step(Optimizer&, std::span<const ParamView>, const GradientSet&);
  friend void rmsprop_step(Optimizer&, std::span<const ParamView>, const GradientSet&);

  OptimizerConfig config_;
  std::vector<Vector> momentum_;
  std::vector<Vector> second_moment_;
};

/// params -= lr * grads.
void sgd_step(Optimizer& opt, std::span<const ParamView> params, const GradientSet& grads);

/// v = b2 v + (1 - b2) g^2;  m = b1 m + (1 - b1) g / (sqrt(v) + eps);  p -= lr m.
/// No bias correction.
void rmsprop_step(Optimizer& opt, std::span<const ParamView> params, const GradientSet& grads);

/// Collects per-sample gradients and returns their mean.
///
/// Entries are summed in ascending key order (ties keep arrival order), so the
/// flushed mean depends only on the set of (key, gradient) pairs. Training
/// passes the dataset index as key, which makes e.g. ABABAB and AAABBB batches
/// produce bitwise-identical updates.
class GradientAccumulator {
 public:
  void add(GradientSet grads, std::uint64_t key = 0);
  std::size_t count() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// Mean of everything added since the last flush; resets the accumulator.
  GradientSet flush();

 private:
  struct Entry {
    std::uint64_t key;
    GradientSet grads;
  };
  std::vector<Entry> entries_;
};

}  // namespace tempolearn
