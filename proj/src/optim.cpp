#include "tempolearn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tempolearn {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning_rate must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0) throw std::invalid_argument("optimizer: beta1 must be in [0, 1)");
  if (beta2 < 0.0 || beta2 >= 1.0) throw std::invalid_argument("optimizer: beta2 must be in [0, 1)");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("optimizer: epsilon must be >= 0");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) { config_.validate(); }

void Optimizer::step(std::span<const ParamView> params, const GradientSet& grads) {
  if (config_.kind == OptimizerConfig::Kind::sgd) {
    sgd_step(*this, params, grads);
  } else {
    rmsprop_step(*this, params, grads);
  }
}

namespace {

void check_shapes(std::span<const ParamView> params, const GradientSet& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer: " + std::to_string(grads.size()) +
                                " gradients for " + std::to_string(params.size()) +
                                " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].values.size() != grads[i].size()) {
      throw std::invalid_argument("optimizer: gradient shape mismatch for '" + params[i].name +
                                  "'");
    }
    if (!all_finite(grads[i])) {
      throw std::invalid_argument("optimizer: non-finite gradient for '" + params[i].name + "'");
    }
  }
}

}  // namespace

void sgd_step(Optimizer& opt, std::span<const ParamView> params, const GradientSet& grads) {
  check_shapes(params, grads);
  const double lr = opt.config_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].values;
    const auto& g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * g[j];
  }
}

void rmsprop_step(Optimizer& opt, std::span<const ParamView> params, const GradientSet& grads) {
  check_shapes(params, grads);
  if (opt.momentum_.empty()) {
    for (const auto& p : params) {
      opt.momentum_.emplace_back(p.values.size(), 0.0);
      opt.second_moment_.emplace_back(p.values.size(), 0.0);
    }
  }
  if (opt.momentum_.size() != params.size()) {
    throw std::invalid_argument("optimizer: parameter list changed between steps");
  }
  const auto& c = opt.config_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].values;
    const auto& g = grads[i];
    auto& m = opt.momentum_[i];
    auto& v = opt.second_moment_[i];
    if (m.size() != p.size()) {
      throw std::invalid_argument("optimizer: accumulator shape mismatch for '" + params[i].name +
                                  "'");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j] / (std::sqrt(v[j]) + c.epsilon);
      p[j] -= c.learning_rate * m[j];
    }
  }
}

void GradientAccumulator::add(GradientSet grads, std::uint64_t key) {
  if (!entries_.empty()) {
    const auto& first = entries_.front().grads;
    bool same = first.size() == grads.size();
    for (std::size_t i = 0; same && i < grads.size(); ++i) same = first[i].size() == grads[i].size();
    if (!same) throw std::invalid_argument("GradientAccumulator: gradient shape changed");
  }
  entries_.push_back({key, std::move(grads)});
}

GradientSet GradientAccumulator::flush() {
  if (entries_.empty()) throw std::logic_error("GradientAccumulator: flush on empty accumulator");
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Entry& a, const Entry& b) { return a.key < b.key; });
  GradientSet sum = entries_.front().grads;
  for (std::size_t e = 1; e < entries_.size(); ++e) {
    for (std::size_t i = 0; i < sum.size(); ++i) {
      const auto& g = entries_[e].grads[i];
      for (std::size_t j = 0; j < g.size(); ++j) sum[i][j] += g[j];
    }
  }
  const double n = static_cast<double>(entries_.size());
  if (entries_.size() > 1) {
    for (auto& tensor : sum) {
      for (double& v : tensor) v /= n;
    }
  }
  entries_.clear();
  return sum;
}

}  // namespace tempolearn
