#include "tempolearn/training.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tempolearn/csv.hpp"
#include "tempolearn/metrics.hpp"

namespace tempolearn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::size_t> eval_order(const Dataset& test, const EvalOptions& options) {
  if (!options.order.empty()) return options.order;
  std::vector<std::size_t> order(test.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

EvalResult summarize(bool classifier, const Dataset& test, const std::vector<std::size_t>& order,
                     const std::vector<Vector>& outputs, const EvalOptions& options,
                     LossKind loss) {
  EvalResult result;
  std::vector<Vector> targets;
  if (!classifier && !options.partition.empty()) targets.reserve(order.size());
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t p = 0; p < order.size(); ++p) {
    const auto& x = test.samples[order[p]];
    const Label label = test.labels[order[p]];
    const auto& y = outputs[p];
    if (classifier) {
      Vector target(y.size(), 0.0);
      target.at(label) = 1.0;
      total += loss == LossKind::mse ? mse_loss(y, target).value : ce_loss(y, target).value;
      if (argmax(y) == label) ++correct;
    } else {
      total += mse_loss(y, x).value;
      if (!options.partition.empty()) targets.push_back(x);
    }
  }
  const double n = static_cast<double>(order.size());
  result.loss = total / n;
  result.accuracy = classifier ? static_cast<double>(correct) / n : kNaN;
  if (!classifier && !options.partition.empty()) {
    result.per_feature = per_feature_error(outputs, targets, options.partition);
  }
  return result;
}

void check_schedule(const Dataset& train, const Schedule& schedule) {
  if (schedule.order.size() != train.size()) {
    throw std::invalid_argument("schedule has " + std::to_string(schedule.order.size()) +
                                " positions for a dataset of " + std::to_string(train.size()));
  }
  for (auto idx : schedule.order) {
    if (idx >= train.size()) throw std::invalid_argument("schedule index out of range");
  }
}

/// Shared bookkeeping for the training loops.
class Recorder {
 public:
  Recorder(const TrainConfig& config, TrainCurve& curve) : config_(config), curve_(curve) {
    curve_.condition = config.condition;
  }

  void add_loss(double loss, std::size_t samples) {
    loss_sum_ += loss;
    loss_count_ += samples;
  }

  template <typename Eval>
  void record(std::size_t iteration, std::size_t samples_seen, Eval&& eval) {
    if (!curve_.records.empty() && curve_.records.back().samples_seen == samples_seen) return;
    const EvalResult r = eval();
    CurveRecord rec;
    rec.run = config_.run;
    rec.iteration = iteration;
    rec.samples_seen = samples_seen;
    rec.train_loss = loss_count_ ? loss_sum_ / static_cast<double>(loss_count_) : kNaN;
    rec.test_loss = r.loss;
    rec.test_acc = r.accuracy;
    rec.per_feature = r.per_feature;
    curve_.records.push_back(std::move(rec));
    loss_sum_ = 0.0;
    loss_count_ = 0;
  }

  /// True when samples_seen crossed a multiple of eval_every since `before`.
  bool due(std::size_t before, std::size_t after) const {
    return after / config_.eval_every > before / config_.eval_every;
  }

 private:
  const TrainConfig& config_;
  TrainCurve& curve_;
  double loss_sum_ = 0.0;
  std::size_t loss_count_ = 0;
};

}  // namespace

EvalResult evaluate(const ModelSpec& spec, const ModelState& state, const Dataset& test,
                    const EvalOptions& options) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  const auto order = eval_order(test, options);
  std::vector<Vector> outputs;
  std::vector<Vector> hidden;
  if (options.mode == EvalMode::stateless) {
    outputs.reserve(order.size());
    for (auto idx : order) outputs.push_back(predict(spec, state, test.samples.at(idx)));
  } else {
    auto pred = predict_ordered(spec, state, test, order, options.record_hidden);
    outputs = std::move(pred.outputs);
    hidden = std::move(pred.hidden);
  }
  auto result = summarize(spec.task == Task::classifier, test, order, outputs, options, spec.loss);
  result.hidden = std::move(hidden);
  return result;
}

EvalResult evaluate_lstm(const LstmSpec& spec, const LstmState& state, const Dataset& test,
                         const EvalOptions& options) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  const auto order = eval_order(test, options);
  std::vector<Vector> outputs;
  if (options.mode == EvalMode::stateless) {
    outputs.reserve(order.size());
    for (auto idx : order) outputs.push_back(lstm_predict(spec, state, test.samples.at(idx)));
  } else {
    outputs = lstm_predict_ordered(spec, state, test, order);
  }
  return summarize(true, test, order, outputs, options, spec.loss);
}

void TrainConfig::validate() const {
  if (eval_every == 0) throw std::invalid_argument("training.eval_every: must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("training.batch_size: must be >= 1");
}

const CurveRecord& TrainCurve::at_samples(std::size_t samples) const {
  for (const auto& r : records) {
    if (r.samples_seen >= samples) {
      if (r.samples_seen != samples) break;
      return r;
    }
  }
  throw std::out_of_range("curve '" + condition + "' has no record at " +
                          std::to_string(samples) + " samples");
}

const CurveRecord& TrainCurve::last() const {
  if (records.empty()) throw std::out_of_range("curve '" + condition + "' is empty");
  return records.back();
}

TrainResult train_incremental(const ModelSpec& spec, ModelState& state, const Dataset& train,
                              const Schedule& schedule, Optimizer& optimizer,
                              const TrainConfig& config, const Dataset& test) {
  config.validate();
  if (config.batch_size != 1) {
    throw std::invalid_argument("train_incremental: batch_size must be 1");
  }
  check_schedule(train, schedule);
  TrainResult result;
  Recorder rec(config, result.curve);
  auto eval = [&] { return evaluate(spec, state, test, config.eval); };
  std::size_t seen = 0;
  rec.record(0, 0, eval);
  MemoryGate gate(spec);
  const bool plain_sgd = optimizer.config().kind == OptimizerConfig::Kind::sgd;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    state.clear_memory();
    gate.restart();
    for (auto idx : schedule.order) {
      const auto& x = train.samples[idx];
      const Label label = train.labels[idx];
      const auto mask = gate.next(x, label);
      const auto trace = forward(spec, state, x, mask);
      const auto target = make_target(spec, x, label);
      double loss = 0.0;
      if (plain_sgd) {
        const auto deltas = leak_unaware_deltas(spec, state, trace, target);
        apply_sgd(state, trace, deltas, optimizer.config().learning_rate);
        loss = deltas.loss;
      } else {
        auto back = backward_leak_unaware(spec, state, trace, target);
        optimizer.step(state.parameters(), back.grads);
        loss = back.loss;
      }
      rec.add_loss(loss, 1);
      if (config.record_hidden) result.hidden.push_back({trace.h_prev, trace.hidden, mask});
      ++seen;
      if (rec.due(seen - 1, seen)) rec.record(seen, seen, eval);
    }
    rec.record(seen, seen, eval);
  }
  return result;
}

TrainResult train_minibatch(const ModelSpec& spec, ModelState& state, const Dataset& train,
                            const Schedule& schedule, Optimizer& optimizer,
                            const TrainConfig& config, const Dataset& test) {
  config.validate();
  if (spec.has_memory()) {
    throw std::invalid_argument("train_minibatch: leaky units are not supported with mini-batches");
  }
  check_schedule(train, schedule);
  TrainResult result;
  Recorder rec(config, result.curve);
  auto eval = [&] { return evaluate(spec, state, test, config.eval); };
  std::size_t seen = 0;
  std::size_t updates = 0;
  std::size_t seen_at_update = 0;
  rec.record(0, 0, eval);
  GradientAccumulator acc;
  double batch_loss = 0.0;
  auto apply = [&] {
    const std::size_t n = acc.count();
    const auto grads = acc.flush();
    optimizer.step(state.parameters(), grads);
    rec.add_loss(batch_loss, n);
    batch_loss = 0.0;
    ++updates;
    const std::size_t before = seen_at_update;
    seen_at_update = seen;
    if (rec.due(before, seen)) rec.record(updates, seen, eval);
  };
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    state.clear_memory();
    for (auto idx : schedule.order) {
      const auto& x = train.samples[idx];
      const Label label = train.labels[idx];
      const auto trace = forward(spec, state, x, true);
      auto back = backward_leak_unaware(spec, state, trace, make_target(spec, x, label));
      if (config.record_hidden) {
        result.hidden.push_back({trace.h_prev, trace.hidden, ResetMask(spec.hidden_dim, 1)});
      }
      batch_loss += back.loss;
      acc.add(std::move(back.grads), idx);
      ++seen;
      if (acc.count() == config.batch_size) apply();
    }
    if (!acc.empty()) apply();
    rec.record(updates, seen, eval);
  }
  return result;
}

TrainCurve train_lstm(const LstmSpec& spec, LstmState& state, const Dataset& train,
                      const Schedule& schedule, Optimizer& optimizer, const TrainConfig& config,
                      const Dataset& test) {
  config.validate();
  spec.validate();
  check_schedule(train, schedule);
  TrainCurve curve;
  Recorder rec(config, curve);
  auto eval = [&] { return evaluate_lstm(spec, state, test, config.eval); };
  std::size_t seen = 0;
  rec.record(0, 0, eval);
  std::vector<Vector> inputs;
  std::vector<Vector> targets;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    state.clear_memory();
    for (std::size_t start = 0; start < schedule.size(); start += spec.window_length) {
      const std::size_t end = std::min(schedule.size(), start + spec.window_length);
      inputs.clear();
      targets.clear();
      for (std::size_t p = start; p < end; ++p) {
        const auto idx = schedule.order[p];
        inputs.push_back(train.samples[idx]);
        Vector t(spec.output_dim, 0.0);
        t.at(train.labels[idx]) = 1.0;
        targets.push_back(std::move(t));
      }
      const double mean_loss = lstm_bptt_train(spec, state, inputs, targets, optimizer);
      rec.add_loss(mean_loss * static_cast<double>(inputs.size()), inputs.size());
      const std::size_t before = seen;
      seen += inputs.size();
      if (rec.due(before, seen)) rec.record(seen, seen, eval);
    }
    rec.record(seen, seen, eval);
  }
  return curve;
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<TrainCurve>& curves) {
  csv::Writer out(path, {"run", "condition", "iteration", "samples_seen", "train_loss",
                         "test_loss", "test_acc"});
  for (const auto& curve : curves) {
    for (const auto& r : curve.records) {
      out.field(r.run)
          .field(curve.condition)
          .field(r.iteration)
          .field(r.samples_seen)
          .field(r.train_loss)
          .field(r.test_loss)
          .field(r.test_acc);
      out.end_row();
    }
  }
}

std::uint64_t state_hash(const ModelState& state) {
  // FNV-1a over the raw bytes.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::span<const double> values) {
    for (double v : values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  };
  mix(state.w_ih.data);
  mix(state.b_h);
  mix(state.w_ho.data);
  mix(state.b_o);
  mix(state.h_prev);
  h ^= state.trial_count;
  return h;
}

}  // namespace tempolearn
