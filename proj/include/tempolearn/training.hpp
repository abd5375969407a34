#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tempolearn/datasets.hpp"
#include "tempolearn/lstm.hpp"
#include "tempolearn/models.hpp"
#include "tempolearn/optim.hpp"
#include "tempolearn/sampling.hpp"

namespace tempolearn {

/// How the held-out set is presented at evaluation time.
struct EvalOptions {
  EvalMode mode = EvalMode::stateless;
  /// Test-set order for ordered evaluation; empty means dataset order.
  std::vector<std::size_t> order;
  /// Autoencoders: output-index blocks for per-feature error (empty = none).
  std::vector<std::vector<std::size_t>> partition;
  /// Keep the hidden series from ordered evaluation.
  bool record_hidden = false;
};

struct EvalResult {
  double loss = 0.0;
  /// Fraction correct by argmax; NaN for autoencoders.
  double accuracy = 0.0;
  /// MSE per block of EvalOptions::partition.
  std::vector<double> per_feature;
  /// Hidden state per evaluated position (ordered mode with record_hidden).
  std::vector<Vector> hidden;
};

/// Mean loss (and accuracy or per-feature error) on `test`. Never mutates
/// `state`.
EvalResult evaluate(const ModelSpec& spec, const ModelState& state, const Dataset& test,
                    const EvalOptions& options = {});

EvalResult evaluate_lstm(const LstmSpec& spec, const LstmState& state, const Dataset& test,
                         const EvalOptions& options = {});

struct TrainConfig {
  std::size_t epochs = 1;
  /// Samples between evaluations.
  std::size_t eval_every = 100;
  EvalOptions eval;
  /// 1 = incremental.
  std::size_t batch_size = 1;
  /// Keep per-trial hidden states of the training stream.
  bool record_hidden = false;
  std::size_t run = 0;
  std::string condition;

  void validate() const;
};

struct CurveRecord {
  std::size_t run = 0;
  /// Optimizer updates for mini-batch training, samples otherwise.
  std::size_t iteration = 0;
  std::size_t samples_seen = 0;
  /// Mean training loss since the previous record (NaN for the initial one).
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
  std::vector<double> per_feature;
};

/// Records of one training run under one condition.
struct TrainCurve {
  std::string condition;
  std::vector<CurveRecord> records;

  /// Record taken when samples_seen first reached `samples`; throws if absent.
  const CurveRecord& at_samples(std::size_t samples) const;
  const CurveRecord& last() const;
};

/// Hidden state of one training trial.
struct HiddenRecord {
  Vector h_prev;
  Vector hidden;
  ResetMask reset;
};

struct TrainResult {
  TrainCurve curve;
  /// Filled when TrainConfig::record_hidden is set.
  std::vector<HiddenRecord> hidden;
};

/// One forward, leak-unaware backward and optimizer step per scheduled sample.
/// Memory is cleared and gating restarts at every epoch.
TrainResult train_incremental(const ModelSpec& spec, ModelState& state, const Dataset& train,
                              const Schedule& schedule, Optimizer& optimizer,
                              const TrainConfig& config, const Dataset& test);

/// Averages batch_size consecutive sample gradients per update. Rejects specs
/// with leaky units. A trailing partial batch is flushed at each epoch end.
TrainResult train_minibatch(const ModelSpec& spec, ModelState& state, const Dataset& train,
                            const Schedule& schedule, Optimizer& optimizer,
                            const TrainConfig& config, const Dataset& test);

/// Truncated BPTT over consecutive schedule windows of spec.window_length; the
/// recurrent state carries across windows and clears at each epoch.
TrainCurve train_lstm(const LstmSpec& spec, LstmState& state, const Dataset& train,
                      const Schedule& schedule, Optimizer& optimizer, const TrainConfig& config,
                      const Dataset& test);

/// run,condition,iteration,samples_seen,train_loss,test_loss,test_acc
void write_curves_csv(const std::filesystem::path& path, const std::vector<TrainCurve>& curves);

/// Order-sensitive digest of a model's weights and memory.
std::uint64_t state_hash(const ModelState& state);

}  // namespace tempolearn
