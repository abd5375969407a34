#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempolearn/datasets.hpp"
#include "tempolearn/metrics.hpp"
#include "tempolearn/numerics.hpp"
#include "tempolearn/optim.hpp"

namespace tempolearn {

enum class Task { classifier, autoencoder };
enum class OutputActivation { softmax, sigmoid };
enum class LossKind { mse, ce };

/// When hidden memory is cleared (effective alpha forced to 0).
enum class Gating {
  none,
  /// Every unit resets when the category label changes.
  label_reset,
  /// Each unit resets when its monitored inputs change by more than their mean.
  input_reset,
  /// Every unit resets every `reset_period` trials regardless of content.
  periodic_reset,
};

/// How the hidden delta treats the leak on a non-reset trial.
enum class LeakGradient {
  /// d H(n) / d relu = (1 - a): exact gradient of the loss with H(n-1) frozen.
  mixture,
  /// d H(n) / d relu = 1: the unit is differentiated as if it had no leak.
  instantaneous,
};

std::string to_string(Task);
std::string to_string(OutputActivation);
std::string to_string(LossKind);
std::string to_string(Gating);
std::string to_string(LeakGradient);

/// Three-layer network: input -> leaky ReLU hidden layer -> output.
///
/// Hidden unit j integrates its instantaneous activation with leak alpha_j:
///   H(n)_j = a_j H(n-1)_j + (1 - a_j) relu(W_ih x + b_h)_j
/// where a_j = leak_alphas[j], or 0 on a reset trial.
struct ModelSpec {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  Task task = Task::classifier;
  OutputActivation output_activation = OutputActivation::softmax;
  LossKind loss = LossKind::mse;
  std::vector<double> leak_alphas;
  Gating gating = Gating::none;
  bool use_bias = true;
  /// Trials between resets for Gating::periodic_reset.
  std::size_t reset_period = 0;
  /// For Gating::input_reset: input indices monitored by each hidden unit.
  /// A unit with an empty list never resets (except on the first trial).
  std::vector<std::vector<std::size_t>> gate_inputs;
  LeakGradient leak_gradient = LeakGradient::mixture;

  /// Throws std::invalid_argument; messages name the offending field.
  void validate() const;
  bool has_memory() const;

  static ModelSpec classifier(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t num_categories, double alpha = 0.0,
                              Gating gating = Gating::none, LossKind loss = LossKind::mse);
  static ModelSpec autoencoder(std::size_t input_dim, std::size_t hidden_dim,
                               std::vector<double> leak_alphas, Gating gating = Gating::none);
};

struct ModelState {
  Matrix w_ih;  ///< hidden x input
  Matrix w_ho;  ///< output x hidden
  Vector b_h;   ///< empty when biases are disabled
  Vector b_o;
  Vector h_prev;
  std::uint64_t trial_count = 0;

  /// w_ih, [b_h], w_ho, [b_o]
  std::vector<ParamView> parameters();
  void clear_memory();
};

/// Xavier weights, zero biases, zero hidden state.
ModelState init_state(const ModelSpec& spec, Rng& rng);

/// Everything the leak-unaware backward pass needs from one trial.
struct ForwardTrace {
  Vector input;
  Vector hidden_pre;
  Vector hidden_instant;
  Vector h_prev;
  Vector hidden;
  Vector output_pre;
  Vector output;
  Vector effective_alpha;
  std::uint64_t trial = 0;
};

/// Per-unit reset flags; a single flag applies to every unit.
using ResetMask = std::vector<std::uint8_t>;

ForwardTrace forward(const ModelSpec& spec, ModelState& state, std::span<const double> input,
                     std::span<const std::uint8_t> reset_units);
ForwardTrace forward(const ModelSpec& spec, ModelState& state, std::span<const double> input,
                     bool reset);

/// True on the first trial or when the category changes.
bool label_gate(std::optional<Label> previous, Label current);

/// mean_i |x_t - x_{t-1}| > |mean_i (x_t + x_{t-1}) / 2| over `indices`.
bool input_change_exceeds(std::span<const double> previous, std::span<const double> current,
                          std::span<const std::size_t> indices);

/// Per-unit reset flags from the input-change criterion.
ResetMask input_gate(std::span<const double> previous, std::span<const double> current,
                     const std::vector<std::vector<std::size_t>>& gate_inputs);

/// Stateful gating decision along a stream. The first trial after
/// construction or restart() always resets every unit.
class MemoryGate {
 public:
  explicit MemoryGate(const ModelSpec& spec);
  ResetMask next(std::span<const double> input, Label label);
  void restart();

 private:
  const ModelSpec* spec_;
  std::size_t position_ = 0;
  std::optional<Label> previous_label_;
  Vector previous_input_;
};

class StaleTraceError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct BackwardResult {
  double loss = 0.0;
  /// Aligned with ModelState::parameters().
  GradientSet grads;
};

/// Output target for a sample: one-hot for classifiers, the input for
/// autoencoders.
Vector make_target(const ModelSpec& spec, std::span<const double> input, Label label);

double loss_value(const ModelSpec& spec, std::span<const double> output,
                  std::span<const double> target);

/// Loss and d(loss)/d(output pre-activation) for an output layer. MSE through
/// softmax uses the full softmax Jacobian; CE requires softmax and reduces to
/// output - target.
LossResult output_layer_delta(LossKind loss, OutputActivation activation,
                              std::span<const double> output, std::span<const double> target);

/// Error signals of one trial: d(loss)/d(pre-activation) per layer.
struct LayerDeltas {
  double loss = 0.0;
  Vector hidden;
  Vector output;
};

/// Deltas behind backward_leak_unaware; same contract and errors.
LayerDeltas leak_unaware_deltas(const ModelSpec& spec, const ModelState& state,
                                const ForwardTrace& trace, std::span<const double> target);

/// Plain SGD update from deltas without materializing dense gradients.
/// Bitwise identical to sgd_step on backward_leak_unaware's gradients.
void apply_sgd(ModelState& state, const ForwardTrace& trace, const LayerDeltas& deltas,
               double learning_rate);

/// Gradient of the current trial's loss with H(n-1) held constant. The hidden
/// delta flows only through the instantaneous branch, scaled by
/// (1 - effective_alpha) under LeakGradient::mixture and unscaled under
/// LeakGradient::instantaneous. Throws StaleTraceError unless `trace` came from
/// the most recent forward() on `state`.
BackwardResult backward_leak_unaware(const ModelSpec& spec, const ModelState& state,
                                     const ForwardTrace& trace, std::span<const double> target);

enum class EvalMode {
  /// Each sample evaluated alone with memory reset.
  stateless,
  /// Memory evolves along the test order with the model's gating rule.
  ordered,
};

std::string to_string(EvalMode);

/// Single-sample prediction with memory reset; never mutates `state`.
Vector predict(const ModelSpec& spec, const ModelState& state, std::span<const double> input);

struct OrderedPrediction {
  std::vector<Vector> outputs;
  /// Hidden state H(n) per position (only when requested).
  std::vector<Vector> hidden;
};

/// Runs a copy of `state` along `order` from a cleared memory, applying the
/// spec's gating. `state` is not modified.
OrderedPrediction predict_ordered(const ModelSpec& spec, const ModelState& state,
                                  const Dataset& dataset, std::span<const std::size_t> order,
                                  bool record_hidden = false);

void write_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                      const ModelState& state);
/// Reads weights written by write_checkpoint; dims must match `spec`.
ModelState read_checkpoint(const std::filesystem::path& path, const ModelSpec& spec);

}  // namespace tempolearn
