#pragma once

#include <span>
#include <vector>

#include "tempolearn/models.hpp"
#include "tempolearn/numerics.hpp"
#include "tempolearn/optim.hpp"

namespace tempolearn {

/// Single-layer LSTM classifier (softmax on a dense readout of h), trained by
/// truncated backpropagation through time.
struct LstmSpec {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  /// BPTT truncation length (samples per optimizer update).
  std::size_t window_length = 10;
  LossKind loss = LossKind::mse;

  void validate() const;
};

/// Gate rows are stacked [input, forget, output, candidate], hidden_dim each.
struct LstmState {
  Matrix w_x;  ///< 4H x input
  Matrix w_h;  ///< 4H x H
  Vector b;    ///< 4H
  Matrix w_out;  ///< output x H
  Vector b_out;
  Vector h;
  Vector c;

  std::vector<ParamView> parameters();
  void clear_memory();
};

LstmState init_lstm_state(const LstmSpec& spec, Rng& rng);

struct LstmStepTrace {
  Vector input;
  Vector h_prev;
  Vector c_prev;
  Vector input_gate;
  Vector forget_gate;
  Vector output_gate;
  Vector candidate;
  Vector c;
  Vector tanh_c;
  Vector h;
  Vector output;
};

/// One cell update; advances state.h and state.c.
LstmStepTrace lstm_step(const LstmSpec& spec, LstmState& state, std::span<const double> input);

struct LstmWindowResult {
  /// Sum over steps of the per-step loss.
  double loss_sum = 0.0;
  /// Gradients summed over the window, aligned with LstmState::parameters().
  GradientSet grads;
};

/// Full BPTT over a window starting from state.h / state.c (treated as
/// constants). Advances state.h / state.c to the end of the window; weights
/// are untouched.
LstmWindowResult lstm_bptt_gradients(const LstmSpec& spec, LstmState& state,
                                     std::span<const Vector> inputs,
                                     std::span<const Vector> targets);

/// One BPTT update over the window; returns the mean per-step loss. The
/// recurrent state carries over (detached) to the next window.
double lstm_bptt_train(const LstmSpec& spec, LstmState& state, std::span<const Vector> inputs,
                       std::span<const Vector> targets, Optimizer& optimizer);

/// Prediction from a zero state (one step).
Vector lstm_predict(const LstmSpec& spec, const LstmState& state, std::span<const double> input);

/// Outputs along `order` starting from zero state; `state` is not modified.
std::vector<Vector> lstm_predict_ordered(const LstmSpec& spec, const LstmState& state,
                                         const Dataset& dataset,
                                         std::span<const std::size_t> order);

}  // namespace tempolearn
