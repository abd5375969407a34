#include "tempolearn/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tempolearn {

void LstmSpec::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("lstm: every layer needs at least one unit");
  }
  if (window_length == 0) throw std::invalid_argument("window_length: must be >= 1");
}

std::vector<ParamView> LstmState::parameters() {
  return {{"w_x", w_x.data}, {"w_h", w_h.data}, {"b", b}, {"w_out", w_out.data}, {"b_out", b_out}};
}

void LstmState::clear_memory() {
  std::fill(h.begin(), h.end(), 0.0);
  std::fill(c.begin(), c.end(), 0.0);
}

LstmState init_lstm_state(const LstmSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t hd = spec.hidden_dim;
  LstmState s;
  s.w_x = xavier_init(rng, spec.input_dim, 4 * hd);
  s.w_h = xavier_init(rng, hd, 4 * hd);
  s.b.assign(4 * hd, 0.0);
  s.w_out = xavier_init(rng, hd, spec.output_dim);
  s.b_out.assign(spec.output_dim, 0.0);
  s.h.assign(hd, 0.0);
  s.c.assign(hd, 0.0);
  return s;
}

LstmStepTrace lstm_step(const LstmSpec& spec, LstmState& state, std::span<const double> input) {
  if (input.size() != spec.input_dim) {
    throw std::invalid_argument("lstm_step: input has dimension " + std::to_string(input.size()) +
                                ", model expects " + std::to_string(spec.input_dim));
  }
  const std::size_t hd = spec.hidden_dim;
  LstmStepTrace t;
  t.input.assign(input.begin(), input.end());
  t.h_prev = state.h;
  t.c_prev = state.c;

  Vector z = matvec(state.w_x, input, state.b);
  const Vector zh = matvec(state.w_h, state.h);
  for (std::size_t r = 0; r < z.size(); ++r) z[r] += zh[r];

  t.input_gate.resize(hd);
  t.forget_gate.resize(hd);
  t.output_gate.resize(hd);
  t.candidate.resize(hd);
  t.c.resize(hd);
  t.tanh_c.resize(hd);
  t.h.resize(hd);
  for (std::size_t j = 0; j < hd; ++j) {
    t.input_gate[j] = sigmoid(z[j]);
    t.forget_gate[j] = sigmoid(z[hd + j]);
    t.output_gate[j] = sigmoid(z[2 * hd + j]);
    t.candidate[j] = std::tanh(z[3 * hd + j]);
    t.c[j] = t.forget_gate[j] * t.c_prev[j] + t.input_gate[j] * t.candidate[j];
    t.tanh_c[j] = std::tanh(t.c[j]);
    t.h[j] = t.output_gate[j] * t.tanh_c[j];
  }
  t.output = softmax(matvec(state.w_out, t.h, state.b_out));
  state.h = t.h;
  state.c = t.c;
  return t;
}

LstmWindowResult lstm_bptt_gradients(const LstmSpec& spec, LstmState& state,
                                     std::span<const Vector> inputs,
                                     std::span<const Vector> targets) {
  if (inputs.empty()) throw std::invalid_argument("lstm_bptt: empty window");
  if (inputs.size() != targets.size()) {
    throw std::invalid_argument("lstm_bptt: inputs and targets differ in length");
  }
  const std::size_t hd = spec.hidden_dim;
  std::vector<LstmStepTrace> traces;
  traces.reserve(inputs.size());
  for (const auto& x : inputs) traces.push_back(lstm_step(spec, state, x));

  Matrix g_wx(4 * hd, spec.input_dim);
  Matrix g_wh(4 * hd, hd);
  Vector g_b(4 * hd, 0.0);
  Matrix g_wout(spec.output_dim, hd);
  Vector g_bout(spec.output_dim, 0.0);

  LstmWindowResult result;
  Vector dh_next(hd, 0.0);
  Vector dc_next(hd, 0.0);
  Vector dz(4 * hd);
  for (std::size_t n = traces.size(); n-- > 0;) {
    const auto& t = traces[n];
    if (targets[n].size() != spec.output_dim) {
      throw std::invalid_argument("lstm_bptt: target dimension mismatch");
    }
    auto head = output_layer_delta(spec.loss, OutputActivation::softmax, t.output, targets[n]);
    result.loss_sum += head.value;
    const Vector& d_out = head.gradient;
    add_outer(g_wout, d_out, t.h);
    for (std::size_t k = 0; k < d_out.size(); ++k) g_bout[k] += d_out[k];

    Vector dh = matvec_transposed(state.w_out, d_out);
    for (std::size_t j = 0; j < hd; ++j) {
      dh[j] += dh_next[j];
      const double i = t.input_gate[j], f = t.forget_gate[j], o = t.output_gate[j];
      const double g = t.candidate[j];
      const double dc = dh[j] * o * (1.0 - t.tanh_c[j] * t.tanh_c[j]) + dc_next[j];
      dz[j] = dc * g * i * (1.0 - i);
      dz[hd + j] = dc * t.c_prev[j] * f * (1.0 - f);
      dz[2 * hd + j] = dh[j] * t.tanh_c[j] * o * (1.0 - o);
      dz[3 * hd + j] = dc * i * (1.0 - g * g);
      dc_next[j] = dc * f;
    }
    add_outer(g_wx, dz, t.input);
    add_outer(g_wh, dz, t.h_prev);
    for (std::size_t r = 0; r < dz.size(); ++r) g_b[r] += dz[r];
    dh_next = matvec_transposed(state.w_h, dz);
  }
  result.grads.push_back(std::move(g_wx.data));
  result.grads.push_back(std::move(g_wh.data));
  result.grads.push_back(std::move(g_b));
  result.grads.push_back(std::move(g_wout.data));
  result.grads.push_back(std::move(g_bout));
  return result;
}

double lstm_bptt_train(const LstmSpec& spec, LstmState& state, std::span<const Vector> inputs,
                       std::span<const Vector> targets, Optimizer& optimizer) {
  auto window = lstm_bptt_gradients(spec, state, inputs, targets);
  const auto params = state.parameters();
  optimizer.step(params, window.grads);
  return window.loss_sum / static_cast<double>(inputs.size());
}

Vector lstm_predict(const LstmSpec& spec, const LstmState& state, std::span<const double> input) {
  LstmState scratch = state;
  scratch.clear_memory();
  return lstm_step(spec, scratch, input).output;
}

std::vector<Vector> lstm_predict_ordered(const LstmSpec& spec, const LstmState& state,
                                         const Dataset& dataset,
                                         std::span<const std::size_t> order) {
  LstmState scratch = state;
  scratch.clear_memory();
  std::vector<Vector> outputs;
  outputs.reserve(order.size());
  for (auto idx : order) outputs.push_back(lstm_step(spec, scratch, dataset.samples.at(idx)).output);
  return outputs;
}

}  // namespace tempolearn
