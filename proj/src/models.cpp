#include "tempolearn/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tempolearn/csv.hpp"
#include "tempolearn/metrics.hpp"

namespace tempolearn {

std::string to_string(Task t) { return t == Task::classifier ? "classifier" : "autoencoder"; }

std::string to_string(OutputActivation a) {
  return a == OutputActivation::softmax ? "softmax" : "sigmoid";
}

std::string to_string(LossKind l) { return l == LossKind::mse ? "mse" : "ce"; }

std::string to_string(Gating g) {
  switch (g) {
    case Gating::none: return "none";
    case Gating::label_reset: return "label_reset";
    case Gating::input_reset: return "input_reset";
    case Gating::periodic_reset: return "periodic_reset";
  }
  return "?";
}

std::string to_string(LeakGradient g) {
  return g == LeakGradient::mixture ? "mixture" : "instantaneous";
}

std::string to_string(EvalMode m) { return m == EvalMode::stateless ? "stateless" : "ordered"; }

void ModelSpec::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("layer_dims: every layer needs at least one unit");
  }
  if (task == Task::autoencoder && output_dim != input_dim) {
    throw std::invalid_argument("layer_dims: autoencoder output dim must equal input dim");
  }
  if (leak_alphas.size() != hidden_dim) {
    throw std::invalid_argument("leak_alphas: expected " + std::to_string(hidden_dim) +
                                " values (one per hidden unit), got " +
                                std::to_string(leak_alphas.size()));
  }
  for (double a : leak_alphas) {
    if (!(a >= 0.0 && a < 1.0)) {
      throw std::invalid_argument("leak_alphas: every value must lie in [0, 1)");
    }
  }
  if (loss == LossKind::ce && output_activation != OutputActivation::softmax) {
    throw std::invalid_argument("loss: ce requires a softmax output");
  }
  if (gating == Gating::periodic_reset && reset_period == 0) {
    throw std::invalid_argument("reset_period: must be >= 1 for periodic_reset gating");
  }
  if (gating == Gating::input_reset) {
    if (gate_inputs.size() != hidden_dim) {
      throw std::invalid_argument("gate_inputs: expected one list per hidden unit");
    }
    for (const auto& list : gate_inputs) {
      for (auto idx : list) {
        if (idx >= input_dim) throw std::invalid_argument("gate_inputs: index out of range");
      }
    }
  }
}

bool ModelSpec::has_memory() const {
  return std::any_of(leak_alphas.begin(), leak_alphas.end(), [](double a) { return a > 0.0; });
}

ModelSpec ModelSpec::classifier(std::size_t input_dim, std::size_t hidden_dim,
                                std::size_t num_categories, double alpha, Gating gating,
                                LossKind loss) {
  ModelSpec spec;
  spec.input_dim = input_dim;
  spec.hidden_dim = hidden_dim;
  spec.output_dim = num_categories;
  spec.task = Task::classifier;
  spec.output_activation = OutputActivation::softmax;
  spec.loss = loss;
  spec.leak_alphas.assign(hidden_dim, alpha);
  spec.gating = gating;
  return spec;
}

ModelSpec ModelSpec::autoencoder(std::size_t input_dim, std::size_t hidden_dim,
                                 std::vector<double> leak_alphas, Gating gating) {
  ModelSpec spec;
  spec.input_dim = input_dim;
  spec.hidden_dim = hidden_dim;
  spec.output_dim = input_dim;
  spec.task = Task::autoencoder;
  spec.output_activation = OutputActivation::sigmoid;
  spec.loss = LossKind::mse;
  spec.leak_alphas = std::move(leak_alphas);
  spec.gating = gating;
  return spec;
}

std::vector<ParamView> ModelState::parameters() {
  std::vector<ParamView> params;
  params.push_back({"w_ih", w_ih.data});
  if (!b_h.empty()) params.push_back({"b_h", b_h});
  params.push_back({"w_ho", w_ho.data});
  if (!b_o.empty()) params.push_back({"b_o", b_o});
  return params;
}

void ModelState::clear_memory() { std::fill(h_prev.begin(), h_prev.end(), 0.0); }

ModelState init_state(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  ModelState state;
  state.w_ih = xavier_init(rng, spec.input_dim, spec.hidden_dim);
  state.w_ho = xavier_init(rng, spec.hidden_dim, spec.output_dim);
  if (spec.use_bias) {
    state.b_h.assign(spec.hidden_dim, 0.0);
    state.b_o.assign(spec.output_dim, 0.0);
  }
  state.h_prev.assign(spec.hidden_dim, 0.0);
  return state;
}

namespace {

Vector apply_output(const ModelSpec& spec, std::span<const double> pre) {
  return spec.output_activation == OutputActivation::softmax ? softmax(pre) : sigmoid(pre);
}

void check_input(const ModelSpec& spec, std::span<const double> input) {
  if (input.size() != spec.input_dim) {
    throw std::invalid_argument("forward: input has dimension " + std::to_string(input.size()) +
                                ", model expects " + std::to_string(spec.input_dim));
  }
  if (!all_finite(input)) throw std::invalid_argument("forward: non-finite input");
}

}  // namespace

ForwardTrace forward(const ModelSpec& spec, ModelState& state, std::span<const double> input,
                     std::span<const std::uint8_t> reset_units) {
  check_input(spec, input);
  if (reset_units.size() != spec.hidden_dim) {
    throw std::invalid_argument("forward: reset mask must have one flag per hidden unit");
  }
  ForwardTrace t;
  t.input.assign(input.begin(), input.end());
  t.hidden_pre = matvec(state.w_ih, input, state.b_h);
  t.hidden_instant = relu(t.hidden_pre);
  t.h_prev = state.h_prev;
  t.effective_alpha.resize(spec.hidden_dim);
  t.hidden.resize(spec.hidden_dim);
  for (std::size_t j = 0; j < spec.hidden_dim; ++j) {
    const double a = reset_units[j] ? 0.0 : spec.leak_alphas[j];
    t.effective_alpha[j] = a;
    t.hidden[j] = a * state.h_prev[j] + (1.0 - a) * t.hidden_instant[j];
  }
  t.output_pre = matvec(state.w_ho, t.hidden, state.b_o);
  t.output = apply_output(spec, t.output_pre);
  state.h_prev = t.hidden;
  t.trial = ++state.trial_count;
  return t;
}

ForwardTrace forward(const ModelSpec& spec, ModelState& state, std::span<const double> input,
                     bool reset) {
  const ResetMask mask(spec.hidden_dim, reset ? 1 : 0);
  return forward(spec, state, input, mask);
}

bool label_gate(std::optional<Label> previous, Label current) {
  return !previous.has_value() || *previous != current;
}

bool input_change_exceeds(std::span<const double> previous, std::span<const double> current,
                          std::span<const std::size_t> indices) {
  if (previous.size() != current.size()) {
    throw std::invalid_argument("input_gate: consecutive inputs differ in dimension");
  }
  if (indices.empty()) return false;
  double diff = 0.0;
  double avg = 0.0;
  for (auto i : indices) {
    if (i >= current.size()) throw std::invalid_argument("input_gate: index out of range");
    diff += std::abs(current[i] - previous[i]);
    avg += (current[i] + previous[i]) / 2.0;
  }
  const double n = static_cast<double>(indices.size());
  return diff / n > std::abs(avg / n);
}

ResetMask input_gate(std::span<const double> previous, std::span<const double> current,
                     const std::vector<std::vector<std::size_t>>& gate_inputs) {
  ResetMask mask(gate_inputs.size(), 0);
  for (std::size_t j = 0; j < gate_inputs.size(); ++j) {
    mask[j] = input_change_exceeds(previous, current, gate_inputs[j]);
  }
  return mask;
}

MemoryGate::MemoryGate(const ModelSpec& spec) : spec_(&spec) {}

void MemoryGate::restart() {
  position_ = 0;
  previous_label_.reset();
  previous_input_.clear();
}

ResetMask MemoryGate::next(std::span<const double> input, Label label) {
  const auto& spec = *spec_;
  ResetMask mask(spec.hidden_dim, 0);
  if (position_ == 0) {
    std::fill(mask.begin(), mask.end(), 1);
  } else {
    switch (spec.gating) {
      case Gating::none:
        break;
      case Gating::label_reset:
        if (label_gate(previous_label_, label)) std::fill(mask.begin(), mask.end(), 1);
        break;
      case Gating::input_reset:
        mask = input_gate(previous_input_, input, spec.gate_inputs);
        break;
      case Gating::periodic_reset:
        if (position_ % spec.reset_period == 0) std::fill(mask.begin(), mask.end(), 1);
        break;
    }
  }
  ++position_;
  previous_label_ = label;
  previous_input_.assign(input.begin(), input.end());
  return mask;
}

Vector make_target(const ModelSpec& spec, std::span<const double> input, Label label) {
  if (spec.task == Task::autoencoder) return Vector(input.begin(), input.end());
  if (label >= spec.output_dim) {
    throw std::invalid_argument("make_target: label " + std::to_string(label) +
                                " exceeds output dimension");
  }
  Vector target(spec.output_dim, 0.0);
  target[label] = 1.0;
  return target;
}

double loss_value(const ModelSpec& spec, std::span<const double> output,
                  std::span<const double> target) {
  return spec.loss == LossKind::mse ? mse_loss(output, target).value
                                    : ce_loss(output, target).value;
}

LossResult output_layer_delta(LossKind loss, OutputActivation activation,
                              std::span<const double> y, std::span<const double> target) {
  LossResult result;
  result.gradient.resize(y.size());
  if (loss == LossKind::ce) {
    if (activation != OutputActivation::softmax) {
      throw std::invalid_argument("output_layer_delta: ce requires a softmax output");
    }
    result.value = ce_loss(y, target).value;
    // softmax + cross-entropy composes to y - t.
    for (std::size_t k = 0; k < y.size(); ++k) result.gradient[k] = y[k] - target[k];
    return result;
  }
  const auto mse = mse_loss(y, target);
  result.value = mse.value;
  const auto& g = mse.gradient;
  if (activation == OutputActivation::softmax) {
    // dz_k = y_k (g_k - sum_i g_i y_i)
    double gy = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) gy += g[k] * y[k];
    for (std::size_t k = 0; k < y.size(); ++k) result.gradient[k] = y[k] * (g[k] - gy);
  } else {
    for (std::size_t k = 0; k < y.size(); ++k) result.gradient[k] = g[k] * y[k] * (1.0 - y[k]);
  }
  return result;
}

LayerDeltas leak_unaware_deltas(const ModelSpec& spec, const ModelState& state,
                                const ForwardTrace& trace, std::span<const double> target) {
  if (trace.trial != state.trial_count) {
    throw StaleTraceError("backward_leak_unaware: trace from trial " + std::to_string(trace.trial) +
                          " but the model is at trial " + std::to_string(state.trial_count));
  }
  if (target.size() != spec.output_dim) {
    throw std::invalid_argument("backward_leak_unaware: target dimension mismatch");
  }
  LayerDeltas d;
  auto head = output_layer_delta(spec.loss, spec.output_activation, trace.output, target);
  d.loss = head.value;
  d.output = std::move(head.gradient);

  // H(n-1) is treated as data: only the (1 - a) relu(.) branch carries gradient.
  const Vector d_hidden = matvec_transposed(state.w_ho, d.output);
  d.hidden.resize(spec.hidden_dim);
  for (std::size_t j = 0; j < spec.hidden_dim; ++j) {
    const double relu_grad = trace.hidden_pre[j] > 0.0 ? 1.0 : 0.0;
    const double leak = spec.leak_gradient == LeakGradient::mixture
                            ? 1.0 - trace.effective_alpha[j]
                            : 1.0;
    d.hidden[j] = d_hidden[j] * leak * relu_grad;
  }
  return d;
}

BackwardResult backward_leak_unaware(const ModelSpec& spec, const ModelState& state,
                                     const ForwardTrace& trace, std::span<const double> target) {
  LayerDeltas d = leak_unaware_deltas(spec, state, trace, target);
  BackwardResult result;
  result.loss = d.loss;
  Matrix grad_w_ih(spec.hidden_dim, spec.input_dim);
  add_outer(grad_w_ih, d.hidden, trace.input);
  Matrix grad_w_ho(spec.output_dim, spec.hidden_dim);
  add_outer(grad_w_ho, d.output, trace.hidden);

  result.grads.push_back(std::move(grad_w_ih.data));
  if (!state.b_h.empty()) result.grads.push_back(std::move(d.hidden));
  result.grads.push_back(std::move(grad_w_ho.data));
  if (!state.b_o.empty()) result.grads.push_back(std::move(d.output));
  return result;
}

namespace {

// p -= lr * (u_r * v_c), the exact expression sgd_step applies to a dense
// outer-product gradient. Rows with u_r = 0 have zero gradient.
void sgd_outer(Matrix& w, std::span<const double> u, std::span<const double> v, double lr) {
  double* row = w.data.data();
  for (std::size_t r = 0; r < w.rows; ++r, row += w.cols) {
    const double ur = u[r];
    if (ur == 0.0) continue;
    for (std::size_t c = 0; c < w.cols; ++c) row[c] -= lr * (ur * v[c]);
  }
}

}  // namespace

void apply_sgd(ModelState& state, const ForwardTrace& trace, const LayerDeltas& deltas,
               double learning_rate) {
  if (!all_finite(deltas.hidden)) throw std::invalid_argument("optimizer: non-finite gradient for 'w_ih'");
  if (!all_finite(deltas.output)) throw std::invalid_argument("optimizer: non-finite gradient for 'w_ho'");
  sgd_outer(state.w_ih, deltas.hidden, trace.input, learning_rate);
  for (std::size_t j = 0; j < state.b_h.size(); ++j) state.b_h[j] -= learning_rate * deltas.hidden[j];
  sgd_outer(state.w_ho, deltas.output, trace.hidden, learning_rate);
  for (std::size_t k = 0; k < state.b_o.size(); ++k) state.b_o[k] -= learning_rate * deltas.output[k];
}

Vector predict(const ModelSpec& spec, const ModelState& state, std::span<const double> input) {
  check_input(spec, input);
  // Reset trial: H(n) is the instantaneous activation.
  const Vector hidden = relu(matvec(state.w_ih, input, state.b_h));
  return apply_output(spec, matvec(state.w_ho, hidden, state.b_o));
}

OrderedPrediction predict_ordered(const ModelSpec& spec, const ModelState& state,
                                  const Dataset& dataset, std::span<const std::size_t> order,
                                  bool record_hidden) {
  ModelState scratch = state;
  scratch.clear_memory();
  MemoryGate gate(spec);
  OrderedPrediction result;
  result.outputs.reserve(order.size());
  if (record_hidden) result.hidden.reserve(order.size());
  for (auto idx : order) {
    const auto& x = dataset.samples.at(idx);
    const auto mask = gate.next(x, dataset.labels[idx]);
    auto trace = forward(spec, scratch, x, mask);
    result.outputs.push_back(std::move(trace.output));
    if (record_hidden) result.hidden.push_back(std::move(trace.hidden));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: one line per tensor, "name,v0,v1,..." with round-trip decimals.

namespace {

void write_tensor(std::ostream& out, const char* name, std::span<const double> values) {
  out << name;
  for (double v : values) out << ',' << csv::format(v);
  out << '\n';
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                      const ModelState& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "tempolearn-checkpoint,1\n";
  out << "dims," << spec.input_dim << ',' << spec.hidden_dim << ',' << spec.output_dim << '\n';
  write_tensor(out, "leak_alphas", spec.leak_alphas);
  write_tensor(out, "w_ih", state.w_ih.data);
  write_tensor(out, "b_h", state.b_h);
  write_tensor(out, "w_ho", state.w_ho.data);
  write_tensor(out, "b_o", state.b_o);
  write_tensor(out, "h_prev", state.h_prev);
  out << "trial_count," << state.trial_count << '\n';
}

ModelState read_checkpoint(const std::filesystem::path& path, const ModelSpec& spec) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::vector<std::vector<std::string>> lines;
  while (std::getline(in, line)) lines.push_back(csv::split_line(line));
  auto find = [&](const std::string& name) -> const std::vector<std::string>& {
    for (const auto& l : lines) {
      if (!l.empty() && l[0] == name) return l;
    }
    throw std::runtime_error(path.string() + ": missing '" + name + "' record");
  };
  const auto& header = find("tempolearn-checkpoint");
  if (header.size() != 2 || header[1] != "1") {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version");
  }
  const auto& dims = find("dims");
  if (dims.size() != 4 || std::stoul(dims[1]) != spec.input_dim ||
      std::stoul(dims[2]) != spec.hidden_dim || std::stoul(dims[3]) != spec.output_dim) {
    throw std::runtime_error(path.string() + ": checkpoint dims do not match the model spec");
  }
  auto values = [&](const std::string& name, std::size_t expected) {
    const auto& l = find(name);
    Vector v;
    for (std::size_t i = 1; i < l.size(); ++i) v.push_back(csv::parse_double(l[i]));
    if (v.size() != expected) {
      throw std::runtime_error(path.string() + ": '" + name + "' has " + std::to_string(v.size()) +
                               " values, expected " + std::to_string(expected));
    }
    return v;
  };
  ModelState state;
  state.w_ih = Matrix(spec.hidden_dim, spec.input_dim);
  state.w_ih.data = values("w_ih", spec.hidden_dim * spec.input_dim);
  state.w_ho = Matrix(spec.output_dim, spec.hidden_dim);
  state.w_ho.data = values("w_ho", spec.output_dim * spec.hidden_dim);
  state.b_h = values("b_h", spec.use_bias ? spec.hidden_dim : 0);
  state.b_o = values("b_o", spec.use_bias ? spec.output_dim : 0);
  state.h_prev = values("h_prev", spec.hidden_dim);
  state.trial_count = std::stoull(find("trial_count").at(1));
  return state;
}

}  // namespace tempolearn
