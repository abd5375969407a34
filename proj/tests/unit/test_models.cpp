#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gradient_oracle.hpp"
#include "tempolearn/models.hpp"

using namespace tempolearn;

namespace {
ModelSpec tiny(double alpha, Gating gating = Gating::none) {
  return ModelSpec::classifier(3, 2, 2, alpha, gating);
}

/// Plain feedforward reference: relu(W_ih x + b_h) then softmax(W_ho h + b_o).
Vector reference_forward(const ModelState& s, const Vector& x) {
  const auto h = relu(matvec(s.w_ih, x, s.b_h));
  return softmax(matvec(s.w_ho, h, s.b_o));
}
}  // namespace

TEST_CASE("alpha = 0 reduces to a feedforward network bitwise") {
  Rng rng(1);
  const ModelSpec spec = tiny(0.0);
  ModelState state = init_state(spec, rng);
  for (auto& v : state.b_h) v = 0.1;
  const Vector x{0.2, 0.9, 0.4};
  state.h_prev = {3.0, 4.0};
  const auto t = forward(spec, state, x, false);
  CHECK(t.hidden == relu(matvec(state.w_ih, x, state.b_h)));
  CHECK(t.output == reference_forward(state, x));
}

TEST_CASE("leaky mixture arithmetic") {
  ModelSpec spec = tiny(0.5);
  ModelState state;
  state.w_ih = Matrix(2, 3);
  state.w_ih(1, 0) = 2.0;  // relu(W x) = [0, 2] for x = e0
  state.w_ho = Matrix(2, 2);
  state.b_h = Vector(2, 0.0);
  state.b_o = Vector(2, 0.0);
  state.h_prev = {1.0, 0.0};
  state.trial_count = 1;
  const auto t = forward(spec, state, Vector{1, 0, 0}, false);
  CHECK(t.hidden == Vector{0.5, 1.0});
  CHECK(state.h_prev == Vector{0.5, 1.0});

  ModelState fresh = state;
  fresh.h_prev = {7.0, -3.0};
  const auto reset = forward(spec, fresh, Vector{1, 0, 0}, true);
  CHECK(reset.hidden == Vector{0.0, 2.0});
}

TEST_CASE("label_gate and input gate") {
  CHECK_FALSE(label_gate(3, 3));
  CHECK(label_gate(3, 7));
  CHECK(label_gate(std::nullopt, 7));
  const std::vector<std::size_t> idx{0, 1};
  CHECK(input_change_exceeds(Vector{0.2, 0.2}, Vector{0.8, 0.8}, idx));
  CHECK_FALSE(input_change_exceeds(Vector{0.8, 0.8}, Vector{0.8, 0.8}, idx));
  CHECK_FALSE(input_change_exceeds(Vector{0.2, 0.2}, Vector{0.8, 0.8}, {}));
  const auto mask = input_gate(Vector{0.2, 0.2, 0.5}, Vector{0.8, 0.8, 0.5}, {{0, 1}, {2}});
  CHECK(mask == ResetMask{1, 0});
}

TEST_CASE("input gate tracks slow latent switches") {
  Rng rng(3);
  const auto stream = gen_multiscale(rng, 3000, {1, 3, 5}, 0.05);
  const auto map = MultiScaleStream::subcomponent_map();
  std::size_t switches = 0, caught = 0, resets = 0;
  for (std::size_t t = 1; t < stream.size(); ++t) {
    const bool reset = input_change_exceeds(stream.samples[t - 1], stream.samples[t], map[2]);
    const bool change = stream.latent_states[2][t] != stream.latent_states[2][t - 1];
    switches += change;
    resets += reset;
    caught += change && reset;
  }
  REQUIRE(switches > 0);
  CHECK(double(caught) / switches >= 0.95);
  CHECK(double(caught) / resets >= 0.95);
}

TEST_CASE("MemoryGate resets on the first trial and after restart") {
  ModelSpec spec = tiny(0.5, Gating::label_reset);
  MemoryGate gate(spec);
  const Vector x{0, 0, 0};
  CHECK(gate.next(x, 1) == ResetMask{1, 1});
  CHECK(gate.next(x, 1) == ResetMask{0, 0});
  CHECK(gate.next(x, 0) == ResetMask{1, 1});
  gate.restart();
  CHECK(gate.next(x, 0) == ResetMask{1, 1});

  ModelSpec periodic = tiny(0.5, Gating::periodic_reset);
  periodic.reset_period = 3;
  MemoryGate p(periodic);
  std::vector<int> flags;
  for (int i = 0; i < 7; ++i) flags.push_back(p.next(x, 0)[0]);
  CHECK(flags == std::vector<int>{1, 0, 0, 1, 0, 0, 1});
}

TEST_CASE("ModelSpec validation names the field") {
  ModelSpec spec = tiny(0.5);
  spec.leak_alphas.pop_back();
  try {
    spec.validate();
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).rfind("leak_alphas", 0) == 0);
  }
  ModelSpec bad = tiny(1.0);
  CHECK_THROWS(bad.validate());
  ModelSpec ce_sigmoid = ModelSpec::classifier(3, 2, 2, 0.0, Gating::none, LossKind::ce);
  ce_sigmoid.output_activation = OutputActivation::sigmoid;
  CHECK_THROWS(ce_sigmoid.validate());
}

TEST_CASE("leak-unaware gradients match finite differences") {
  Rng rng(11);
  for (bool leaky : {false, true}) {
    oracle::Report report;
    for (int i = 0; i < 40; ++i) report.merge(oracle::check_network(oracle::random_network(rng, leaky)));
    INFO("worst " << report.worst << " at " << report.where);
    CHECK(report.ok());
  }
}

TEST_CASE("MSE through softmax uses the full Jacobian") {
  const Vector y = softmax(Vector{0.3, -0.2, 0.8});
  const Vector t{0, 1, 0};
  const auto d = output_layer_delta(LossKind::mse, OutputActivation::softmax, y, t);
  for (std::size_t i = 0; i < 3; ++i) {
    auto f = [&](double z) {
      Vector pre{0.3, -0.2, 0.8};
      pre[i] = z;
      return mse_loss(softmax(pre), t).value;
    };
    const double pre[] = {0.3, -0.2, 0.8};
    CHECK(d.gradient[i] == doctest::Approx(oracle::central_difference(f, pre[i])).epsilon(1e-8));
  }
  const auto ce = output_layer_delta(LossKind::ce, OutputActivation::softmax, y, t);
  for (std::size_t i = 0; i < 3; ++i) CHECK(ce.gradient[i] == doctest::Approx(y[i] - t[i]));
  CHECK_THROWS(output_layer_delta(LossKind::ce, OutputActivation::sigmoid, y, t));
}

TEST_CASE("instantaneous leak gradient drops the (1 - a) factor") {
  Rng rng(5);
  ModelSpec spec = tiny(0.6);
  ModelState state = init_state(spec, rng);
  for (auto& v : state.b_h) v = 0.5;
  state.trial_count = 1;
  state.h_prev = {0.3, 0.1};
  ModelState a = state;
  const auto ta = forward(spec, a, Vector{0.5, 0.5, 0.5}, false);
  const auto mix = leak_unaware_deltas(spec, a, ta, Vector{1, 0});
  spec.leak_gradient = LeakGradient::instantaneous;
  const auto inst = leak_unaware_deltas(spec, a, ta, Vector{1, 0});
  for (std::size_t j = 0; j < 2; ++j) CHECK(mix.hidden[j] == doctest::Approx(0.4 * inst.hidden[j]));
  CHECK(mix.output == inst.output);
}

TEST_CASE("stale traces are rejected") {
  Rng rng(6);
  const ModelSpec spec = tiny(0.5);
  ModelState state = init_state(spec, rng);
  const auto first = forward(spec, state, Vector{1, 0, 0}, true);
  forward(spec, state, Vector{0, 1, 0}, false);
  CHECK_THROWS_AS(backward_leak_unaware(spec, state, first, Vector{1, 0}), StaleTraceError);
}

TEST_CASE("apply_sgd matches sgd_step on dense gradients bitwise") {
  Rng rng(7);
  const ModelSpec spec = tiny(0.5);
  ModelState a = init_state(spec, rng);
  a.trial_count = 1;
  a.h_prev = {0.2, 0.4};
  ModelState b = a;
  const Vector x{0.1, 0.7, 0.3}, t{0, 1};
  const auto ta = forward(spec, a, x, false);
  const auto tb = forward(spec, b, x, false);
  apply_sgd(a, ta, leak_unaware_deltas(spec, a, ta, t), 0.1);
  const auto g = backward_leak_unaware(spec, b, tb, t);
  Optimizer opt(OptimizerConfig{OptimizerConfig::Kind::sgd, 0.1});
  sgd_step(opt, b.parameters(), g.grads);
  CHECK(a.w_ih == b.w_ih);
  CHECK(a.w_ho == b.w_ho);
  CHECK(a.b_h == b.b_h);
  CHECK(a.b_o == b.b_o);
}

TEST_CASE("predict is stateless; ordered prediction with per-sample resets equals it") {
  Rng rng(8);
  const ModelSpec spec = tiny(0.5, Gating::label_reset);
  ModelState state = init_state(spec, rng);
  Rng data(9);
  const Dataset d = gen_low_overlap(data, 2, 5, 3 * 2, 0.1);
  ModelSpec six = ModelSpec::classifier(6, 4, 2, 0.5, Gating::label_reset);
  ModelState s6 = init_state(six, rng);
  const auto p1 = predict(six, s6, d.samples[0]);
  CHECK(predict(six, s6, d.samples[0]) == p1);
  // Alternate categories so the label gate fires at every position.
  const std::vector<std::size_t> order{0, 5, 1, 6, 2, 7, 3, 8, 4, 9};
  const auto ordered = predict_ordered(six, s6, d, order);
  for (std::size_t i = 0; i < order.size(); ++i) {
    CHECK(ordered.outputs[i] == predict(six, s6, d.samples[order[i]]));
  }
  ModelSpec ff = ModelSpec::classifier(6, 4, 2);
  ModelState sf = init_state(ff, rng);
  const std::vector<std::size_t> same{0, 1, 2, 3};
  const auto o = predict_ordered(ff, sf, d, same);
  for (std::size_t i = 0; i < same.size(); ++i) CHECK(o.outputs[i] == predict(ff, sf, d.samples[i]));
  (void)state;
}

TEST_CASE("checkpoint round trip") {
  Rng rng(10);
  const ModelSpec spec = tiny(0.5);
  ModelState state = init_state(spec, rng);
  state.h_prev = {0.25, 1.0 / 3.0};
  state.trial_count = 17;
  const auto path = std::filesystem::temp_directory_path() / "tempolearn_ckpt.csv";
  write_checkpoint(path, spec, state);
  const ModelState back = read_checkpoint(path, spec);
  CHECK(back.w_ih == state.w_ih);
  CHECK(back.w_ho == state.w_ho);
  CHECK(back.b_h == state.b_h);
  CHECK(back.h_prev == state.h_prev);
  CHECK(back.trial_count == 17);
  CHECK_THROWS(read_checkpoint(path, ModelSpec::classifier(3, 4, 2)));
}
