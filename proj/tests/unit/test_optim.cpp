#include <cmath>
#include <cstring>

#include "doctest.h"
#include "tempolearn/optim.hpp"

using namespace tempolearn;

namespace {
struct Params {
  Vector w;
  std::vector<ParamView> views() { return {{"w", w}}; }
};
}  // namespace

TEST_CASE("sgd") {
  Params p{{1.0, -2.0}};
  Optimizer opt(OptimizerConfig{OptimizerConfig::Kind::sgd, 0.01});
  sgd_step(opt, p.views(), {{0.0, 0.0}});
  CHECK(p.w == Vector{1.0, -2.0});
  sgd_step(opt, p.views(), {{2.0, 0.0}});
  CHECK(p.w[0] == doctest::Approx(0.98));

  Params a{{0.5}}, b{{0.5}};
  Optimizer oa(OptimizerConfig{OptimizerConfig::Kind::sgd, 0.1}), ob = oa;
  sgd_step(oa, a.views(), {{0.3}});
  sgd_step(oa, a.views(), {{0.3}});
  sgd_step(ob, b.views(), {{0.6}});
  CHECK(a.w[0] == doctest::Approx(b.w[0]));
}

TEST_CASE("rmsprop first step and recurrence") {
  OptimizerConfig c;
  c.kind = OptimizerConfig::Kind::rmsprop;
  c.learning_rate = 0.01;
  Optimizer opt(c);
  Params p{{1.0}};
  const double g = 0.5;
  opt.step(p.views(), {{g}});
  const double v = (1 - c.beta2) * g * g;
  const double m = (1 - c.beta1) * g / (std::sqrt(v) + c.epsilon);
  CHECK(opt.second_moment()[0][0] == doctest::Approx(v));
  CHECK(opt.momentum()[0][0] == doctest::Approx(m));
  CHECK(p.w[0] == doctest::Approx(1.0 - 0.01 * m));
}

TEST_CASE("rmsprop step approaches lr * sign(g) for constant gradients") {
  OptimizerConfig c;
  c.kind = OptimizerConfig::Kind::rmsprop;
  c.learning_rate = 0.01;
  Optimizer opt(c);
  Params p{{0.0, 0.0}};
  double before = 0.0, step = 0.0, step_neg = 0.0;
  for (int i = 0; i < 3000; ++i) {
    before = p.w[0];
    const double before_neg = p.w[1];
    opt.step(p.views(), {{3.0, -0.2}});
    step = p.w[0] - before;
    step_neg = p.w[1] - before_neg;
  }
  CHECK(step == doctest::Approx(-0.01).epsilon(1e-3));
  CHECK(step_neg == doctest::Approx(0.01).epsilon(1e-3));
}

TEST_CASE("rmsprop with zero gradients decays its accumulators") {
  OptimizerConfig c;
  c.kind = OptimizerConfig::Kind::rmsprop;
  Optimizer opt(c);
  Params p{{1.0}};
  opt.step(p.views(), {{1.0}});
  const double v0 = opt.second_moment()[0][0], m0 = opt.momentum()[0][0];
  const double w0 = p.w[0];
  opt.step(p.views(), {{0.0}});
  CHECK(opt.second_moment()[0][0] == doctest::Approx(c.beta2 * v0));
  CHECK(opt.momentum()[0][0] == doctest::Approx(c.beta1 * m0));
  Optimizer fresh(c);
  Params q{{1.0}};
  fresh.step(q.views(), {{0.0}});
  CHECK(q.w[0] == 1.0);
  (void)w0;
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig c;
  c.learning_rate = -1.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.beta2 = 1.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("gradient accumulator") {
  GradientAccumulator acc;
  acc.add({{1.0, 2.0}});
  CHECK(acc.flush() == GradientSet{{1.0, 2.0}});
  CHECK(acc.empty());
  acc.add({{1.0, -3.0}});
  acc.add({{-1.0, 3.0}});
  CHECK(acc.flush() == GradientSet{{0.0, 0.0}});
  for (int i = 0; i < 16; ++i) acc.add({{0.1}});
  CHECK(acc.flush()[0][0] == doctest::Approx(0.1));
}

// Property: the flushed mean depends only on the (key, gradient) multiset.
TEST_CASE("gradient accumulator is invariant to arrival order") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(10);
    std::vector<std::pair<std::uint64_t, GradientSet>> items;
    for (std::size_t i = 0; i < n; ++i) {
      items.push_back({i, {{rng.uniform(-1, 1), rng.uniform(-1e-8, 1e-8)}, {rng.uniform(-1e3, 1e3)}}});
    }
    GradientAccumulator a, b;
    for (const auto& [k, g] : items) a.add(g, k);
    const auto perm = seeded_permutation(rng, n);
    for (auto i : perm) b.add(items[i].second, items[i].first);
    const auto fa = a.flush(), fb = b.flush();
    CHECK(std::memcmp(fa[0].data(), fb[0].data(), 2 * sizeof(double)) == 0);
    CHECK(std::memcmp(fa[1].data(), fb[1].data(), sizeof(double)) == 0);
  }
}
