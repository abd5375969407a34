#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tempolearn/experiments.hpp"

using namespace tempolearn;

TEST_CASE("synthetic classification split") {
  const auto d = synthetic_classification(1);
  CHECK(d.train.size() == 960);
  CHECK(d.test.size() == 240);
  const auto again = synthetic_classification(1);
  CHECK(again.train.samples == d.train.samples);
  CHECK(synthetic_classification(2).train.samples != d.train.samples);
}

TEST_CASE("arms are paired by run") {
  SyntheticOptions small;
  small.items_per_category = 40;
  const auto data = synthetic_classification(1, small);
  Arm a;
  a.name = "k1";
  a.spec = ModelSpec::classifier(16, 4, 4);
  a.train_condition = SmoothnessCondition::repetition(1);
  RunSettings s;
  s.runs = 3;
  s.eval_every = 50;
  const auto r1 = run_arm(data, a, s);
  const auto r2 = run_arm(data, a, s);
  CHECK(r1.epoch_loss == r2.epoch_loss);
  CHECK(r1.epoch_loss.size() == 3);
  CHECK(r1.epoch_loss[0] != r1.epoch_loss[1]);
  // The untrained evaluation depends only on the run's init seed.
  Arm b = a;
  b.train_condition = SmoothnessCondition::shuffled();
  const auto r3 = run_arm(data, b, s);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r3.curves[i].records[0].test_loss == r1.curves[i].records[0].test_loss);
  }
}

TEST_CASE("test order cycles the training session's categories") {
  const auto data = synthetic_classification(1);
  const auto session = run_session(data.train, 1, 0);
  const auto order =
      test_order(data.test, 1, 0, SmoothnessCondition::repetition(5), session.category_order);
  for (std::size_t v = 0; v < session.category_order.size(); ++v) {
    CHECK(data.test.labels[order[v * 5]] == session.category_order[v]);
  }
}

TEST_CASE("leaky+reset with k5 beats k1 on synthetic data") {
  SyntheticOptions o;
  o.noise_halfwidth = 0.5;
  o.levels.high = 0.7;
  o.levels.low = 0.3;
  const auto data = synthetic_classification(1, o);
  auto arm = [](std::size_t k) {
    Arm a;
    a.name = "k" + std::to_string(k);
    a.spec = ModelSpec::classifier(16, 8, 4, 0.5, Gating::label_reset);
    a.spec.leak_gradient = LeakGradient::instantaneous;
    a.train_condition = a.test_condition = SmoothnessCondition::repetition(k);
    a.eval_mode = EvalMode::ordered;
    a.optimizer.learning_rate = 0.2;
    return a;
  };
  RunSettings s;
  s.runs = 5;
  const double k1 = mean(run_arm(data, arm(1), s).epoch_loss);
  const double k5 = mean(run_arm(data, arm(5), s).epoch_loss);
  CHECK(k5 < k1);
}

TEST_CASE("autoencoder runs share streams across variants") {
  MultiscaleSetup setup;
  setup.train_length = 300;
  setup.test_length = 200;
  setup.eval_every = 100;
  const auto a = run_autoencoder(AeVariant::no_memory, setup, 1, 0);
  const auto b = run_autoencoder(AeVariant::multiscale_reset, setup, 1, 0);
  CHECK(a.per_feature.size() == 3);
  CHECK(a.curve.records.size() == b.curve.records.size());
  CHECK(std::isfinite(b.trained_loss));
  const auto spec = ae_spec(AeVariant::multiscale_reset, setup);
  CHECK(spec.gating == Gating::input_reset);
  CHECK(spec.leak_alphas == std::vector<double>{0.0, 0.3, 0.6});
}

TEST_CASE("hidden_selectivity treats dead units as r^2 = 0") {
  Rng rng(3);
  const auto stream = gen_multiscale(rng, 200, {1, 3, 5});
  std::vector<Vector> hidden;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    hidden.push_back({stream.samples[t][0], 0.0, stream.samples[t][5]});
  }
  std::size_t dead = 0;
  const auto r = hidden_selectivity(hidden, stream.samples, &dead);
  CHECK(dead == 1);
  CHECK(r.r_squared[1][0] == 0.0);
  CHECK(r.selectivity[0] > 0.0);
  CHECK(r.selectivity[2] > 0.0);
}

TEST_CASE("presets") {
  const auto presets = list_presets();
  CHECK(presets.size() == 15);
  PresetOptions o;
  o.out_dir = std::filesystem::temp_directory_path() / "tempolearn_presets";
  CHECK_THROWS_AS(run_preset("fig9", o), std::invalid_argument);
  o.runs = 3;
  const auto a7 = run_preset("a7", o);
  CHECK(a7.checks.size() == 4);
  CHECK(std::filesystem::exists(o.out_dir / "a7" / "summary.csv"));
  std::ifstream in(o.out_dir / "a7" / "summary.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "dataset,model,condition,metric,runs,mean,std,boot_mean,boot_std");
}

TEST_CASE("bootstrap helper uses the standard resample count") {
  const auto b = bootstrap(std::vector<double>{1, 2, 3, 4}, 1);
  CHECK(b.num_bootstraps == kBootstrapResamples);
  CHECK(b.values_per_bootstrap == 4);
  CHECK(parse_scale("desk") == Scale::desk);
  CHECK_THROWS(parse_scale("huge"));
}
