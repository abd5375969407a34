#include "tempolearn/experiments.hpp"

#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace tempolearn {

std::string to_string(Scale s) { return s == Scale::desk ? "desk" : "full"; }

Scale parse_scale(const std::string& text) {
  if (text == "desk") return Scale::desk;
  if (text == "full") return Scale::full;
  throw std::invalid_argument("scale: expected 'desk' or 'full', got '" + text + "'");
}

ClassificationData synthetic_classification(std::uint64_t seed, const SyntheticOptions& options) {
  Rng data_rng(derive_seed(seed, seed_tag::data));
  const Dataset all = gen_low_overlap(data_rng, options.num_categories, options.items_per_category,
                                      options.dim, options.noise_halfwidth, options.levels);
  Rng split_rng(derive_seed(seed, seed_tag::split));
  auto [train, test] = stratified_split(all, split_rng, options.test_fraction);
  return {std::move(train), std::move(test)};
}

ClassificationData non_overlapping_classification(std::uint64_t seed,
                                                  const NonOverlappingSetup& options) {
  Rng data_rng(derive_seed(seed, seed_tag::data));
  const Dataset all = gen_non_overlapping_stream(data_rng, options.num_categories,
                                                 options.items_per_category, options.dim,
                                                 options.values);
  Rng split_rng(derive_seed(seed, seed_tag::split));
  auto [train, test] = stratified_split(all, split_rng, options.test_fraction);
  return {std::move(train), std::move(test)};
}

std::filesystem::path default_mnist_dir() {
  if (const char* env = std::getenv("TEMPOLEARN_MNIST_DIR"); env && *env) return env;
  return std::filesystem::path(TEMPOLEARN_DATA_DIR) / "mnist-subset";
}

namespace {

std::filesystem::path find_idx(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* suffix : {"", ".gz"}) {
    auto p = dir / (stem + suffix);
    if (std::filesystem::exists(p)) return p;
  }
  throw DatasetError(DatasetError::Kind::io, "no " + stem + "[.gz] in " + dir.string());
}

}  // namespace

MnistOptions MnistOptions::desk() {
  MnistOptions o;
  o.train_per_category = 1000;
  o.test_per_category = 200;
  return o;
}

ClassificationData mnist_classification(std::uint64_t seed, const MnistOptions& options) {
  const auto dir = options.dir.empty() ? default_mnist_dir() : options.dir;
  Dataset train = load_idx(find_idx(dir, "train-images-idx3-ubyte"),
                           find_idx(dir, "train-labels-idx1-ubyte"));
  Dataset test = load_idx(find_idx(dir, "t10k-images-idx3-ubyte"),
                          find_idx(dir, "t10k-labels-idx1-ubyte"));
  train.name = "mnist-train";
  test.name = "mnist-test";
  const std::size_t categories = std::max(train.num_categories, test.num_categories);
  if (options.train_per_category) {
    Rng rng(derive_seed(seed, seed_tag::data));
    train = balanced_subset(train, rng, options.train_per_category);
  }
  if (options.test_per_category) {
    Rng rng(derive_seed(seed, seed_tag::split));
    test = balanced_subset(test, rng, options.test_per_category);
  }
  train.num_categories = test.num_categories = categories;
  return {std::move(train), std::move(test)};
}

SamplingSession run_session(const Dataset& train, std::uint64_t master_seed, std::size_t run) {
  return make_session(train, derive_seed(master_seed, seed_tag::session + run));
}

std::vector<std::size_t> test_order(const Dataset& test, std::uint64_t master_seed,
                                    std::size_t run, const SmoothnessCondition& condition,
                                    const std::vector<Label>& category_order) {
  auto session = make_session(test, derive_seed(master_seed, seed_tag::test_session + run));
  session.category_order = category_order;
  return make_schedule(test, session, condition).order;
}

ArmResult run_arm(const ClassificationData& data, const Arm& arm, const RunSettings& settings) {
  ArmResult result;
  result.name = arm.name;
  for (std::size_t run = settings.first_run; run < settings.first_run + settings.runs; ++run) {
    const auto session = run_session(data.train, settings.master_seed, run);
    const auto schedule = make_schedule(data.train, session, arm.train_condition);
    TrainConfig config;
    config.epochs = settings.epochs;
    config.eval_every = settings.eval_every;
    config.batch_size = arm.batch_size;
    config.run = run;
    config.condition = arm.name;
    config.eval.mode = arm.eval_mode;
    if (arm.eval_mode == EvalMode::ordered) {
      config.eval.order = test_order(data.test, settings.master_seed, run, arm.test_condition,
                                     session.category_order);
    }
    Rng init_rng(derive_seed(settings.master_seed, seed_tag::init + run));
    Optimizer optimizer(arm.optimizer);
    TrainCurve curve;
    if (arm.kind == Arm::Kind::lstm) {
      auto state = init_lstm_state(arm.lstm, init_rng);
      curve = train_lstm(arm.lstm, state, data.train, schedule, optimizer, config, data.test);
    } else {
      auto state = init_state(arm.spec, init_rng);
      curve = arm.batch_size == 1
                  ? train_incremental(arm.spec, state, data.train, schedule, optimizer, config,
                                      data.test)
                        .curve
                  : train_minibatch(arm.spec, state, data.train, schedule, optimizer, config,
                                    data.test)
                        .curve;
    }
    const auto& end = curve.at_samples(data.train.size());
    result.epoch_loss.push_back(end.test_loss);
    result.epoch_acc.push_back(end.test_acc);
    result.curves.push_back(std::move(curve));
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string to_string(AeVariant v) {
  switch (v) {
    case AeVariant::no_memory: return "no_memory";
    case AeVariant::leaky: return "leaky";
    case AeVariant::leaky_reset: return "leaky_reset";
    case AeVariant::multiscale: return "multiscale";
    case AeVariant::multiscale_reset: return "multiscale_reset";
  }
  return "?";
}

std::vector<AeVariant> all_ae_variants() {
  return {AeVariant::no_memory, AeVariant::leaky, AeVariant::leaky_reset, AeVariant::multiscale,
          AeVariant::multiscale_reset};
}

ModelSpec ae_spec(AeVariant variant, const MultiscaleSetup& setup) {
  const std::size_t dim = kTimescales * kElementsPerTimescale;
  std::vector<double> alphas(kTimescales, 0.0);
  bool reset = false;
  switch (variant) {
    case AeVariant::no_memory: break;
    case AeVariant::leaky_reset: reset = true; [[fallthrough]];
    case AeVariant::leaky: alphas.assign(kTimescales, setup.uniform_alpha); break;
    case AeVariant::multiscale_reset: reset = true; [[fallthrough]];
    case AeVariant::multiscale:
      alphas.assign(setup.multiscale_alphas.begin(), setup.multiscale_alphas.end());
      break;
  }
  auto spec = ModelSpec::autoencoder(dim, kTimescales, alphas,
                                     reset ? Gating::input_reset : Gating::none);
  if (reset) spec.gate_inputs = MultiScaleStream::subcomponent_map();
  spec.leak_gradient = setup.leak_gradient;
  return spec;
}

SelectivityReport hidden_selectivity(const std::vector<Vector>& hidden,
                                     const std::vector<Vector>& samples,
                                     std::size_t* dead_units) {
  if (hidden.size() != samples.size() || hidden.empty()) {
    throw std::invalid_argument("hidden_selectivity: series length mismatch");
  }
  const auto map = MultiScaleStream::subcomponent_map();
  auto column = [](const std::vector<Vector>& rows, std::size_t c) {
    Vector out(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) out[t] = rows[t].at(c);
    return out;
  };
  SelectivityReport report;
  std::size_t dead = 0;
  for (std::size_t role = 0; role < kTimescales; ++role) {
    const Vector h = column(hidden, role);
    bool live = true;
    for (std::size_t ts = 0; ts < kTimescales && live; ++ts) {
      double sum = 0.0;
      for (auto element : map[ts]) {
        try {
          const double r = pearson_r(h, column(samples, element));
          sum += r * r;
        } catch (const UndefinedCorrelation&) {
          live = false;
          break;
        }
      }
      report.r_squared[role][ts] = sum / static_cast<double>(map[ts].size());
    }
    if (!live) {
      ++dead;
      report.r_squared[role].fill(0.0);
    }
    double others = 0.0;
    for (std::size_t ts = 0; ts < kTimescales; ++ts) {
      if (ts != role) others += report.r_squared[role][ts];
    }
    report.selectivity[role] =
        report.r_squared[role][role] - others / static_cast<double>(kTimescales - 1);
  }
  if (dead_units) *dead_units = dead;
  return report;
}

AeRun run_autoencoder(AeVariant variant, const MultiscaleSetup& setup, std::uint64_t master_seed,
                      std::size_t run) {
  const std::uint64_t run_seed = derive_seed(master_seed, seed_tag::stream + run);
  Rng train_rng(derive_seed(run_seed, 1));
  Rng test_rng(derive_seed(run_seed, 2));
  const auto train_stream = gen_multiscale(train_rng, setup.train_length, setup.periods,
                                           setup.noise_halfwidth, setup.low, setup.high);
  const auto test_stream = gen_multiscale(test_rng, setup.test_length, setup.periods,
                                          setup.noise_halfwidth, setup.low, setup.high);
  const Dataset train = as_dataset(train_stream, "multiscale-train");
  const Dataset test = as_dataset(test_stream, "multiscale-test");
  std::vector<std::size_t> identity(train.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  const auto schedule = schedule_from_order(train, identity);

  const ModelSpec spec = ae_spec(variant, setup);
  Rng init_rng(derive_seed(master_seed, seed_tag::init + run));
  ModelState state = init_state(spec, init_rng);
  OptimizerConfig opt_config;
  opt_config.kind = setup.optimizer;
  opt_config.learning_rate = setup.learning_rate;
  Optimizer optimizer(opt_config);

  TrainConfig config;
  config.epochs = setup.epochs;
  config.eval_every = setup.eval_every;
  config.eval.mode = EvalMode::ordered;
  config.eval.partition = MultiScaleStream::subcomponent_map();
  config.run = run;
  config.condition = to_string(variant);

  AeRun out;
  out.variant = variant;
  out.run = run;
  out.curve = train_incremental(spec, state, train, schedule, optimizer, config, test).curve;
  out.untrained_loss = out.curve.records.front().test_loss;

  EvalOptions final_eval = config.eval;
  final_eval.record_hidden = true;
  const auto eval = evaluate(spec, state, test, final_eval);
  out.trained_loss = eval.loss;
  out.per_feature = eval.per_feature;
  out.selectivity = hidden_selectivity(eval.hidden, test.samples, &out.dead_units);
  return out;
}

BootstrapSummary bootstrap(std::span<const double> values, std::uint64_t seed) {
  Rng rng(derive_seed(seed, seed_tag::bootstrap));
  return bootstrap_mean_std(values, kBootstrapResamples, values.size(), rng);
}

}  // namespace tempolearn
