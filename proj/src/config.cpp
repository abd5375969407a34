#include "tempolearn/config.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "toml.hpp"

namespace tempolearn {

std::string to_string(DatasetConfig::Kind k) {
  switch (k) {
    case DatasetConfig::Kind::synthetic: return "synthetic";
    case DatasetConfig::Kind::non_overlapping: return "non_overlapping";
    case DatasetConfig::Kind::mnist: return "mnist";
    case DatasetConfig::Kind::multiscale: return "multiscale";
  }
  return "?";
}

namespace {

/// Typed access to one TOML table; every key read is remembered so leftovers
/// can be reported as unknown.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool has(const std::string& key) const { return table_ && table_->contains(key); }
  std::string path(const std::string& key) const { return name_ + "." + key; }

  const toml::node* node(const std::string& key) {
    seen_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min = 0) {
    const auto* n = node(key);
    if (!n) return fallback;
    const auto v = n->value<std::int64_t>();
    if (!v || !n->is_integer()) throw ConfigError(path(key), "expected an integer");
    if (*v < static_cast<std::int64_t>(min)) {
      throw ConfigError(path(key), "must be >= " + std::to_string(min));
    }
    return static_cast<std::size_t>(*v);
  }

  double real(const std::string& key, double fallback) {
    const auto* n = node(key);
    if (!n) return fallback;
    if (!n->is_number()) throw ConfigError(path(key), "expected a number");
    return *n->value<double>();
  }

  bool flag(const std::string& key, bool fallback) {
    const auto* n = node(key);
    if (!n) return fallback;
    if (!n->is_boolean()) throw ConfigError(path(key), "expected true or false");
    return *n->value<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const auto* n = node(key);
    if (!n) return fallback;
    if (!n->is_string()) throw ConfigError(path(key), "expected a string");
    return *n->value<std::string>();
  }

  template <typename E>
  E choice(const std::string& key, E fallback,
           std::initializer_list<std::pair<const char*, E>> options) {
    if (!has(key)) {
      node(key);
      return fallback;
    }
    const auto value = text(key, "");
    std::string allowed;
    for (const auto& [name, e] : options) {
      if (value == name) return e;
      allowed += (allowed.empty() ? "" : " | ") + std::string(name);
    }
    throw ConfigError(path(key), "unknown value '" + value + "' (expected " + allowed + ")");
  }

  std::vector<double> reals(const std::string& key) {
    const auto* n = node(key);
    if (!n) return {};
    const auto* arr = n->as_array();
    if (!arr) throw ConfigError(path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& e = (*arr)[i];
      if (!e.is_number()) {
        throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "expected a number");
      }
      out.push_back(*e.value<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key, const toml::array& arr,
                                  const std::string& at) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& e = arr[i];
      const auto v = e.value<std::int64_t>();
      if (!e.is_integer() || *v < 0) {
        throw ConfigError(path(key) + at + "[" + std::to_string(i) + "]",
                          "expected a non-negative integer");
      }
      out.push_back(static_cast<std::size_t>(*v));
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key) {
    const auto* n = node(key);
    if (!n) return {};
    const auto* arr = n->as_array();
    if (!arr) throw ConfigError(path(key), "expected an array of integers");
    return counts(key, *arr, "");
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [key, value] : *table_) {
      if (!seen_.count(std::string(key.str()))) {
        throw ConfigError(path(std::string(key.str())), "unknown key");
      }
    }
  }

 private:
  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

SmoothnessCondition condition_at(Section& s, const std::string& key, const std::string& value) {
  try {
    return SmoothnessCondition::parse(value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.path(key), e.what());
  }
}

DatasetConfig parse_dataset(Section s) {
  DatasetConfig d;
  using K = DatasetConfig::Kind;
  d.kind = s.choice<K>("kind", K::synthetic,
                       {{"synthetic", K::synthetic},
                        {"non_overlapping", K::non_overlapping},
                        {"mnist", K::mnist},
                        {"multiscale", K::multiscale}});
  d.categories = s.count("categories", d.categories, 1);
  d.items_per_category = s.count("items_per_category", d.items_per_category, 1);
  d.dim = s.count("dim", d.dim, 1);
  d.noise = s.real("noise", d.noise);
  d.high = s.real("high", d.high);
  d.low = s.real("low", d.low);
  d.active = s.real("active", d.active);
  d.antiphase = s.flag("antiphase", d.antiphase);
  d.test_fraction = s.real("test_fraction", d.test_fraction);
  d.mnist_dir = s.text("mnist_dir", "");
  d.train_per_category = s.count("train_per_category", 0);
  d.test_per_category = s.count("test_per_category", 0);
  if (s.has("periods")) {
    const auto p = s.counts("periods");
    if (p.size() != kTimescales) {
      throw ConfigError(s.path("periods"), "expected " + std::to_string(kTimescales) + " values");
    }
    for (std::size_t i = 0; i < kTimescales; ++i) {
      if (p[i] == 0) throw ConfigError(s.path("periods"), "every period must be >= 1");
      d.periods[i] = p[i];
    }
  } else {
    s.node("periods");
  }
  d.length = s.count("length", d.length, 1);
  d.test_length = s.count("test_length", d.test_length, 1);
  s.finish();
  if (d.noise < 0.0) throw ConfigError(s.path("noise"), "must be >= 0");
  if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0)) {
    throw ConfigError(s.path("test_fraction"), "must lie in (0, 1)");
  }
  if ((d.kind == K::synthetic || d.kind == K::non_overlapping) && d.dim % d.categories != 0) {
    throw ConfigError(s.path("dim"), "must be a multiple of categories");
  }
  return d;
}

/// Dimensions the data imposes on the model: input, categories.
std::pair<std::size_t, std::size_t> data_dims(const DatasetConfig& d) {
  switch (d.kind) {
    case DatasetConfig::Kind::mnist: return {784, 10};
    case DatasetConfig::Kind::multiscale: return {kTimescales * kElementsPerTimescale, 1};
    default: return {d.dim, d.categories};
  }
}

void parse_model(Section s, const DatasetConfig& data, Arm& arm) {
  const auto [input, categories] = data_dims(data);
  const bool lstm =
      s.choice<bool>("type", false, {{"network", false}, {"lstm", true}});
  arm.kind = lstm ? Arm::Kind::lstm : Arm::Kind::network;
  const Task task = s.choice<Task>(
      "task", data.kind == DatasetConfig::Kind::multiscale ? Task::autoencoder : Task::classifier,
      {{"classifier", Task::classifier}, {"autoencoder", Task::autoencoder}});
  if (task == Task::classifier && data.kind == DatasetConfig::Kind::multiscale) {
    throw ConfigError(s.path("task"), "multiscale data has no labels; use autoencoder");
  }
  const std::size_t output = task == Task::autoencoder ? input : categories;
  std::size_t hidden = 8;
  if (s.has("layer_dims")) {
    const auto dims = s.counts("layer_dims");
    if (dims.size() != 3) throw ConfigError(s.path("layer_dims"), "expected [input, hidden, output]");
    if (dims[0] != input) {
      throw ConfigError(s.path("layer_dims") + "[0]",
                        "input dim " + std::to_string(dims[0]) + " does not match the dataset (" +
                            std::to_string(input) + ")");
    }
    if (dims[2] != output) {
      throw ConfigError(s.path("layer_dims") + "[2]",
                        "output dim " + std::to_string(dims[2]) + " must be " +
                            std::to_string(output));
    }
    hidden = dims[1];
  } else {
    s.node("layer_dims");
  }
  hidden = s.count("hidden", hidden, 1);

  ModelSpec& spec = arm.spec;
  spec.input_dim = input;
  spec.hidden_dim = hidden;
  spec.output_dim = output;
  spec.task = task;
  spec.output_activation = s.choice<OutputActivation>(
      "output_activation",
      task == Task::autoencoder ? OutputActivation::sigmoid : OutputActivation::softmax,
      {{"softmax", OutputActivation::softmax}, {"sigmoid", OutputActivation::sigmoid}});
  spec.loss = s.choice<LossKind>("loss", LossKind::mse,
                                 {{"mse", LossKind::mse}, {"ce", LossKind::ce}});
  if (s.has("hidden_activation") && s.text("hidden_activation", "") != "relu") {
    throw ConfigError(s.path("hidden_activation"), "only relu is supported");
  }
  s.node("hidden_activation");
  const bool has_list = s.has("leak_alphas");
  const bool has_alpha = s.has("alpha");
  if (has_list && has_alpha) {
    throw ConfigError(s.path("alpha"), "give either alpha or leak_alphas, not both");
  }
  spec.leak_alphas = has_list ? s.reals("leak_alphas")
                              : std::vector<double>(hidden, s.real("alpha", 0.0));
  s.node("alpha");
  spec.gating = s.choice<Gating>("gating", Gating::none,
                                 {{"none", Gating::none},
                                  {"label_reset", Gating::label_reset},
                                  {"input_reset", Gating::input_reset},
                                  {"periodic_reset", Gating::periodic_reset}});
  spec.reset_period = s.count("reset_period", 0);
  spec.use_bias = s.flag("bias", true);
  spec.leak_gradient = s.choice<LeakGradient>(
      "leak_gradient", LeakGradient::mixture,
      {{"mixture", LeakGradient::mixture}, {"instantaneous", LeakGradient::instantaneous}});
  if (const auto* n = s.node("gate_inputs")) {
    const auto* arr = n->as_array();
    if (!arr) throw ConfigError(s.path("gate_inputs"), "expected an array of index arrays");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto* inner = (*arr)[i].as_array();
      if (!inner) {
        throw ConfigError(s.path("gate_inputs") + "[" + std::to_string(i) + "]",
                          "expected an array of input indices");
      }
      spec.gate_inputs.push_back(s.counts("gate_inputs", *inner, "[" + std::to_string(i) + "]"));
    }
  } else if (spec.gating == Gating::input_reset &&
             data.kind == DatasetConfig::Kind::multiscale && hidden == kTimescales) {
    spec.gate_inputs = MultiScaleStream::subcomponent_map();
  }
  const std::size_t window = s.count("window_length", 10, 1);
  s.finish();

  if (lstm) {
    if (task != Task::classifier) throw ConfigError(s.path("task"), "lstm supports classifier only");
    arm.lstm = LstmSpec{input, hidden, output, window, spec.loss};
    return;
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    const std::string field = colon == std::string::npos ? "" : what.substr(0, colon);
    throw ConfigError(field.empty() ? s.path("") : s.path(field),
                      colon == std::string::npos ? what : what.substr(colon + 2));
  }
}

void parse_schedule(Section s, const DatasetConfig& data, RunConfig& config) {
  const std::string fallback = data.kind == DatasetConfig::Kind::multiscale ? "stream" : "random";
  const std::string cond = s.text("condition", fallback);
  config.stream = cond == "stream";
  if (!config.stream) config.arm.train_condition = condition_at(s, "condition", cond);
  if (config.stream && data.kind != DatasetConfig::Kind::multiscale) {
    throw ConfigError(s.path("condition"), "stream order is only defined for multiscale data");
  }
  if (!config.stream && data.kind == DatasetConfig::Kind::multiscale) {
    throw ConfigError(s.path("condition"), "multiscale data is trained in stream order");
  }
  const std::string test = s.text("test_condition", config.stream ? "stream" : cond);
  if (!config.stream) config.arm.test_condition = condition_at(s, "test_condition", test);
  s.finish();
}

void parse_optimizer(Section s, OptimizerConfig& opt) {
  opt.kind = s.choice<OptimizerConfig::Kind>(
      "kind", OptimizerConfig::Kind::sgd,
      {{"sgd", OptimizerConfig::Kind::sgd}, {"rmsprop", OptimizerConfig::Kind::rmsprop}});
  opt.learning_rate = s.real("learning_rate", opt.learning_rate);
  opt.beta1 = s.real("beta1", opt.beta1);
  opt.beta2 = s.real("beta2", opt.beta2);
  opt.epsilon = s.real("epsilon", opt.epsilon);
  s.finish();
  try {
    opt.validate();
  } catch (const std::invalid_argument& e) {
    // "optimizer: <key> must be ..."
    std::string what = e.what();
    what = what.substr(what.find(':') + 2);
    const std::string key = what.substr(0, what.find(' '));
    throw ConfigError(s.path(key), what.substr(key.size() + 1));
  }
}

void parse_training(Section s, RunConfig& config) {
  auto& t = config.training;
  t.epochs = s.count("epochs", t.epochs);
  t.eval_every = s.count("eval_every", t.eval_every, 1);
  t.runs = s.count("runs", t.runs, 1);
  t.master_seed = s.count("seed", t.master_seed);
  config.arm.batch_size = s.count("batch_size", 1, 1);
  const bool memory = config.arm.kind == Arm::Kind::lstm || config.arm.spec.has_memory();
  config.arm.eval_mode = s.choice<EvalMode>(
      "eval_mode", memory || config.stream ? EvalMode::ordered : EvalMode::stateless,
      {{"stateless", EvalMode::stateless}, {"ordered", EvalMode::ordered}});
  s.finish();
  if (config.arm.batch_size > 1 && config.arm.kind == Arm::Kind::lstm) {
    throw ConfigError(s.path("batch_size"), "lstm trains on windows; batch_size must be 1");
  }
  if (config.arm.batch_size > 1 && config.arm.spec.has_memory()) {
    throw ConfigError(s.path("batch_size"), "mini-batches require a model without leaky units");
  }
}

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError("", msg.str());
  }
  static const std::set<std::string> sections{"dataset", "model", "schedule", "optimizer",
                                              "training"};
  for (const auto& [key, value] : root) {
    const std::string name(key.str());
    if (!sections.count(name)) throw ConfigError(name, "unknown section");
    if (!value.is_table()) throw ConfigError(name, "expected a table");
  }
  auto section = [&](const char* name) { return Section(root[name].as_table(), name); };

  RunConfig config;
  config.dataset = parse_dataset(section("dataset"));
  parse_model(section("model"), config.dataset, config.arm);
  parse_schedule(section("schedule"), config.dataset, config);
  parse_optimizer(section("optimizer"), config.arm.optimizer);
  parse_training(section("training"), config);
  config.arm.name = config.stream ? "stream" : config.arm.train_condition.tag();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

ClassificationData build_data(const DatasetConfig& d, std::uint64_t master_seed,
                              std::size_t run) {
  switch (d.kind) {
    case DatasetConfig::Kind::synthetic: {
      SyntheticOptions o;
      o.num_categories = d.categories;
      o.items_per_category = d.items_per_category;
      o.dim = d.dim;
      o.noise_halfwidth = d.noise;
      o.levels.high = d.high;
      o.levels.low = d.low;
      o.test_fraction = d.test_fraction;
      return synthetic_classification(master_seed, o);
    }
    case DatasetConfig::Kind::non_overlapping: {
      NonOverlappingSetup o;
      o.num_categories = d.categories;
      o.items_per_category = d.items_per_category;
      o.dim = d.dim;
      o.values.active = d.active;
      o.values.noise_halfwidth = d.noise;
      o.values.antiphase = d.antiphase;
      o.test_fraction = d.test_fraction;
      return non_overlapping_classification(master_seed, o);
    }
    case DatasetConfig::Kind::mnist: {
      MnistOptions o;
      o.dir = d.mnist_dir;
      o.train_per_category = d.train_per_category;
      o.test_per_category = d.test_per_category;
      return mnist_classification(master_seed, o);
    }
    case DatasetConfig::Kind::multiscale: {
      const std::uint64_t run_seed = derive_seed(master_seed, seed_tag::stream + run);
      Rng train_rng(derive_seed(run_seed, 1));
      Rng test_rng(derive_seed(run_seed, 2));
      ClassificationData out;
      out.train = as_dataset(
          gen_multiscale(train_rng, d.length, d.periods, d.noise, d.low, d.high), "multiscale-train");
      out.test = as_dataset(
          gen_multiscale(test_rng, d.test_length, d.periods, d.noise, d.low, d.high),
          "multiscale-test");
      return out;
    }
  }
  throw std::logic_error("build_data: unknown dataset kind");
}

std::filesystem::path run_config(const RunConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / ("curves_" + config.arm.name + ".csv");
  std::vector<TrainCurve> curves;
  if (!config.stream) {
    const auto data = build_data(config.dataset, config.training.master_seed, 0);
    curves = run_arm(data, config.arm, config.training).curves;
  } else {
    const auto& s = config.training;
    for (std::size_t run = s.first_run; run < s.first_run + s.runs; ++run) {
      const auto data = build_data(config.dataset, s.master_seed, run);
      std::vector<std::size_t> identity(data.train.size());
      std::iota(identity.begin(), identity.end(), std::size_t{0});
      const auto schedule = schedule_from_order(data.train, identity);
      TrainConfig tc;
      tc.epochs = s.epochs;
      tc.eval_every = s.eval_every;
      tc.batch_size = config.arm.batch_size;
      tc.run = run;
      tc.condition = config.arm.name;
      tc.eval.mode = config.arm.eval_mode;
      if (config.arm.spec.task == Task::autoencoder) {
        tc.eval.partition = MultiScaleStream::subcomponent_map();
      }
      Rng init_rng(derive_seed(s.master_seed, seed_tag::init + run));
      ModelState state = init_state(config.arm.spec, init_rng);
      Optimizer optimizer(config.arm.optimizer);
      curves.push_back(
          (config.arm.batch_size == 1
               ? train_incremental(config.arm.spec, state, data.train, schedule, optimizer, tc,
                                   data.test)
               : train_minibatch(config.arm.spec, state, data.train, schedule, optimizer, tc,
                                 data.test))
              .curve);
    }
  }
  write_curves_csv(path, curves);
  return path;
}

}  // namespace tempolearn
