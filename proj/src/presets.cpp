#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tempolearn/csv.hpp"
#include "tempolearn/experiments.hpp"

namespace tempolearn {

bool PresetOutcome::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Synthetic classification protocol (16-8-4 network).
constexpr double kSyntheticLr = 0.2;
constexpr double kSyntheticAeLr = 0.1;
constexpr std::size_t kSyntheticHidden = 8;
constexpr std::size_t kSyntheticEvalEvery = 100;
// MNIST protocol (784-392-10 network).
constexpr double kMnistLr = 0.01;
constexpr std::size_t kMnistHidden = 392;
constexpr std::size_t kMnistEvalEvery = 1000;
constexpr double kLeak = 0.5;
// LSTM baseline.
constexpr double kLstmLr = 0.01;
constexpr std::size_t kLstmWindow = 10;
// Multi-scale autoencoders.
constexpr double kAeLr = 0.01;
constexpr std::size_t kAeRuns = 50;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

SyntheticOptions synthetic_setup() {
  SyntheticOptions o;
  o.noise_halfwidth = 0.5;
  o.levels.high = 0.7;
  o.levels.low = 0.3;
  return o;
}

MultiscaleSetup ae_setup() {
  MultiscaleSetup s;
  s.optimizer = OptimizerConfig::Kind::rmsprop;
  s.learning_rate = kAeLr;
  s.leak_gradient = LeakGradient::instantaneous;
  return s;
}

SmoothnessCondition k(std::size_t n) { return SmoothnessCondition::repetition(n); }
SmoothnessCondition shuffled() { return SmoothnessCondition::shuffled(); }

std::vector<SmoothnessCondition> fig2_conditions() {
  return {k(1), shuffled(), k(3), k(5), k(10)};
}

Arm network_arm(std::size_t input, std::size_t hidden, std::size_t categories, double alpha,
                Gating gating, LossKind loss, SmoothnessCondition condition, double lr) {
  Arm a;
  a.name = condition.tag();
  a.spec = ModelSpec::classifier(input, hidden, categories, alpha, gating, loss);
  a.spec.leak_gradient = LeakGradient::instantaneous;
  a.train_condition = condition;
  a.test_condition = condition;
  a.eval_mode = alpha > 0.0 ? EvalMode::ordered : EvalMode::stateless;
  a.optimizer.learning_rate = lr;
  return a;
}

struct DataProtocol {
  std::string name;
  ClassificationData data;
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t categories = 0;
  double lr = 0.0;
  std::size_t eval_every = 0;

  Arm arm(double alpha, Gating gating, SmoothnessCondition c, LossKind loss = LossKind::mse) const {
    return network_arm(input, hidden, categories, alpha, gating, loss, c, lr);
  }
};

class Context {
 public:
  Context(std::string id, const PresetOptions& options)
      : options_(options), dir_(options.out_dir / id) {
    outcome_.id = std::move(id);
    std::filesystem::create_directories(dir_);
  }

  const PresetOptions& options() const { return options_; }
  bool full() const { return options_.scale == Scale::full; }

  std::size_t runs(std::size_t desk, std::size_t full_runs) const {
    if (options_.runs) return options_.runs;
    return full() ? full_runs : desk;
  }

  void log(const std::string& message) const {
    if (options_.log) options_.log(outcome_.id + ": " + message);
  }

  std::filesystem::path file(const std::string& name) {
    auto path = dir_ / name;
    outcome_.files.push_back(path);
    return path;
  }

  DataProtocol synthetic() const {
    return {"synthetic", synthetic_classification(options_.seed, synthetic_setup()),
            16, kSyntheticHidden, 4, kSyntheticLr, kSyntheticEvalEvery};
  }

  DataProtocol mnist(std::size_t per_category_multiple = 1) const {
    MnistOptions o = full() ? MnistOptions{} : MnistOptions::desk();
    o.dir = options_.mnist_dir;
    auto data = mnist_classification(options_.seed, o);
    if (per_category_multiple > 1) {
      // Trim every category to the same multiple of the block size.
      auto groups = data.train.indices_by_category();
      std::size_t smallest = data.train.size();
      for (const auto& g : groups) smallest = std::min(smallest, g.size());
      const std::size_t keep = smallest / per_category_multiple * per_category_multiple;
      Rng rng(derive_seed(options_.seed, seed_tag::data));
      data.train = balanced_subset(data.train, rng, keep);
    }
    return {"mnist", std::move(data), 784, kMnistHidden, 10, kMnistLr, kMnistEvalEvery};
  }

  RunSettings settings(std::size_t runs, std::size_t eval_every) const {
    RunSettings s;
    s.master_seed = options_.seed;
    s.runs = runs;
    s.eval_every = eval_every;
    return s;
  }

  ArmResult arm(const DataProtocol& p, const std::string& model, const Arm& arm, std::size_t runs) {
    log(p.name + " " + model + " " + arm.name);
    auto result = run_arm(p.data, arm, settings(runs, p.eval_every));
    write_curves_csv(file("curves_" + p.name + "_" + model + "_" + arm.name + ".csv"),
                     result.curves);
    summarize(p.name, model, arm.name, "test_loss", result.epoch_loss);
    summarize(p.name, model, arm.name, "test_acc", result.epoch_acc);
    return result;
  }

  BootstrapSummary summarize(const std::string& dataset, const std::string& model,
                             const std::string& condition, const std::string& metric,
                             std::span<const double> values) {
    Row row{dataset, model, condition, metric, values.size(), kNaN, kNaN, {}};
    if (!values.empty() && std::none_of(values.begin(), values.end(),
                                        [](double v) { return std::isnan(v); })) {
      row.mean = mean(values);
      row.std = values.size() > 1 ? stddev(values) : 0.0;
      row.boot = bootstrap(values, options_.seed);
    } else {
      row.boot.mean = row.boot.std = kNaN;
    }
    rows_.push_back(row);
    return row.boot;
  }

  BootstrapSummary boot(std::span<const double> values) const {
    return bootstrap(values, options_.seed);
  }

  void check(std::string name, bool passed, std::string detail) {
    log(std::string(passed ? "PASS " : "FAIL ") + name + " (" + detail + ")");
    outcome_.checks.push_back({std::move(name), passed, std::move(detail)});
  }

  PresetOutcome finish() {
    {
      csv::Writer out(file("summary.csv"), {"dataset", "model", "condition", "metric", "runs",
                                            "mean", "std", "boot_mean", "boot_std"});
      for (const auto& r : rows_) {
        out.field(r.dataset).field(r.model).field(r.condition).field(r.metric).field(r.runs);
        out.field(r.mean).field(r.std).field(r.boot.mean).field(r.boot.std);
        out.end_row();
      }
    }
    {
      csv::Writer out(file("checks.csv"), {"check", "passed", "detail"});
      for (const auto& c : outcome_.checks) {
        out.field(c.name).field(c.passed).field(c.detail);
        out.end_row();
      }
    }
    return std::move(outcome_);
  }

 private:
  struct Row {
    std::string dataset, model, condition, metric;
    std::size_t runs = 0;
    double mean = 0.0;
    double std = 0.0;
    BootstrapSummary boot;
  };

  const PresetOptions& options_;
  std::filesystem::path dir_;
  PresetOutcome outcome_;
  std::vector<Row> rows_;
};

using Arms = std::map<std::string, ArmResult>;

double mean_loss(const ArmResult& r) { return mean(r.epoch_loss); }

/// Strictly increasing mean loss along `names`.
bool ordered_means(const Arms& arms, const std::vector<std::string>& names, std::string& detail) {
  bool ok = true;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double m = mean_loss(arms.at(names[i]));
    detail += (i ? " < " : "") + names[i] + "=" + num(m);
    if (i && !(mean_loss(arms.at(names[i - 1])) < m)) ok = false;
  }
  return ok;
}

std::size_t ordered_runs(const Arms& arms, const std::vector<std::string>& names) {
  const std::size_t runs = arms.at(names.front()).epoch_loss.size();
  std::size_t hold = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    bool ok = true;
    for (std::size_t i = 1; i < names.size(); ++i) {
      if (!(arms.at(names[i - 1]).epoch_loss[r] < arms.at(names[i]).epoch_loss[r])) ok = false;
    }
    if (ok) ++hold;
  }
  return hold;
}

const std::vector<std::string> kFig2Order{"k1", "random", "k5", "k10"};

Arms run_conditions(Context& ctx, const DataProtocol& p, const std::string& model, double alpha,
                    Gating gating, std::size_t runs, LossKind loss = LossKind::mse) {
  Arms arms;
  for (const auto& c : fig2_conditions()) {
    arms[c.tag()] = ctx.arm(p, model, p.arm(alpha, gating, c, loss), runs);
  }
  return arms;
}

void feedforward_ordering_checks(Context& ctx, const std::string& dataset, const Arms& ff,
                                 bool per_seed) {
  std::string detail;
  const bool ok = ordered_means(ff, kFig2Order, detail);
  ctx.check(dataset + ": feedforward mean error k1 < random < k5 < k10", ok, detail);
  if (per_seed) {
    const std::size_t runs = ff.at("k1").epoch_loss.size();
    const std::size_t hold = ordered_runs(ff, kFig2Order);
    ctx.check(dataset + ": feedforward ordering holds in >= 90% of runs", hold * 10 >= runs * 9,
              std::to_string(hold) + "/" + std::to_string(runs));
  }
}

// ---------------------------------------------------------------------------

void preset_fig2a(Context& ctx) {
  const auto syn = ctx.synthetic();
  const auto ff = run_conditions(ctx, syn, "feedforward", 0.0, Gating::none, ctx.runs(10, 100));
  feedforward_ordering_checks(ctx, syn.name, ff, true);
  const auto mn = ctx.mnist();
  const auto ffm = run_conditions(ctx, mn, "feedforward", 0.0, Gating::none, ctx.runs(10, 10));
  feedforward_ordering_checks(ctx, mn.name, ffm, false);
}

void leaky_check(Context& ctx, const std::string& dataset, const Arms& leaky) {
  const double k5 = mean_loss(leaky.at("k5"));
  const double k1 = mean_loss(leaky.at("k1"));
  ctx.check(dataset + ": leaky mean error k5 < k1", k5 < k1, "k5=" + num(k5) + " k1=" + num(k1));
}

void preset_fig2b(Context& ctx) {
  const auto syn = ctx.synthetic();
  leaky_check(ctx, syn.name,
              run_conditions(ctx, syn, "leaky", kLeak, Gating::none, ctx.runs(10, 100)));
  const auto mn = ctx.mnist();
  leaky_check(ctx, mn.name,
              run_conditions(ctx, mn, "leaky", kLeak, Gating::none, ctx.runs(10, 10)));
}

void reset_checks(Context& ctx, const DataProtocol& p, std::size_t runs) {
  const Arms reset = run_conditions(ctx, p, "leaky_reset", kLeak, Gating::label_reset, runs);
  Arms ff;
  for (std::size_t n : {3, 5, 10}) {
    ff[k(n).tag()] = ctx.arm(p, "feedforward", p.arm(0.0, Gating::none, k(n)), runs);
  }
  const auto b1 = ctx.boot(reset.at("k1").epoch_loss);
  const auto br = ctx.boot(reset.at("random").epoch_loss);
  for (std::size_t n : {3, 5, 10}) {
    const auto tag = k(n).tag();
    const auto bk = ctx.boot(reset.at(tag).epoch_loss);
    const auto band = [](const BootstrapSummary& b) {
      return num(b.mean) + "+-" + num(b.std);
    };
    ctx.check(p.name + ": leaky+reset " + tag + " significantly below k1",
              significantly_less(bk, b1), tag + "=" + band(bk) + " k1=" + band(b1));
    ctx.check(p.name + ": leaky+reset " + tag + " significantly below random",
              significantly_less(bk, br), tag + "=" + band(bk) + " random=" + band(br));
    const double f = mean_loss(ff.at(tag));
    ctx.check(p.name + ": leaky+reset " + tag + " below feedforward " + tag, bk.mean < f,
              num(mean_loss(reset.at(tag))) + " vs " + num(f));
  }
  Arm transfer = p.arm(kLeak, Gating::label_reset, k(5));
  transfer.eval_mode = EvalMode::stateless;
  const auto moved = ctx.arm(p, "leaky_reset_stateless", transfer, runs);
  const double m = mean_loss(moved);
  const double f = mean_loss(ff.at("k5"));
  ctx.check(p.name + ": leaky+reset k5 evaluated stateless below feedforward k5", m < f,
            num(m) + " vs " + num(f));
}

void preset_fig2c(Context& ctx) {
  reset_checks(ctx, ctx.synthetic(), ctx.runs(10, 100));
  reset_checks(ctx, ctx.mnist(), ctx.runs(10, 10));
}

void preset_a1(Context& ctx) {
  const auto syn = ctx.synthetic();
  const std::size_t runs = ctx.runs(10, 100);
  const auto cls = run_conditions(ctx, syn, "classifier", 0.0, Gating::none, runs);
  Arms rec;
  for (const auto& c : fig2_conditions()) {
    Arm a = syn.arm(0.0, Gating::none, c);
    a.spec = ModelSpec::autoencoder(16, 4, std::vector<double>(4, 0.0));
    a.optimizer.learning_rate = kSyntheticAeLr;
    rec[c.tag()] = ctx.arm(syn, "autoencoder", a, runs);
  }
  for (const Arms* task : std::initializer_list<const Arms*>{&cls, &rec}) {
    const std::string name = task == &cls ? "classification" : "reconstruction";
    const double random = mean_loss(task->at("random"));
    std::string detail;
    bool best = true;
    for (const auto& [tag, r] : *task) {
      const double diff = random - mean_loss(r);
      detail += tag + ":" + num(diff) + " ";
      if (tag != "k1" && !(mean_loss(task->at("k1")) < mean_loss(r))) best = false;
    }
    ctx.check(name + ": k1 has the lowest error (random minus condition listed)", best, detail);
  }
}

void preset_a3(Context& ctx) {
  const auto syn = ctx.synthetic();
  const auto ff = run_conditions(ctx, syn, "feedforward_ce", 0.0, Gating::none, ctx.runs(10, 100),
                                 LossKind::ce);
  feedforward_ordering_checks(ctx, syn.name, ff, true);
  const auto mn = ctx.mnist();
  const auto ffm = run_conditions(ctx, mn, "feedforward_ce", 0.0, Gating::none, ctx.runs(10, 10),
                                  LossKind::ce);
  feedforward_ordering_checks(ctx, mn.name, ffm, false);
}

void preset_a4(Context& ctx) {
  const auto syn = ctx.synthetic();
  const std::size_t runs = ctx.runs(10, 100);
  leaky_check(ctx, syn.name, run_conditions(ctx, syn, "leaky", kLeak, Gating::none, runs));
  const auto reset = run_conditions(ctx, syn, "leaky_reset", kLeak, Gating::label_reset, runs);
  const double k1 = mean_loss(reset.at("k1"));
  for (std::size_t n : {3, 5, 10}) {
    const double m = mean_loss(reset.at(k(n).tag()));
    ctx.check("synthetic: leaky+reset " + k(n).tag() + " below k1", m < k1,
              num(m) + " vs " + num(k1));
  }
}

/// Trains batch-6 on two orders of the same six samples and compares every
/// parameter after each update.
void minibatch_order_check(Context& ctx) {
  Rng rng(derive_seed(ctx.options().seed, seed_tag::data));
  const Dataset pair = gen_low_overlap(rng, 2, 3, 8, 0.1);
  const ModelSpec spec = ModelSpec::classifier(8, 4, 2);
  const std::vector<std::size_t> abab{0, 3, 1, 4, 2, 5};
  const std::vector<std::size_t> aabb{0, 1, 2, 3, 4, 5};
  auto trajectory = [&](const std::vector<std::size_t>& order) {
    Rng init(derive_seed(ctx.options().seed, seed_tag::init));
    ModelState state = init_state(spec, init);
    Optimizer opt(OptimizerConfig{});
    TrainConfig config;
    config.batch_size = 6;
    const auto schedule = schedule_from_order(pair, order);
    std::vector<std::vector<double>> snapshots;
    for (int update = 0; update < 20; ++update) {
      train_minibatch(spec, state, pair, schedule, opt, config, pair);
      std::vector<double> flat;
      for (const auto& p : state.parameters()) flat.insert(flat.end(), p.values.begin(), p.values.end());
      snapshots.push_back(std::move(flat));
    }
    return snapshots;
  };
  const auto a = trajectory(abab);
  const auto b = trajectory(aabb);
  bool identical = a.size() == b.size();
  for (std::size_t i = 0; identical && i < a.size(); ++i) {
    identical = std::equal(a[i].begin(), a[i].end(), b[i].begin(), b[i].end(),
                           [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; });
  }
  ctx.check("batch 6: ABABAB and AAABBB trajectories bitwise identical", identical,
            std::to_string(a.size()) + " updates compared");
}

void preset_a5(Context& ctx) {
  minibatch_order_check(ctx);
  const auto mn = ctx.mnist();
  const std::size_t runs = ctx.runs(5, 5);
  Arms batch;
  for (std::size_t n : {1, 10}) {
    Arm a = mn.arm(0.0, Gating::none, k(n));
    a.batch_size = n;
    a.name = k(n).tag() + "_batch" + std::to_string(n);
    batch[k(n).tag()] = ctx.arm(mn, "minibatch", a, runs);
  }
  Arms reset;
  for (std::size_t n : {1, 10}) {
    reset[k(n).tag()] = ctx.arm(mn, "leaky_reset", mn.arm(kLeak, Gating::label_reset, k(n)), runs);
  }
  const double b1 = mean_loss(batch.at("k1")), b10 = mean_loss(batch.at("k10"));
  ctx.check("mnist: batch 10 on k10 worse than batch 1 on k1", b10 > b1,
            num(b10) + " vs " + num(b1));
  const double r1 = mean_loss(reset.at("k1")), r10 = mean_loss(reset.at("k10"));
  ctx.check("mnist: leaky+reset k10 better than k1", r10 < r1, num(r10) + " vs " + num(r1));
}

void preset_a6(Context& ctx) {
  constexpr std::size_t kBatch = 16;
  const auto mn = ctx.mnist(kBatch);
  const std::size_t runs = ctx.runs(10, 10);
  const auto settings = ctx.settings(runs, mn.eval_every);
  bool homogeneous = true;
  for (std::size_t run = 0; run < runs; ++run) {
    const auto session = run_session(mn.data.train, settings.master_seed, run);
    const auto schedule = make_schedule(mn.data.train, session, k(kBatch));
    for (std::size_t start = 0; start < schedule.size(); start += kBatch) {
      const std::size_t end = std::min(schedule.size(), start + kBatch);
      for (std::size_t p = start + 1; p < end; ++p) {
        if (mn.data.train.labels[schedule.order[p]] != mn.data.train.labels[schedule.order[start]]) {
          homogeneous = false;
        }
      }
    }
  }
  ctx.check("mnist: every batch of 16 under k16 holds one category", homogeneous,
            std::to_string(mn.data.train.size()) + " samples over " + std::to_string(runs) + " runs");
  Arms arms;
  for (std::size_t n : {1, 10, 16, 24}) {
    Arm a = mn.arm(0.0, Gating::none, k(n));
    a.batch_size = kBatch;
    arms[k(n).tag()] = ctx.arm(mn, "minibatch16", a, runs);
  }
  // Late in the epoch: the last evaluation before the epoch ends.
  auto late = [&](const ArmResult& r) {
    std::vector<double> v;
    for (const auto& curve : r.curves) {
      const auto& recs = curve.records;
      v.push_back(recs.size() >= 2 ? recs[recs.size() - 2].test_loss : recs.back().test_loss);
    }
    return mean(v);
  };
  const double l16 = late(arms.at("k16")), l10 = late(arms.at("k10")), l24 = late(arms.at("k24"));
  ctx.check("mnist: late-epoch error k16 <= k10 and k24", l16 <= l10 && l16 <= l24,
            "k10=" + num(l10) + " k16=" + num(l16) + " k24=" + num(l24));
  const double e16 = mean_loss(arms.at("k16")), e10 = mean_loss(arms.at("k10")),
               e24 = mean_loss(arms.at("k24"));
  ctx.check("mnist: end-of-epoch error k16 <= k10 and k24", e16 <= e10 && e16 <= e24,
            "k10=" + num(e10) + " k16=" + num(e16) + " k24=" + num(e24));
}

void preset_a7(Context& ctx) {
  DataProtocol p{"non_overlapping", non_overlapping_classification(ctx.options().seed),
                 16, kSyntheticHidden, 4, kSyntheticLr, kSyntheticEvalEvery};
  const std::size_t runs = ctx.runs(10, 100);
  const auto ff = ctx.arm(p, "feedforward", p.arm(0.0, Gating::none, k(1)), runs);
  const double f = mean_loss(ff);
  auto compare = [&](const std::string& model, const Arm& arm) {
    const double m = mean_loss(ctx.arm(p, model, arm, runs));
    ctx.check("non_overlapping: " + model + " worse than feedforward", m > f,
              num(m) + " vs " + num(f));
  };
  compare("leaky", p.arm(kLeak, Gating::none, k(1)));
  for (std::size_t period : {2, 3, 5}) {
    Arm a = p.arm(kLeak, Gating::periodic_reset, k(1));
    a.spec.reset_period = period;
    compare("leaky_reset_every" + std::to_string(period), a);
  }
}

Arm lstm_arm(SmoothnessCondition train, SmoothnessCondition test) {
  Arm a;
  a.kind = Arm::Kind::lstm;
  a.name = train.tag() + (train == test ? "" : "_test_" + test.tag());
  a.lstm = LstmSpec{16, kSyntheticHidden, 4, kLstmWindow, LossKind::mse};
  a.train_condition = train;
  a.test_condition = test;
  a.eval_mode = EvalMode::ordered;
  a.optimizer.kind = OptimizerConfig::Kind::rmsprop;
  a.optimizer.learning_rate = kLstmLr;
  return a;
}

void preset_a9(Context& ctx) {
  const auto syn = ctx.synthetic();
  const std::size_t runs = ctx.runs(10, 100);
  Arms lstm, reset, ff;
  for (std::size_t n : {1, 5, 10}) {
    const auto tag = k(n).tag();
    lstm[tag] = ctx.arm(syn, "lstm", lstm_arm(k(n), k(n)), runs);
    reset[tag] = ctx.arm(syn, "leaky_reset", syn.arm(kLeak, Gating::label_reset, k(n)), runs);
    ff[tag] = ctx.arm(syn, "feedforward", syn.arm(0.0, Gating::none, k(n)), runs);
  }
  const double l1 = mean_loss(lstm.at("k1")), l5 = mean_loss(lstm.at("k5"));
  ctx.check("synthetic: lstm k5 below lstm k1", l5 < l1, num(l5) + " vs " + num(l1));
  for (std::size_t n : {5, 10}) {
    const auto tag = k(n).tag();
    const double l = mean_loss(lstm.at(tag)), r = mean_loss(reset.at(tag)),
                 f = mean_loss(ff.at(tag));
    ctx.check("synthetic " + tag + ": lstm < leaky+reset < feedforward", l < r && r < f,
              "lstm=" + num(l) + " reset=" + num(r) + " ff=" + num(f));
  }
}

void preset_a10(Context& ctx) {
  const auto syn = ctx.synthetic();
  const std::size_t runs = ctx.runs(10, 100);
  for (std::size_t test : {5, 1}) {
    const double l = mean_loss(ctx.arm(syn, "lstm", lstm_arm(k(5), k(test)), runs));
    Arm r = syn.arm(kLeak, Gating::label_reset, k(5));
    r.test_condition = k(test);
    r.name = test == 5 ? "k5" : "k5_test_k1";
    const double m = mean_loss(ctx.arm(syn, "leaky_reset", r, runs));
    if (test == 5) {
      ctx.check("synthetic: trained and tested on k5, lstm below leaky+reset", l < m,
                "lstm=" + num(l) + " reset=" + num(m));
    } else {
      ctx.check("synthetic: trained on k5 and tested on k1, leaky+reset below lstm", m < l,
                "reset=" + num(m) + " lstm=" + num(l));
    }
  }
}

// ---------------------------------------------------------------------------
// Multi-scale autoencoders.

const char* kRoles[] = {"no_memory", "short_memory", "long_memory"};
const char* kScales[] = {"fast", "medium", "slow"};

using AeRuns = std::map<AeVariant, std::vector<AeRun>>;

AeRuns run_autoencoders(Context& ctx, const MultiscaleSetup& setup, std::size_t runs,
                        const std::vector<AeVariant>& variants, const std::string& tag) {
  AeRuns out;
  for (auto v : variants) {
    ctx.log(tag + " " + to_string(v));
    std::vector<TrainCurve> curves;
    for (std::size_t r = 0; r < runs; ++r) {
      out[v].push_back(run_autoencoder(v, setup, ctx.options().seed, r));
      curves.push_back(out[v].back().curve);
    }
    write_curves_csv(ctx.file("curves_" + tag + "_" + to_string(v) + ".csv"), curves);
  }
  return out;
}

std::vector<double> collect(const std::vector<AeRun>& runs, double (*get)(const AeRun&)) {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(get(r));
  return v;
}

/// Writes per-variant loss and selectivity summaries and the mean r^2 table.
void summarize_autoencoders(Context& ctx, const AeRuns& all, const std::string& tag) {
  bool first = true;
  const auto path = ctx.file("selectivity_" + tag + ".csv");
  for (const auto& [variant, runs] : all) {
    const auto name = to_string(variant);
    ctx.summarize(tag, name, "-", "untrained_loss",
                  collect(runs, [](const AeRun& r) { return r.untrained_loss; }));
    ctx.summarize(tag, name, "-", "trained_loss",
                  collect(runs, [](const AeRun& r) { return r.trained_loss; }));
    SelectivityReport avg;
    for (std::size_t role = 0; role < kTimescales; ++role) {
      std::vector<double> sel;
      for (const auto& r : runs) {
        sel.push_back(r.selectivity.selectivity[role]);
        for (std::size_t ts = 0; ts < kTimescales; ++ts) {
          avg.r_squared[role][ts] += r.selectivity.r_squared[role][ts] / runs.size();
        }
      }
      avg.selectivity[role] = mean(sel);
      ctx.summarize(tag, name, kRoles[role], "selectivity", sel);
      std::vector<double> err;
      for (const auto& r : runs) err.push_back(r.per_feature.at(role));
      ctx.summarize(tag, name, kScales[role], "feature_error", err);
    }
    write_selectivity_csv(path, name, avg, !first);
    first = false;
  }
}

void autoencoder_checks(Context& ctx, const AeRuns& all, const std::string& tag,
                        bool error_ordering) {
  for (const auto& [variant, runs] : all) {
    const double before = mean(collect(runs, [](const AeRun& r) { return r.untrained_loss; }));
    const double after = mean(collect(runs, [](const AeRun& r) { return r.trained_loss; }));
    ctx.check(tag + ": " + to_string(variant) + " reduces reconstruction error", after < before,
              num(after) + " vs untrained " + num(before));
  }
  for (auto v : {AeVariant::leaky_reset, AeVariant::multiscale_reset}) {
    if (!all.count(v)) continue;
    for (std::size_t role = 0; role < kTimescales; ++role) {
      std::vector<double> sel;
      for (const auto& r : all.at(v)) sel.push_back(r.selectivity.selectivity[role]);
      const auto b = ctx.boot(sel);
      ctx.check(tag + ": " + to_string(v) + " " + kRoles[role] + " selectivity band above 0",
                b.lower() > 0.0, num(b.mean) + "+-" + num(b.std));
    }
  }
  if (error_ordering) {
    auto loss = [&](AeVariant v) {
      return mean(collect(all.at(v), [](const AeRun& r) { return r.trained_loss; }));
    };
    const double none = loss(AeVariant::no_memory);
    for (auto v : {AeVariant::multiscale, AeVariant::multiscale_reset}) {
      ctx.check(tag + ": no_memory error <= " + to_string(v), none <= loss(v),
                num(none) + " vs " + num(loss(v)));
    }
  }
}

void preset_fig3(Context& ctx) {
  const auto runs = run_autoencoders(ctx, ae_setup(), ctx.runs(kAeRuns, kAeRuns),
                                     all_ae_variants(), "multiscale");
  summarize_autoencoders(ctx, runs, "multiscale");
  autoencoder_checks(ctx, runs, "multiscale", true);
}

void preset_a12(Context& ctx) {
  const std::size_t n = ctx.runs(kAeRuns, kAeRuns);
  MultiscaleSetup slow = ae_setup();
  slow.learning_rate = 0.003;
  const auto a = run_autoencoders(ctx, slow, n, all_ae_variants(), "lr0.003");
  summarize_autoencoders(ctx, a, "lr0.003");
  autoencoder_checks(ctx, a, "lr0.003", false);
  MultiscaleSetup other = ae_setup();
  other.learning_rate = 0.005;
  other.periods = {1, 2, 4};
  other.low = 0.1;
  other.high = 0.9;
  other.noise_halfwidth = 0.05;
  const auto b = run_autoencoders(ctx, other, n, all_ae_variants(), "dataset_b");
  summarize_autoencoders(ctx, b, "dataset_b");
  autoencoder_checks(ctx, b, "dataset_b", false);
}

void preset_a13(Context& ctx) {
  const std::size_t n = ctx.runs(kAeRuns, kAeRuns);
  const auto all = run_autoencoders(ctx, ae_setup(), n,
                                    {AeVariant::leaky_reset, AeVariant::multiscale_reset},
                                    "multiscale");
  summarize_autoencoders(ctx, all, "multiscale");
  for (const auto& [variant, runs] : all) {
    std::size_t hold = 0;
    for (const auto& r : runs) {
      if (r.per_feature.at(2) < r.per_feature.at(0)) ++hold;
    }
    ctx.check(to_string(variant) + ": slow-feature error below fast in >= 90% of runs",
              hold * 10 >= runs.size() * 9,
              std::to_string(hold) + "/" + std::to_string(runs.size()));
  }
}

void preset_a14(Context& ctx) {
  const std::size_t n = ctx.runs(kAeRuns, kAeRuns);
  const auto all = run_autoencoders(
      ctx, ae_setup(), n,
      {AeVariant::no_memory, AeVariant::multiscale, AeVariant::multiscale_reset}, "multiscale");
  const auto& base = all.at(AeVariant::no_memory);
  csv::Writer out(ctx.file("interference.csv"), {"model", "role", "statistic"});
  for (auto v : {AeVariant::multiscale, AeVariant::multiscale_reset}) {
    std::array<double, kTimescales> stat{};
    for (std::size_t role = 0; role < kTimescales; ++role) {
      std::vector<InterferencePoint> points;
      for (std::size_t r = 0; r < all.at(v).size(); ++r) {
        const auto& run = all.at(v)[r];
        points.push_back({run.selectivity.r_squared[role][0],
                          run.per_feature.at(0) - base[r].per_feature.at(0)});
      }
      try {
        stat[role] = memory_interference_scan(points);
      } catch (const std::exception&) {
        stat[role] = kNaN;
      }
      out.field(to_string(v)).field(std::string_view(kRoles[role])).field(stat[role]);
      out.end_row();
    }
    const double memory = (stat[1] + stat[2]) / 2.0;
    ctx.check(to_string(v) + ": memory-unit statistic above no-memory unit", memory > stat[0],
              "no_memory=" + num(stat[0]) + " short=" + num(stat[1]) + " long=" + num(stat[2]));
  }
}

struct PresetEntry {
  const char* id;
  const char* summary;
  void (*run)(Context&);
};

const PresetEntry kPresets[] = {
    {"fig2a", "feedforward error across smoothness (synthetic, MNIST)", preset_fig2a},
    {"fig2b", "leaky memory across smoothness (synthetic, MNIST)", preset_fig2b},
    {"fig2c", "leaky memory with label reset; stateless transfer", preset_fig2c},
    {"fig3", "five multi-scale autoencoders: error and selectivity", preset_fig3},
    {"a1", "classification vs reconstruction on synthetic data", preset_a1},
    {"a3", "feedforward ordering under cross-entropy", preset_a3},
    {"a4", "leaky and leaky+reset on synthetic data", preset_a4},
    {"a5", "mini-batching vs leaky+reset; ABABAB vs AAABBB", preset_a5},
    {"a6", "batch-16 training across smoothness", preset_a6},
    {"a7", "non-overlapping stream: memory vs feedforward", preset_a7},
    {"a9", "LSTM vs leaky+reset vs feedforward", preset_a9},
    {"a10", "LSTM vs leaky+reset on a changed test structure", preset_a10},
    {"a12", "autoencoders at another learning rate and dataset", preset_a12},
    {"a13", "per-feature error of memory+reset autoencoders", preset_a13},
    {"a14", "memory-unit interference with the fast feature", preset_a14},
};

}  // namespace

std::vector<PresetInfo> list_presets() {
  std::vector<PresetInfo> out;
  for (const auto& p : kPresets) out.push_back({p.id, p.summary});
  return out;
}

PresetOutcome run_preset(const std::string& id, const PresetOptions& options) {
  for (const auto& p : kPresets) {
    if (id == p.id) {
      Context ctx(id, options);
      p.run(ctx);
      return ctx.finish();
    }
  }
  throw std::invalid_argument("unknown preset '" + id + "' (see list-presets)");
}

}  // namespace tempolearn
