#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tempolearn/datasets.hpp"
#include "tempolearn/lstm.hpp"
#include "tempolearn/metrics.hpp"
#include "tempolearn/models.hpp"
#include "tempolearn/optim.hpp"
#include "tempolearn/sampling.hpp"
#include "tempolearn/training.hpp"

namespace tempolearn {

enum class Scale { desk, full };

std::string to_string(Scale);
Scale parse_scale(const std::string& text);

/// Seed-stream tags. Every random choice in an experiment is drawn from
/// derive_seed(master, tag [+ run]).
namespace seed_tag {
inline constexpr std::uint64_t data = 0x10;
inline constexpr std::uint64_t split = 0x11;
inline constexpr std::uint64_t init = 0x1000;
inline constexpr std::uint64_t session = 0x2000;
inline constexpr std::uint64_t test_session = 0x3000;
inline constexpr std::uint64_t bootstrap = 0x4000;
inline constexpr std::uint64_t stream = 0x5000;
}  // namespace seed_tag

struct ClassificationData {
  Dataset train;
  Dataset test;
};

struct SyntheticOptions {
  std::size_t num_categories = 4;
  std::size_t items_per_category = 300;
  std::size_t dim = 16;
  double noise_halfwidth = 0.1;
  LowOverlapOptions levels{};
  double test_fraction = 0.2;
};

ClassificationData synthetic_classification(std::uint64_t seed, const SyntheticOptions& options = {});

struct NonOverlappingSetup {
  std::size_t num_categories = 4;
  std::size_t items_per_category = 300;
  std::size_t dim = 16;
  NonOverlappingOptions values{};
  double test_fraction = 0.2;
};

ClassificationData non_overlapping_classification(std::uint64_t seed,
                                                  const NonOverlappingSetup& options = {});

struct MnistOptions {
  /// Directory with train-/t10k- IDX files (optionally .gz).
  std::filesystem::path dir;
  /// Per-category caps for a balanced subset; 0 keeps every sample.
  std::size_t train_per_category = 0;
  std::size_t test_per_category = 0;

  /// Desk scale: balanced draw of up to 1000 / 200 items per digit.
  static MnistOptions desk();
};

/// Directory used when none is given: $TEMPOLEARN_MNIST_DIR, else the bundled
/// subset.
std::filesystem::path default_mnist_dir();

/// Loads the IDX pairs and draws the balanced subsets requested.
ClassificationData mnist_classification(std::uint64_t seed, const MnistOptions& options);

/// One model trained under one smoothness condition and evaluated one way.
struct Arm {
  std::string name;
  enum class Kind { network, lstm } kind = Kind::network;
  ModelSpec spec;
  LstmSpec lstm;
  SmoothnessCondition train_condition = SmoothnessCondition::repetition(1);
  EvalMode eval_mode = EvalMode::stateless;
  /// Test-stream smoothness for ordered evaluation.
  SmoothnessCondition test_condition = SmoothnessCondition::repetition(1);
  OptimizerConfig optimizer{};
  std::size_t batch_size = 1;
};

struct RunSettings {
  std::uint64_t master_seed = 1;
  std::size_t runs = 10;
  std::size_t first_run = 0;
  std::size_t epochs = 1;
  std::size_t eval_every = 100;
};

struct ArmResult {
  std::string name;
  std::vector<TrainCurve> curves;
  /// Test loss at the end of the first epoch, one per run.
  std::vector<double> epoch_loss;
  std::vector<double> epoch_acc;
};

/// Trains `arm` for every run. Run r uses the same weight-init seed and
/// sampling session for every arm, so arms are paired by run.
ArmResult run_arm(const ClassificationData& data, const Arm& arm, const RunSettings& settings);

/// Sampling session for a run (shared by all arms of that run).
SamplingSession run_session(const Dataset& train, std::uint64_t master_seed, std::size_t run);
/// Test order used for ordered evaluation. Exemplar order is drawn per run;
/// categories cycle in `category_order`, the training session's order.
std::vector<std::size_t> test_order(const Dataset& test, std::uint64_t master_seed,
                                    std::size_t run, const SmoothnessCondition& condition,
                                    const std::vector<Label>& category_order);

// ---------------------------------------------------------------------------
// Multi-scale autoencoders.

enum class AeVariant {
  no_memory,
  leaky,
  leaky_reset,
  multiscale,
  multiscale_reset,
};

inline constexpr std::size_t kAeVariants = 5;
std::string to_string(AeVariant);
std::vector<AeVariant> all_ae_variants();

struct MultiscaleSetup {
  std::array<std::size_t, kTimescales> periods{1, 3, 5};
  double noise_halfwidth = 0.1;
  double low = 0.2;
  double high = 0.8;
  std::size_t train_length = 3000;
  std::size_t test_length = 3000;
  double learning_rate = 0.01;
  OptimizerConfig::Kind optimizer = OptimizerConfig::Kind::sgd;
  std::size_t epochs = 1;
  std::size_t eval_every = 100;
  double uniform_alpha = 0.5;
  std::array<double, kTimescales> multiscale_alphas{0.0, 0.3, 0.6};
  LeakGradient leak_gradient = LeakGradient::mixture;
};

ModelSpec ae_spec(AeVariant variant, const MultiscaleSetup& setup);

struct AeRun {
  AeVariant variant = AeVariant::no_memory;
  std::size_t run = 0;
  double untrained_loss = 0.0;
  double trained_loss = 0.0;
  /// fast, medium, slow
  std::vector<double> per_feature;
  SelectivityReport selectivity;
  /// Hidden units that never activated on the test stream (their r^2 is 0).
  std::size_t dead_units = 0;
  TrainCurve curve;
};

/// Trains one variant on a fresh stream per run and analyses it on a held-out
/// ordered stream. Streams and init are shared across variants per run.
AeRun run_autoencoder(AeVariant variant, const MultiscaleSetup& setup, std::uint64_t master_seed,
                      std::size_t run);

/// Selectivity from one ordered evaluation. Dead units contribute r^2 = 0.
SelectivityReport hidden_selectivity(const std::vector<Vector>& hidden,
                                     const std::vector<Vector>& samples,
                                     std::size_t* dead_units = nullptr);

// ---------------------------------------------------------------------------
// Presets.

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct PresetOutcome {
  std::string id;
  std::vector<Check> checks;
  std::vector<std::filesystem::path> files;

  bool passed() const;
};

struct PresetOptions {
  std::uint64_t seed = 1;
  Scale scale = Scale::desk;
  std::filesystem::path out_dir = "out";
  std::filesystem::path mnist_dir;
  /// Overrides the preset's run count when nonzero.
  std::size_t runs = 0;
  /// Progress messages (may be empty).
  std::function<void(const std::string&)> log;
};

struct PresetInfo {
  std::string id;
  std::string summary;
};

std::vector<PresetInfo> list_presets();
/// Throws std::invalid_argument for an unknown id.
PresetOutcome run_preset(const std::string& id, const PresetOptions& options);

/// Bootstrap with the library's standard resampling sizes.
BootstrapSummary bootstrap(std::span<const double> values, std::uint64_t seed);
inline constexpr std::size_t kBootstrapResamples = 10000;

}  // namespace tempolearn
