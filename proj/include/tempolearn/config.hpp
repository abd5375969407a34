#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tempolearn/experiments.hpp"

namespace tempolearn {

/// Schema violation. field() is the dotted path of the offending key, e.g.
/// "model.leak_alphas".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct DatasetConfig {
  enum class Kind { synthetic, non_overlapping, mnist, multiscale };
  Kind kind = Kind::synthetic;
  // synthetic / non_overlapping
  std::size_t categories = 4;
  std::size_t items_per_category = 300;
  std::size_t dim = 16;
  double noise = 0.1;
  double high = 0.8;
  double low = 0.2;
  double active = 0.8;
  bool antiphase = false;
  double test_fraction = 0.2;
  // mnist
  std::filesystem::path mnist_dir;
  std::size_t train_per_category = 0;
  std::size_t test_per_category = 0;
  // multiscale
  std::array<std::size_t, kTimescales> periods{1, 3, 5};
  std::size_t length = 3000;
  std::size_t test_length = 3000;
};

std::string to_string(DatasetConfig::Kind);

/// One fully specified training experiment.
struct RunConfig {
  DatasetConfig dataset;
  /// Model, schedule, evaluation and optimizer settings.
  Arm arm;
  /// Train and evaluate in dataset (stream) order instead of a smoothness
  /// schedule.
  bool stream = false;
  RunSettings training;
};

/// Parses TOML text with sections [dataset], [model], [schedule], [optimizer]
/// and [training]. Throws ConfigError.
RunConfig parse_config(std::string_view text, std::string_view source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Train/test data for one run. Multi-scale streams are drawn per run; the
/// other kinds ignore `run`.
ClassificationData build_data(const DatasetConfig& dataset, std::uint64_t master_seed,
                              std::size_t run);

/// Trains every run and writes curves_<condition>.csv into `out_dir`.
/// Returns the path written.
std::filesystem::path run_config(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace tempolearn
