#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tempolearn/numerics.hpp"

namespace tempolearn {

using Label = std::size_t;

/// Ordered collection of equal-length samples with category labels.
struct Dataset {
  std::string name;
  std::size_t feature_dim = 0;
  std::size_t num_categories = 0;
  std::vector<Vector> samples;
  std::vector<Label> labels;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Throws std::invalid_argument when the shape/label invariants are broken.
  void validate() const;
  /// Indices of every sample, grouped by category (ascending within a group).
  std::vector<std::vector<std::size_t>> indices_by_category() const;
};

struct CategoryTemplate {
  Label category = 0;
  Vector values;
  double noise_halfwidth = 0.0;
};

/// Number of timescales (subcomponents) in a multi-scale stream.
inline constexpr std::size_t kTimescales = 3;
/// Elements per subcomponent.
inline constexpr std::size_t kElementsPerTimescale = 2;

/// Fast/medium/slow stream. Subcomponent k owns sample elements 2k and 2k+1.
struct MultiScaleStream {
  std::vector<Vector> samples;
  /// latent_states[k][t] is 1 when subcomponent k is in its high state at t.
  std::array<std::vector<std::uint8_t>, kTimescales> latent_states;
  std::array<std::size_t, kTimescales> periods{};
  double low = 0.2;
  double high = 0.8;
  double noise_halfwidth = 0.1;

  std::size_t size() const { return samples.size(); }
  /// Latent trace of subcomponent k expressed in feature units (low/high).
  Vector latent_values(std::size_t k) const;
  /// Output-index partition: element indices owned by each subcomponent.
  static std::vector<std::vector<std::size_t>> subcomponent_map();
};

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { io, wrong_magic, truncated, count_mismatch, parse };

  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an IDX image/label pair (plain or gzip-compressed). Pixels are scaled
/// by 1/255.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// Writes an uncompressed IDX pair. Values are quantized to round(v * 255)
/// after clamping to [0, 1]; rows * cols must equal the feature dimension.
void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, std::size_t rows, std::size_t cols);

struct LowOverlapOptions {
  double high = 0.8;
  double low = 0.2;
};

/// One template per category: a disjoint block of dim / num_categories high
/// elements over a low background.
std::vector<CategoryTemplate> low_overlap_templates(std::size_t num_categories, std::size_t dim,
                                                    double noise_halfwidth,
                                                    const LowOverlapOptions& options = {});

/// Template + uniform(-noise, +noise) exemplars, clipped to [0, 1]. Samples are
/// stored category-major.
Dataset gen_low_overlap(Rng& rng, std::size_t num_categories, std::size_t items_per_category,
                        std::size_t dim, double noise_halfwidth,
                        const LowOverlapOptions& options = {});

struct NonOverlappingOptions {
  double active = 0.8;
  double noise_halfwidth = 0.1;
  /// Pair categories (2m, 2m+1) as A and -A over the same support. Values then
  /// leave [0, 1] and pair supports coincide.
  bool antiphase = false;
};

/// Categories live on disjoint index blocks with an exactly-zero background.
Dataset gen_non_overlapping_stream(Rng& rng, std::size_t num_categories,
                                   std::size_t items_per_category, std::size_t dim,
                                   const NonOverlappingOptions& options = {});

/// Indices where a sample is non-zero.
std::vector<std::size_t> support(std::span<const double> sample);

MultiScaleStream gen_multiscale(Rng& rng, std::size_t length,
                                const std::array<std::size_t, kTimescales>& periods,
                                double noise_halfwidth = 0.1, double low = 0.2,
                                double high = 0.8);

/// Per-category seeded split; each category keeps round(n * (1 - test_fraction))
/// items in the train part.
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, Rng& rng,
                                             double test_fraction);

/// First `count` samples of a seeded permutation (whole set when count >= size).
Dataset seeded_subset(const Dataset& dataset, Rng& rng, std::size_t count);

/// Equal-sized seeded draw from every category: min(per_category, smallest
/// category size) items each, kept in dataset order. Every category must be
/// nonempty.
Dataset balanced_subset(const Dataset& dataset, Rng& rng, std::size_t per_category);

/// Wraps a multi-scale stream as an autoencoder dataset (labels all 0).
Dataset as_dataset(const MultiScaleStream& stream, std::string name = "multiscale");

/// CSV with header f0..f{d-1},label.
void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace tempolearn
