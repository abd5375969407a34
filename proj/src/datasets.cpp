#include "tempolearn/datasets.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include "tempolearn/csv.hpp"

namespace tempolearn {

void Dataset::validate() const {
  if (labels.size() != samples.size()) {
    throw std::invalid_argument(name + ": label count " + std::to_string(labels.size()) +
                                " != sample count " + std::to_string(samples.size()));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != feature_dim) {
      throw std::invalid_argument(name + ": sample " + std::to_string(i) + " has dimension " +
                                  std::to_string(samples[i].size()) + ", expected " +
                                  std::to_string(feature_dim));
    }
    if (labels[i] >= num_categories) {
      throw std::invalid_argument(name + ": label " + std::to_string(labels[i]) +
                                  " out of range for " + std::to_string(num_categories) +
                                  " categories");
    }
  }
}

std::vector<std::vector<std::size_t>> Dataset::indices_by_category() const {
  std::vector<std::vector<std::size_t>> groups(num_categories);
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

Vector MultiScaleStream::latent_values(std::size_t k) const {
  Vector out(latent_states.at(k).size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = latent_states[k][t] ? high : low;
  return out;
}

std::vector<std::vector<std::size_t>> MultiScaleStream::subcomponent_map() {
  std::vector<std::vector<std::size_t>> map(kTimescales);
  for (std::size_t k = 0; k < kTimescales; ++k) {
    for (std::size_t e = 0; e < kElementsPerTimescale; ++e) {
      map[k].push_back(k * kElementsPerTimescale + e);
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

struct GzCloser {
  void operator()(gzFile_s* f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

// gzread passes uncompressed files through unchanged, so this reads both forms.
std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  GzHandle file(gzopen(path.c_str(), "rb"));
  if (!file) throw DatasetError(DatasetError::Kind::io, "cannot open " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  for (;;) {
    const int n = gzread(file.get(), buf, sizeof(buf));
    if (n < 0) throw DatasetError(DatasetError::Kind::io, "read error in " + path.string());
    if (n == 0) break;
    bytes.insert(bytes.end(), buf, buf + n);
  }
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    throw DatasetError(DatasetError::Kind::truncated,
                       path.string() + ": truncated header at byte " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    std::ostringstream msg;
    msg << path.string() << ": wrong magic number 0x" << std::hex << got << " (expected 0x"
        << want << ")";
    throw DatasetError(DatasetError::Kind::wrong_magic, msg.str());
  }
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto image_bytes = read_all(images_path);
  const auto label_bytes = read_all(labels_path);

  check_magic(read_be32(image_bytes, 0, images_path), kIdxImagesMagic, images_path);
  check_magic(read_be32(label_bytes, 0, labels_path), kIdxLabelsMagic, labels_path);

  const std::size_t image_count = read_be32(image_bytes, 4, images_path);
  const std::size_t rows = read_be32(image_bytes, 8, images_path);
  const std::size_t cols = read_be32(image_bytes, 12, images_path);
  const std::size_t label_count = read_be32(label_bytes, 4, labels_path);

  if (image_count != label_count) {
    throw DatasetError(DatasetError::Kind::count_mismatch,
                       "image count " + std::to_string(image_count) + " in " +
                           images_path.string() + " != label count " +
                           std::to_string(label_count) + " in " + labels_path.string());
  }
  const std::size_t dim = rows * cols;
  constexpr std::size_t kImageHeader = 16;
  constexpr std::size_t kLabelHeader = 8;
  if (image_bytes.size() < kImageHeader + image_count * dim) {
    throw DatasetError(DatasetError::Kind::truncated,
                       images_path.string() + ": truncated pixel data (" +
                           std::to_string(image_bytes.size() - kImageHeader) + " of " +
                           std::to_string(image_count * dim) + " bytes)");
  }
  if (label_bytes.size() < kLabelHeader + label_count) {
    throw DatasetError(DatasetError::Kind::truncated,
                       labels_path.string() + ": truncated label data (" +
                           std::to_string(label_bytes.size() - kLabelHeader) + " of " +
                           std::to_string(label_count) + " bytes)");
  }

  Dataset ds;
  ds.name = images_path.filename().string();
  ds.feature_dim = dim;
  ds.samples.resize(image_count, Vector(dim));
  ds.labels.resize(image_count);
  for (std::size_t i = 0; i < image_count; ++i) {
    const unsigned char* px = image_bytes.data() + kImageHeader + i * dim;
    for (std::size_t j = 0; j < dim; ++j) ds.samples[i][j] = px[j] / 255.0;
    ds.labels[i] = label_bytes[kLabelHeader + i];
  }
  const auto top = std::max_element(ds.labels.begin(), ds.labels.end());
  ds.num_categories = top == ds.labels.end() ? 0 : *top + 1;
  return ds;
}

void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, std::size_t rows, std::size_t cols) {
  if (rows * cols != dataset.feature_dim) {
    throw std::invalid_argument("write_idx: rows * cols must equal feature_dim");
  }
  std::ofstream images(images_path, std::ios::binary | std::ios::trunc);
  std::ofstream labels(labels_path, std::ios::binary | std::ios::trunc);
  if (!images || !labels) throw DatasetError(DatasetError::Kind::io, "write_idx: cannot open output");
  write_be32(images, kIdxImagesMagic);
  write_be32(images, static_cast<std::uint32_t>(dataset.size()));
  write_be32(images, static_cast<std::uint32_t>(rows));
  write_be32(images, static_cast<std::uint32_t>(cols));
  write_be32(labels, kIdxLabelsMagic);
  write_be32(labels, static_cast<std::uint32_t>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.samples[i]) {
      const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
      images.put(static_cast<char>(static_cast<unsigned char>(q)));
    }
    if (dataset.labels[i] > 255) throw std::invalid_argument("write_idx: label exceeds one byte");
    labels.put(static_cast<char>(static_cast<unsigned char>(dataset.labels[i])));
  }
}

// ---------------------------------------------------------------------------
// Synthetic generators

std::vector<CategoryTemplate> low_overlap_templates(std::size_t num_categories, std::size_t dim,
                                                    double noise_halfwidth,
                                                    const LowOverlapOptions& options) {
  if (num_categories < 2) throw std::invalid_argument("low_overlap: need >= 2 categories");
  if (dim < num_categories) {
    throw std::invalid_argument("low_overlap: dim " + std::to_string(dim) +
                                " < num_categories " + std::to_string(num_categories));
  }
  if (noise_halfwidth < 0.0) throw std::invalid_argument("low_overlap: negative noise");
  const std::size_t block = dim / num_categories;
  std::vector<CategoryTemplate> templates(num_categories);
  for (std::size_t c = 0; c < num_categories; ++c) {
    templates[c].category = c;
    templates[c].noise_halfwidth = noise_halfwidth;
    templates[c].values.assign(dim, options.low);
    std::fill_n(templates[c].values.begin() + static_cast<std::ptrdiff_t>(c * block), block,
                options.high);
  }
  return templates;
}

Dataset gen_low_overlap(Rng& rng, std::size_t num_categories, std::size_t items_per_category,
                        std::size_t dim, double noise_halfwidth,
                        const LowOverlapOptions& options) {
  const auto templates = low_overlap_templates(num_categories, dim, noise_halfwidth, options);
  Dataset ds;
  ds.name = "low_overlap";
  ds.feature_dim = dim;
  ds.num_categories = num_categories;
  ds.samples.reserve(num_categories * items_per_category);
  for (const auto& tpl : templates) {
    for (std::size_t i = 0; i < items_per_category; ++i) {
      Vector x(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        const double noise = noise_halfwidth > 0.0
                                 ? rng.uniform(-noise_halfwidth, noise_halfwidth)
                                 : 0.0;
        x[j] = std::clamp(tpl.values[j] + noise, 0.0, 1.0);
      }
      ds.samples.push_back(std::move(x));
      ds.labels.push_back(tpl.category);
    }
  }
  return ds;
}

Dataset gen_non_overlapping_stream(Rng& rng, std::size_t num_categories,
                                   std::size_t items_per_category, std::size_t dim,
                                   const NonOverlappingOptions& options) {
  if (num_categories < 2) throw std::invalid_argument("non_overlapping: need >= 2 categories");
  if (dim < 2 * num_categories) {
    throw std::invalid_argument("non_overlapping: dim " + std::to_string(dim) +
                                " < 2 * num_categories");
  }
  if (options.noise_halfwidth >= options.active) {
    throw std::invalid_argument("non_overlapping: noise would zero active features");
  }
  if (options.antiphase && num_categories % 2 != 0) {
    throw std::invalid_argument("non_overlapping: antiphase needs an even category count");
  }
  const std::size_t block = dim / num_categories;
  Dataset ds;
  ds.name = options.antiphase ? "antiphase" : "non_overlapping";
  ds.feature_dim = dim;
  ds.num_categories = num_categories;
  for (std::size_t c = 0; c < num_categories; ++c) {
    // Antiphase pairs share the block of their even member, with flipped sign.
    const std::size_t owner = options.antiphase ? c - c % 2 : c;
    const double sign = options.antiphase && c % 2 == 1 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < items_per_category; ++i) {
      Vector x(dim, 0.0);
      for (std::size_t j = owner * block; j < (owner + 1) * block; ++j) {
        const double noise = options.noise_halfwidth > 0.0
                                 ? rng.uniform(-options.noise_halfwidth, options.noise_halfwidth)
                                 : 0.0;
        x[j] = sign * (options.active + noise);
      }
      ds.samples.push_back(std::move(x));
      ds.labels.push_back(c);
    }
  }
  return ds;
}

std::vector<std::size_t> support(std::span<const double> sample) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < sample.size(); ++j) {
    if (sample[j] != 0.0) idx.push_back(j);
  }
  return idx;
}

MultiScaleStream gen_multiscale(Rng& rng, std::size_t length,
                                const std::array<std::size_t, kTimescales>& periods,
                                double noise_halfwidth, double low, double high) {
  for (auto p : periods) {
    if (p == 0) throw std::invalid_argument("gen_multiscale: periods must be >= 1");
  }
  if (!(low < high)) throw std::invalid_argument("gen_multiscale: low must be < high");
  if (noise_halfwidth < 0.0 || low - noise_halfwidth < 0.0 || high + noise_halfwidth > 1.0) {
    throw std::invalid_argument("gen_multiscale: low/high +- noise must stay within [0, 1]");
  }
  MultiScaleStream stream;
  stream.periods = periods;
  stream.low = low;
  stream.high = high;
  stream.noise_halfwidth = noise_halfwidth;
  // Each latent trace starts in a seeded random state and flips at every
  // multiple of its period.
  std::array<std::uint8_t, kTimescales> state{};
  for (auto& s : state) s = static_cast<std::uint8_t>(rng.below(2));
  for (auto& trace : stream.latent_states) trace.resize(length);
  stream.samples.resize(length, Vector(kTimescales * kElementsPerTimescale));
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t k = 0; k < kTimescales; ++k) {
      if (t > 0 && t % periods[k] == 0) state[k] ^= 1U;
      stream.latent_states[k][t] = state[k];
      const double level = state[k] ? high : low;
      for (std::size_t e = 0; e < kElementsPerTimescale; ++e) {
        const double noise =
            noise_halfwidth > 0.0 ? rng.uniform(-noise_halfwidth, noise_halfwidth) : 0.0;
        stream.samples[t][k * kElementsPerTimescale + e] = level + noise;
      }
    }
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Splits and conversions

namespace {

Dataset empty_like(const Dataset& ds, std::string suffix) {
  Dataset out;
  out.name = ds.name + suffix;
  out.feature_dim = ds.feature_dim;
  out.num_categories = ds.num_categories;
  return out;
}

void append(Dataset& out, const Dataset& src, std::size_t index) {
  out.samples.push_back(src.samples[index]);
  out.labels.push_back(src.labels[index]);
}

}  // namespace

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, Rng& rng,
                                             double test_fraction) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument("stratified_split: test_fraction must be in [0, 1)");
  }
  Dataset train = empty_like(dataset, "/train");
  Dataset test = empty_like(dataset, "/test");
  std::vector<std::uint8_t> is_test(dataset.size(), 0);
  for (const auto& group : dataset.indices_by_category()) {
    if (group.empty()) continue;
    const auto perm = seeded_permutation(rng, group.size());
    const auto n_train = static_cast<std::size_t>(
        std::llround(static_cast<double>(group.size()) * (1.0 - test_fraction)));
    for (std::size_t i = n_train; i < group.size(); ++i) is_test[group[perm[i]]] = 1;
  }
  // Keep the original relative order inside each part.
  for (std::size_t i = 0; i < dataset.size(); ++i) append(is_test[i] ? test : train, dataset, i);
  return {std::move(train), std::move(test)};
}

Dataset seeded_subset(const Dataset& dataset, Rng& rng, std::size_t count) {
  if (count >= dataset.size()) return dataset;
  auto perm = seeded_permutation(rng, dataset.size());
  perm.resize(count);
  std::sort(perm.begin(), perm.end());
  Dataset out = empty_like(dataset, "/subset");
  for (auto i : perm) append(out, dataset, i);
  return out;
}

Dataset balanced_subset(const Dataset& dataset, Rng& rng, std::size_t per_category) {
  const auto groups = dataset.indices_by_category();
  std::size_t take = per_category;
  for (const auto& g : groups) take = std::min(take, g.size());
  std::vector<std::uint8_t> keep(dataset.size(), 0);
  for (const auto& g : groups) {
    const auto perm = seeded_permutation(rng, g.size());
    for (std::size_t i = 0; i < take; ++i) keep[g[perm[i]]] = 1;
  }
  Dataset out = empty_like(dataset, "/balanced");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (keep[i]) append(out, dataset, i);
  }
  return out;
}

Dataset as_dataset(const MultiScaleStream& stream, std::string name) {
  Dataset ds;
  ds.name = std::move(name);
  ds.feature_dim = kTimescales * kElementsPerTimescale;
  ds.num_categories = 1;
  ds.samples = stream.samples;
  ds.labels.assign(stream.size(), 0);
  return ds;
}

void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::vector<std::string> header;
  for (std::size_t j = 0; j < dataset.feature_dim; ++j) header.push_back("f" + std::to_string(j));
  header.emplace_back("label");
  csv::Writer out(path, header);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.samples[i]) out.field(v);
    out.field(dataset.labels[i]);
    out.end_row();
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetError::Kind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw DatasetError(DatasetError::Kind::parse, path.string() + ": missing header");
  }
  const auto header = csv::split_line(line);
  if (header.empty() || header.back() != "label") {
    throw DatasetError(DatasetError::Kind::parse, path.string() + ": last column must be 'label'");
  }
  Dataset ds;
  ds.name = path.stem().string();
  ds.feature_dim = header.size() - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != header.size()) {
      throw DatasetError(DatasetError::Kind::parse,
                         path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields");
    }
    Vector x(ds.feature_dim);
    try {
      for (std::size_t j = 0; j < ds.feature_dim; ++j) x[j] = csv::parse_double(fields[j]);
      const double label = csv::parse_double(fields.back());
      if (label < 0.0 || label != std::floor(label)) throw std::invalid_argument("bad label");
      ds.labels.push_back(static_cast<Label>(label));
    } catch (const std::invalid_argument& e) {
      throw DatasetError(DatasetError::Kind::parse,
                         path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    ds.samples.push_back(std::move(x));
  }
  const auto top = std::max_element(ds.labels.begin(), ds.labels.end());
  ds.num_categories = top == ds.labels.end() ? 0 : *top + 1;
  return ds;
}

}  // namespace tempolearn
