#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "tempolearn/datasets.hpp"
#include "tempolearn/experiments.hpp"

using namespace tempolearn;

namespace {
std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "tempolearn_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
}  // namespace

TEST_CASE("gen_low_overlap shapes and templates") {
  Rng rng(1);
  const Dataset d = gen_low_overlap(rng, 4, 300, 16, 0.1);
  CHECK(d.size() == 1200);
  CHECK(d.feature_dim == 16);
  CHECK(d.num_categories == 4);
  CHECK(std::set<Label>(d.labels.begin(), d.labels.end()).size() == 4);
  CHECK_NOTHROW(d.validate());
  for (const auto& s : d.samples) {
    CHECK(std::all_of(s.begin(), s.end(), [](double v) { return v >= 0.0 && v <= 1.0; }));
  }

  Rng z(1);
  const Dataset exact = gen_low_overlap(z, 4, 5, 16, 0.0);
  const auto templates = low_overlap_templates(4, 16, 0.0);
  for (std::size_t i = 0; i < exact.size(); ++i) {
    CHECK(exact.samples[i] == templates[exact.labels[i]].values);
  }
}

TEST_CASE("low-overlap templates have disjoint high blocks") {
  const auto t = low_overlap_templates(4, 16, 0.1);
  for (std::size_t a = 0; a < t.size(); ++a) {
    for (std::size_t b = a + 1; b < t.size(); ++b) {
      int dot = 0;
      for (std::size_t i = 0; i < 16; ++i) dot += (t[a].values[i] == 0.8) * (t[b].values[i] == 0.8);
      CHECK(dot == 0);
    }
  }
}

TEST_CASE("non-overlapping stream supports are disjoint") {
  Rng rng(2);
  const Dataset d = gen_non_overlapping_stream(rng, 2, 10, 8);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto s = support(d.samples[i]);
    const std::size_t lo = d.labels[i] * 4;
    CHECK(std::all_of(s.begin(), s.end(), [&](std::size_t j) { return j >= lo && j < lo + 4; }));
  }
  Rng r4(3);
  const Dataset four = gen_non_overlapping_stream(r4, 4, 20, 16);
  for (std::size_t i = 0; i < four.size(); ++i) {
    for (std::size_t j = 0; j < four.size(); ++j) {
      if (four.labels[i] == four.labels[j]) continue;
      const auto a = support(four.samples[i]);
      const auto b = support(four.samples[j]);
      std::vector<std::size_t> both;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
      CHECK(both.empty());
    }
  }
  NonOverlappingOptions anti;
  anti.antiphase = true;
  anti.noise_halfwidth = 0.0;
  Rng ra(4);
  const Dataset p = gen_non_overlapping_stream(ra, 2, 3, 8, anti);
  const auto a = std::find(p.labels.begin(), p.labels.end(), 0) - p.labels.begin();
  const auto b = std::find(p.labels.begin(), p.labels.end(), 1) - p.labels.begin();
  for (std::size_t i = 0; i < 8; ++i) CHECK(p.samples[a][i] == -p.samples[b][i]);
}

TEST_CASE("gen_multiscale") {
  Rng rng(5);
  const auto s = gen_multiscale(rng, 15, {1, 3, 5});
  CHECK(s.size() == 15);
  std::size_t runs = 1;
  for (std::size_t t = 1; t < 15; ++t) {
    if (t % 5 == 0) {
      ++runs;
    } else {
      CHECK(s.latent_states[2][t] == s.latent_states[2][t - 1]);
    }
  }
  CHECK(runs == 3);
  for (const auto& x : s.samples) {
    CHECK(std::all_of(x.begin(), x.end(), [](double v) { return v >= 0.1 && v <= 0.9; }));
  }
  Rng quiet(5);
  const auto q = gen_multiscale(quiet, 50, {1, 3, 5}, 0.0);
  for (const auto& x : q.samples) {
    for (std::size_t k = 0; k < kTimescales; ++k) CHECK(x[2 * k] == x[2 * k + 1]);
  }
  const auto d = as_dataset(q);
  CHECK(d.size() == 50);
  CHECK(d.feature_dim == 6);
}

TEST_CASE("stratified_split keeps per-category proportions") {
  Rng rng(6);
  const Dataset d = gen_low_overlap(rng, 4, 300, 16, 0.1);
  Rng split(7);
  const auto [train, test] = stratified_split(d, split, 0.2);
  CHECK(train.size() == 960);
  CHECK(test.size() == 240);
  for (const auto& g : train.indices_by_category()) CHECK(g.size() == 240);
  Rng s2(7);
  const auto again = stratified_split(d, s2, 0.2);
  CHECK(again.first.samples == train.samples);
}

TEST_CASE("balanced_subset and seeded_subset") {
  Rng rng(8);
  const Dataset d = gen_low_overlap(rng, 3, 10, 6, 0.1);
  Rng r(1);
  const Dataset b = balanced_subset(d, r, 4);
  CHECK(b.size() == 12);
  for (const auto& g : b.indices_by_category()) CHECK(g.size() == 4);
  Rng s(1);
  CHECK(seeded_subset(d, s, 7).size() == 7);
  Rng all(1);
  CHECK(seeded_subset(d, all, 100).size() == 30);
}

TEST_CASE("dataset CSV round trip") {
  Rng rng(9);
  const Dataset d = gen_low_overlap(rng, 2, 3, 4, 0.1);
  const auto path = scratch("dataset.csv");
  write_dataset_csv(d, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "f0,f1,f2,f3,label");
  const Dataset back = read_dataset_csv(path);
  CHECK(back.samples == d.samples);
  CHECK(back.labels == d.labels);
}

TEST_CASE("IDX loader") {
  const auto images = scratch("fixture-images-idx3-ubyte");
  const auto labels = scratch("fixture-labels-idx1-ubyte");
  {
    std::ofstream img(images, std::ios::binary);
    write_be32(img, kIdxImagesMagic);
    write_be32(img, 2);
    write_be32(img, 2);
    write_be32(img, 2);
    const char zeros[8] = {};
    img.write(zeros, 8);
    std::ofstream lab(labels, std::ios::binary);
    write_be32(lab, kIdxLabelsMagic);
    write_be32(lab, 2);
    const char l[2] = {3, 7};
    lab.write(l, 2);
  }
  const Dataset d = load_idx(images, labels);
  CHECK(d.size() == 2);
  CHECK(d.feature_dim == 4);
  CHECK(d.samples[0] == Vector{0, 0, 0, 0});
  CHECK(d.labels == std::vector<Label>{3, 7});

  try {
    load_idx(labels, labels);
    FAIL("expected an error");
  } catch (const DatasetError& e) {
    CHECK(e.kind() == DatasetError::Kind::wrong_magic);
    CHECK(std::string(e.what()).find("wrong magic") != std::string::npos);
  }

  const auto truncated = scratch("truncated-images");
  {
    std::ofstream img(truncated, std::ios::binary);
    write_be32(img, kIdxImagesMagic);
    write_be32(img, 5);
    write_be32(img, 2);
    write_be32(img, 2);
  }
  CHECK_THROWS_AS(load_idx(truncated, labels), DatasetError);
  CHECK_THROWS_AS(load_idx(scratch("missing"), labels), DatasetError);
}

TEST_CASE("IDX write/load round trip quantizes to 1/255") {
  Rng rng(10);
  Dataset d = gen_low_overlap(rng, 2, 4, 4, 0.1);
  const auto images = scratch("rt-images"), labels = scratch("rt-labels");
  write_idx(d, images, labels, 2, 2);
  const Dataset back = load_idx(images, labels);
  CHECK(back.labels == d.labels);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(back.samples[i][j] - d.samples[i][j]) <= 0.5 / 255 + 1e-12);
    }
  }
}

TEST_CASE("bundled MNIST subset loads") {
  const auto data = mnist_classification(1, MnistOptions::desk());
  CHECK(data.train.feature_dim == 784);
  CHECK(data.train.num_categories == 10);
  CHECK(data.test.size() > 0);
  for (const auto& g : data.train.indices_by_category()) {
    CHECK(g.size() == data.train.indices_by_category()[0].size());
  }
}
