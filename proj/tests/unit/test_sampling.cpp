#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "schedule_invariants.hpp"
#include "tempolearn/sampling.hpp"

using namespace tempolearn;

namespace {
/// Dataset with the given category sizes; sample i of category c is {c, i}.
Dataset sized(const std::vector<std::size_t>& sizes) {
  Dataset d;
  d.feature_dim = 2;
  d.num_categories = sizes.size();
  for (Label c = 0; c < sizes.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      d.samples.push_back({double(c), double(i)});
      d.labels.push_back(c);
    }
  }
  return d;
}

std::vector<Label> labels_of(const Dataset& d, const Schedule& s) {
  std::vector<Label> out;
  for (auto i : s.order) out.push_back(d.labels[i]);
  return out;
}

WithinCategoryOrders identity_orders(const Dataset& d) { return d.indices_by_category(); }
}  // namespace

TEST_CASE("k-repetition on three categories in cycle B-A-C") {
  const Dataset d = sized({6, 6, 6});
  const std::vector<Label> cycle{1, 0, 2};
  const auto k1 = k_repetition_schedule(d, cycle, identity_orders(d), 1);
  CHECK(std::vector<std::size_t>(k1.order.begin(), k1.order.begin() + 6) ==
        std::vector<std::size_t>{6, 0, 12, 7, 1, 13});
  const auto k3 = k_repetition_schedule(d, cycle, identity_orders(d), 3);
  CHECK(std::vector<std::size_t>(k3.order.begin(), k3.order.begin() + 10) ==
        std::vector<std::size_t>{6, 7, 8, 0, 1, 2, 12, 13, 14, 9});
}

TEST_CASE("k-repetition with an exhausted category") {
  const Dataset d = sized({2, 5});
  const auto s = k_repetition_schedule(d, {0, 1}, identity_orders(d), 2);
  CHECK(labels_of(d, s) == std::vector<Label>{0, 0, 1, 1, 1, 1, 1});
  CHECK(run_lengths(d, s.order) == std::vector<std::size_t>{2, 5});
}

TEST_CASE("k-repetition input validation") {
  const Dataset d = sized({2, 2});
  CHECK_THROWS(k_repetition_schedule(d, {0, 1}, identity_orders(d), 0));
  CHECK_THROWS(k_repetition_schedule(d, {0}, identity_orders(d), 1));
  CHECK_THROWS(k_repetition_schedule(Dataset{}, {}, {}, 1));
}

TEST_CASE("random schedule") {
  const Dataset one = sized({1});
  Rng rng(1);
  const auto s = random_schedule(one, rng);
  CHECK(s.order == std::vector<std::size_t>{0});
  CHECK(s.boundary_flags == std::vector<std::uint8_t>{1});
  const Dataset d = sized({5, 5, 5});
  Rng a(3), b(3);
  CHECK(random_schedule(d, a).order == random_schedule(d, b).order);
}

// Monte-Carlo oracle: in a uniform permutation of 4 balanced categories of
// size m (N = 4m), adjacent labels differ with probability 1 - (m-1)/(N-1),
// so the pooled mean run length is N / (1 + (N-1) p).
TEST_CASE("random schedule run lengths match sampling without replacement") {
  const std::size_t m = 5, n = 4 * m;
  const Dataset d = sized({m, m, m, m});
  const double p_differ = 1.0 - double(m - 1) / double(n - 1);
  const int seeds = 10000;
  double runs = 0.0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(derive_seed(99, s));
    runs += run_lengths(d, random_schedule(d, rng).order).size();
  }
  const double pooled_mean_run = double(n) * seeds / runs;
  CHECK(pooled_mean_run == doctest::Approx(double(n) / (1.0 + (n - 1) * p_differ)).epsilon(0.01));
}

TEST_CASE("shared within-category orders") {
  const Dataset d = sized({300, 300, 300, 300});
  Rng rng(2);
  const auto w = shared_within_category_orders(d, rng);
  REQUIRE(w.size() == 4);
  for (Label c = 0; c < 4; ++c) {
    CHECK(w[c].size() == 300);
    auto sorted = w[c];
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == d.indices_by_category()[c]);
  }
  const Dataset single = sized({1, 3});
  Rng r2(2);
  CHECK(shared_within_category_orders(single, r2)[0] == std::vector<std::size_t>{0});

  const auto session = make_session(d, 5);
  const auto a = make_schedule(d, session, SmoothnessCondition::repetition(3));
  const auto b = make_schedule(d, session, SmoothnessCondition::repetition(10));
  for (Label c = 0; c < 4; ++c) {
    std::vector<std::size_t> sa, sb;
    for (auto i : a.order) if (d.labels[i] == c) sa.push_back(i);
    for (auto i : b.order) if (d.labels[i] == c) sb.push_back(i);
    CHECK(sa == sb);
  }
}

TEST_CASE("boundary flags and run lengths") {
  const Dataset d = sized({2, 2});
  const std::vector<std::size_t> order{0, 1, 2, 3};
  CHECK(boundary_flags(d, order) == std::vector<std::uint8_t>{1, 0, 1, 0});
  CHECK(run_lengths(d, order) == std::vector<std::size_t>{2, 2});
  CHECK_THROWS(schedule_from_order(d, {0, 0, 1, 2}));
}

TEST_CASE("SmoothnessCondition tags") {
  CHECK(SmoothnessCondition::repetition(5).tag() == "k5");
  CHECK(SmoothnessCondition::shuffled().tag() == "random");
  CHECK(SmoothnessCondition::parse("k16") == SmoothnessCondition::repetition(16));
  CHECK(SmoothnessCondition::parse("random") == SmoothnessCondition::shuffled());
  CHECK_THROWS(SmoothnessCondition::parse("k0"));
  CHECK_THROWS(SmoothnessCondition::parse("smooth"));
}

TEST_CASE("schedule CSV") {
  const Dataset d = sized({2, 1});
  const auto s = k_repetition_schedule(d, {1, 0}, identity_orders(d), 1);
  const auto path = std::filesystem::temp_directory_path() / "tempolearn_schedule.csv";
  write_schedule_csv(d, s, path);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  CHECK(lines == std::vector<std::string>{"position,sample_index,category,boundary", "0,2,1,1",
                                          "1,0,0,1", "2,1,0,0"});
}

// Property test: random category sizes, cycles and k.
TEST_CASE("schedule invariants hold on generated datasets") {
  Rng gen(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> sizes(1 + gen.below(6));
    for (auto& s : sizes) s = 1 + gen.below(40);
    const Dataset d = sized(sizes);
    const auto session = make_session(d, gen.next_u64());
    for (std::size_t k : {std::size_t{1}, 1 + gen.below(30)}) {
      const auto v = invariants::check(d, session, SmoothnessCondition::repetition(k));
      CHECK_MESSAGE(v.empty(), (v.empty() ? "" : v[0]));
    }
    const auto v = invariants::check(d, session, SmoothnessCondition::shuffled());
    CHECK_MESSAGE(v.empty(), (v.empty() ? "" : v[0]));
  }
}

TEST_CASE("k1 on balanced data never repeats a category") {
  const Dataset d = sized({7, 7, 7});
  const auto s = make_schedule(d, make_session(d, 4), SmoothnessCondition::repetition(1));
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s.boundary_flags[i] == 1);
}
