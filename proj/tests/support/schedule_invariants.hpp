#pragma once

// Invariant suite for sampling schedules. Each check returns a list of
// violations (empty when the schedule is valid).

#include <algorithm>
#include <string>
#include <vector>

#include "tempolearn/experiments.hpp"

namespace invariants {

using namespace tempolearn;

inline void expect(std::vector<std::string>& out, bool ok, const std::string& what) {
  if (!ok) out.push_back(what);
}

/// Category sequence a k-repetition schedule must follow, derived only from
/// category sizes: round r emits min(k, n_c - r k) copies of each category c
/// in cycle order.
inline std::vector<Label> expected_labels(const Dataset& d, const std::vector<Label>& cycle,
                                          std::size_t k) {
  const auto groups = d.indices_by_category();
  std::size_t rounds = 0;
  for (const auto& g : groups) rounds = std::max(rounds, (g.size() + k - 1) / k);
  std::vector<Label> labels;
  for (std::size_t r = 0; r < rounds; ++r) {
    for (Label c : cycle) {
      const std::size_t n = groups[c].size();
      if (n > r * k) labels.insert(labels.end(), std::min(k, n - r * k), c);
    }
  }
  return labels;
}

inline std::vector<std::string> check(const Dataset& d, const SamplingSession& session,
                                      const SmoothnessCondition& condition) {
  std::vector<std::string> out;
  const std::string tag = condition.tag() + ": ";
  const Schedule s = make_schedule(d, session, condition);

  // Permutation of every index.
  std::vector<std::size_t> sorted = s.order;
  std::sort(sorted.begin(), sorted.end());
  bool perm = sorted.size() == d.size();
  for (std::size_t i = 0; perm && i < sorted.size(); ++i) perm = sorted[i] == i;
  expect(out, perm, tag + "order is not a permutation of the dataset");
  if (!perm) return out;

  // Boundary flags mark exactly the category changes.
  bool flags = s.boundary_flags.size() == s.size();
  for (std::size_t i = 0; flags && i < s.size(); ++i) {
    const bool change = i == 0 || d.labels[s.order[i]] != d.labels[s.order[i - 1]];
    flags = (s.boundary_flags[i] != 0) == change;
  }
  expect(out, flags, tag + "boundary flags disagree with category changes");

  // Run lengths partition the stream and start at flagged positions.
  const auto runs = run_lengths(d, s.order);
  std::size_t total = 0;
  std::size_t flagged = 0;
  for (auto r : runs) total += r;
  for (auto f : s.boundary_flags) flagged += f;
  expect(out, total == s.size() && runs.size() == flagged,
         tag + "run lengths do not partition the stream at the boundaries");

  // Deterministic given the session.
  expect(out, make_schedule(d, session, condition).order == s.order,
         tag + "schedule differs between identical calls");

  if (condition.kind == SmoothnessCondition::Kind::random) return out;
  const std::size_t k = condition.k;

  // Category sequence follows the cycle with k-sized visits.
  std::vector<Label> labels;
  for (auto i : s.order) labels.push_back(d.labels[i]);
  expect(out, labels == expected_labels(d, session.category_order, k),
         tag + "category sequence deviates from k-sized visits in cycle order");

  // Condition invariance: exemplars of each category appear in the session's
  // within-category order whatever k is.
  std::vector<std::vector<std::size_t>> seen(d.num_categories);
  for (auto i : s.order) seen[d.labels[i]].push_back(i);
  expect(out, seen == session.within_category_orders,
         tag + "within-category exemplar order depends on the condition");

  // Runs never exceed k while two or more categories remain.
  const auto groups = d.indices_by_category();
  std::vector<std::size_t> remaining;
  for (const auto& g : groups) remaining.push_back(g.size());
  std::size_t pos = 0;
  bool bounded = true;
  for (auto r : runs) {
    const Label c = d.labels[s.order[pos]];
    std::size_t others = 0;
    for (Label o = 0; o < d.num_categories; ++o) others += o != c && remaining[o] > 0;
    if (others > 0 && r > k) bounded = false;
    remaining[c] -= r;
    pos += r;
  }
  expect(out, bounded, tag + "a run exceeds k while other categories remain");

  // Balanced data with n divisible by k: every run has length exactly k.
  bool balanced = d.num_categories > 1;
  for (const auto& g : groups) balanced = balanced && g.size() == groups[0].size();
  if (balanced && groups[0].size() % k == 0) {
    expect(out, std::all_of(runs.begin(), runs.end(), [&](std::size_t r) { return r == k; }),
           tag + "balanced stream has a run of length other than k");
  }
  return out;
}

/// Every condition for every session seed in [0, sessions).
inline std::vector<std::string> check_all(const Dataset& d,
                                          const std::vector<SmoothnessCondition>& conditions,
                                          std::uint64_t master, std::size_t sessions) {
  std::vector<std::string> out;
  std::vector<std::vector<std::size_t>> random_orders;
  for (std::size_t r = 0; r < sessions; ++r) {
    const auto session = run_session(d, master, r);
    for (const auto& c : conditions) {
      for (auto& v : check(d, session, c)) out.push_back("session " + std::to_string(r) + " " + v);
    }
    random_orders.push_back(make_schedule(d, session, SmoothnessCondition::shuffled()).order);
  }
  for (std::size_t r = 1; r < random_orders.size(); ++r) {
    expect(out, random_orders[r] != random_orders[0],
           "random schedules repeat across session seeds");
  }
  return out;
}

}  // namespace invariants
