#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tempolearn/datasets.hpp"
#include "tempolearn/numerics.hpp"

namespace tempolearn {

/// How consecutive training samples relate to each other.
struct SmoothnessCondition {
  enum class Kind { k_repetition, random };

  Kind kind = Kind::random;
  std::size_t k = 1;

  static SmoothnessCondition repetition(std::size_t k) { return {Kind::k_repetition, k}; }
  static SmoothnessCondition shuffled() { return {Kind::random, 0}; }

  /// "k5", "random", ... used as condition tags in CSV output.
  std::string tag() const;
  /// Parses the output of tag().
  static SmoothnessCondition parse(const std::string& text);

  bool operator==(const SmoothnessCondition&) const = default;
};

/// Smoothness presets used by the experiment suite.
std::vector<SmoothnessCondition> standard_conditions();

/// Per-category exemplar order (dataset indices), indexed by category id.
using WithinCategoryOrders = std::vector<std::vector<std::size_t>>;

struct Schedule {
  std::vector<std::size_t> order;
  /// 1 where the category differs from the previous position (always 1 at 0).
  std::vector<std::uint8_t> boundary_flags;
  SmoothnessCondition condition;
  std::vector<Label> category_order;
  std::uint64_t seed = 0;

  std::size_t size() const { return order.size(); }
};

/// Session-level choices shared by every smoothness condition: the category
/// cycle and the order in which each category's exemplars are drawn.
struct SamplingSession {
  std::vector<Label> category_order;
  WithinCategoryOrders within_category_orders;
  std::uint64_t seed = 0;
};

WithinCategoryOrders shared_within_category_orders(const Dataset& dataset, Rng& rng);

SamplingSession make_session(const Dataset& dataset, std::uint64_t seed);

/// Cycles through category_order; each visit emits the next k unseen
/// exemplars of that category (fewer when it runs out). Exhausted categories
/// drop out of the cycle.
Schedule k_repetition_schedule(const Dataset& dataset, const std::vector<Label>& category_order,
                               const WithinCategoryOrders& within_category_orders, std::size_t k);

/// Uniform permutation of every index.
Schedule random_schedule(const Dataset& dataset, Rng& rng);

/// Schedule for `condition` in a session. Random schedules draw from a stream
/// derived from the session seed.
Schedule make_schedule(const Dataset& dataset, const SamplingSession& session,
                       const SmoothnessCondition& condition);

/// Wraps an explicit order (must be a permutation of the dataset indices).
Schedule schedule_from_order(const Dataset& dataset, std::vector<std::size_t> order,
                             SmoothnessCondition condition = SmoothnessCondition::shuffled());

std::vector<std::uint8_t> boundary_flags(const Dataset& dataset,
                                         const std::vector<std::size_t>& order);

/// Lengths of maximal same-category runs along the order.
std::vector<std::size_t> run_lengths(const Dataset& dataset, const std::vector<std::size_t>& order);

/// position,sample_index,category,boundary
void write_schedule_csv(const Dataset& dataset, const Schedule& schedule,
                        const std::filesystem::path& path);

}  // namespace tempolearn
