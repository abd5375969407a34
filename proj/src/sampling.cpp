#include "tempolearn/sampling.hpp"

#include <algorithm>
#include <stdexcept>

#include "tempolearn/csv.hpp"

namespace tempolearn {

namespace {
constexpr std::uint64_t kCategoryOrderStream = 1;
constexpr std::uint64_t kWithinOrderStream = 2;
constexpr std::uint64_t kRandomScheduleStream = 3;
}  // namespace

std::string SmoothnessCondition::tag() const {
  return kind == Kind::random ? std::string("random") : "k" + std::to_string(k);
}

SmoothnessCondition SmoothnessCondition::parse(const std::string& text) {
  if (text == "random") return shuffled();
  if (text.size() >= 2 && text[0] == 'k') {
    std::size_t consumed = 0;
    const auto k = std::stoul(text.substr(1), &consumed);
    if (consumed == text.size() - 1 && k >= 1) return repetition(k);
  }
  throw std::invalid_argument("unknown smoothness condition '" + text +
                              "' (expected 'random' or 'k<N>')");
}

std::vector<SmoothnessCondition> standard_conditions() {
  return {SmoothnessCondition::repetition(1),  SmoothnessCondition::repetition(3),
          SmoothnessCondition::repetition(5),  SmoothnessCondition::repetition(10),
          SmoothnessCondition::repetition(16), SmoothnessCondition::repetition(24),
          SmoothnessCondition::shuffled()};
}

WithinCategoryOrders shared_within_category_orders(const Dataset& dataset, Rng& rng) {
  if (dataset.empty()) throw std::invalid_argument("shared_within_category_orders: empty dataset");
  auto groups = dataset.indices_by_category();
  for (auto& group : groups) {
    if (group.empty()) continue;
    const auto perm = seeded_permutation(rng, group.size());
    std::vector<std::size_t> shuffled(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) shuffled[i] = group[perm[i]];
    group = std::move(shuffled);
  }
  return groups;
}

SamplingSession make_session(const Dataset& dataset, std::uint64_t seed) {
  if (dataset.empty()) throw std::invalid_argument("make_session: empty dataset");
  SamplingSession session;
  session.seed = seed;
  Rng category_rng(derive_seed(seed, kCategoryOrderStream));
  const auto perm = seeded_permutation(category_rng, dataset.num_categories);
  session.category_order.assign(perm.begin(), perm.end());
  Rng within_rng(derive_seed(seed, kWithinOrderStream));
  session.within_category_orders = shared_within_category_orders(dataset, within_rng);
  return session;
}

std::vector<std::uint8_t> boundary_flags(const Dataset& dataset,
                                         const std::vector<std::size_t>& order) {
  std::vector<std::uint8_t> flags(order.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    flags[i] = i == 0 || dataset.labels[order[i]] != dataset.labels[order[i - 1]];
  }
  return flags;
}

std::vector<std::size_t> run_lengths(const Dataset& dataset,
                                     const std::vector<std::size_t>& order) {
  std::vector<std::size_t> runs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || dataset.labels[order[i]] != dataset.labels[order[i - 1]]) {
      runs.push_back(1);
    } else {
      ++runs.back();
    }
  }
  return runs;
}

Schedule k_repetition_schedule(const Dataset& dataset, const std::vector<Label>& category_order,
                               const WithinCategoryOrders& within_category_orders,
                               std::size_t k) {
  if (dataset.empty()) throw std::invalid_argument("k_repetition_schedule: empty dataset");
  if (k == 0) throw std::invalid_argument("k_repetition_schedule: k must be >= 1");
  if (within_category_orders.size() != dataset.num_categories) {
    throw std::invalid_argument("k_repetition_schedule: need one within-category order per category");
  }
  std::size_t total = 0;
  for (const auto& group : within_category_orders) total += group.size();
  if (total != dataset.size()) {
    throw std::invalid_argument("k_repetition_schedule: within-category orders do not cover the dataset");
  }

  Schedule schedule;
  schedule.condition = SmoothnessCondition::repetition(k);
  schedule.category_order = category_order;
  schedule.order.reserve(dataset.size());
  std::vector<std::size_t> cursor(dataset.num_categories, 0);
  bool emitted = true;
  while (emitted) {
    emitted = false;
    for (Label c : category_order) {
      const auto& group = within_category_orders.at(c);
      const std::size_t take = std::min(k, group.size() - cursor[c]);
      for (std::size_t i = 0; i < take; ++i) schedule.order.push_back(group[cursor[c]++]);
      emitted = emitted || take > 0;
    }
  }
  if (schedule.order.size() != dataset.size()) {
    throw std::invalid_argument("k_repetition_schedule: category_order misses a non-empty category");
  }
  schedule.boundary_flags = boundary_flags(dataset, schedule.order);
  return schedule;
}

Schedule random_schedule(const Dataset& dataset, Rng& rng) {
  if (dataset.empty()) throw std::invalid_argument("random_schedule: empty dataset");
  Schedule schedule;
  schedule.seed = rng.seed();
  schedule.condition = SmoothnessCondition::shuffled();
  schedule.order = seeded_permutation(rng, dataset.size());
  schedule.boundary_flags = boundary_flags(dataset, schedule.order);
  return schedule;
}

Schedule make_schedule(const Dataset& dataset, const SamplingSession& session,
                       const SmoothnessCondition& condition) {
  if (condition.kind == SmoothnessCondition::Kind::random) {
    Rng rng(derive_seed(session.seed, kRandomScheduleStream));
    auto schedule = random_schedule(dataset, rng);
    schedule.seed = session.seed;
    return schedule;
  }
  auto schedule = k_repetition_schedule(dataset, session.category_order,
                                        session.within_category_orders, condition.k);
  schedule.seed = session.seed;
  return schedule;
}

Schedule schedule_from_order(const Dataset& dataset, std::vector<std::size_t> order,
                             SmoothnessCondition condition) {
  std::vector<std::uint8_t> seen(dataset.size(), 0);
  for (auto i : order) {
    if (i >= dataset.size() || seen[i]) {
      throw std::invalid_argument("schedule_from_order: order is not a permutation of the dataset");
    }
    seen[i] = 1;
  }
  if (order.size() != dataset.size()) {
    throw std::invalid_argument("schedule_from_order: order is not a permutation of the dataset");
  }
  Schedule schedule;
  schedule.condition = condition;
  schedule.order = std::move(order);
  schedule.boundary_flags = boundary_flags(dataset, schedule.order);
  return schedule;
}

void write_schedule_csv(const Dataset& dataset, const Schedule& schedule,
                        const std::filesystem::path& path) {
  csv::Writer out(path, {"position", "sample_index", "category", "boundary"});
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    out.field(i).field(schedule.order[i]).field(dataset.labels[schedule.order[i]]);
    out.field(schedule.boundary_flags[i] != 0);
    out.end_row();
  }
}

}  // namespace tempolearn
