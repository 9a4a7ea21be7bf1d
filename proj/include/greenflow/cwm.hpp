#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "greenflow/evaluate.hpp"
#include "greenflow/heft_sl.hpp"
#include "greenflow/model.hpp"

namespace greenflow {

struct CwmParams {
  double tau = 0.8;     // fraction of the surplus budget the subset may draw
  int phi = 500;        // local search iterations
  int retries = 3;      // per-task interval advances during the initial mapping
  std::uint64_t seed = 0;
  bool keep_best = true;

  static CwmParams from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

// processor subset to use while a given profile interval is active
using SubsetMap = std::vector<std::vector<int>>;

// idle draw of all P^2 resources; consumed no matter what runs
double base_power(const Cluster& c);

// 0/1 knapsack, integer weights, divide-and-conquer reconstruction so memory
// stays O(capacity). Returns the chosen item indices in ascending order.
struct KnapsackSolution {
  double value = 0.0;
  std::vector<int> chosen;
};
KnapsackSolution knapsack_max_value(std::span<const long long> weights,
                                    std::span<const double> values, long long capacity);

// weight quantization applied before the knapsack (3 decimals)
inline constexpr double kPowerScale = 1000.0;

// Knapsack over the compute processors: weight = work power, value = speed,
// capacity = tau * (budget - base power). A non-positive capacity or an empty
// pick falls back to the single most frugal processor.
std::vector<int> select_processor_subset(double budget, const Cluster& c, double tau);

SubsetMap select_subsets(const Instance& inst, double tau);

Schedule initial_mapping(const Instance& inst, const SubsetMap& subsets, const CwmParams& params);

// One repair move: push a task (and everything that must follow it) out of
// the refined interval [begin, end). Returns nothing when the move is a
// no-op (zero or negative shift). The result is again a valid schedule; with
// a finite deadline the shift is clamped so the deadline stays met.
std::optional<Schedule> shift_out_of_interval(const Schedule& s, const Instance& inst,
                                              double begin, double end, int v_prime,
                                              std::optional<double> deadline);

Schedule local_search(const Schedule& s, std::optional<double> deadline, const Instance& inst,
                      const CwmParams& params);

// Drops every task finishing after the threshold (plus all successors) and
// re-places them in rank order over all processors, around the kept items.
Schedule reschedule_above_threshold(const Schedule& s, double threshold,
                                    std::span<const int> order, const Instance& inst,
                                    std::uint64_t seed);

Schedule deadline_repair(const Schedule& s, const Instance& inst, const CwmParams& params);

struct CwmResult {
  Schedule schedule;
  CarbonReport report;
};

CwmResult run_cwm(const Instance& inst, const CwmParams& params);

}  // namespace greenflow
