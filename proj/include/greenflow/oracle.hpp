#pragma once

#include <span>

#include "greenflow/cwm.hpp"
#include "greenflow/model.hpp"

namespace greenflow {

// Reference implementations that take the slow, obviously-correct route.
// They exist so the production code has something independent to agree with.

// All 2^n subsets, n <= 20. Value ties resolve to the lexicographically
// smallest index set so the result is a single well-defined subset.
KnapsackSolution exhaustive_knapsack(std::span<const long long> weights,
                                     std::span<const double> values, long long capacity);

// Left-endpoint Riemann sum of max(0, power - budget) over
// [0, max(deadline, makespan)) with step dt. Exact when every start, finish
// and profile bound is an integer multiple of dt.
double timestep_carbon_cost(const Schedule& s, const Instance& inst, double dt);

struct BruteForceResult {
  double cost = 0.0;
  Schedule schedule;
};

// Global minimum-carbon schedule by exhaustive placement on an integral time
// grid. Every task, message and profile bound must sit on the grid, at most
// 6 tasks and 2 processors. Only schedules finishing within the horizon are
// considered, matching where the carbon cost is defined.
BruteForceResult brute_force_min_carbon(const Instance& inst, double grid = 1.0);

}  // namespace greenflow
