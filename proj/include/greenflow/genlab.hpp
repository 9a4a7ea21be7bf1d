#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "greenflow/model.hpp"
#include "greenflow/rng.hpp"

namespace greenflow {

struct NodeSpec {
  double speed;
  double idle_power;
  double work_power;
};

struct LinkStats {
  double idle_mean;
  double idle_std;
  double work_mean;
  double work_std;
};

// links draw much less than nodes: means at 5% of the node means, sigma at
// 20% of each mean
LinkStats default_link_stats(std::span<const NodeSpec> specs);

// affine, decreasing, maps [x_min, x_max] onto [p_min, p_max]; a degenerate
// series (x_max == x_min) maps everything to the midpoint
double map_intensity(double x, double x_min, double x_max, double p_min, double p_max);

// Splits [0, horizon) at random points (every length uniform in len_range,
// the last interval truncated to fit), picks a contiguous subsequence of the
// intensity series uniformly at random, one value per interval, and maps it
// to a budget. p_min is the cluster's idle draw, p_max adds dyn_fraction of
// the total work draw on top.
PowerProfile profile_from_intensities(std::span<const double> series, const Cluster& c,
                                      double horizon, std::pair<int, int> len_range,
                                      double dyn_fraction, std::uint64_t seed);

// copies of each spec in spec order; one channel per ordered processor pair
// with normal-sampled powers clipped at 0
Cluster gen_cluster(std::span<const NodeSpec> specs, int copies, const LinkStats& links,
                    std::uint64_t seed);

// task and edge weights follow the cluster speeds so a mean task runs for
// about one time unit on a mean processor
struct WeightStats {
  double mean = 1.0;

  static WeightStats from_cluster(const Cluster& c);
  double sample(Rng& rng) const;  // normal(mean, 0.25 mean), clipped at 0.01 mean
};

// layered DAG, edges only between consecutive layers, every task outside the
// first layer keeps at least one predecessor
Workflow gen_layered_dag(int n_tasks, int layers, double edge_density,
                         const WeightStats& weights, std::uint64_t seed);

// Scheduling the 3n tasks with zero carbon cost is exactly the 3-partition
// question on the integers: n budget-1 spans of size B separated by n-1
// budget-0 unit gaps, one unit-speed processor, deadline = horizon.
Instance gen_3partition_instance(std::span<const long long> integers, long long b);

// one header row; only the `intensity` column is consumed, row order kept
std::vector<double> read_intensity_csv(const std::string& path);

}  // namespace greenflow
