#pragma once

#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "greenflow/evaluate.hpp"
#include "greenflow/genlab.hpp"
#include "greenflow/heft_sl.hpp"
#include "greenflow/model.hpp"
#include "greenflow/rng.hpp"

namespace testutil {

using namespace greenflow;

// processors 0..n-1 with identical link powers on every ordered pair
inline Cluster simple_cluster(const std::vector<std::tuple<double, double, double>>& specs,
                              double link_idle = 0.0, double link_work = 0.0,
                              double bandwidth = 1.0) {
  std::vector<Processor> procs;
  long long id = 0;
  for (const auto& [speed, idle, work] : specs) {
    procs.push_back({id++, speed, idle, work});
  }
  std::vector<CommChannel> channels;
  for (long long p = 0; p < id; ++p) {
    for (long long q = 0; q < id; ++q) {
      if (p != q) channels.push_back({p, q, link_idle, link_work, bandwidth});
    }
  }
  return Cluster(std::move(procs), std::move(channels));
}

inline PowerProfile flat_profile(double horizon, double budget) {
  return PowerProfile({{0.0, horizon, budget}});
}

// tasks 0..n-1 in a chain with the given works and edge data sizes
inline Workflow chain_workflow(const std::vector<double>& works,
                               const std::vector<double>& datas) {
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < works.size(); ++i) {
    tasks.push_back({static_cast<long long>(i), works[i]});
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < datas.size(); ++i) {
    edges.push_back({static_cast<long long>(i), static_cast<long long>(i + 1), datas[i]});
  }
  return Workflow(std::move(tasks), std::move(edges));
}

inline bool valid(const Schedule& s, const Instance& inst) {
  return schedule_is_valid(validate_schedule(s, inst));
}

// Random but reproducible instance whose profile is sized off the baseline
// makespan so every alpha in (1, 2.5] keeps the deadline inside the horizon.
// The returned deadline is alpha * baseline makespan.
inline Instance random_instance(std::uint64_t seed, int min_tasks = 5, int max_tasks = 60,
                                int min_procs = 2, int max_procs = 8, double alpha = 2.0) {
  Rng rng(seed);
  const int procs =
      min_procs + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_procs - min_procs + 1)));
  std::vector<NodeSpec> specs;
  for (int p = 0; p < procs; ++p) {
    specs.push_back({rng.uniform(1.0, 8.0), rng.uniform(2.0, 40.0), rng.uniform(30.0, 300.0)});
  }
  const Cluster cluster = gen_cluster(specs, 1, default_link_stats(specs), rng.next());

  const int tasks =
      min_tasks + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_tasks - min_tasks + 1)));
  const int layers = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(std::min(tasks, 8))));
  const double density = rng.uniform(0.15, 0.7);
  const Workflow workflow =
      gen_layered_dag(tasks, layers, density, WeightStats::from_cluster(cluster), rng.next());

  Instance inst;
  inst.workflow = workflow;
  inst.cluster = cluster;

  const double m = makespan(schedule_heft_sl(inst, seed));
  const double horizon = std::ceil(2.6 * m) + 1.0;
  std::vector<double> series;
  for (int i = 0; i < 64; ++i) series.push_back(rng.uniform(50.0, 500.0));
  const int len_max = std::max(2, static_cast<int>(horizon / 6.0));
  const int len_min = std::max(1, len_max / 4);
  inst.profile = profile_from_intensities(series, cluster, horizon, {len_min, len_max},
                                          rng.uniform(0.15, 0.5), rng.next());
  inst.deadline = alpha * m;
  return inst;
}

}  // namespace testutil
