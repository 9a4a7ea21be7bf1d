#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "greenflow/model.hpp"
#include "greenflow/rng.hpp"

namespace greenflow {

// Busy spans of one resource, kept sorted and disjoint. Placement is
// insertion-based: earliest_fit returns the first start >= lower_bound whose
// gap holds the duration, including gaps between existing spans.
class Timeline {
 public:
  struct Span {
    double start;
    double finish;
  };

  double earliest_fit(double lower_bound, double duration) const;
  void insert(double start, double duration);
  const std::vector<Span>& spans() const { return spans_; }

 private:
  std::vector<Span> spans_;
};

// first feasible slot for a message that may leave its source at src_finish
std::pair<double, double> tentative_comm_slot(double src_finish, double duration,
                                              const Timeline& link);

struct RankTable {
  std::vector<double> by_index;  // upward rank per task index
};

// mean over processors of work / speed
double mean_runtime(const Task& t, const Cluster& c);

RankTable compute_ranks(const Workflow& w, const Cluster& c);

// descending rank; equal ranks keep the order of a seeded pre-shuffle
std::vector<int> rank_order_indices(const RankTable& table, int task_count, std::uint64_t seed);
std::vector<long long> rank_order(const RankTable& table, const Workflow& w, std::uint64_t seed);

// Incremental list scheduler shared by every mapping heuristic here. One
// candidate evaluation works against copies of the channel timelines it
// touches; the global state changes only on commit.
class ListScheduler {
 public:
  ListScheduler(const Workflow& w, const Cluster& c);

  struct CommPlacement {
    int edge;
    double start;
    double duration;
  };

  struct Choice {
    int proc = -1;
    double start = 0.0;
    double finish = 0.0;
    std::vector<CommPlacement> comms;
  };

  // keep[v] != 0 freezes task v (and the messages between two frozen tasks)
  // exactly where the given schedule has them
  void preload(const Schedule& s, const std::vector<char>& keep);

  Choice evaluate_candidate(int task, int proc, double min_start) const;

  // min EFT over candidates, ties resolved uniformly at random; candidates
  // must be sorted ascending so the rng stream stays reproducible
  Choice best_choice(int task, std::span<const int> candidates, double min_start, Rng& rng) const;

  void commit(int task, const Choice& choice);

  bool scheduled(int task) const { return task_proc_[task] >= 0; }
  double task_start(int task) const { return task_start_[task]; }
  double task_finish(int task) const { return task_finish_[task]; }
  int task_proc(int task) const { return task_proc_[task]; }
  double max_pred_finish(int task) const;

  Schedule to_schedule() const;

 private:
  const Workflow& w_;
  const Cluster& c_;
  std::vector<Timeline> proc_timeline_;
  std::vector<Timeline> channel_timeline_;
  std::vector<double> task_start_, task_finish_;
  std::vector<int> task_proc_;
  std::vector<double> comm_start_;  // per edge, NaN when absent
};

// deadline and profile are ignored; they travel with the instance so every
// scheduler shares one entry type
Schedule schedule_heft_sl(const Instance& inst, std::uint64_t seed);

}  // namespace greenflow
