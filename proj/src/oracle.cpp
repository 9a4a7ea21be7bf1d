#include "greenflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "greenflow/evaluate.hpp"

namespace greenflow {

KnapsackSolution exhaustive_knapsack(std::span<const long long> weights,
                                     std::span<const double> values, long long capacity) {
  const int n = static_cast<int>(weights.size());
  if (static_cast<std::size_t>(n) != values.size()) {
    throw std::invalid_argument("knapsack: weights and values differ in length");
  }
  if (n > 20) throw std::invalid_argument("exhaustive knapsack: more than 20 items");

  KnapsackSolution best;
  std::vector<int> chosen;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    long long weight = 0;
    double value = 0.0;
    chosen.clear();
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        weight += weights[i];
        value += values[i];
        chosen.push_back(i);
      }
    }
    if (weight > capacity) continue;
    if (value > best.value ||
        (value == best.value &&
         std::lexicographical_compare(chosen.begin(), chosen.end(), best.chosen.begin(),
                                      best.chosen.end()))) {
      best.value = value;
      best.chosen = chosen;
    }
  }
  return best;
}

double timestep_carbon_cost(const Schedule& s, const Instance& inst, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("timestep cost: dt must be positive");
  const double end = std::max(inst.deadline, makespan(s));
  const auto spans = schedule_power_spans(s, inst.cluster);
  const double idle = inst.cluster.total_idle_power();

  double cost = 0.0;
  for (long long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t >= end - 1e-12) break;
    double power = idle;
    for (const PowerSpan& sp : spans) {
      if (sp.start <= t && t < sp.finish) power += sp.work_power;
    }
    const double width = std::min(dt, end - t);
    cost += std::max(0.0, power - inst.profile.budget_at_clamped(t)) * width;
  }
  return cost;
}

namespace {

long long to_units(double x, double grid, const char* what) {
  const double q = x / grid;
  const long long u = std::llround(q);
  if (std::abs(q - static_cast<double>(u)) > 1e-9) {
    throw std::invalid_argument(std::string("brute force: ") + what + " is off the time grid");
  }
  return u;
}

// exhaustive placement in topological order; every item lives on the integral
// grid and must end by the horizon
class BruteForce {
 public:
  BruteForce(const Instance& inst, double grid) : inst_(inst), grid_(grid) {
    const Workflow& w = inst.workflow;
    const Cluster& c = inst.cluster;
    n_ = w.task_count();
    procs_ = c.proc_count();
    if (n_ > 6) throw std::invalid_argument("brute force: more than 6 tasks");
    if (procs_ > 2) throw std::invalid_argument("brute force: more than 2 processors");

    horizon_ = to_units(inst.profile.horizon(), grid, "horizon");
    deadline_ = to_units(inst.deadline, grid, "deadline");
    for (const Interval& iv : inst.profile.intervals()) {
      to_units(iv.begin, grid, "interval bound");
      to_units(iv.end, grid, "interval bound");
    }

    dur_.assign(n_, std::vector<long long>(procs_, 0));
    for (int v = 0; v < n_; ++v) {
      for (int p = 0; p < procs_; ++p) {
        dur_[v][p] = to_units(task_duration(w.task(v), c.proc(p)), grid, "task duration");
      }
    }
    comm_dur_.assign(w.edge_count(), std::vector<long long>(procs_ * procs_, 0));
    for (int e = 0; e < w.edge_count(); ++e) {
      for (int p = 0; p < procs_; ++p) {
        for (int q = 0; q < procs_; ++q) {
          if (p == q) continue;
          comm_dur_[e][p * procs_ + q] =
              to_units(w.edge(e).data / c.channel(p, q).bandwidth, grid, "message duration");
        }
      }
    }

    order_ = topological_indices(w);
    prev_identical_.assign(n_, -1);
    for (int v = 0; v < n_; ++v) {
      if (!w.incoming(v).empty() || !w.outgoing(v).empty()) continue;
      for (int u = v - 1; u >= 0; --u) {
        if (w.incoming(u).empty() && w.outgoing(u).empty() && dur_[u] == dur_[v]) {
          prev_identical_[v] = u;
          break;
        }
      }
    }

    budget_.assign(horizon_, 0.0);
    for (long long t = 0; t < horizon_; ++t) {
      budget_[t] = inst.profile.budget_at_clamped(static_cast<double>(t) * grid);
    }
    power_.assign(horizon_, c.total_idle_power());

    proc_of_.assign(n_, -1);
    start_.assign(n_, 0);
    comm_start_.assign(w.edge_count(), -1);
    busy_.resize(c.resource_count());
  }

  BruteForceResult solve() {
    best_ = std::numeric_limits<double>::infinity();
    place_task(0);
    if (!std::isfinite(best_)) {
      throw InternalError("brute force: no schedule fits inside the horizon");
    }
    BruteForceResult result;
    result.cost = best_;
    result.schedule = best_schedule_;
    return result;
  }

 private:
  bool overlaps(int resource, long long a, long long b) const {
    for (const auto& [x, y] : busy_[resource]) {
      if (a < y && x < b) return true;
    }
    return false;
  }

  void add(int resource, long long a, long long b, double wp) {
    busy_[resource].push_back({a, b});
    for (long long t = a; t < b; ++t) {
      if (t < deadline_) {
        partial_ += std::max(0.0, power_[t] + wp - budget_[t]) -
                    std::max(0.0, power_[t] - budget_[t]);
      }
      power_[t] += wp;
    }
  }

  void remove(int resource, long long a, long long b, double wp) {
    busy_[resource].pop_back();
    for (long long t = a; t < b; ++t) {
      power_[t] -= wp;
      if (t < deadline_) {
        partial_ -= std::max(0.0, power_[t] + wp - budget_[t]) -
                    std::max(0.0, power_[t] - budget_[t]);
      }
    }
  }

  void leaf() {
    long long ms = 0;
    for (int v = 0; v < n_; ++v) ms = std::max(ms, start_[v] + dur_[v][proc_of_[v]]);
    for (int e = 0; e < inst_.workflow.edge_count(); ++e) {
      if (comm_start_[e] >= 0) {
        ms = std::max(ms, comm_start_[e] + active_comm_dur(e));
      }
    }
    double cost = partial_;
    for (long long t = deadline_; t < ms; ++t) {
      cost += std::max(0.0, power_[t] - budget_[t]);
    }
    cost *= grid_;
    if (cost < best_ - 1e-12) {
      best_ = cost;
      record_schedule();
    }
  }

  long long active_comm_dur(int e) const {
    const int p = proc_of_[inst_.workflow.edge_src(e)];
    const int q = proc_of_[inst_.workflow.edge_dst(e)];
    return comm_dur_[e][p * procs_ + q];
  }

  void record_schedule() {
    Schedule s;
    s.mapping.proc_of = proc_of_;
    for (int v = 0; v < n_; ++v) {
      s.items.push_back({{EntityKind::task, v},
                         inst_.cluster.proc_resource(proc_of_[v]),
                         static_cast<double>(start_[v]) * grid_,
                         static_cast<double>(dur_[v][proc_of_[v]]) * grid_});
    }
    for (int e = 0; e < inst_.workflow.edge_count(); ++e) {
      if (comm_start_[e] < 0) continue;
      const int p = proc_of_[inst_.workflow.edge_src(e)];
      const int q = proc_of_[inst_.workflow.edge_dst(e)];
      const int res =
          inst_.cluster.channel_resource(inst_.cluster.channel_index(p, q));
      s.items.push_back({{EntityKind::comm, e},
                         res,
                         static_cast<double>(comm_start_[e]) * grid_,
                         static_cast<double>(active_comm_dur(e)) * grid_});
    }
    canonicalize(s);
    best_schedule_ = std::move(s);
  }

  void place_task(int pos) {
    if (best_ == 0.0) return;
    if (partial_ * grid_ >= best_ - 1e-12) return;
    if (pos == n_) {
      leaf();
      return;
    }
    const Workflow& w = inst_.workflow;
    const int v = order_[pos];
    for (int p = 0; p < procs_; ++p) {
      const long long d = dur_[v][p];
      long long lb = 0;
      for (int e : w.incoming(v)) {
        const int u = w.edge_src(e);
        const long long uf = start_[u] + dur_[u][proc_of_[u]];
        lb = std::max(lb, proc_of_[u] == p ? uf : uf + comm_dur_[e][proc_of_[u] * procs_ + p]);
      }
      if (prev_identical_[v] >= 0 && proc_of_[prev_identical_[v]] > p) continue;
      for (long long s = lb; s + d <= horizon_; ++s) {
        if (prev_identical_[v] >= 0 && proc_of_[prev_identical_[v]] == p &&
            s < start_[prev_identical_[v]]) {
          continue;
        }
        if (overlaps(p, s, s + d)) continue;
        proc_of_[v] = p;
        start_[v] = s;
        add(inst_.cluster.proc_resource(p), s, s + d, inst_.cluster.proc(p).work_power);
        place_comms(v, 0);
        remove(inst_.cluster.proc_resource(p), s, s + d, inst_.cluster.proc(p).work_power);
        proc_of_[v] = -1;
        if (best_ == 0.0) return;
      }
    }
  }

  // nests over the cross-processor messages feeding task v
  void place_comms(int v, std::size_t k) {
    if (best_ == 0.0) return;
    if (partial_ * grid_ >= best_ - 1e-12) return;
    const Workflow& w = inst_.workflow;
    const auto& in = w.incoming(v);
    while (k < in.size() && proc_of_[w.edge_src(in[k])] == proc_of_[v]) ++k;
    if (k == in.size()) {
      place_task(task_pos(v) + 1);
      return;
    }
    const int e = in[k];
    const int u = w.edge_src(e);
    const int p = proc_of_[u];
    const int q = proc_of_[v];
    const long long d = comm_dur_[e][p * procs_ + q];
    const long long uf = start_[u] + dur_[u][p];
    const int res = inst_.cluster.channel_resource(inst_.cluster.channel_index(p, q));
    const double wp = inst_.cluster.channel(p, q).work_power;
    const long long last = d == 0 ? uf : start_[v] - d;
    for (long long cs = uf; cs <= last; ++cs) {
      if (overlaps(res, cs, cs + d)) continue;
      comm_start_[e] = cs;
      add(res, cs, cs + d, wp);
      place_comms(v, k + 1);
      remove(res, cs, cs + d, wp);
      comm_start_[e] = -1;
      if (best_ == 0.0) return;
    }
  }

  int task_pos(int v) const {
    for (int i = 0; i < n_; ++i) {
      if (order_[i] == v) return i;
    }
    throw InternalError("brute force: task missing from the order");
  }

  const Instance& inst_;
  double grid_;
  int n_ = 0, procs_ = 0;
  long long horizon_ = 0, deadline_ = 0;
  std::vector<std::vector<long long>> dur_;
  std::vector<std::vector<long long>> comm_dur_;
  std::vector<int> order_;
  std::vector<int> prev_identical_;
  std::vector<double> budget_, power_;
  std::vector<int> proc_of_;
  std::vector<long long> start_, comm_start_;
  std::vector<std::vector<std::pair<long long, long long>>> busy_;
  double partial_ = 0.0;
  double best_ = 0.0;
  Schedule best_schedule_;
};

}  // namespace

BruteForceResult brute_force_min_carbon(const Instance& inst, double grid) {
  if (!(grid > 0.0)) throw std::invalid_argument("brute force: grid must be positive");
  validate_instance(inst);
  return BruteForce(inst, grid).solve();
}

}  // namespace greenflow
