#include "greenflow/cwm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace greenflow {

CwmParams CwmParams::from_json(const nlohmann::json& doc) {
  CwmParams p;
  if (doc.contains("tau")) p.tau = doc["tau"].get<double>();
  if (doc.contains("phi")) p.phi = doc["phi"].get<int>();
  if (doc.contains("retries")) p.retries = doc["retries"].get<int>();
  if (doc.contains("seed")) p.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("keep_best")) p.keep_best = doc["keep_best"].get<bool>();
  if (!(p.tau > 0.0) || p.tau > 1.0) throw ParseError("params: tau must be in (0, 1]");
  if (p.phi < 0) throw ParseError("params: phi must be non-negative");
  if (p.retries < 0) throw ParseError("params: retries must be non-negative");
  return p;
}

nlohmann::json CwmParams::to_json() const {
  return {{"tau", tau}, {"phi", phi}, {"retries", retries}, {"seed", seed}, {"keep_best", keep_best}};
}

double base_power(const Cluster& c) { return c.total_idle_power(); }

namespace {

std::vector<double> knapsack_table(std::span<const long long> weights,
                                   std::span<const double> values, int lo, int hi,
                                   long long capacity) {
  std::vector<double> dp(static_cast<std::size_t>(capacity) + 1, 0.0);
  for (int i = lo; i < hi; ++i) {
    const long long wi = weights[i];
    const double vi = values[i];
    if (vi <= 0.0) continue;
    if (wi == 0) {
      for (double& x : dp) x += vi;
      continue;
    }
    for (long long cap = capacity; cap >= wi; --cap) {
      dp[cap] = std::max(dp[cap], dp[cap - wi] + vi);
    }
  }
  return dp;
}

// divide and conquer over the item range; each half is solved against the
// capacity split that the two value tables prove optimal
void knapsack_reconstruct(std::span<const long long> weights, std::span<const double> values,
                          int lo, int hi, long long capacity, std::vector<int>& out) {
  if (lo >= hi || capacity < 0) return;
  if (hi - lo == 1) {
    if (weights[lo] <= capacity && values[lo] > 0.0) out.push_back(lo);
    return;
  }
  const int mid = lo + (hi - lo) / 2;
  auto left = knapsack_table(weights, values, lo, mid, capacity);
  auto right = knapsack_table(weights, values, mid, hi, capacity);
  long long best_split = 0;
  double best = -1.0;
  for (long long cap = 0; cap <= capacity; ++cap) {
    const double v = left[cap] + right[capacity - cap];
    if (v > best) {
      best = v;
      best_split = cap;
    }
  }
  knapsack_reconstruct(weights, values, lo, mid, best_split, out);
  knapsack_reconstruct(weights, values, mid, hi, capacity - best_split, out);
}

}  // namespace

KnapsackSolution knapsack_max_value(std::span<const long long> weights,
                                    std::span<const double> values, long long capacity) {
  if (weights.size() != values.size()) {
    throw std::invalid_argument("knapsack: weights and values differ in length");
  }
  for (long long w : weights) {
    if (w < 0) throw std::invalid_argument("knapsack: negative weight");
  }
  KnapsackSolution sol;
  if (capacity < 0) return sol;
  knapsack_reconstruct(weights, values, 0, static_cast<int>(weights.size()), capacity, sol.chosen);
  for (int i : sol.chosen) sol.value += values[i];
  return sol;
}

std::vector<int> select_processor_subset(double budget, const Cluster& c, double tau) {
  int p_min = 0;
  for (int p = 1; p < c.proc_count(); ++p) {
    if (c.proc(p).work_power < c.proc(p_min).work_power) p_min = p;
  }

  const double capacity = tau * (budget - base_power(c));
  if (capacity <= 0.0) return {p_min};

  std::vector<long long> weights(c.proc_count());
  std::vector<double> values(c.proc_count());
  long long g = 0;
  for (int p = 0; p < c.proc_count(); ++p) {
    weights[p] = std::llround(c.proc(p).work_power * kPowerScale);
    values[p] = c.proc(p).speed;
    g = std::gcd(g, weights[p]);
  }
  if (g == 0) g = 1;
  long long total_weight = 0;
  for (long long& w : weights) {
    w /= g;
    total_weight += w;
  }
  // capacity beyond the total weight changes nothing but blows up the DP
  // table (and can overflow llround), so clamp it; the generous case
  // degenerates to "everyone fits"
  const double scaled_raw = capacity * kPowerScale;
  const long long scaled_cap =
      scaled_raw >= static_cast<double>(total_weight) * static_cast<double>(g)
          ? total_weight
          : std::llround(scaled_raw) / g;

  auto sol = knapsack_max_value(weights, values, scaled_cap);
  if (sol.chosen.empty()) return {p_min};
  return sol.chosen;
}

SubsetMap select_subsets(const Instance& inst, double tau) {
  SubsetMap subsets;
  subsets.reserve(inst.profile.interval_count());
  for (const Interval& iv : inst.profile.intervals()) {
    subsets.push_back(select_processor_subset(iv.budget, inst.cluster, tau));
  }
  return subsets;
}

Schedule initial_mapping(const Instance& inst, const SubsetMap& subsets, const CwmParams& params) {
  const Workflow& w = inst.workflow;
  const PowerProfile& profile = inst.profile;
  if (static_cast<int>(subsets.size()) != profile.interval_count()) {
    throw std::invalid_argument("initial_mapping: one processor subset per interval required");
  }

  auto order = rank_order_indices(compute_ranks(w, inst.cluster), w.task_count(), params.seed);
  Rng rng(params.seed);
  ListScheduler ls(w, inst.cluster);
  const int last = profile.interval_count() - 1;

  for (int v : order) {
    // interval that would host the task if communications were free
    int j = profile.interval_index_clamped(ls.max_pred_finish(v));
    auto choice = ls.best_choice(v, subsets[j], 0.0, rng);
    int retries = 0;
    while (choice.start >= profile.intervals()[j].end && retries < params.retries && j < last) {
      ++j;
      ++retries;
      choice = ls.best_choice(v, subsets[j], profile.intervals()[j].begin, rng);
    }
    ls.commit(v, choice);
  }
  return local_search(ls.to_schedule(), std::nullopt, inst, params);
}

namespace {

// mutable view of a schedule used by the shift machinery; durations, mapping
// and channel assignments never change, only starts do
struct ShiftState {
  const Workflow* w = nullptr;
  const Cluster* c = nullptr;
  int n = 0, m = 0;
  std::vector<int> task_proc;
  std::vector<double> task_start, task_dur;
  std::vector<double> comm_start, comm_dur;
  std::vector<int> comm_channel;  // flat resource, -1 when co-located
  // starts are rematerialized as base + accumulated offset on every move;
  // repeated in-place "start += shift" would let entities moved as one block
  // drift apart by one rounding per move, which adds up past kTimeEps over
  // hundreds of iterations and breaks back-to-back pairs
  std::vector<double> task_base, task_off;
  std::vector<double> comm_base, comm_off;

  static ShiftState build(const Schedule& s, const Instance& inst) {
    ShiftState st;
    st.w = &inst.workflow;
    st.c = &inst.cluster;
    st.n = st.w->task_count();
    st.m = st.w->edge_count();
    st.task_proc = s.mapping.proc_of;
    st.task_start.assign(st.n, 0.0);
    st.task_dur.assign(st.n, 0.0);
    st.comm_start.assign(st.m, 0.0);
    st.comm_dur.assign(st.m, 0.0);
    st.comm_channel.assign(st.m, -1);
    std::vector<char> seen_task(st.n, 0), seen_comm(st.m, 0);
    for (const ScheduledItem& it : s.items) {
      if (it.entity.kind == EntityKind::task) {
        seen_task[it.entity.index] = 1;
        st.task_start[it.entity.index] = it.start;
        st.task_dur[it.entity.index] = it.duration;
      } else {
        seen_comm[it.entity.index] = 1;
        st.comm_start[it.entity.index] = it.start;
        st.comm_dur[it.entity.index] = it.duration;
        st.comm_channel[it.entity.index] = it.resource;
      }
    }
    for (int v = 0; v < st.n; ++v) {
      if (!seen_task[v]) throw std::invalid_argument("schedule misses a task item");
    }
    for (int e = 0; e < st.m; ++e) {
      bool cross = st.task_proc[st.w->edge_src(e)] != st.task_proc[st.w->edge_dst(e)];
      if (cross && !seen_comm[e]) throw std::invalid_argument("schedule misses a message item");
    }
    st.task_base = st.task_start;
    st.comm_base = st.comm_start;
    st.task_off.assign(st.n, 0.0);
    st.comm_off.assign(st.m, 0.0);
    return st;
  }

  double makespan() const {
    double ms = 0.0;
    for (int v = 0; v < n; ++v) ms = std::max(ms, task_start[v] + task_dur[v]);
    for (int e = 0; e < m; ++e) {
      if (comm_channel[e] >= 0) ms = std::max(ms, comm_start[e] + comm_dur[e]);
    }
    return ms;
  }

  std::vector<PowerSpan> power_spans() const {
    std::vector<PowerSpan> spans;
    spans.reserve(n + m);
    for (int v = 0; v < n; ++v) {
      if (task_dur[v] > 0.0) {
        spans.push_back({task_start[v], task_start[v] + task_dur[v],
                         c->proc(task_proc[v]).work_power});
      }
    }
    for (int e = 0; e < m; ++e) {
      if (comm_channel[e] >= 0 && comm_dur[e] > 0.0) {
        spans.push_back({comm_start[e], comm_start[e] + comm_dur[e],
                         c->resource_work_power(comm_channel[e])});
      }
    }
    return spans;
  }

  Schedule to_schedule() const {
    Schedule s;
    s.mapping.proc_of = task_proc;
    for (int v = 0; v < n; ++v) {
      s.items.push_back({{EntityKind::task, v}, task_proc[v], task_start[v], task_dur[v]});
    }
    for (int e = 0; e < m; ++e) {
      if (comm_channel[e] >= 0) {
        s.items.push_back({{EntityKind::comm, e}, comm_channel[e], comm_start[e], comm_dur[e]});
      }
    }
    canonicalize(s);
    return s;
  }
};

// Entities are numbered tasks [0, n), messages [n, n + m). The set to move
// is closed under: successors of moved tasks, messages leaving moved tasks,
// targets of moved messages, and everything scheduled later on a resource
// some moved entity occupies. Without the resource closure a moved entity
// could slide into a stationary later one.
class ShiftClosure {
 public:
  ShiftClosure(const ShiftState& st) : st_(st) {
    const int r = st.c->resource_count();
    by_resource_.resize(r);
    for (int v = 0; v < st.n; ++v) by_resource_[st.task_proc[v]].push_back(v);
    for (int e = 0; e < st.m; ++e) {
      if (st.comm_channel[e] >= 0) by_resource_[st.comm_channel[e]].push_back(st.n + e);
    }
    for (auto& list : by_resource_) {
      std::sort(list.begin(), list.end(),
                [&](int a, int b) { return start_of(a) < start_of(b); });
    }
    enqueued_from_.assign(r, 0);
    for (int i = 0; i < r; ++i) enqueued_from_[i] = by_resource_[i].size();
    in_set_.assign(st.n + st.m, 0);
  }

  // everything starting at or after the interval end moves as one block
  void seed(int v_prime, double interval_end) {
    push(v_prime);
    for (int r = 0; r < static_cast<int>(by_resource_.size()); ++r) {
      push_suffix(r, interval_end);
    }
    run();
  }

  bool contains(int entity) const { return in_set_[entity] != 0; }
  const std::vector<int>& members() const { return members_; }

  double max_task_finish() const {
    double best = 0.0;
    for (int ent : members_) {
      if (ent < st_.n) best = std::max(best, st_.task_start[ent] + st_.task_dur[ent]);
    }
    return best;
  }

 private:
  double start_of(int entity) const {
    return entity < st_.n ? st_.task_start[entity] : st_.comm_start[entity - st_.n];
  }
  double finish_of(int entity) const {
    return entity < st_.n ? st_.task_start[entity] + st_.task_dur[entity]
                          : st_.comm_start[entity - st_.n] + st_.comm_dur[entity - st_.n];
  }

  void push(int entity) {
    if (!in_set_[entity]) {
      in_set_[entity] = 1;
      worklist_.push_back(entity);
      members_.push_back(entity);
    }
  }

  void push_suffix(int resource, double threshold) {
    const auto& list = by_resource_[resource];
    auto pos = std::lower_bound(list.begin(), list.end(), threshold - kTimeEps,
                                [&](int ent, double t) { return start_of(ent) < t; }) -
               list.begin();
    for (std::size_t i = pos; i < enqueued_from_[resource]; ++i) push(list[i]);
    enqueued_from_[resource] = std::min(enqueued_from_[resource], static_cast<std::size_t>(pos));
  }

  void run() {
    while (!worklist_.empty()) {
      const int ent = worklist_.back();
      worklist_.pop_back();
      if (ent < st_.n) {
        const int v = ent;
        push_suffix(st_.task_proc[v], finish_of(ent));
        for (int e : st_.w->outgoing(v)) {
          if (st_.comm_channel[e] >= 0) {
            push(st_.n + e);
          } else {
            push(st_.w->edge_dst(e));
          }
        }
      } else {
        const int e = ent - st_.n;
        push(st_.w->edge_dst(e));
        push_suffix(st_.comm_channel[e], finish_of(ent));
      }
    }
  }

  const ShiftState& st_;
  std::vector<std::vector<int>> by_resource_;
  std::vector<std::size_t> enqueued_from_;
  std::vector<char> in_set_;
  std::vector<int> worklist_;
  std::vector<int> members_;
};

// core of one local-search move; mutates the state when it returns a shift
std::optional<double> apply_shift(ShiftState& st, double interval_end, int v_prime,
                                  std::optional<double> deadline) {
  ShiftClosure closure(st);
  closure.seed(v_prime, interval_end);
  double shift = interval_end - st.task_start[v_prime];
  if (deadline) shift = std::min(shift, *deadline - closure.max_task_finish());
  if (shift <= kTimeEps) return std::nullopt;
  for (int ent : closure.members()) {
    if (ent < st.n) {
      st.task_off[ent] += shift;
      st.task_start[ent] = st.task_base[ent] + st.task_off[ent];
    } else {
      const int e = ent - st.n;
      st.comm_off[e] += shift;
      st.comm_start[e] = st.comm_base[e] + st.comm_off[e];
    }
  }
  return shift;
}

double state_cost(const ShiftState& st, const Instance& inst,
                  std::vector<RefinedInterval>& refined) {
  const double end = std::max(st.makespan(), inst.deadline);
  auto spans = st.power_spans();
  refined = refine_spans(spans, inst.cluster.total_idle_power(), inst.profile, end, true);
  double cost = 0.0;
  for (const RefinedInterval& iv : refined) {
    cost += std::max(0.0, iv.total_power - iv.budget) * (iv.end - iv.begin);
  }
  return cost;
}

}  // namespace

std::optional<Schedule> shift_out_of_interval(const Schedule& s, const Instance& inst,
                                              double begin, double end, int v_prime,
                                              std::optional<double> deadline) {
  ShiftState st = ShiftState::build(s, inst);
  if (v_prime < 0 || v_prime >= st.n) throw std::invalid_argument("shift: bad task index");
  if (!(st.task_start[v_prime] < end) || !(st.task_start[v_prime] + st.task_dur[v_prime] > begin)) {
    throw std::invalid_argument("shift: task does not run inside the interval");
  }
  if (!apply_shift(st, end, v_prime, deadline)) return std::nullopt;
  return st.to_schedule();
}

Schedule local_search(const Schedule& s, std::optional<double> deadline, const Instance& inst,
                      const CwmParams& params) {
  if (deadline && makespan(s) > *deadline + kTimeEps) {
    throw std::invalid_argument("local_search: input violates the deadline");
  }
  ShiftState st = ShiftState::build(s, inst);
  Rng rng(params.seed);

  std::vector<RefinedInterval> refined;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<double> best_task_start, best_comm_start, best_task_off, best_comm_off;
  auto remember = [&](double cost) {
    if (cost < best_cost) {
      best_cost = cost;
      best_task_start = st.task_start;
      best_comm_start = st.comm_start;
      best_task_off = st.task_off;
      best_comm_off = st.comm_off;
    }
  };

  for (int iter = 0; iter < params.phi; ++iter) {
    const double cost = state_cost(st, inst, refined);
    if (params.keep_best) remember(cost);

    const RefinedInterval* over = nullptr;
    for (const RefinedInterval& iv : refined) {
      if (iv.total_power > iv.budget + kTimeEps) {
        over = &iv;
        break;
      }
    }
    if (over == nullptr) break;

    std::vector<int> running;
    for (int v = 0; v < st.n; ++v) {
      if (st.task_start[v] < over->end && st.task_start[v] + st.task_dur[v] > over->begin) {
        running.push_back(v);
      }
    }
    if (running.empty()) break;
    const int v_prime = running[static_cast<std::size_t>(rng.next_below(running.size()))];
    if (!apply_shift(st, over->end, v_prime, deadline)) break;
  }

  if (params.keep_best) {
    remember(state_cost(st, inst, refined));
    st.task_start = std::move(best_task_start);
    st.comm_start = std::move(best_comm_start);
    st.task_off = std::move(best_task_off);
    st.comm_off = std::move(best_comm_off);
  }
  return st.to_schedule();
}

Schedule reschedule_above_threshold(const Schedule& s, double threshold,
                                    std::span<const int> order, const Instance& inst,
                                    std::uint64_t seed) {
  const Workflow& w = inst.workflow;
  const int n = w.task_count();

  std::vector<double> finish(n, 0.0);
  for (const ScheduledItem& it : s.items) {
    if (it.entity.kind == EntityKind::task) finish[it.entity.index] = it.finish();
  }

  // tasks finishing late, closed under reachability
  std::vector<char> drop(n, 0);
  std::vector<int> stack;
  for (int v = 0; v < n; ++v) {
    if (finish[v] > threshold + kTimeEps) {
      drop[v] = 1;
      stack.push_back(v);
    }
  }
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int e : w.outgoing(v)) {
      int d = w.edge_dst(e);
      if (!drop[d]) {
        drop[d] = 1;
        stack.push_back(d);
      }
    }
  }
  if (std::none_of(drop.begin(), drop.end(), [](char x) { return x != 0; })) return s;

  std::vector<char> keep(n);
  for (int v = 0; v < n; ++v) keep[v] = !drop[v];
  ListScheduler ls(w, inst.cluster);
  ls.preload(s, keep);
  Rng rng(seed);
  std::vector<int> all(inst.cluster.proc_count());
  for (int p = 0; p < inst.cluster.proc_count(); ++p) all[p] = p;
  for (int v : order) {
    if (drop[v]) ls.commit(v, ls.best_choice(v, all, 0.0, rng));
  }
  return ls.to_schedule();
}

Schedule deadline_repair(const Schedule& s, const Instance& inst, const CwmParams& params) {
  const double deadline = inst.deadline;
  if (makespan(s) <= deadline + kTimeEps) {
    return local_search(s, deadline, inst, params);
  }

  auto order = rank_order_indices(compute_ranks(inst.workflow, inst.cluster),
                                  inst.workflow.task_count(), params.seed);

  Schedule attempt = reschedule_above_threshold(s, deadline, order, inst, params.seed);
  if (makespan(attempt) <= deadline + kTimeEps) {
    return local_search(attempt, deadline, inst, params);
  }

  // largest integer threshold whose reschedule still meets the deadline;
  // threshold 0 re-places everything and equals the fallback schedule
  long long lo = 0;
  long long hi = static_cast<long long>(std::floor(deadline));
  Schedule best;
  bool have_best = false;
  while (lo + 1 < hi) {
    const long long mid = lo + (hi - lo) / 2;
    Schedule candidate =
        reschedule_above_threshold(s, static_cast<double>(mid), order, inst, params.seed);
    if (makespan(candidate) <= deadline + kTimeEps) {
      lo = mid;
      best = std::move(candidate);
      have_best = true;
    } else {
      hi = mid;
    }
  }
  if (!have_best) {
    best = reschedule_above_threshold(s, 0.0, order, inst, params.seed);
    if (makespan(best) > deadline + kTimeEps) {
      throw InfeasibleDeadline("deadline " + std::to_string(deadline) +
                               " is below the fallback schedule's makespan " +
                               std::to_string(makespan(best)));
    }
  }
  return local_search(best, deadline, inst, params);
}

CwmResult run_cwm(const Instance& inst, const CwmParams& params) {
  validate_instance(inst);
  SubsetMap subsets = select_subsets(inst, params.tau);
  Schedule mapped = initial_mapping(inst, subsets, params);
  Schedule repaired = deadline_repair(mapped, inst, params);

  auto violations = validate_schedule(repaired, inst);
  if (!schedule_is_valid(violations) ||
      makespan(repaired) > inst.deadline + kTimeEps) {
    throw InternalError("carbon-aware mapping produced an invalid schedule: " +
                        (violations.empty() ? std::string("deadline missed")
                                            : violations.front().detail));
  }
  CarbonReport report = carbon_cost(repaired, inst);
  return {std::move(repaired), std::move(report)};
}

}  // namespace greenflow
