#include "greenflow/heft_sl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace greenflow {

double Timeline::earliest_fit(double lower_bound, double duration) const {
  double candidate = lower_bound;
  for (const Span& sp : spans_) {
    if (sp.start - candidate >= duration - kTimeEps) break;  // gap before sp fits
    candidate = std::max(candidate, sp.finish);
  }
  return candidate;
}

void Timeline::insert(double start, double duration) {
  if (duration <= 0.0) return;
  Span sp{start, start + duration};
  auto it = std::lower_bound(spans_.begin(), spans_.end(), sp,
                             [](const Span& a, const Span& b) { return a.start < b.start; });
  spans_.insert(it, sp);
}

std::pair<double, double> tentative_comm_slot(double src_finish, double duration,
                                              const Timeline& link) {
  double start = link.earliest_fit(src_finish, duration);
  return {start, start + duration};
}

double mean_runtime(const Task& t, const Cluster& c) {
  double sum = 0.0;
  for (const Processor& p : c.procs()) sum += t.work / p.speed;
  return sum / c.proc_count();
}

RankTable compute_ranks(const Workflow& w, const Cluster& c) {
  RankTable table;
  table.by_index.assign(w.task_count(), 0.0);
  auto topo = topological_indices(w);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    int v = *it;
    double best = 0.0;
    for (int e : w.outgoing(v)) {
      best = std::max(best, w.edge(e).data + table.by_index[w.edge_dst(e)]);
    }
    table.by_index[v] = mean_runtime(w.task(v), c) + best;
  }
  return table;
}

std::vector<int> rank_order_indices(const RankTable& table, int task_count, std::uint64_t seed) {
  std::vector<int> order(task_count);
  for (int v = 0; v < task_count; ++v) order[v] = v;
  Rng rng(seed);
  rng.shuffle(order);  // equal ranks keep this random relative order
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return table.by_index[a] > table.by_index[b]; });
  return order;
}

std::vector<long long> rank_order(const RankTable& table, const Workflow& w, std::uint64_t seed) {
  std::vector<long long> ids;
  ids.reserve(w.task_count());
  for (int v : rank_order_indices(table, w.task_count(), seed)) ids.push_back(w.task(v).id);
  return ids;
}

ListScheduler::ListScheduler(const Workflow& w, const Cluster& c) : w_(w), c_(c) {
  proc_timeline_.resize(c.proc_count());
  channel_timeline_.resize(c.channel_count());
  task_start_.assign(w.task_count(), 0.0);
  task_finish_.assign(w.task_count(), 0.0);
  task_proc_.assign(w.task_count(), -1);
  comm_start_.assign(w.edge_count(), std::numeric_limits<double>::quiet_NaN());
}

void ListScheduler::preload(const Schedule& s, const std::vector<char>& keep) {
  for (const ScheduledItem& it : s.items) {
    if (it.entity.kind == EntityKind::task) {
      int v = it.entity.index;
      if (!keep[v]) continue;
      task_proc_[v] = it.resource;
      task_start_[v] = it.start;
      task_finish_[v] = it.finish();
      proc_timeline_[it.resource].insert(it.start, it.duration);
    } else {
      int e = it.entity.index;
      if (!keep[w_.edge_src(e)] || !keep[w_.edge_dst(e)]) continue;
      comm_start_[e] = it.start;
      channel_timeline_[it.resource - c_.proc_count()].insert(it.start, it.duration);
    }
  }
}

double ListScheduler::max_pred_finish(int task) const {
  double t = 0.0;
  for (int e : w_.incoming(task)) t = std::max(t, task_finish_[w_.edge_src(e)]);
  return t;
}

ListScheduler::Choice ListScheduler::evaluate_candidate(int task, int proc,
                                                        double min_start) const {
  Choice choice;
  choice.proc = proc;
  // local copies of the channels touched by this candidate, so that messages
  // from several predecessors over the same link serialize against each other
  // without mutating the shared state
  std::map<int, Timeline> local;
  double est = 0.0;
  for (int e : w_.incoming(task)) {  // ascending predecessor id
    int u = w_.edge_src(e);
    double ready = task_finish_[u];
    if (task_proc_[u] == proc) {
      est = std::max(est, ready);
      continue;
    }
    int cidx = c_.channel_index(task_proc_[u], proc);
    double duration = w_.edge(e).data / c_.channel(cidx).bandwidth;
    auto [it, inserted] = local.try_emplace(cidx, channel_timeline_[cidx]);
    auto [cs, cf] = tentative_comm_slot(ready, duration, it->second);
    it->second.insert(cs, duration);
    choice.comms.push_back({e, cs, duration});
    est = std::max(est, cf);
  }
  est = std::max(est, min_start);
  double duration = task_duration(w_.task(task), c_.proc(proc));
  choice.start = proc_timeline_[proc].earliest_fit(est, duration);
  choice.finish = choice.start + duration;
  return choice;
}

ListScheduler::Choice ListScheduler::best_choice(int task, std::span<const int> candidates,
                                                 double min_start, Rng& rng) const {
  std::vector<Choice> choices;
  choices.reserve(candidates.size());
  double best = std::numeric_limits<double>::infinity();
  for (int p : candidates) {
    choices.push_back(evaluate_candidate(task, p, min_start));
    best = std::min(best, choices.back().finish);
  }
  std::vector<int> tied;
  for (int i = 0; i < static_cast<int>(choices.size()); ++i) {
    if (choices[i].finish <= best + kTimeEps) tied.push_back(i);
  }
  int pick = tied.size() == 1 ? tied.front()
                              : tied[static_cast<std::size_t>(rng.next_below(tied.size()))];
  return std::move(choices[pick]);
}

void ListScheduler::commit(int task, const Choice& choice) {
  task_proc_[task] = choice.proc;
  task_start_[task] = choice.start;
  task_finish_[task] = choice.finish;
  proc_timeline_[choice.proc].insert(choice.start, choice.finish - choice.start);
  for (const CommPlacement& cp : choice.comms) {
    int cidx = c_.channel_index(task_proc_[w_.edge_src(cp.edge)], choice.proc);
    channel_timeline_[cidx].insert(cp.start, cp.duration);
    comm_start_[cp.edge] = cp.start;
  }
}

Schedule ListScheduler::to_schedule() const {
  Schedule s;
  s.mapping.proc_of = task_proc_;
  for (int v = 0; v < w_.task_count(); ++v) {
    if (task_proc_[v] < 0) throw InternalError("unscheduled task in to_schedule");
    s.items.push_back({{EntityKind::task, v},
                       task_proc_[v],
                       task_start_[v],
                       task_finish_[v] - task_start_[v]});
  }
  for (int e = 0; e < w_.edge_count(); ++e) {
    int ps = task_proc_[w_.edge_src(e)];
    int pd = task_proc_[w_.edge_dst(e)];
    if (ps == pd) continue;
    if (std::isnan(comm_start_[e])) throw InternalError("unscheduled message in to_schedule");
    int cidx = c_.channel_index(ps, pd);
    s.items.push_back({{EntityKind::comm, e},
                       c_.channel_resource(cidx),
                       comm_start_[e],
                       w_.edge(e).data / c_.channel(cidx).bandwidth});
  }
  canonicalize(s);
  return s;
}

Schedule schedule_heft_sl(const Instance& inst, std::uint64_t seed) {
  const Workflow& w = inst.workflow;
  auto order = rank_order_indices(compute_ranks(w, inst.cluster), w.task_count(), seed);
  Rng rng(seed);
  ListScheduler ls(w, inst.cluster);
  std::vector<int> all(inst.cluster.proc_count());
  for (int p = 0; p < inst.cluster.proc_count(); ++p) all[p] = p;
  for (int v : order) ls.commit(v, ls.best_choice(v, all, 0.0, rng));
  return ls.to_schedule();
}

}  // namespace greenflow
