#include "greenflow/evaluate.hpp"

#include <algorithm>
#include <cmath>

namespace greenflow {

const char* to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::negative_start: return "negative-start";
    case Violation::Kind::processor_overlap: return "processor-overlap";
    case Violation::Kind::channel_overlap: return "channel-overlap";
    case Violation::Kind::precedence_same_proc: return "precedence-same-proc";
    case Violation::Kind::precedence_cross_proc: return "precedence-cross-proc";
    case Violation::Kind::deadline_exceeded: return "deadline-exceeded";
  }
  return "?";
}

bool schedule_is_valid(const std::vector<Violation>& violations) {
  for (const Violation& v : violations) {
    if (v.kind != Violation::Kind::deadline_exceeded) return false;
  }
  return true;
}

double makespan(const Schedule& s) {
  double m = 0.0;
  for (const ScheduledItem& it : s.items) m = std::max(m, it.finish());
  return m;
}

namespace {

std::string entity_label(const Entity& e, const Workflow& w) {
  if (e.kind == EntityKind::task) return "task " + std::to_string(w.task(e.index).id);
  const Edge& ed = w.edge(e.index);
  return "comm " + std::to_string(ed.src) + "->" + std::to_string(ed.dst);
}

void entity_ids(const Entity& e, const Workflow& w, std::vector<long long>& out) {
  if (e.kind == EntityKind::task) {
    out.push_back(w.task(e.index).id);
  } else {
    out.push_back(w.edge(e.index).src);
    out.push_back(w.edge(e.index).dst);
  }
}

}  // namespace

std::vector<Violation> validate_schedule(const Schedule& s, const Instance& inst) {
  const Workflow& w = inst.workflow;
  const Cluster& c = inst.cluster;
  const int n = w.task_count();

  if (static_cast<int>(s.mapping.proc_of.size()) != n) {
    throw ParseError("schedule mapping does not cover every task");
  }
  for (int v = 0; v < n; ++v) {
    int p = s.mapping.proc_of[v];
    if (p < 0 || p >= c.proc_count()) {
      throw ParseError("schedule maps task " + std::to_string(w.task(v).id) +
                       " to an unknown processor");
    }
  }

  // structural pass: exactly one item per task, exactly one comm item per
  // cross-processor edge, each on the resource the mapping dictates
  std::vector<int> task_item(n, -1);
  std::vector<int> comm_item(w.edge_count(), -1);
  for (int i = 0; i < static_cast<int>(s.items.size()); ++i) {
    const ScheduledItem& it = s.items[i];
    const std::string label = entity_label(it.entity, w);
    if (it.entity.kind == EntityKind::task) {
      int v = it.entity.index;
      if (task_item[v] >= 0) throw ParseError("duplicate item for " + label);
      task_item[v] = i;
      if (it.resource != s.mapping.proc_of[v]) {
        throw ParseError(label + " is scheduled on a different processor than its mapping");
      }
      double expected = task_duration(w.task(v), c.proc(it.resource));
      if (std::abs(it.duration - expected) > kTimeEps * std::max(1.0, expected)) {
        throw ParseError(label + " has duration " + std::to_string(it.duration) +
                         ", expected " + std::to_string(expected));
      }
    } else {
      int e = it.entity.index;
      if (comm_item[e] >= 0) throw ParseError("duplicate item for " + label);
      comm_item[e] = i;
      int ps = s.mapping.proc_of[w.edge_src(e)];
      int pd = s.mapping.proc_of[w.edge_dst(e)];
      if (ps == pd) throw ParseError(label + " is co-located and must not have an item");
      int expected_res = c.channel_resource(c.channel_index(ps, pd));
      if (it.resource != expected_res) throw ParseError(label + " sits on the wrong channel");
      double expected = w.edge(e).data / c.channel(ps, pd).bandwidth;
      if (std::abs(it.duration - expected) > kTimeEps * std::max(1.0, expected)) {
        throw ParseError(label + " has duration " + std::to_string(it.duration) +
                         ", expected " + std::to_string(expected));
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (task_item[v] < 0) {
      throw ParseError("schedule misses an item for task " + std::to_string(w.task(v).id));
    }
  }
  for (int e = 0; e < w.edge_count(); ++e) {
    if (s.mapping.proc_of[w.edge_src(e)] != s.mapping.proc_of[w.edge_dst(e)] && comm_item[e] < 0) {
      throw ParseError("schedule misses an item for " +
                       entity_label({EntityKind::comm, e}, w));
    }
  }

  std::vector<Violation> out;

  for (const ScheduledItem& it : s.items) {
    if (it.start < -kTimeEps) {
      Violation viol{Violation::Kind::negative_start, {}, entity_label(it.entity, w) + " starts at " +
                                                              std::to_string(it.start)};
      entity_ids(it.entity, w, viol.entities);
      out.push_back(std::move(viol));
    }
  }

  // overlap pass, per resource
  std::vector<std::vector<int>> by_resource(c.resource_count());
  for (int i = 0; i < static_cast<int>(s.items.size()); ++i) {
    by_resource[s.items[i].resource].push_back(i);
  }
  for (int r = 0; r < c.resource_count(); ++r) {
    auto& idx = by_resource[r];
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (s.items[a].start != s.items[b].start) return s.items[a].start < s.items[b].start;
      return s.items[a].finish() < s.items[b].finish();
    });
    for (std::size_t k = 1; k < idx.size(); ++k) {
      const ScheduledItem& prev = s.items[idx[k - 1]];
      const ScheduledItem& cur = s.items[idx[k]];
      if (cur.start < prev.finish() - kTimeEps) {
        Violation viol{r < c.proc_count() ? Violation::Kind::processor_overlap
                                          : Violation::Kind::channel_overlap,
                       {},
                       entity_label(prev.entity, w) + " and " + entity_label(cur.entity, w) +
                           " overlap"};
        entity_ids(prev.entity, w, viol.entities);
        entity_ids(cur.entity, w, viol.entities);
        out.push_back(std::move(viol));
      }
    }
  }

  // precedence pass
  for (int e = 0; e < w.edge_count(); ++e) {
    const ScheduledItem& src = s.items[task_item[w.edge_src(e)]];
    const ScheduledItem& dst = s.items[task_item[w.edge_dst(e)]];
    const std::string edge_label = entity_label({EntityKind::comm, e}, w);
    if (comm_item[e] < 0) {
      if (dst.start < src.finish() - kTimeEps) {
        Violation viol{Violation::Kind::precedence_same_proc,
                       {w.edge(e).src, w.edge(e).dst},
                       edge_label + ": successor starts before predecessor finishes"};
        out.push_back(std::move(viol));
      }
    } else {
      const ScheduledItem& comm = s.items[comm_item[e]];
      if (comm.start < src.finish() - kTimeEps || dst.start < comm.finish() - kTimeEps) {
        Violation viol{Violation::Kind::precedence_cross_proc,
                       {w.edge(e).src, w.edge(e).dst},
                       edge_label + ": message not contained between predecessor finish and successor start"};
        out.push_back(std::move(viol));
      }
    }
  }

  double m = makespan(s);
  if (m > inst.deadline + kTimeEps) {
    out.push_back({Violation::Kind::deadline_exceeded,
                   {},
                   "makespan " + std::to_string(m) + " exceeds deadline " +
                       std::to_string(inst.deadline)});
  }
  return out;
}

std::vector<PowerSpan> schedule_power_spans(const Schedule& s, const Cluster& c) {
  std::vector<PowerSpan> spans;
  spans.reserve(s.items.size());
  for (const ScheduledItem& it : s.items) {
    if (it.duration <= 0.0) continue;
    spans.push_back({it.start, it.finish(), c.resource_work_power(it.resource)});
  }
  return spans;
}

std::vector<RefinedInterval> refine_spans(std::span<const PowerSpan> spans, double idle_total,
                                          const PowerProfile& profile, double end,
                                          bool clamp_past_horizon,
                                          std::span<const double> extra_breakpoints) {
  if (end <= 0.0) return {};
  if (!clamp_past_horizon && end > profile.horizon() + kTimeEps) {
    throw ParseError("integration end " + std::to_string(end) +
                     " exceeds the profile horizon");
  }

  std::vector<double> points;
  points.reserve(spans.size() * 2 + profile.interval_count() + extra_breakpoints.size() + 2);
  points.push_back(0.0);
  points.push_back(end);
  for (const Interval& iv : profile.intervals()) {
    if (iv.end < end) points.push_back(iv.end);
  }
  for (const PowerSpan& sp : spans) {
    if (sp.start > 0.0 && sp.start < end) points.push_back(sp.start);
    if (sp.finish > 0.0 && sp.finish < end) points.push_back(sp.finish);
  }
  for (double t : extra_breakpoints) {
    if (t > 0.0 && t < end) points.push_back(t);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  // events: +work_power at span start, -work_power at span finish
  struct Event {
    double t;
    double delta;
  };
  std::vector<Event> events;
  events.reserve(spans.size() * 2);
  for (const PowerSpan& sp : spans) {
    if (sp.finish <= sp.start) continue;
    events.push_back({sp.start, sp.work_power});
    events.push_back({sp.finish, -sp.work_power});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

  std::vector<RefinedInterval> out;
  out.reserve(points.size());
  double power = idle_total;
  std::size_t ev = 0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const double a = points[k];
    const double b = points[k + 1];
    while (ev < events.size() && events[ev].t <= a) power += events[ev++].delta;
    out.push_back({a, b, profile.budget_at_clamped(a), power});
  }
  return out;
}

std::vector<RefinedInterval> refined_intervals(const Schedule& s, const Cluster& c,
                                               const PowerProfile& profile, double end) {
  auto spans = schedule_power_spans(s, c);
  return refine_spans(spans, c.total_idle_power(), profile, end, false);
}

namespace {

CarbonReport carbon_cost_impl(const Schedule& s, const Instance& inst, bool clamp) {
  CarbonReport report;
  const double m = makespan(s);
  report.exceeds_deadline = m > inst.deadline + kTimeEps;
  report.integration_end = std::max(inst.deadline, m);
  auto spans = schedule_power_spans(s, inst.cluster);
  report.intervals = refine_spans(spans, inst.cluster.total_idle_power(), inst.profile,
                                  report.integration_end, clamp);
  report.interval_costs.reserve(report.intervals.size());
  for (const RefinedInterval& iv : report.intervals) {
    double cost = std::max(0.0, iv.total_power - iv.budget) * (iv.end - iv.begin);
    report.interval_costs.push_back(cost);
    report.total_cost += cost;
  }
  return report;
}

}  // namespace

CarbonReport carbon_cost(const Schedule& s, const Instance& inst) {
  return carbon_cost_impl(s, inst, false);
}

CarbonReport carbon_cost_clamped(const Schedule& s, const Instance& inst) {
  return carbon_cost_impl(s, inst, true);
}

nlohmann::json CarbonReport::to_json() const {
  nlohmann::json jiv = nlohmann::json::array();
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const RefinedInterval& iv = intervals[k];
    jiv.push_back({{"begin", iv.begin},
                   {"end", iv.end},
                   {"budget", iv.budget},
                   {"total_power", iv.total_power},
                   {"cost", interval_costs[k]}});
  }
  return {{"total_cost", total_cost},
          {"integration_end", integration_end},
          {"exceeds_deadline", exceeds_deadline},
          {"intervals", jiv}};
}

}  // namespace greenflow
