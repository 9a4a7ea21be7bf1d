#include "greenflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "greenflow/rng.hpp"

namespace greenflow {

namespace {

double require_number(const nlohmann::json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ParseError(std::string(where) + ": missing or non-numeric field '" + key + "'");
  }
  return j[key].get<double>();
}

long long require_int(const nlohmann::json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    throw ParseError(std::string(where) + ": missing or non-integer field '" + key + "'");
  }
  return j[key].get<long long>();
}

}  // namespace

Workflow::Workflow(std::vector<Task> tasks, std::vector<Edge> edges)
    : tasks_(std::move(tasks)), edges_(std::move(edges)) {
  std::sort(tasks_.begin(), tasks_.end(),
            [](const Task& a, const Task& b) { return a.id < b.id; });
  for (int i = 0; i < task_count(); ++i) {
    const Task& t = tasks_[i];
    if (t.id < 0) throw ParseError("task id " + std::to_string(t.id) + " is negative");
    if (!index_.emplace(t.id, i).second) {
      throw ParseError("duplicate task id " + std::to_string(t.id));
    }
    if (!(t.work > 0.0) || !std::isfinite(t.work)) {
      throw ParseError("task " + std::to_string(t.id) + " has non-positive work");
    }
  }

  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  incoming_.resize(task_count());
  outgoing_.resize(task_count());
  edge_src_.reserve(edges_.size());
  edge_dst_.reserve(edges_.size());
  for (int e = 0; e < edge_count(); ++e) {
    const Edge& ed = edges_[e];
    const std::string label = "edge " + std::to_string(ed.src) + "->" + std::to_string(ed.dst);
    if (ed.src == ed.dst) throw ParseError(label + " is a self-loop");
    if (!(ed.data >= 0.0) || !std::isfinite(ed.data)) {
      throw ParseError(label + " has negative data size");
    }
    if (e > 0 && edges_[e - 1].src == ed.src && edges_[e - 1].dst == ed.dst) {
      throw ParseError("duplicate " + label);
    }
    auto s = index_.find(ed.src);
    auto d = index_.find(ed.dst);
    if (s == index_.end()) throw ParseError(label + " references unknown task " + std::to_string(ed.src));
    if (d == index_.end()) throw ParseError(label + " references unknown task " + std::to_string(ed.dst));
    edge_src_.push_back(s->second);
    edge_dst_.push_back(d->second);
    outgoing_[s->second].push_back(e);
    incoming_[d->second].push_back(e);
  }
  // incoming lists end up sorted by source id (edges are sorted by src);
  // outgoing lists need an explicit sort by destination id
  for (auto& out : outgoing_) {
    std::sort(out.begin(), out.end(), [this](int a, int b) {
      return edges_[a].dst < edges_[b].dst;
    });
  }

  topological_indices(*this);  // throws on cycles
}

int Workflow::index_of(long long task_id) const {
  auto it = index_.find(task_id);
  if (it == index_.end()) {
    throw ParseError("unknown task id " + std::to_string(task_id));
  }
  return it->second;
}

bool Workflow::operator==(const Workflow& other) const {
  if (tasks_.size() != other.tasks_.size() || edges_.size() != other.edges_.size()) return false;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (tasks_[i].id != other.tasks_[i].id || tasks_[i].work != other.tasks_[i].work) return false;
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (edges_[i].src != other.edges_[i].src || edges_[i].dst != other.edges_[i].dst ||
        edges_[i].data != other.edges_[i].data) {
      return false;
    }
  }
  return true;
}

Workflow Workflow::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("tasks") || !doc["tasks"].is_array()) {
    throw ParseError("workflow: expected object with a 'tasks' array");
  }
  std::vector<Task> tasks;
  for (const auto& jt : doc["tasks"]) {
    tasks.push_back({require_int(jt, "id", "workflow task"),
                     require_number(jt, "work", "workflow task")});
  }
  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) throw ParseError("workflow: 'edges' must be an array");
    for (const auto& je : doc["edges"]) {
      edges.push_back({require_int(je, "src", "workflow edge"),
                       require_int(je, "dst", "workflow edge"),
                       require_number(je, "data", "workflow edge")});
    }
  }
  return Workflow(std::move(tasks), std::move(edges));
}

nlohmann::json Workflow::to_json() const {
  nlohmann::json jt = nlohmann::json::array();
  for (const Task& t : tasks_) jt.push_back({{"id", t.id}, {"work", t.work}});
  nlohmann::json je = nlohmann::json::array();
  for (const Edge& e : edges_) je.push_back({{"src", e.src}, {"dst", e.dst}, {"data", e.data}});
  return {{"tasks", jt}, {"edges", je}};
}

std::vector<int> topological_indices(const Workflow& w) {
  const int n = w.task_count();
  std::vector<int> indegree(n, 0);
  for (int v = 0; v < n; ++v) indegree[v] = static_cast<int>(w.incoming(v).size());

  // min-heap on task index keeps the order deterministic (ties by ascending id)
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int e : w.outgoing(v)) {
      if (--indegree[w.edge_dst(e)] == 0) ready.push(w.edge_dst(e));
    }
  }
  if (static_cast<int>(order.size()) != n) {
    std::string ids;
    for (int v = 0; v < n && ids.size() < 200; ++v) {
      if (indegree[v] > 0) ids += (ids.empty() ? "" : ", ") + std::to_string(w.task(v).id);
    }
    throw ParseError("workflow has a cycle involving tasks " + ids);
  }
  return order;
}

std::vector<long long> topological_order(const Workflow& w) {
  std::vector<long long> ids;
  ids.reserve(w.task_count());
  for (int v : topological_indices(w)) ids.push_back(w.task(v).id);
  return ids;
}

Cluster::Cluster(std::vector<Processor> procs, std::vector<CommChannel> channels) {
  procs_ = std::move(procs);
  std::sort(procs_.begin(), procs_.end(),
            [](const Processor& a, const Processor& b) { return a.id < b.id; });
  for (int i = 0; i < proc_count(); ++i) {
    const Processor& p = procs_[i];
    if (!proc_index_.emplace(p.id, i).second) {
      throw ParseError("duplicate processor id " + std::to_string(p.id));
    }
    if (!(p.speed > 0.0)) throw ParseError("processor " + std::to_string(p.id) + " has non-positive speed");
    if (p.idle_power < 0.0 || p.work_power < 0.0) {
      throw ParseError("processor " + std::to_string(p.id) + " has negative power");
    }
  }
  if (procs_.empty()) throw ParseError("cluster has no processors");

  const int expected = proc_count() * (proc_count() - 1);
  if (static_cast<int>(channels.size()) != expected) {
    throw ParseError("cluster needs exactly one channel per ordered processor pair (" +
                     std::to_string(expected) + " expected, " +
                     std::to_string(channels.size()) + " given)");
  }
  channels_.resize(channels.size());
  std::vector<char> seen(channels.size(), 0);
  for (const CommChannel& ch : channels) {
    const std::string label =
        "channel " + std::to_string(ch.src_proc) + "->" + std::to_string(ch.dst_proc);
    if (ch.src_proc == ch.dst_proc) throw ParseError(label + " connects a processor to itself");
    int p = proc_index(ch.src_proc);
    int q = proc_index(ch.dst_proc);
    int cidx = channel_index(p, q);
    if (seen[cidx]) throw ParseError("duplicate " + label);
    if (ch.idle_power < 0.0 || ch.work_power < 0.0) throw ParseError(label + " has negative power");
    if (!(ch.bandwidth > 0.0)) throw ParseError(label + " has non-positive bandwidth");
    seen[cidx] = 1;
    channels_[cidx] = ch;
  }

  total_idle_ = 0.0;
  for (const Processor& p : procs_) total_idle_ += p.idle_power;
  for (const CommChannel& ch : channels_) total_idle_ += ch.idle_power;
}

int Cluster::proc_index(long long id) const {
  auto it = proc_index_.find(id);
  if (it == proc_index_.end()) {
    throw ParseError("unknown processor id " + std::to_string(id));
  }
  return it->second;
}

bool Cluster::operator==(const Cluster& other) const {
  auto proc_eq = [](const Processor& a, const Processor& b) {
    return a.id == b.id && a.speed == b.speed && a.idle_power == b.idle_power &&
           a.work_power == b.work_power;
  };
  auto chan_eq = [](const CommChannel& a, const CommChannel& b) {
    return a.src_proc == b.src_proc && a.dst_proc == b.dst_proc &&
           a.idle_power == b.idle_power && a.work_power == b.work_power &&
           a.bandwidth == b.bandwidth;
  };
  return procs_.size() == other.procs_.size() && channels_.size() == other.channels_.size() &&
         std::equal(procs_.begin(), procs_.end(), other.procs_.begin(), proc_eq) &&
         std::equal(channels_.begin(), channels_.end(), other.channels_.begin(), chan_eq);
}

Cluster Cluster::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("processors") || !doc["processors"].is_array()) {
    throw ParseError("cluster: expected object with a 'processors' array");
  }
  std::vector<Processor> procs;
  for (const auto& jp : doc["processors"]) {
    procs.push_back({require_int(jp, "id", "cluster processor"),
                     require_number(jp, "speed", "cluster processor"),
                     require_number(jp, "idle_power", "cluster processor"),
                     require_number(jp, "work_power", "cluster processor")});
  }

  std::vector<CommChannel> channels;
  if (doc.contains("channels")) {
    if (!doc["channels"].is_array()) throw ParseError("cluster: 'channels' must be an array");
    for (const auto& jc : doc["channels"]) {
      CommChannel ch{require_int(jc, "src", "cluster channel"),
                     require_int(jc, "dst", "cluster channel"),
                     require_number(jc, "idle_power", "cluster channel"),
                     require_number(jc, "work_power", "cluster channel"),
                     jc.contains("bandwidth") ? require_number(jc, "bandwidth", "cluster channel") : 1.0};
      channels.push_back(ch);
    }
  } else if (doc.contains("link_power")) {
    // sample one channel per ordered pair from the given stats, deterministic
    // in the embedded seed; values are clipped at zero
    const auto& lp = doc["link_power"];
    const double im = require_number(lp, "idle_mean", "cluster link_power");
    const double is = require_number(lp, "idle_std", "cluster link_power");
    const double wm = require_number(lp, "work_mean", "cluster link_power");
    const double ws = require_number(lp, "work_std", "cluster link_power");
    const auto seed = static_cast<std::uint64_t>(require_int(lp, "seed", "cluster link_power"));
    std::vector<long long> ids;
    for (const Processor& p : procs) ids.push_back(p.id);
    std::sort(ids.begin(), ids.end());
    Rng rng(seed);
    for (long long p : ids) {
      for (long long q : ids) {
        if (p == q) continue;
        CommChannel ch{p, q, std::max(0.0, rng.normal(im, is)), std::max(0.0, rng.normal(wm, ws)), 1.0};
        channels.push_back(ch);
      }
    }
  } else if (procs.size() > 1) {
    throw ParseError("cluster: need either 'channels' or 'link_power'");
  }
  return Cluster(std::move(procs), std::move(channels));
}

nlohmann::json Cluster::to_json() const {
  nlohmann::json jp = nlohmann::json::array();
  for (const Processor& p : procs_) {
    jp.push_back({{"id", p.id},
                  {"speed", p.speed},
                  {"idle_power", p.idle_power},
                  {"work_power", p.work_power}});
  }
  nlohmann::json jc = nlohmann::json::array();
  for (const CommChannel& ch : channels_) {
    jc.push_back({{"src", ch.src_proc},
                  {"dst", ch.dst_proc},
                  {"idle_power", ch.idle_power},
                  {"work_power", ch.work_power},
                  {"bandwidth", ch.bandwidth}});
  }
  return {{"processors", jp}, {"channels", jc}};
}

PowerProfile::PowerProfile(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw ParseError("profile has no intervals");
  if (std::abs(intervals_.front().begin) > kTimeEps) {
    throw ParseError("profile must start at time 0");
  }
  intervals_.front().begin = 0.0;
  for (std::size_t j = 0; j < intervals_.size(); ++j) {
    Interval& iv = intervals_[j];
    if (!(iv.end > iv.begin + kTimeEps)) {
      throw ParseError("profile interval " + std::to_string(j) + " is empty or reversed");
    }
    if (iv.budget < 0.0) {
      throw ParseError("profile interval " + std::to_string(j) + " has negative budget");
    }
    if (j > 0) {
      if (std::abs(iv.begin - intervals_[j - 1].end) > kTimeEps) {
        throw ParseError("profile has a gap before interval " + std::to_string(j));
      }
      iv.begin = intervals_[j - 1].end;  // snap away float noise
    }
  }
}

int PowerProfile::interval_index_clamped(double t) const {
  if (t <= intervals_.front().begin) return 0;
  int lo = 0, hi = interval_count() - 1;
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (intervals_[mid].end <= t) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

bool PowerProfile::operator==(const PowerProfile& other) const {
  if (intervals_.size() != other.intervals_.size()) return false;
  for (std::size_t j = 0; j < intervals_.size(); ++j) {
    if (intervals_[j].begin != other.intervals_[j].begin ||
        intervals_[j].end != other.intervals_[j].end ||
        intervals_[j].budget != other.intervals_[j].budget) {
      return false;
    }
  }
  return true;
}

PowerProfile PowerProfile::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("intervals") || !doc["intervals"].is_array()) {
    throw ParseError("profile: expected object with an 'intervals' array");
  }
  std::vector<Interval> ivs;
  for (const auto& ji : doc["intervals"]) {
    ivs.push_back({require_number(ji, "begin", "profile interval"),
                   require_number(ji, "end", "profile interval"),
                   require_number(ji, "budget", "profile interval")});
  }
  return PowerProfile(std::move(ivs));
}

nlohmann::json PowerProfile::to_json() const {
  nlohmann::json ji = nlohmann::json::array();
  for (const Interval& iv : intervals_) {
    ji.push_back({{"begin", iv.begin}, {"end", iv.end}, {"budget", iv.budget}});
  }
  return {{"intervals", ji}};
}

void canonicalize(Schedule& s) {
  std::sort(s.items.begin(), s.items.end(), [](const ScheduledItem& a, const ScheduledItem& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.resource != b.resource) return a.resource < b.resource;
    if (a.entity.kind != b.entity.kind) return a.entity.kind == EntityKind::task;
    return a.entity.index < b.entity.index;
  });
}

nlohmann::json schedule_to_json(const Schedule& s, const Workflow& w, const Cluster& c) {
  nlohmann::json mapping = nlohmann::json::object();
  for (int v = 0; v < w.task_count(); ++v) {
    mapping[std::to_string(w.task(v).id)] = c.proc(s.mapping.proc_of[v]).id;
  }
  Schedule sorted = s;
  canonicalize(sorted);
  nlohmann::json items = nlohmann::json::array();
  for (const ScheduledItem& it : sorted.items) {
    nlohmann::json entity, resource;
    if (it.entity.kind == EntityKind::task) {
      entity = {{"task", w.task(it.entity.index).id}};
    } else {
      const Edge& e = w.edge(it.entity.index);
      entity = {{"comm", {e.src, e.dst}}};
    }
    if (it.resource < c.proc_count()) {
      resource = {{"proc", c.proc(it.resource).id}};
    } else {
      const CommChannel& ch = c.channel(it.resource - c.proc_count());
      resource = {{"channel", {ch.src_proc, ch.dst_proc}}};
    }
    items.push_back({{"entity", entity},
                     {"resource", resource},
                     {"start", it.start},
                     {"duration", it.duration}});
  }
  return {{"mapping", mapping}, {"items", items}};
}

Schedule schedule_from_json(const nlohmann::json& doc, const Workflow& w, const Cluster& c) {
  if (!doc.is_object() || !doc.contains("mapping") || !doc.contains("items")) {
    throw ParseError("schedule: expected object with 'mapping' and 'items'");
  }
  Schedule s;
  s.mapping.proc_of.assign(w.task_count(), -1);
  for (const auto& [key, value] : doc["mapping"].items()) {
    long long task_id = 0;
    try {
      task_id = std::stoll(key);
    } catch (const std::exception&) {
      throw ParseError("schedule mapping: bad task id '" + key + "'");
    }
    if (!value.is_number_integer()) throw ParseError("schedule mapping: processor must be an integer id");
    s.mapping.proc_of[w.index_of(task_id)] = c.proc_index(value.get<long long>());
  }
  for (int v = 0; v < w.task_count(); ++v) {
    if (s.mapping.proc_of[v] < 0) {
      throw ParseError("schedule mapping misses task " + std::to_string(w.task(v).id));
    }
  }
  for (const auto& ji : doc["items"]) {
    if (!ji.contains("entity") || !ji.contains("resource")) {
      throw ParseError("schedule item: missing entity or resource");
    }
    ScheduledItem item{};
    const auto& je = ji["entity"];
    if (je.contains("task")) {
      item.entity = {EntityKind::task, w.index_of(je["task"].get<long long>())};
    } else if (je.contains("comm")) {
      const auto& pair = je["comm"];
      if (!pair.is_array() || pair.size() != 2) throw ParseError("schedule item: comm must be [src, dst]");
      long long src = pair[0].get<long long>(), dst = pair[1].get<long long>();
      int found = -1;
      int v = w.index_of(src);
      for (int e : w.outgoing(v)) {
        if (w.edge(e).dst == dst) {
          found = e;
          break;
        }
      }
      if (found < 0) {
        throw ParseError("schedule item: no edge " + std::to_string(src) + "->" + std::to_string(dst));
      }
      item.entity = {EntityKind::comm, found};
    } else {
      throw ParseError("schedule item: entity must hold 'task' or 'comm'");
    }
    const auto& jr = ji["resource"];
    if (jr.contains("proc")) {
      item.resource = c.proc_index(jr["proc"].get<long long>());
    } else if (jr.contains("channel")) {
      const auto& pair = jr["channel"];
      if (!pair.is_array() || pair.size() != 2) throw ParseError("schedule item: channel must be [p, q]");
      int p = c.proc_index(pair[0].get<long long>());
      int q = c.proc_index(pair[1].get<long long>());
      if (p == q) throw ParseError("schedule item: channel endpoints are equal");
      item.resource = c.channel_resource(c.channel_index(p, q));
    } else {
      throw ParseError("schedule item: resource must hold 'proc' or 'channel'");
    }
    item.start = require_number(ji, "start", "schedule item");
    item.duration = require_number(ji, "duration", "schedule item");
    if (item.duration < 0.0) throw ParseError("schedule item: negative duration");
    s.items.push_back(item);
  }
  canonicalize(s);
  return s;
}

void validate_instance(const Instance& inst) {
  if (!(inst.deadline > 0.0)) {
    throw ParseError("deadline must be positive");
  }
  if (inst.deadline > inst.profile.horizon() + kTimeEps) {
    throw ParseError("deadline " + std::to_string(inst.deadline) +
                     " exceeds the profile horizon " + std::to_string(inst.profile.horizon()));
  }
}

double task_duration(const Task& t, const Processor& p) { return t.work / p.speed; }

double comm_duration(const Edge& e, const Mapping& mu, const Workflow& w, const Cluster& c) {
  int ps = mu.proc_of[w.index_of(e.src)];
  int pd = mu.proc_of[w.index_of(e.dst)];
  if (ps == pd) return 0.0;
  return e.data / c.channel(ps, pd).bandwidth;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

Workflow load_workflow(const std::string& path) {
  try {
    return Workflow::from_json(load_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Cluster load_cluster(const std::string& path) {
  try {
    return Cluster::from_json(load_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

PowerProfile load_profile(const std::string& path) {
  try {
    return PowerProfile::from_json(load_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace greenflow
