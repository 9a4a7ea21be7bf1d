#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace greenflow {

// absolute tolerance for all time comparisons
inline constexpr double kTimeEps = 1e-9;

// input documents that fail structural checks (bad JSON, duplicate ids,
// dangling edges, cycles, ...)
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// requested deadline cannot be met even by the fallback schedule
class InfeasibleDeadline : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// a result failed its own invariants; indicates a bug, not bad input
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Task {
  long long id;
  double work;
};

struct Edge {
  long long src;
  long long dst;
  double data;
};

// Weighted DAG. Tasks are kept sorted by id, so the position of a task in
// tasks() is its dense index; all scheduling code works on indices and only
// JSON documents carry the original ids.
class Workflow {
 public:
  Workflow() = default;
  Workflow(std::vector<Task> tasks, std::vector<Edge> edges);

  static Workflow from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  int task_count() const { return static_cast<int>(tasks_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Task>& tasks() const { return tasks_; }
  const std::vector<Edge>& edges() const { return edges_; }  // sorted by (src, dst)
  const Task& task(int idx) const { return tasks_[idx]; }
  const Edge& edge(int eidx) const { return edges_[eidx]; }

  int index_of(long long task_id) const;
  int edge_src(int eidx) const { return edge_src_[eidx]; }
  int edge_dst(int eidx) const { return edge_dst_[eidx]; }

  // edge indices, sorted by the id of the task on the far side
  const std::vector<int>& incoming(int v) const { return incoming_[v]; }
  const std::vector<int>& outgoing(int v) const { return outgoing_[v]; }

  bool operator==(const Workflow& other) const;

 private:
  std::vector<Task> tasks_;
  std::vector<Edge> edges_;
  std::vector<int> edge_src_, edge_dst_;
  std::vector<std::vector<int>> incoming_, outgoing_;
  std::unordered_map<long long, int> index_;
};

std::vector<int> topological_indices(const Workflow& w);   // ties by ascending id
std::vector<long long> topological_order(const Workflow& w);

struct Processor {
  long long id;
  double speed;
  double idle_power;
  double work_power;
};

struct CommChannel {
  long long src_proc;
  long long dst_proc;
  double idle_power;
  double work_power;
  double bandwidth = 1.0;
};

// P processors plus one directed channel per ordered processor pair.
// All P*(P-1) channels must be present; like processors they draw idle
// power for the whole run whether used or not.
class Cluster {
 public:
  Cluster() = default;
  Cluster(std::vector<Processor> procs, std::vector<CommChannel> channels);

  static Cluster from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  int proc_count() const { return static_cast<int>(procs_.size()); }
  const std::vector<Processor>& procs() const { return procs_; }
  const Processor& proc(int idx) const { return procs_[idx]; }
  int proc_index(long long id) const;

  // channels live at dense indices; (p, q) are processor indices, p != q
  int channel_count() const { return static_cast<int>(channels_.size()); }
  int channel_index(int p, int q) const {
    return p * (proc_count() - 1) + (q < p ? q : q - 1);
  }
  const CommChannel& channel(int cidx) const { return channels_[cidx]; }
  const CommChannel& channel(int p, int q) const { return channels_[channel_index(p, q)]; }

  // flat resource ids: [0, P) processors, [P, P^2) channels
  int resource_count() const { return proc_count() * proc_count(); }
  int proc_resource(int p) const { return p; }
  int channel_resource(int cidx) const { return proc_count() + cidx; }

  double total_idle_power() const { return total_idle_; }
  double resource_work_power(int resource) const {
    return resource < proc_count() ? procs_[resource].work_power
                                   : channels_[resource - proc_count()].work_power;
  }

  bool operator==(const Cluster& other) const;

 private:
  std::vector<Processor> procs_;
  std::vector<CommChannel> channels_;  // canonical order, channel_index agrees
  std::unordered_map<long long, int> proc_index_;
  double total_idle_ = 0.0;
};

struct Interval {
  double begin;
  double end;
  double budget;
};

// Green power budget over a contiguous horizon [0, T).
class PowerProfile {
 public:
  PowerProfile() = default;
  explicit PowerProfile(std::vector<Interval> intervals);

  static PowerProfile from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  const std::vector<Interval>& intervals() const { return intervals_; }
  int interval_count() const { return static_cast<int>(intervals_.size()); }
  double horizon() const { return intervals_.empty() ? 0.0 : intervals_.back().end; }

  // index of the interval containing t; times at or past the horizon are
  // clamped to the last interval
  int interval_index_clamped(double t) const;
  double budget_at_clamped(double t) const { return intervals_[interval_index_clamped(t)].budget; }

  bool operator==(const PowerProfile& other) const;

 private:
  std::vector<Interval> intervals_;
};

// task index -> processor index
struct Mapping {
  std::vector<int> proc_of;

  bool operator==(const Mapping& other) const = default;
};

enum class EntityKind { task, comm };

struct Entity {
  EntityKind kind;
  int index;  // task index or edge index

  bool operator==(const Entity& other) const = default;
};

struct ScheduledItem {
  Entity entity;
  int resource;  // flat resource id
  double start;
  double duration;

  double finish() const { return start + duration; }
  bool operator==(const ScheduledItem& other) const = default;
};

struct Schedule {
  Mapping mapping;
  std::vector<ScheduledItem> items;

  bool operator==(const Schedule& other) const = default;
};

// sorts items into the canonical (start, resource, kind, index) order used
// for serialization and bit-for-bit comparisons
void canonicalize(Schedule& s);

nlohmann::json schedule_to_json(const Schedule& s, const Workflow& w, const Cluster& c);
Schedule schedule_from_json(const nlohmann::json& doc, const Workflow& w, const Cluster& c);

struct Instance {
  Workflow workflow;
  Cluster cluster;
  PowerProfile profile;
  double deadline = 0.0;
};

// checks deadline within (0, horizon]
void validate_instance(const Instance& inst);

double task_duration(const Task& t, const Processor& p);
// 0 when co-located, data / bandwidth otherwise
double comm_duration(const Edge& e, const Mapping& mu, const Workflow& w, const Cluster& c);

// file helpers; all throw ParseError with the path in the message
nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);
Workflow load_workflow(const std::string& path);
Cluster load_cluster(const std::string& path);
PowerProfile load_profile(const std::string& path);

}  // namespace greenflow
