#include "greenflow/genlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace greenflow {

LinkStats default_link_stats(std::span<const NodeSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("link stats: no node specs");
  double idle = 0.0, work = 0.0;
  for (const NodeSpec& s : specs) {
    idle += s.idle_power;
    work += s.work_power;
  }
  idle /= static_cast<double>(specs.size());
  work /= static_cast<double>(specs.size());
  return {0.05 * idle, 0.2 * 0.05 * idle, 0.05 * work, 0.2 * 0.05 * work};
}

double map_intensity(double x, double x_min, double x_max, double p_min, double p_max) {
  if (x_max == x_min) return 0.5 * (p_min + p_max);
  return p_max - (x - x_min) / (x_max - x_min) * (p_max - p_min);
}

PowerProfile profile_from_intensities(std::span<const double> series, const Cluster& c,
                                      double horizon, std::pair<int, int> len_range,
                                      double dyn_fraction, std::uint64_t seed) {
  if (!(horizon > 0.0)) throw std::invalid_argument("profile: horizon must be positive");
  if (len_range.first < 1 || len_range.second < len_range.first ||
      static_cast<double>(len_range.second) > horizon) {
    throw std::invalid_argument("profile: interval lengths must fit in [1, horizon]");
  }
  if (!(dyn_fraction >= 0.0)) throw std::invalid_argument("profile: negative dyn_fraction");
  for (double x : series) {
    if (!(x >= 0.0)) throw std::invalid_argument("profile: negative intensity");
  }

  Rng rng(seed);
  std::vector<double> bounds{0.0};
  while (bounds.back() < horizon) {
    const double len =
        static_cast<double>(rng.uniform_int(len_range.first, len_range.second));
    bounds.push_back(std::min(bounds.back() + len, horizon));
  }
  const std::size_t count = bounds.size() - 1;
  if (series.size() < count) {
    throw std::invalid_argument("profile: series shorter than the interval count");
  }

  const std::size_t first =
      static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(series.size() - count)));
  const double x_min = *std::min_element(series.begin() + first, series.begin() + first + count);
  const double x_max = *std::max_element(series.begin() + first, series.begin() + first + count);

  const double p_min = c.total_idle_power();
  double work = 0.0;
  for (const Processor& p : c.procs()) work += p.work_power;
  for (int i = 0; i < c.channel_count(); ++i) work += c.channel(i).work_power;
  const double p_max = p_min + dyn_fraction * work;

  std::vector<Interval> intervals(count);
  for (std::size_t i = 0; i < count; ++i) {
    intervals[i] = {bounds[i], bounds[i + 1],
                    map_intensity(series[first + i], x_min, x_max, p_min, p_max)};
  }
  return PowerProfile(std::move(intervals));
}

Cluster gen_cluster(std::span<const NodeSpec> specs, int copies, const LinkStats& links,
                    std::uint64_t seed) {
  if (specs.empty()) throw std::invalid_argument("cluster: no node specs");
  if (copies < 1) throw std::invalid_argument("cluster: copies must be at least 1");

  std::vector<Processor> procs;
  procs.reserve(specs.size() * static_cast<std::size_t>(copies));
  long long id = 0;
  for (const NodeSpec& s : specs) {
    for (int k = 0; k < copies; ++k) {
      procs.push_back({id++, s.speed, s.idle_power, s.work_power});
    }
  }

  Rng rng(seed);
  std::vector<CommChannel> channels;
  const int n = static_cast<int>(procs.size());
  channels.reserve(static_cast<std::size_t>(n) * (n - 1));
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (p == q) continue;
      const double idle = std::max(0.0, rng.normal(links.idle_mean, links.idle_std));
      const double work = std::max(0.0, rng.normal(links.work_mean, links.work_std));
      channels.push_back({procs[p].id, procs[q].id, idle, work, 1.0});
    }
  }
  return Cluster(std::move(procs), std::move(channels));
}

WeightStats WeightStats::from_cluster(const Cluster& c) {
  double mean = 0.0;
  for (const Processor& p : c.procs()) mean += p.speed;
  return {mean / static_cast<double>(c.proc_count())};
}

double WeightStats::sample(Rng& rng) const {
  return std::max(0.01 * mean, rng.normal(mean, 0.25 * mean));
}

Workflow gen_layered_dag(int n_tasks, int layers, double edge_density,
                         const WeightStats& weights, std::uint64_t seed) {
  if (layers < 1) throw std::invalid_argument("dag: layers must be at least 1");
  if (n_tasks < layers) throw std::invalid_argument("dag: fewer tasks than layers");
  if (!(edge_density >= 0.0) || edge_density > 1.0) {
    throw std::invalid_argument("dag: edge density outside [0, 1]");
  }

  Rng rng(seed);
  std::vector<int> layer_size(layers, 1);
  for (int extra = n_tasks - layers; extra > 0; --extra) {
    ++layer_size[static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(layers)))];
  }
  std::vector<std::vector<int>> members(layers);
  int next = 0;
  for (int l = 0; l < layers; ++l) {
    for (int k = 0; k < layer_size[l]; ++k) members[l].push_back(next++);
  }

  std::vector<Task> tasks;
  tasks.reserve(n_tasks);
  for (int v = 0; v < n_tasks; ++v) tasks.push_back({v, weights.sample(rng)});

  std::vector<std::pair<int, int>> pairs;
  std::vector<char> has_incoming(n_tasks, 0);
  for (int l = 0; l + 1 < layers; ++l) {
    for (int u : members[l]) {
      for (int v : members[l + 1]) {
        if (rng.next_double() < edge_density) {
          pairs.push_back({u, v});
          has_incoming[v] = 1;
        }
      }
    }
  }
  for (int l = 1; l < layers; ++l) {
    for (int v : members[l]) {
      if (!has_incoming[v]) {
        const auto& prev = members[l - 1];
        pairs.push_back({prev[rng.next_below(prev.size())], v});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [u, v] : pairs) edges.push_back({u, v, weights.sample(rng)});
  return Workflow(std::move(tasks), std::move(edges));
}

Instance gen_3partition_instance(std::span<const long long> integers, long long b) {
  if (integers.empty() || integers.size() % 3 != 0) {
    throw std::invalid_argument("3-partition: need 3n integers");
  }
  if (b < 1) throw std::invalid_argument("3-partition: B must be positive");
  const long long n = static_cast<long long>(integers.size()) / 3;
  long long sum = 0;
  for (long long a : integers) {
    if (a < 1) throw std::invalid_argument("3-partition: integers must be positive");
    sum += a;
  }
  if (sum != n * b) {
    throw std::invalid_argument("3-partition: integers must sum to n*B");
  }

  std::vector<Task> tasks;
  for (std::size_t i = 0; i < integers.size(); ++i) {
    tasks.push_back({static_cast<long long>(i), static_cast<double>(integers[i])});
  }

  std::vector<Interval> intervals;
  for (long long k = 0; k < n; ++k) {
    const double lo = static_cast<double>(k * (b + 1));
    intervals.push_back({lo, lo + static_cast<double>(b), 1.0});
    if (k + 1 < n) {
      intervals.push_back({lo + static_cast<double>(b), static_cast<double>((k + 1) * (b + 1)), 0.0});
    }
  }

  Instance inst;
  inst.workflow = Workflow(std::move(tasks), {});
  inst.cluster = Cluster({{0, 1.0, 0.0, 1.0}}, {});
  inst.profile = PowerProfile(std::move(intervals));
  inst.deadline = static_cast<double>(n * b + (n - 1));
  return inst;
}

std::vector<double> read_intensity_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open intensity csv: " + path);

  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      std::size_t lead = 0;
      while (lead < cell.size() && cell[lead] == ' ') ++lead;
      cells.push_back(cell.substr(lead));
    }
    return cells;
  };

  std::string header;
  if (!std::getline(in, header)) throw ParseError("intensity csv has no header: " + path);
  const auto columns = split(header);
  const auto it = std::find(columns.begin(), columns.end(), "intensity");
  if (it == columns.end()) {
    throw ParseError("intensity csv lacks an intensity column: " + path);
  }
  const std::size_t col = static_cast<std::size_t>(it - columns.begin());

  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() <= col) {
      throw ParseError("intensity csv row misses the intensity column: " + path);
    }
    try {
      values.push_back(std::stod(cells[col]));
    } catch (const std::exception&) {
      throw ParseError("intensity csv has a non-numeric intensity: " + cells[col]);
    }
  }
  return values;
}

}  // namespace greenflow
