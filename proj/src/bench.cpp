#include "greenflow/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "greenflow/evaluate.hpp"
#include "greenflow/heft_sl.hpp"

namespace greenflow {

double deadline_from_alpha(double m, double alpha) {
  if (!(m > 0.0)) throw std::invalid_argument("deadline: baseline makespan must be positive");
  if (!(alpha > 1.0)) throw std::invalid_argument("deadline: alpha must exceed 1");
  return alpha * m;
}

namespace {

constexpr const char* kCsvHeader =
    "instance_id,algorithm,alpha,deadline,carbon_cost,makespan,feasible,wall_time_s,seed";

bool csv_safe(const std::string& s) {
  return s.find_first_of(",\"\n\r") == std::string::npos && !s.empty();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CaseKey {
  std::string instance_id;
  double alpha;
  long long seed;

  bool operator<(const CaseKey& other) const {
    return std::tie(instance_id, alpha, seed) <
           std::tie(other.instance_id, other.alpha, other.seed);
  }
};

// case -> algorithm -> cost; rejects duplicate rows and incomplete cases
std::map<CaseKey, std::map<std::string, double>> group_cases(
    const std::vector<RunResult>& results) {
  std::map<CaseKey, std::map<std::string, double>> cases;
  for (const RunResult& r : results) {
    auto [it, inserted] =
        cases[{r.instance_id, r.alpha, r.seed}].try_emplace(r.algorithm, r.carbon_cost);
    if (!inserted) {
      throw ParseError("results contain a duplicate row for " + r.instance_id + "/" +
                       r.algorithm);
    }
  }
  std::vector<std::string> algos;
  for (const auto& [key, per_algo] : cases) {
    if (algos.empty()) {
      for (const auto& [a, cost] : per_algo) algos.push_back(a);
    } else {
      for (const std::string& a : algos) {
        if (!per_algo.count(a)) {
          throw ParseError("results miss algorithm " + a + " for instance " + key.instance_id);
        }
      }
      if (per_algo.size() != algos.size()) {
        throw ParseError("results carry an unpaired algorithm for instance " +
                         key.instance_id);
      }
    }
  }
  return cases;
}

}  // namespace

std::vector<RunResult> run_suite(const std::vector<BenchInstance>& instances,
                                 const SuiteOptions& opt) {
  if (opt.algorithms.empty()) throw std::invalid_argument("suite: no algorithms");
  for (const std::string& a : opt.algorithms) {
    if (a != "heft-sl" && a != "cwm") {
      throw std::invalid_argument("suite: unknown algorithm " + a);
    }
  }
  if (opt.alphas.empty()) throw std::invalid_argument("suite: no alphas");
  for (double a : opt.alphas) {
    if (!(a > 1.0)) throw std::invalid_argument("suite: alpha must exceed 1");
  }
  if (opt.seeds.empty()) throw std::invalid_argument("suite: no seeds");
  if (opt.jobs < 1) throw std::invalid_argument("suite: jobs must be at least 1");
  for (const BenchInstance& bi : instances) {
    if (!csv_safe(bi.id)) {
      throw std::invalid_argument("suite: instance id unusable in csv: " + bi.id);
    }
  }

  struct Unit {
    const BenchInstance* instance;
    std::uint64_t seed;
  };
  std::vector<Unit> units;
  for (const BenchInstance& bi : instances) {
    for (std::uint64_t seed : opt.seeds) units.push_back({&bi, seed});
  }

  std::vector<RunResult> all;
  std::mutex sink_mutex;
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto process_unit = [&](const Unit& unit) {
    const BenchInstance& bi = *unit.instance;
    Instance base{bi.workflow, bi.cluster, bi.profile, bi.profile.horizon()};

    const auto t0 = std::chrono::steady_clock::now();
    const Schedule baseline = schedule_heft_sl(base, unit.seed);
    const double baseline_wall = seconds_since(t0);
    const double m = makespan(baseline);

    std::vector<RunResult> rows;
    for (double alpha : opt.alphas) {
      Instance inst = base;
      inst.deadline = deadline_from_alpha(m, alpha);
      for (const std::string& algo : opt.algorithms) {
        RunResult row;
        row.instance_id = bi.id;
        row.algorithm = algo;
        row.alpha = alpha;
        row.deadline = inst.deadline;
        row.carbon_cost = std::numeric_limits<double>::infinity();
        row.makespan = std::numeric_limits<double>::infinity();
        row.feasible = false;
        row.seed = static_cast<long long>(unit.seed);
        try {
          Schedule s;
          double wall = 0.0;
          if (algo == "heft-sl") {
            s = baseline;
            wall = baseline_wall;
          } else {
            CwmParams params = opt.params;
            params.seed = unit.seed;
            const auto t1 = std::chrono::steady_clock::now();
            s = run_cwm(inst, params).schedule;
            wall = seconds_since(t1);
          }
          if (!schedule_is_valid(validate_schedule(s, inst))) {
            throw InternalError("suite: invalid schedule for instance " + bi.id);
          }
          const double ms = makespan(s);
          const double cost = carbon_cost(s, inst).total_cost;
          row.makespan = ms;
          row.feasible = ms <= inst.deadline + kTimeEps;
          row.carbon_cost = cost;
          row.wall_time_s = opt.record_wall_time ? wall : 0.0;
        } catch (const InfeasibleDeadline&) {
          // stays an infeasible row
        } catch (const ParseError&) {
          // integration end past the horizon; cost undefined, row unusable
        }
        rows.push_back(std::move(row));
      }
    }

    std::lock_guard lock(sink_mutex);
    for (RunResult& row : rows) {
      if (opt.on_result) opt.on_result(row);
      all.push_back(std::move(row));
    }
  };

  auto worker = [&] {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= units.size()) return;
      try {
        process_unit(units[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::min<int>(opt.jobs, static_cast<int>(units.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  sort_results(all);
  return all;
}

std::vector<RatioSummary> cost_ratios(const std::vector<RunResult>& results,
                                      const std::string& reference) {
  const auto cases = group_cases(results);
  if (cases.empty()) throw ParseError("ratios: no results");

  std::vector<std::string> competitors;
  for (const auto& [algo, cost] : cases.begin()->second) {
    if (algo != reference) competitors.push_back(algo);
  }
  if (competitors.size() == cases.begin()->second.size()) {
    throw ParseError("ratios: reference algorithm " + reference + " absent");
  }

  std::vector<RatioSummary> summaries;
  for (const std::string& algo : competitors) {
    RatioSummary s;
    s.algorithm = algo;
    for (const auto& [key, per_algo] : cases) {
      s.ratios.push_back((per_algo.at(reference) + 1.0) / (per_algo.at(algo) + 1.0));
    }
    double log_sum = 0.0;
    for (double r : s.ratios) log_sum += std::log(r);
    s.geometric_mean = std::exp(log_sum / static_cast<double>(s.ratios.size()));
    std::vector<double> sorted = s.ratios;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = sorted.size();
    s.median = k % 2 == 1 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
    summaries.push_back(std::move(s));
  }
  return summaries;
}

namespace {

// per algorithm, the ratio against the per-case best, case order
std::map<std::string, std::vector<double>> best_ratios(const std::vector<RunResult>& results) {
  const auto cases = group_cases(results);
  if (cases.empty()) throw ParseError("performance profile: no results");
  std::map<std::string, std::vector<double>> ratios;
  for (const auto& [key, per_algo] : cases) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [algo, cost] : per_algo) best = std::min(best, cost);
    for (const auto& [algo, cost] : per_algo) {
      ratios[algo].push_back((cost + 1.0) / (best + 1.0));
    }
  }
  return ratios;
}

}  // namespace

std::vector<ProfileCurve> performance_profile_curve(const std::vector<RunResult>& results,
                                                    std::span<const double> thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("performance profile: no thresholds");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (thresholds[i] < 1.0 || (i > 0 && thresholds[i] < thresholds[i - 1])) {
      throw std::invalid_argument("performance profile: thresholds must ascend from 1");
    }
  }
  std::vector<ProfileCurve> curves;
  for (const auto& [algo, ratios] : best_ratios(results)) {
    ProfileCurve curve;
    curve.algorithm = algo;
    for (double delta : thresholds) {
      std::size_t hit = 0;
      for (double r : ratios) {
        if (r <= delta + 1e-12) ++hit;
      }
      curve.points.push_back({delta, static_cast<double>(hit) / static_cast<double>(ratios.size())});
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

double max_performance_ratio(const std::vector<RunResult>& results) {
  double best = 1.0;
  for (const auto& [algo, ratios] : best_ratios(results)) {
    for (double r : ratios) best = std::max(best, r);
  }
  return best;
}

std::vector<double> geometric_thresholds(double max_ratio, int points) {
  if (points < 1) throw std::invalid_argument("thresholds: need at least one point");
  max_ratio = std::max(max_ratio, 1.0);
  std::vector<double> grid;
  grid.reserve(points);
  if (points == 1 || max_ratio == 1.0) {
    grid.push_back(1.0);
    if (points > 1) grid.resize(points, max_ratio);
    return grid;
  }
  const double log_max = std::log(max_ratio);
  for (int i = 0; i < points; ++i) {
    grid.push_back(std::exp(log_max * static_cast<double>(i) / static_cast<double>(points - 1)));
  }
  grid.front() = 1.0;
  grid.back() = max_ratio;
  return grid;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void sort_results(std::vector<RunResult>& results) {
  std::sort(results.begin(), results.end(), [](const RunResult& a, const RunResult& b) {
    return std::tie(a.instance_id, a.algorithm, a.alpha, a.seed) <
           std::tie(b.instance_id, b.algorithm, b.alpha, b.seed);
  });
}

std::string results_to_csv(const std::vector<RunResult>& results) {
  std::string out = kCsvHeader;
  out.push_back('\n');
  for (const RunResult& r : results) {
    if (!csv_safe(r.instance_id) || !csv_safe(r.algorithm)) {
      throw ParseError("results csv: id or algorithm unusable in csv: " + r.instance_id);
    }
    out += r.instance_id;
    out.push_back(',');
    out += r.algorithm;
    out.push_back(',');
    out += format_double(r.alpha);
    out.push_back(',');
    out += format_double(r.deadline);
    out.push_back(',');
    out += format_double(r.carbon_cost);
    out.push_back(',');
    out += format_double(r.makespan);
    out.push_back(',');
    out += r.feasible ? "true" : "false";
    out.push_back(',');
    out += format_double(r.wall_time_s);
    out.push_back(',');
    out += std::to_string(r.seed);
    out.push_back('\n');
  }
  return out;
}

void export_results_csv(const std::vector<RunResult>& results, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write results csv: " + path);
  out << results_to_csv(results);
  if (!out) throw ParseError("write failed for results csv: " + path);
}

nlohmann::json results_to_json(const std::vector<RunResult>& results) {
  nlohmann::json rows = nlohmann::json::array();
  for (const RunResult& r : results) {
    rows.push_back({{"instance_id", r.instance_id},
                    {"algorithm", r.algorithm},
                    {"alpha", r.alpha},
                    {"deadline", r.deadline},
                    {"carbon_cost", r.carbon_cost},
                    {"makespan", r.makespan},
                    {"feasible", r.feasible},
                    {"wall_time_s", r.wall_time_s},
                    {"seed", r.seed}});
  }
  return rows;
}

void export_results_json(const std::vector<RunResult>& results, const std::string& path) {
  write_json_file(path, results_to_json(results));
}

namespace {

double parse_double(const std::string& cell, const std::string& path) {
  double x = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ParseError("results csv: bad number '" + cell + "' in " + path);
  }
  return x;
}

}  // namespace

std::vector<RunResult> import_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open results csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("results csv is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError("results csv has an unexpected header: " + path);

  std::vector<RunResult> results;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        cells.push_back(line.substr(pos));
        break;
      }
      cells.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    if (cells.size() != 9) throw ParseError("results csv row has wrong arity in " + path);

    RunResult r;
    r.instance_id = cells[0];
    r.algorithm = cells[1];
    r.alpha = parse_double(cells[2], path);
    r.deadline = parse_double(cells[3], path);
    r.carbon_cost = parse_double(cells[4], path);
    r.makespan = parse_double(cells[5], path);
    if (cells[6] == "true" || cells[6] == "1") {
      r.feasible = true;
    } else if (cells[6] == "false" || cells[6] == "0") {
      r.feasible = false;
    } else {
      throw ParseError("results csv: bad feasible flag '" + cells[6] + "' in " + path);
    }
    r.wall_time_s = parse_double(cells[7], path);
    long long seed = 0;
    const auto res = std::from_chars(cells[8].data(), cells[8].data() + cells[8].size(), seed);
    if (res.ec != std::errc{} || res.ptr != cells[8].data() + cells[8].size()) {
      throw ParseError("results csv: bad seed '" + cells[8] + "' in " + path);
    }
    r.seed = seed;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace greenflow
