#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "greenflow/cwm.hpp"
#include "greenflow/model.hpp"

namespace greenflow {

struct RunResult {
  std::string instance_id;
  std::string algorithm;
  double alpha = 0.0;
  double deadline = 0.0;
  double carbon_cost = 0.0;
  double makespan = 0.0;
  bool feasible = false;
  double wall_time_s = 0.0;
  long long seed = 0;

  bool operator==(const RunResult& other) const = default;
};

// deadlines are a multiple of the baseline makespan; alpha = 1 gives the
// baseline no slack at all and is rejected
double deadline_from_alpha(double m, double alpha);

// deadline-free instance; the suite derives one deadline per alpha
struct BenchInstance {
  std::string id;
  Workflow workflow;
  Cluster cluster;
  PowerProfile profile;
};

struct SuiteOptions {
  std::vector<std::string> algorithms{"heft-sl", "cwm"};
  std::vector<double> alphas{1.2, 1.5, 2.0};
  std::vector<std::uint64_t> seeds{0};
  CwmParams params;  // per-run seed overrides the seed field
  int jobs = 1;
  // wall_time_s is the one nondeterministic column; switching it off writes
  // zeros so reruns produce byte-identical files
  bool record_wall_time = true;
  // called once per finished row, serialized; completion order is not
  // deterministic when jobs > 1
  std::function<void(const RunResult&)> on_result;
};

// One baseline run per (instance, seed) yields M, then every (algorithm,
// alpha) pair is evaluated against deadline alpha * M. Every schedule is
// re-validated before it is recorded; failures become infeasible rows
// instead of aborting the suite. Returned rows are canonically sorted.
std::vector<RunResult> run_suite(const std::vector<BenchInstance>& instances,
                                 const SuiteOptions& opt);

// results pair up by (instance_id, alpha, seed); every algorithm must be
// present exactly once per case
struct RatioSummary {
  std::string algorithm;        // competitor the reference is divided by
  std::vector<double> ratios;   // (cost_ref + 1) / (cost_algo + 1), case order
  double geometric_mean = 0.0;
  double median = 0.0;          // even count: mean of the two middle values
};

std::vector<RatioSummary> cost_ratios(const std::vector<RunResult>& results,
                                      const std::string& reference);

struct ProfilePoint {
  double delta;
  double fraction;
};

struct ProfileCurve {
  std::string algorithm;
  std::vector<ProfilePoint> points;
};

// Performance profiles: r = (cost + 1) / (best cost in the case + 1),
// fraction of cases with r <= delta per threshold.
std::vector<ProfileCurve> performance_profile_curve(const std::vector<RunResult>& results,
                                                    std::span<const double> thresholds);

double max_performance_ratio(const std::vector<RunResult>& results);

// geometric grid from 1 to max_ratio inclusive
std::vector<double> geometric_thresholds(double max_ratio, int points = 200);

// shortest round-trip decimal form; the reason reruns can be byte-identical
std::string format_double(double x);

void sort_results(std::vector<RunResult>& results);

std::string results_to_csv(const std::vector<RunResult>& results);
void export_results_csv(const std::vector<RunResult>& results, const std::string& path);
nlohmann::json results_to_json(const std::vector<RunResult>& results);
void export_results_json(const std::vector<RunResult>& results, const std::string& path);
std::vector<RunResult> import_results_csv(const std::string& path);

}  // namespace greenflow
