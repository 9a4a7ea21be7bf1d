#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "greenflow/bench.hpp"
#include "greenflow/cwm.hpp"
#include "greenflow/evaluate.hpp"
#include "greenflow/genlab.hpp"
#include "greenflow/heft_sl.hpp"
#include "greenflow/model.hpp"
#include "greenflow/oracle.hpp"

namespace {

using namespace greenflow;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GREENFLOW_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ParseError(std::string("GREENFLOW_SEED is not a number: ") + env);
    }
  }
  return 0;
}

std::vector<NodeSpec> load_node_specs(const std::string& path) {
  const nlohmann::json doc = load_json_file(path);
  if (!doc.is_array() || doc.empty()) {
    throw ParseError("node specs must be a non-empty json array: " + path);
  }
  std::vector<NodeSpec> specs;
  for (const auto& entry : doc) {
    specs.push_back({entry.at("speed").get<double>(), entry.at("idle_power").get<double>(),
                     entry.at("work_power").get<double>()});
  }
  return specs;
}

Instance load_instance(const std::string& workflow, const std::string& cluster,
                       const std::string& profile, double deadline) {
  Instance inst;
  inst.workflow = load_workflow(workflow);
  inst.cluster = load_cluster(cluster);
  inst.profile = load_profile(profile);
  inst.deadline = deadline;
  return inst;
}

std::vector<long long> parse_int_list(const std::string& text) {
  std::vector<long long> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string cell = text.substr(pos, comma - pos);
    try {
      values.push_back(std::stoll(cell));
    } catch (const std::exception&) {
      throw ParseError("not an integer list entry: '" + cell + "'");
    }
    pos = comma + 1;
  }
  return values;
}

// resolves a path found inside a matrix file relative to that file
std::string resolve_relative(const std::string& base_file, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_file).parent_path() / p).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carbon-aware workflow mapping toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  int exit_code = 0;
  auto guard = [&exit_code](auto&& fn) {
    return [&exit_code, fn]() {
      try {
        fn();
      } catch (const InfeasibleDeadline& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        exit_code = 2;
      } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        exit_code = 3;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 1;
      }
    };
  };

  // gen -------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate workflows, clusters, profiles, fixtures");
  gen->require_subcommand(1);

  auto* gen_wf = gen->add_subcommand("workflow", "layered random DAG");
  int wf_tasks = 10, wf_layers = 3;
  double wf_density = 0.3, wf_weight_mean = 1.0;
  std::string wf_cluster, wf_out;
  gen_wf->add_option("--tasks", wf_tasks, "task count")->required();
  gen_wf->add_option("--layers", wf_layers, "layer count")->required();
  gen_wf->add_option("--density", wf_density, "edge probability between consecutive layers");
  gen_wf->add_option("--cluster", wf_cluster, "cluster file; weights follow its mean speed");
  gen_wf->add_option("--weight-mean", wf_weight_mean, "weight mean when no cluster is given");
  gen_wf->add_option("--seed", seed, "rng seed");
  gen_wf->add_option("--out", wf_out, "output file")->required();
  gen_wf->callback(guard([&] {
    WeightStats stats{wf_weight_mean};
    if (!wf_cluster.empty()) stats = WeightStats::from_cluster(load_cluster(wf_cluster));
    const Workflow w = gen_layered_dag(wf_tasks, wf_layers, wf_density, stats, seed);
    write_json_file(wf_out, w.to_json());
  }));

  auto* gen_cl = gen->add_subcommand("cluster", "copies of node specs plus sampled links");
  std::string cl_specs, cl_out;
  int cl_copies = 1;
  double cl_idle_mean = -1.0, cl_idle_std = -1.0, cl_work_mean = -1.0, cl_work_std = -1.0;
  gen_cl->add_option("--specs", cl_specs, "json array of {speed, idle_power, work_power}")
      ->required();
  gen_cl->add_option("--copies", cl_copies, "copies per spec")->required();
  gen_cl->add_option("--link-idle-mean", cl_idle_mean, "link idle power mean");
  gen_cl->add_option("--link-idle-std", cl_idle_std, "link idle power sigma");
  gen_cl->add_option("--link-work-mean", cl_work_mean, "link work power mean");
  gen_cl->add_option("--link-work-std", cl_work_std, "link work power sigma");
  gen_cl->add_option("--seed", seed, "rng seed");
  gen_cl->add_option("--out", cl_out, "output file")->required();
  gen_cl->callback(guard([&] {
    const auto specs = load_node_specs(cl_specs);
    LinkStats links = default_link_stats(specs);
    if (cl_idle_mean >= 0.0) links.idle_mean = cl_idle_mean;
    if (cl_idle_std >= 0.0) links.idle_std = cl_idle_std;
    if (cl_work_mean >= 0.0) links.work_mean = cl_work_mean;
    if (cl_work_std >= 0.0) links.work_std = cl_work_std;
    const Cluster c = gen_cluster(specs, cl_copies, links, seed);
    write_json_file(cl_out, c.to_json());
  }));

  auto* gen_pr = gen->add_subcommand("profile", "power budget profile from an intensity series");
  std::string pr_series, pr_cluster, pr_out;
  double pr_horizon = 0.0, pr_dyn = 0.2;
  int pr_len_min = 10, pr_len_max = 50;
  gen_pr->add_option("--series", pr_series, "carbon intensity csv (timestamp,intensity)")
      ->required();
  gen_pr->add_option("--cluster", pr_cluster, "cluster file fixing the power range")->required();
  gen_pr->add_option("--horizon", pr_horizon, "profile horizon")->required();
  gen_pr->add_option("--len-min", pr_len_min, "minimum interval length");
  gen_pr->add_option("--len-max", pr_len_max, "maximum interval length");
  gen_pr->add_option("--dyn-fraction", pr_dyn, "work power fraction on top of the idle floor");
  gen_pr->add_option("--seed", seed, "rng seed");
  gen_pr->add_option("--out", pr_out, "output file")->required();
  gen_pr->callback(guard([&] {
    const auto series = read_intensity_csv(pr_series);
    const Cluster c = load_cluster(pr_cluster);
    const PowerProfile profile = profile_from_intensities(series, c, pr_horizon,
                                                          {pr_len_min, pr_len_max}, pr_dyn, seed);
    write_json_file(pr_out, profile.to_json());
  }));

  auto* gen_3p = gen->add_subcommand("fixture3p", "3-partition hardness fixture");
  std::string fx_integers, fx_prefix;
  long long fx_b = 0;
  gen_3p->add_option("--integers", fx_integers, "comma-separated list of 3n positive integers")
      ->required();
  gen_3p->add_option("--b", fx_b, "target sum B per triple")->required();
  gen_3p->add_option("--out-prefix", fx_prefix, "writes <prefix>.{workflow,cluster,profile}.json")
      ->required();
  gen_3p->callback(guard([&] {
    const auto integers = parse_int_list(fx_integers);
    const Instance inst = gen_3partition_instance(integers, fx_b);
    write_json_file(fx_prefix + ".workflow.json", inst.workflow.to_json());
    write_json_file(fx_prefix + ".cluster.json", inst.cluster.to_json());
    write_json_file(fx_prefix + ".profile.json", inst.profile.to_json());
    std::cout << "deadline " << format_double(inst.deadline) << "\n";
  }));

  // schedule --------------------------------------------------------------
  auto* schedule = app.add_subcommand("schedule", "map and schedule a workflow");
  std::string sc_algo, sc_workflow, sc_cluster, sc_profile, sc_out;
  double sc_deadline = -1.0, sc_alpha = -1.0;
  CwmParams sc_params;
  bool sc_keep_best = true;
  schedule->add_option("--algo", sc_algo, "heft-sl or cwm")->required();
  schedule->add_option("--workflow", sc_workflow)->required();
  schedule->add_option("--cluster", sc_cluster)->required();
  schedule->add_option("--profile", sc_profile)->required();
  schedule->add_option("--deadline", sc_deadline, "absolute deadline");
  schedule->add_option("--alpha", sc_alpha, "deadline as alpha x baseline makespan");
  schedule->add_option("--tau", sc_params.tau, "subset budget fraction");
  schedule->add_option("--phi", sc_params.phi, "local search iterations");
  schedule->add_option("--retries", sc_params.retries, "interval advances per task");
  schedule->add_option("--keep-best", sc_keep_best, "return the best visited schedule");
  schedule->add_option("--seed", seed, "rng seed");
  schedule->add_option("--out", sc_out, "schedule output file")->required();
  schedule->callback(guard([&] {
    if (sc_algo != "heft-sl" && sc_algo != "cwm") {
      throw ParseError("unknown algorithm: " + sc_algo);
    }
    if (sc_deadline < 0.0 && sc_alpha < 0.0) {
      throw ParseError("one of --deadline or --alpha is required");
    }
    Instance inst = load_instance(sc_workflow, sc_cluster, sc_profile, 0.0);
    if (sc_deadline >= 0.0) {
      if (sc_alpha >= 0.0) {
        std::cerr << "warning: both --deadline and --alpha given, using --deadline\n";
      }
      inst.deadline = sc_deadline;
    } else {
      const double m = makespan(schedule_heft_sl(inst, seed));
      inst.deadline = deadline_from_alpha(m, sc_alpha);
    }
    validate_instance(inst);

    sc_params.seed = seed;
    sc_params.keep_best = sc_keep_best;
    Schedule s;
    if (sc_algo == "heft-sl") {
      s = schedule_heft_sl(inst, seed);
    } else {
      s = run_cwm(inst, sc_params).schedule;
    }
    write_json_file(sc_out, schedule_to_json(s, inst.workflow, inst.cluster));
  }));

  // evaluate ---------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "validate a schedule and report carbon cost");
  std::string ev_schedule, ev_workflow, ev_cluster, ev_profile;
  double ev_deadline = 0.0;
  evaluate->add_option("--schedule", ev_schedule)->required();
  evaluate->add_option("--workflow", ev_workflow)->required();
  evaluate->add_option("--cluster", ev_cluster)->required();
  evaluate->add_option("--profile", ev_profile)->required();
  evaluate->add_option("--deadline", ev_deadline)->required();
  evaluate->callback(guard([&] {
    const Instance inst = load_instance(ev_workflow, ev_cluster, ev_profile, ev_deadline);
    validate_instance(inst);
    const Schedule s = schedule_from_json(load_json_file(ev_schedule), inst.workflow, inst.cluster);
    const auto violations = validate_schedule(s, inst);

    nlohmann::json report;
    report["valid"] = schedule_is_valid(violations);
    report["makespan"] = makespan(s);
    nlohmann::json vlist = nlohmann::json::array();
    for (const Violation& v : violations) {
      vlist.push_back({{"kind", to_string(v.kind)}, {"detail", v.detail}});
    }
    report["violations"] = vlist;
    try {
      report["carbon"] = carbon_cost(s, inst).to_json();
    } catch (const ParseError& e) {
      report["carbon"] = nullptr;
      report["carbon_error"] = e.what();
    }
    std::cout << report.dump(2) << "\n";
  }));

  // bench -------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "run an experiment matrix");
  std::string bn_matrix, bn_out, bn_import;
  int bn_jobs = 1;
  bool bn_no_timings = false;
  bench->add_option("--matrix", bn_matrix, "matrix json file")->required();
  bench->add_option("--out", bn_out, "results csv")->required();
  bench->add_option("--jobs", bn_jobs, "parallel workers");
  bench->add_option("--import-competitor", bn_import, "merge competitor rows from a results csv");
  bench->add_flag("--no-timings", bn_no_timings, "write zero wall times for reproducible files");
  bench->callback(guard([&] {
    const nlohmann::json doc = load_json_file(bn_matrix);
    SuiteOptions opt;
    if (doc.contains("algorithms")) {
      opt.algorithms = doc["algorithms"].get<std::vector<std::string>>();
    }
    if (doc.contains("alphas")) opt.alphas = doc["alphas"].get<std::vector<double>>();
    if (doc.contains("seeds")) opt.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    if (doc.contains("params")) opt.params = CwmParams::from_json(doc["params"]);
    opt.jobs = bn_jobs;
    opt.record_wall_time = !bn_no_timings;

    std::vector<BenchInstance> instances;
    for (const auto& entry : doc.at("instances")) {
      BenchInstance bi;
      bi.id = entry.at("id").get<std::string>();
      bi.workflow = load_workflow(resolve_relative(bn_matrix, entry.at("workflow").get<std::string>()));
      bi.cluster = load_cluster(resolve_relative(bn_matrix, entry.at("cluster").get<std::string>()));
      bi.profile = load_profile(resolve_relative(bn_matrix, entry.at("profile").get<std::string>()));
      instances.push_back(std::move(bi));
    }

    // rows land in the file as they finish, then the file is rewritten in
    // canonical order so reruns compare byte for byte
    std::ofstream incremental(bn_out, std::ios::binary);
    if (!incremental) throw ParseError("cannot write results csv: " + bn_out);
    incremental << "instance_id,algorithm,alpha,deadline,carbon_cost,makespan,feasible,"
                   "wall_time_s,seed\n";
    opt.on_result = [&incremental](const RunResult& r) {
      std::vector<RunResult> one{r};
      const std::string csv = results_to_csv(one);
      incremental << csv.substr(csv.find('\n') + 1);
      incremental.flush();
    };

    std::vector<RunResult> results = run_suite(instances, opt);
    incremental.close();

    if (!bn_import.empty()) {
      const auto imported = import_results_csv(bn_import);
      results.insert(results.end(), imported.begin(), imported.end());
      sort_results(results);
    }
    export_results_csv(results, bn_out);

    try {
      for (const RatioSummary& s : cost_ratios(results, "cwm")) {
        std::cout << "cwm vs " << s.algorithm << ": geometric mean "
                  << format_double(s.geometric_mean) << ", median " << format_double(s.median)
                  << "\n";
      }
    } catch (const ParseError&) {
      // single-algorithm matrices have no ratios to report
    }
  }));

  // profile-curve -----------------------------------------------------------
  auto* curve = app.add_subcommand("profile-curve", "performance profile from a results csv");
  std::string cv_results, cv_out;
  int cv_points = 200;
  curve->add_option("--results", cv_results, "results csv")->required();
  curve->add_option("--out", cv_out, "curve csv (algorithm,delta,fraction)")->required();
  curve->add_option("--points", cv_points, "threshold count");
  curve->callback(guard([&] {
    const auto results = import_results_csv(cv_results);
    const auto thresholds = geometric_thresholds(max_performance_ratio(results), cv_points);
    const auto curves = performance_profile_curve(results, thresholds);
    std::ofstream out(cv_out, std::ios::binary);
    if (!out) throw ParseError("cannot write curve csv: " + cv_out);
    out << "algorithm,delta,fraction\n";
    for (const ProfileCurve& c : curves) {
      for (const ProfilePoint& p : c.points) {
        out << c.algorithm << ',' << format_double(p.delta) << ',' << format_double(p.fraction)
            << "\n";
      }
    }
  }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems exit 1, help exits 0
  }
  return exit_code;
}
