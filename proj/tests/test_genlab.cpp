#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "helpers.hpp"

using namespace greenflow;

namespace {

const std::vector<NodeSpec> kSixSpecs{
    {450.0, 45.0, 220.0}, {620.0, 60.0, 280.0}, {380.0, 85.0, 310.0},
    {830.0, 70.0, 350.0}, {540.0, 110.0, 400.0}, {710.0, 55.0, 260.0},
};

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path("genlab_test_" + name) {
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("genlab") {
  TEST_CASE("intensity mapping is affine and decreasing") {
    CHECK(map_intensity(100.0, 100.0, 300.0, 50.0, 150.0) == doctest::Approx(150.0));
    CHECK(map_intensity(300.0, 100.0, 300.0, 50.0, 150.0) == doctest::Approx(50.0));
    CHECK(map_intensity(200.0, 100.0, 300.0, 50.0, 150.0) == doctest::Approx(100.0));
    // degenerate series: everything maps to the midpoint
    CHECK(map_intensity(5.0, 5.0, 5.0, 40.0, 60.0) == doctest::Approx(50.0));
  }

  TEST_CASE("generated profiles tile the horizon with in-range lengths") {
    const Cluster c = gen_cluster(kSixSpecs, 2, default_link_stats(kSixSpecs), 1);
    std::vector<double> series;
    Rng rng(5);
    for (int i = 0; i < 64; ++i) series.push_back(rng.uniform(50.0, 500.0));

    const PowerProfile profile = profile_from_intensities(series, c, 200.0, {10, 50}, 0.2, 9);
    REQUIRE(profile.interval_count() > 0);
    CHECK(profile.intervals().front().begin == doctest::Approx(0.0));
    CHECK(profile.horizon() == doctest::Approx(200.0));
    for (int j = 0; j < profile.interval_count(); ++j) {
      const Interval& iv = profile.intervals()[j];
      if (j + 1 < profile.interval_count()) {
        CHECK(iv.end - iv.begin >= 10.0 - kTimeEps);
        CHECK(iv.end - iv.begin <= 50.0 + kTimeEps);
        CHECK(profile.intervals()[j + 1].begin == doctest::Approx(iv.end));
      } else {
        CHECK(iv.end - iv.begin <= 50.0 + kTimeEps);  // last one only truncates
      }
    }

    // budgets stay inside [p_min, p_max]
    double total_work = 0.0;
    for (const auto& p : c.procs()) total_work += p.work_power;
    for (int ch = 0; ch < c.channel_count(); ++ch) total_work += c.channel(ch).work_power;
    const double p_min = c.total_idle_power();
    const double p_max = p_min + 0.2 * total_work;
    for (const auto& iv : profile.intervals()) {
      CHECK(iv.budget >= p_min - 1e-6);
      CHECK(iv.budget <= p_max + 1e-6);
    }

    CHECK(profile_from_intensities(series, c, 200.0, {10, 50}, 0.2, 9) == profile);
  }

  TEST_CASE("profile generation validates its inputs") {
    const Cluster c = testutil::simple_cluster({{1.0, 1.0, 5.0}});
    const std::vector<double> series{100.0, 200.0};
    CHECK_THROWS_AS(profile_from_intensities(series, c, 0.0, {1, 2}, 0.2, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(profile_from_intensities(series, c, 10.0, {3, 2}, 0.2, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(profile_from_intensities(series, c, 10.0, {1, 2}, -0.5, 0),
                    std::invalid_argument);
    // two values cannot cover ten unit-length intervals
    CHECK_THROWS_AS(profile_from_intensities(series, c, 10.0, {1, 1}, 0.2, 0),
                    std::invalid_argument);
  }

  TEST_CASE("cluster generation replicates specs and fills every channel") {
    const Cluster c = gen_cluster(kSixSpecs, 12, default_link_stats(kSixSpecs), 3);
    CHECK(c.proc_count() == 72);
    CHECK(c.channel_count() == 72 * 71);
    // copies keep the spec values
    for (int p = 0; p < 72; ++p) {
      const NodeSpec& spec = kSixSpecs[p / 12];
      CHECK(c.proc(p).speed == doctest::Approx(spec.speed));
      CHECK(c.proc(p).idle_power == doctest::Approx(spec.idle_power));
      CHECK(c.proc(p).work_power == doctest::Approx(spec.work_power));
    }
    CHECK(gen_cluster(kSixSpecs, 24, default_link_stats(kSixSpecs), 3).proc_count() == 144);
    CHECK(gen_cluster(kSixSpecs, 12, default_link_stats(kSixSpecs), 3) == c);
  }

  TEST_CASE("zero link sigma degenerates to identical channels") {
    const std::vector<NodeSpec> one{{2.0, 10.0, 100.0}};
    const LinkStats links{0.5, 0.0, 5.0, 0.0};
    const Cluster c = gen_cluster(one, 2, links, 11);
    REQUIRE(c.channel_count() == 2);
    CHECK(c.channel(0).idle_power == doctest::Approx(0.5));
    CHECK(c.channel(1).idle_power == doctest::Approx(0.5));
    CHECK(c.channel(0).work_power == doctest::Approx(5.0));
    CHECK(c.channel(1).work_power == doctest::Approx(5.0));
  }

  TEST_CASE("default link stats sit well below the node powers") {
    const LinkStats links = default_link_stats(kSixSpecs);
    double idle_mean = 0.0, work_mean = 0.0;
    for (const auto& s : kSixSpecs) {
      idle_mean += s.idle_power;
      work_mean += s.work_power;
    }
    idle_mean /= kSixSpecs.size();
    work_mean /= kSixSpecs.size();
    CHECK(links.idle_mean == doctest::Approx(0.05 * idle_mean));
    CHECK(links.work_mean == doctest::Approx(0.05 * work_mean));
    CHECK(links.idle_std == doctest::Approx(0.2 * links.idle_mean));
    CHECK(links.work_std == doctest::Approx(0.2 * links.work_mean));
  }

  TEST_CASE("weight sampling stays positive and tracks the cluster speeds") {
    const Cluster c = gen_cluster(kSixSpecs, 1, default_link_stats(kSixSpecs), 0);
    const WeightStats stats = WeightStats::from_cluster(c);
    double mean_speed = 0.0;
    for (const auto& p : c.procs()) mean_speed += p.speed;
    mean_speed /= c.proc_count();
    CHECK(stats.mean == doctest::Approx(mean_speed));

    Rng rng(7);
    double acc = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const double w = stats.sample(rng);
      CHECK(w >= 0.01 * stats.mean);
      acc += w;
    }
    CHECK(acc / 2000.0 == doctest::Approx(stats.mean).epsilon(0.05));
  }

  TEST_CASE("layered DAGs respect the layer structure") {
    const WeightStats weights{4.0};
    const Workflow w = gen_layered_dag(40, 5, 0.4, weights, 13);
    CHECK(w.task_count() == 40);

    // recover layers: longest path depth from sources
    std::vector<int> depth(w.task_count(), 0);
    for (int v : topological_indices(w)) {
      for (int e : w.incoming(v)) {
        depth[v] = std::max(depth[v], depth[w.edge_src(e)] + 1);
      }
    }
    // every layer holds at least one task and every non-first-layer task has
    // a predecessor in the previous layer, so depth equals the layer index
    const int max_depth = *std::max_element(depth.begin(), depth.end());
    CHECK(max_depth == 4);
    for (int e = 0; e < w.edge_count(); ++e) {
      CHECK(depth[w.edge_dst(e)] - depth[w.edge_src(e)] == 1);
    }
    // every non-source task keeps a predecessor
    int sources = 0;
    for (int v = 0; v < w.task_count(); ++v) {
      if (w.incoming(v).empty()) ++sources;
    }
    CHECK(sources < w.task_count());
    for (int v = 0; v < w.task_count(); ++v) {
      CHECK(w.task(v).work > 0.0);
    }
    CHECK(gen_layered_dag(40, 5, 0.4, weights, 13) == w);
  }

  TEST_CASE("degenerate DAG shapes work") {
    const WeightStats weights{2.0};
    const Workflow single = gen_layered_dag(1, 1, 0.5, weights, 0);
    CHECK(single.task_count() == 1);
    CHECK(single.edge_count() == 0);

    const Workflow flat = gen_layered_dag(10, 1, 0.9, weights, 0);
    CHECK(flat.task_count() == 10);
    CHECK(flat.edge_count() == 0);
  }

  TEST_CASE("packing fixtures follow the interval construction") {
    const std::vector<long long> yes1{1, 2, 3};
    const Instance inst = gen_3partition_instance(yes1, 6);
    CHECK(inst.workflow.task_count() == 3);
    REQUIRE(inst.profile.interval_count() == 1);
    CHECK(inst.profile.intervals()[0].end == doctest::Approx(6.0));
    CHECK(inst.profile.intervals()[0].budget == doctest::Approx(1.0));
    CHECK(inst.deadline == doctest::Approx(6.0));
    CHECK(inst.cluster.proc_count() == 1);
    CHECK(inst.cluster.proc(0).speed == doctest::Approx(1.0));
    CHECK(inst.cluster.proc(0).idle_power == doctest::Approx(0.0));
    CHECK(inst.cluster.proc(0).work_power == doctest::Approx(1.0));

    const std::vector<long long> yes2{1, 1, 4, 2, 2, 2};
    const Instance two = gen_3partition_instance(yes2, 6);
    REQUIRE(two.profile.interval_count() == 3);
    CHECK(two.profile.intervals()[0].end == doctest::Approx(6.0));
    CHECK(two.profile.intervals()[1].begin == doctest::Approx(6.0));
    CHECK(two.profile.intervals()[1].end == doctest::Approx(7.0));
    CHECK(two.profile.intervals()[1].budget == doctest::Approx(0.0));
    CHECK(two.profile.intervals()[2].end == doctest::Approx(13.0));
    CHECK(two.profile.intervals()[2].budget == doctest::Approx(1.0));
    CHECK(two.deadline == doctest::Approx(13.0));

    const std::vector<long long> bad{1, 2, 4};
    CHECK_THROWS_AS(gen_3partition_instance(bad, 6), std::invalid_argument);
    const std::vector<long long> four{1, 2, 3, 4};
    CHECK_THROWS_AS(gen_3partition_instance(four, 6), std::invalid_argument);
    const std::vector<long long> zero{0, 2, 4};
    CHECK_THROWS_AS(gen_3partition_instance(zero, 6), std::invalid_argument);
  }

  TEST_CASE("intensity csv reading keeps row order") {
    const TempFile file("intensities.csv",
                        "timestamp,intensity\n"
                        "2024-01-01T00:00,120.5\n"
                        "2024-01-01T01:00,98.0\n"
                        "2024-01-01T02:00,143.25\n");
    const auto series = read_intensity_csv(file.path);
    REQUIRE(series.size() == 3);
    CHECK(series[0] == doctest::Approx(120.5));
    CHECK(series[1] == doctest::Approx(98.0));
    CHECK(series[2] == doctest::Approx(143.25));
  }

  TEST_CASE("intensity csv tolerates reordered columns") {
    const TempFile file("reordered.csv",
                        "intensity,zone\n"
                        "55.5,DE\n"
                        "44.25,DE\n");
    const auto series = read_intensity_csv(file.path);
    REQUIRE(series.size() == 2);
    CHECK(series[0] == doctest::Approx(55.5));

    const TempFile missing("missing.csv", "timestamp,zone\n1,DE\n");
    CHECK_THROWS_AS(read_intensity_csv(missing.path), ParseError);
    CHECK_THROWS_AS(read_intensity_csv("does_not_exist.csv"), ParseError);
  }
}
