#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"

using namespace greenflow;
using testutil::chain_workflow;
using testutil::flat_profile;
using testutil::simple_cluster;

namespace {

bool has_kind(const std::vector<Violation>& vs, Violation::Kind k) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == k; });
}

double sweep_cost(const std::vector<RefinedInterval>& pieces) {
  double total = 0.0;
  for (const auto& ri : pieces) {
    total += std::max(0.0, ri.total_power - ri.budget) * (ri.end - ri.begin);
  }
  return total;
}

// single processor running one task over [0, work); no channels involved
Instance one_task_instance(double work, double idle, double work_power, double budget,
                           double deadline) {
  Instance inst;
  inst.workflow = Workflow({{0, work}}, {});
  inst.cluster = simple_cluster({{1.0, idle, work_power}});
  inst.profile = flat_profile(deadline, budget);
  inst.deadline = deadline;
  return inst;
}

Schedule one_task_schedule(double start, double duration) {
  Schedule s;
  s.mapping.proc_of = {0};
  s.items = {{{EntityKind::task, 0}, 0, start, duration}};
  return s;
}

}  // namespace

TEST_SUITE("evaluate") {
  TEST_CASE("makespan is the latest finish, zero when empty") {
    Schedule s;
    CHECK(makespan(s) == 0.0);
    s.items = {{{EntityKind::task, 0}, 0, 3.0, 4.0}};
    CHECK(makespan(s) == doctest::Approx(7.0));
    s.items = {{{EntityKind::task, 0}, 0, 0.0, 2.0}, {{EntityKind::task, 1}, 0, 5.0, 1.0}};
    CHECK(makespan(s) == doctest::Approx(6.0));
  }

  TEST_CASE("refined sweep with no items charges idle power everywhere") {
    const PowerProfile profile = flat_profile(10.0, 5.0);
    const auto pieces = refine_spans({}, 3.0, profile, 10.0, false);
    REQUIRE(pieces.size() == 1);
    CHECK(pieces[0].begin == doctest::Approx(0.0));
    CHECK(pieces[0].end == doctest::Approx(10.0));
    CHECK(pieces[0].budget == doctest::Approx(5.0));
    CHECK(pieces[0].total_power == doctest::Approx(3.0));
  }

  TEST_CASE("refined sweep cuts at span endpoints") {
    const PowerProfile profile = flat_profile(10.0, 5.0);
    const std::vector<PowerSpan> spans{{2.0, 4.0, 2.0}};
    const auto pieces = refine_spans(spans, 3.0, profile, 10.0, false);
    REQUIRE(pieces.size() == 3);
    CHECK(pieces[0].total_power == doctest::Approx(3.0));
    CHECK(pieces[1].begin == doctest::Approx(2.0));
    CHECK(pieces[1].end == doctest::Approx(4.0));
    CHECK(pieces[1].total_power == doctest::Approx(5.0));
    CHECK(pieces[2].total_power == doctest::Approx(3.0));
  }

  TEST_CASE("refined sweep cuts at profile boundaries inside a span") {
    const PowerProfile profile({{0.0, 5.0, 1.0}, {5.0, 10.0, 2.0}});
    const std::vector<PowerSpan> spans{{3.0, 7.0, 1.5}};
    const auto pieces = refine_spans(spans, 0.5, profile, 10.0, false);
    REQUIRE(pieces.size() == 4);
    CHECK(pieces[1].end == doctest::Approx(5.0));  // boundary 5 is a breakpoint
    CHECK(pieces[2].begin == doctest::Approx(5.0));
    CHECK(pieces[1].budget == doctest::Approx(1.0));
    CHECK(pieces[2].budget == doctest::Approx(2.0));
    CHECK(pieces[1].total_power == doctest::Approx(2.0));
    CHECK(pieces[2].total_power == doctest::Approx(2.0));
  }

  TEST_CASE("carbon cost charges only the excess over the budget") {
    Instance inst = one_task_instance(4.0, 1.0, 2.0, 2.0, 10.0);
    const Schedule s = one_task_schedule(0.0, 4.0);
    const CarbonReport report = carbon_cost(s, inst);
    CHECK(report.total_cost == doctest::Approx(4.0));
    CHECK(report.integration_end == doctest::Approx(10.0));
    CHECK_FALSE(report.exceeds_deadline);

    inst.profile = flat_profile(10.0, 5.0);
    CHECK(carbon_cost(s, inst).total_cost == doctest::Approx(0.0));
  }

  TEST_CASE("idle power alone can exceed the budget") {
    Instance inst;
    inst.cluster = simple_cluster({{1.0, 3.0, 1.0}});
    inst.profile = flat_profile(10.0, 2.0);
    inst.deadline = 10.0;
    const CarbonReport report = carbon_cost(Schedule{}, inst);
    CHECK(report.total_cost == doctest::Approx(10.0));
  }

  TEST_CASE("carbon report flags schedules running past the deadline") {
    Instance inst = one_task_instance(6.0, 0.0, 1.0, 0.5, 4.0);
    inst.profile = flat_profile(10.0, 0.5);
    const CarbonReport report = carbon_cost(one_task_schedule(0.0, 6.0), inst);
    CHECK(report.exceeds_deadline);
    CHECK(report.integration_end == doctest::Approx(6.0));
    CHECK(report.total_cost == doctest::Approx(3.0));

    const auto doc = report.to_json();
    CHECK(doc.at("exceeds_deadline").get<bool>());
    CHECK(doc.at("total_cost").get<double>() == doctest::Approx(3.0));
  }

  TEST_CASE("integration past the horizon is a data error unless clamped") {
    Instance inst = one_task_instance(6.0, 0.0, 1.0, 0.0, 4.0);
    inst.profile = flat_profile(5.0, 0.0);
    const Schedule s = one_task_schedule(0.0, 6.0);
    CHECK_THROWS_AS(carbon_cost(s, inst), ParseError);
    // the clamped variant extends the last budget (0 here) past the horizon
    CHECK(carbon_cost_clamped(s, inst).total_cost == doctest::Approx(6.0));
  }

  TEST_CASE("splitting a refined interval does not change the cost") {
    const PowerProfile profile({{0.0, 4.0, 1.0}, {4.0, 12.0, 3.0}});
    const std::vector<PowerSpan> spans{{1.0, 6.0, 2.0}, {3.0, 9.0, 1.0}};
    const auto base = refine_spans(spans, 1.5, profile, 12.0, false);
    const std::vector<double> cuts{0.7, 3.3, 5.9, 8.1, 11.0};
    const auto split = refine_spans(spans, 1.5, profile, 12.0, false, cuts);
    CHECK(split.size() > base.size());
    CHECK(sweep_cost(split) == doctest::Approx(sweep_cost(base)));
  }

  TEST_CASE("raising every budget never increases the cost") {
    const std::vector<PowerSpan> spans{{0.0, 5.0, 4.0}, {2.0, 8.0, 3.0}};
    for (double delta : {0.0, 0.5, 2.0, 10.0}) {
      const PowerProfile lo({{0.0, 3.0, 1.0}, {3.0, 10.0, 4.0}});
      const PowerProfile hi({{0.0, 3.0, 1.0 + delta}, {3.0, 10.0, 4.0 + delta}});
      const double cost_lo = sweep_cost(refine_spans(spans, 2.0, lo, 10.0, false));
      const double cost_hi = sweep_cost(refine_spans(spans, 2.0, hi, 10.0, false));
      CHECK(cost_hi <= cost_lo + kTimeEps);
    }
  }

  TEST_CASE("valid single task yields no violations") {
    const Instance inst = one_task_instance(2.0, 0.0, 1.0, 1.0, 10.0);
    const auto violations = validate_schedule(one_task_schedule(0.0, 2.0), inst);
    CHECK(violations.empty());
  }

  TEST_CASE("negative starts are reported") {
    const Instance inst = one_task_instance(2.0, 0.0, 1.0, 1.0, 10.0);
    const auto violations = validate_schedule(one_task_schedule(-0.5, 2.0), inst);
    CHECK(has_kind(violations, Violation::Kind::negative_start));
  }

  TEST_CASE("overlapping tasks on one processor are reported") {
    Instance inst;
    inst.workflow = Workflow({{0, 2.0}, {1, 2.0}}, {});
    inst.cluster = simple_cluster({{1.0, 0.0, 1.0}});
    inst.profile = flat_profile(10.0, 5.0);
    inst.deadline = 10.0;
    Schedule s;
    s.mapping.proc_of = {0, 0};
    s.items = {{{EntityKind::task, 0}, 0, 0.0, 2.0}, {{EntityKind::task, 1}, 0, 1.0, 2.0}};
    const auto violations = validate_schedule(s, inst);
    CHECK(has_kind(violations, Violation::Kind::processor_overlap));

    // back-to-back placement is fine under the half-open convention
    s.items[1].start = 2.0;
    CHECK(testutil::valid(s, inst));
  }

  TEST_CASE("same-processor precedence requires finish before start") {
    Instance inst;
    inst.workflow = chain_workflow({2.0, 2.0}, {1.0});
    inst.cluster = simple_cluster({{1.0, 0.0, 1.0}});
    inst.profile = flat_profile(10.0, 5.0);
    inst.deadline = 10.0;
    Schedule s;
    s.mapping.proc_of = {0, 0};
    s.items = {{{EntityKind::task, 0}, 0, 0.0, 2.0}, {{EntityKind::task, 1}, 0, 2.0, 2.0}};
    CHECK(testutil::valid(s, inst));
    // run the successor first: order violated even without an overlap
    s.items[1].start = 4.0;
    s.items[0].start = 6.5;
    CHECK(has_kind(validate_schedule(s, inst), Violation::Kind::precedence_same_proc));
  }

  TEST_CASE("cross-processor precedence runs through the message") {
    Instance inst;
    inst.workflow = chain_workflow({2.0, 2.0}, {3.0});
    inst.cluster = simple_cluster({{1.0, 0.0, 1.0}, {1.0, 0.0, 1.0}});
    inst.profile = flat_profile(20.0, 5.0);
    inst.deadline = 20.0;
    Schedule s;
    s.mapping.proc_of = {0, 1};
    const int link = inst.cluster.channel_resource(inst.cluster.channel_index(0, 1));
    s.items = {{{EntityKind::task, 0}, 0, 0.0, 2.0},
               {{EntityKind::comm, 0}, link, 2.0, 3.0},
               {{EntityKind::task, 1}, 1, 5.0, 2.0}};
    CHECK(testutil::valid(s, inst));

    SUBCASE("message before the producer finishes") {
      s.items[1].start = 1.0;
      s.items[2].start = 6.0;
      CHECK(has_kind(validate_schedule(s, inst), Violation::Kind::precedence_cross_proc));
    }
    SUBCASE("consumer before the message arrives") {
      s.items[2].start = 4.0;
      CHECK(has_kind(validate_schedule(s, inst), Violation::Kind::precedence_cross_proc));
    }
  }

  TEST_CASE("concurrent messages on one channel are reported") {
    Instance inst;
    inst.workflow = Workflow({{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}},
                             {{0, 2, 2.0}, {1, 3, 2.0}});
    inst.cluster = simple_cluster({{1.0, 0.0, 1.0}, {1.0, 0.0, 1.0}});
    inst.profile = flat_profile(20.0, 5.0);
    inst.deadline = 20.0;
    const int link = inst.cluster.channel_resource(inst.cluster.channel_index(0, 1));
    Schedule s;
    s.mapping.proc_of = {0, 0, 1, 1};
    s.items = {{{EntityKind::task, 0}, 0, 0.0, 1.0},
               {{EntityKind::task, 1}, 0, 1.0, 1.0},
               {{EntityKind::comm, 0}, link, 1.0, 2.0},
               {{EntityKind::comm, 1}, link, 2.0, 2.0},
               {{EntityKind::task, 2}, 1, 3.0, 1.0},
               {{EntityKind::task, 3}, 1, 4.0, 1.0}};
    CHECK(has_kind(validate_schedule(s, inst), Violation::Kind::channel_overlap));
    // serializing the second message fixes it
    s.items[3].start = 3.0;
    s.items[4].start = 3.0;
    s.items[5].start = 5.0;
    CHECK(testutil::valid(s, inst));
  }

  TEST_CASE("late makespan is informational, not invalid") {
    Instance wide = one_task_instance(6.0, 0.0, 1.0, 5.0, 4.0);
    wide.profile = flat_profile(10.0, 5.0);  // deadline stays 4; run to 6 anyway
    const auto violations = validate_schedule(one_task_schedule(0.0, 6.0), wide);
    CHECK(has_kind(violations, Violation::Kind::deadline_exceeded));
    CHECK(schedule_is_valid(violations));
    CHECK(std::string(to_string(Violation::Kind::deadline_exceeded)) == "deadline-exceeded");
  }

  TEST_CASE("structurally broken schedules are parse errors") {
    Instance inst;
    inst.workflow = chain_workflow({2.0, 2.0}, {3.0});
    inst.cluster = simple_cluster({{1.0, 0.0, 1.0}, {1.0, 0.0, 1.0}});
    inst.profile = flat_profile(20.0, 5.0);
    inst.deadline = 20.0;
    const int link = inst.cluster.channel_resource(inst.cluster.channel_index(0, 1));

    Schedule missing_comm;
    missing_comm.mapping.proc_of = {0, 1};
    missing_comm.items = {{{EntityKind::task, 0}, 0, 0.0, 2.0},
                          {{EntityKind::task, 1}, 1, 5.0, 2.0}};
    CHECK_THROWS_AS(validate_schedule(missing_comm, inst), ParseError);

    Schedule colocated_comm;
    colocated_comm.mapping.proc_of = {0, 0};
    colocated_comm.items = {{{EntityKind::task, 0}, 0, 0.0, 2.0},
                            {{EntityKind::comm, 0}, link, 2.0, 3.0},
                            {{EntityKind::task, 1}, 0, 5.0, 2.0}};
    CHECK_THROWS_AS(validate_schedule(colocated_comm, inst), ParseError);

    Schedule wrong_proc;
    wrong_proc.mapping.proc_of = {0, 0};
    wrong_proc.items = {{{EntityKind::task, 0}, 0, 0.0, 2.0},
                        {{EntityKind::task, 1}, 1, 2.0, 2.0}};
    CHECK_THROWS_AS(validate_schedule(wrong_proc, inst), ParseError);
  }

  TEST_CASE("violation kinds print their canonical names") {
    CHECK(std::string(to_string(Violation::Kind::negative_start)) == "negative-start");
    CHECK(std::string(to_string(Violation::Kind::processor_overlap)) == "processor-overlap");
    CHECK(std::string(to_string(Violation::Kind::channel_overlap)) == "channel-overlap");
    CHECK(std::string(to_string(Violation::Kind::precedence_same_proc)) == "precedence-same-proc");
    CHECK(std::string(to_string(Violation::Kind::precedence_cross_proc)) ==
          "precedence-cross-proc");
  }
}
