#pragma once

#include <span>
#include <string>
#include <vector>

#include "greenflow/model.hpp"

namespace greenflow {

struct Violation {
  enum class Kind {
    negative_start,
    processor_overlap,
    channel_overlap,
    precedence_same_proc,
    precedence_cross_proc,
    deadline_exceeded,  // informational, does not make a schedule invalid
  };
  Kind kind;
  std::vector<long long> entities;  // task ids involved
  std::string detail;
};

const char* to_string(Violation::Kind kind);

// Checks conditions (i)-(iv) plus the deadline. Timing problems come back as
// violations; structurally broken schedules (missing task items, items on the
// wrong resource, comm items for co-located edges, ...) throw ParseError
// because there is nothing sensible to evaluate.
std::vector<Violation> validate_schedule(const Schedule& s, const Instance& inst);

// true when no violation other than the informational deadline kind is present
bool schedule_is_valid(const std::vector<Violation>& violations);

double makespan(const Schedule& s);

struct RefinedInterval {
  double begin;
  double end;
  double budget;
  double total_power;
};

// resource-agnostic power span used by the sweep
struct PowerSpan {
  double start;
  double finish;
  double work_power;
};

// Cuts [0, end) at every profile bound and span endpoint and accumulates the
// total power draw per piece. Power is constant within each piece. idle_total
// is charged everywhere. When clamp_past_horizon is set, time at or past the
// horizon falls into a synthetic continuation of the last interval; otherwise
// end must not exceed the horizon. extra_breakpoints may inject additional
// cut points (used by the additivity test).
std::vector<RefinedInterval> refine_spans(std::span<const PowerSpan> spans, double idle_total,
                                          const PowerProfile& profile, double end,
                                          bool clamp_past_horizon,
                                          std::span<const double> extra_breakpoints = {});

std::vector<RefinedInterval> refined_intervals(const Schedule& s, const Cluster& c,
                                               const PowerProfile& profile, double end);

struct CarbonReport {
  double total_cost = 0.0;
  std::vector<RefinedInterval> intervals;
  std::vector<double> interval_costs;  // parallel to intervals
  double integration_end = 0.0;
  bool exceeds_deadline = false;

  nlohmann::json to_json() const;
};

// Integrates max(0, power - budget) over [0, max(deadline, makespan)).
// Throws when the integration end exceeds the profile horizon.
CarbonReport carbon_cost(const Schedule& s, const Instance& inst);

// Same integral, but time past the horizon keeps the last interval's budget.
// Intermediate schedules inside the optimizer can overshoot the horizon; the
// public accounting above must not silently extrapolate, this variant may.
CarbonReport carbon_cost_clamped(const Schedule& s, const Instance& inst);

std::vector<PowerSpan> schedule_power_spans(const Schedule& s, const Cluster& c);

}  // namespace greenflow
