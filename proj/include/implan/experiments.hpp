#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "implan/discretization.hpp"
#include "implan/fatigue.hpp"
#include "implan/im_builder.hpp"
#include "implan/pbvi.hpp"
#include "implan/policy_eval.hpp"
#include "implan/rbi.hpp"

namespace implan {

/// One named experiment: deterioration model, discretization, costs and all
/// run parameters.
struct ExperimentConfig {
  std::string name;
  CrackGrowthParams deterioration;
  std::string scheme = "DR_d30";
  bool complex_setting = false;
  double inspection1_cost = 1.0;
  double inspection2_cost = 2.0;
  CostSpec costs;
  int horizon = 30;
  SolverConfig solver;
  std::int64_t heuristic_episodes = 10000;
  std::int64_t evaluation_episodes = 10000;
  std::int64_t mcs_samples = 1000000;
  std::int64_t samples_per_cell = 10000;
  std::uint64_t seed = 12022;
};

std::vector<std::string> experiment_preset_names();
ExperimentConfig experiment_preset(const std::string& name);

/// The discretization schemes studied in the accuracy table.
std::vector<std::string> scheme_preset_names();

/// Exponential detection curve with mean detectable size 8 mm.
PodCurve standard_pod();
InspectionTechnique inspection_type1(double cost);
/// Five-indicator technique with detection boundaries at 4, 7, 10, 13 mm.
InspectionTechnique inspection_type2(double cost);

/// Traditional setting: do-nothing/no-inspection, do-nothing/inspection,
/// perfect-repair/no-inspection. Complex setting: seven groups over two
/// inspection techniques and two repair types.
std::vector<ActionObservationGroup> experiment_groups(const ExperimentConfig& config);

/// Compiles the configured scheme. Deterioration-rate schemes reuse
/// `trajectories` when given (shared sampling with a reference curve).
CompiledDbn compile_for(const ExperimentConfig& config,
                        const TrajectorySet* trajectories = nullptr);

/// A rule that never inspects (used as the discount-calibration oracle).
HeuristicRule no_inspection_rule(int horizon);

/// Sweeps the discount factor until the analytic no-inspection cost at
/// failure cost 100 matches `target_cost`. Bisection on a monotone map;
/// throws when the target is outside the attainable range.
double calibrate_discount(const CompiledDbn& dbn, double target_cost,
                          double tolerance);

/// Equidistant-inspection grid (intervals 1..horizon) with
/// repair-on-detection maintenance.
std::vector<HeuristicRule> equidistant_grid(const InspectionTechnique& tech,
                                            int horizon);
/// Annual-risk-threshold grid with repair-on-detection maintenance.
std::vector<HeuristicRule> threshold_grid(const InspectionTechnique& tech);

struct SchemeAccuracy {
  std::string scheme;
  int states = 0;
  double xi = 0.0;
  double reference_ess = 0.0;
  CompileReport compile;
};

/// Discretization accuracy table: one Monte Carlo reference (conditioned on
/// no-detection inspections at years 18 and 25), one row per scheme.
/// Deterioration-rate schemes are compiled from the same trajectory set as
/// the reference so the comparison isolates discretization error.
std::vector<SchemeAccuracy> discretization_table(
    const std::vector<std::string>& schemes, const CrackGrowthParams& params,
    std::int64_t mcs_samples, std::int64_t samples_per_cell, std::uint64_t seed);

struct ReproduceRow {
  std::string method;
  double cost = 0.0;
  double ci95 = 0.0;       ///< 0 for analytic rows
  double delta_pct = 0.0;  ///< relative difference vs the finite-horizon bound
  bool simulated = false;
};

struct ReproduceResult {
  std::string experiment;
  double calibrated_discount = 0.0;
  double finite_lower_bound = 0.0;  ///< expected cost from the solver bound
  std::vector<ReproduceRow> rows;
  std::vector<AnytimeRecord> solver_trace;
  std::vector<std::string> group_names;
  std::vector<std::int64_t> pomdp_histogram;
};

/// Full comparison pipeline for one named experiment: calibration, heuristic
/// optimization, finite- and infinite-horizon solving, and simulation rows.
ReproduceResult reproduce_experiment(const ExperimentConfig& config,
                                     std::ostream* log = nullptr);

}  // namespace implan
