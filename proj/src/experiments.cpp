#include "implan/experiments.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace implan {

std::vector<std::string> experiment_preset_names() {
  return {"R_RI20-R_FR100", "R_RI10-R_FR10", "R_RI50-R_FR20", "COMPLEX"};
}

ExperimentConfig experiment_preset(const std::string& name) {
  ExperimentConfig config;
  config.name = name;
  config.costs.discount = 0.95;  // replaced by calibration in pipelines
  if (name == "R_RI20-R_FR100") {
    config.inspection1_cost = 5.0;
    config.costs.perfect_repair_cost = 100.0;
    config.costs.failure_cost = 1e4;
  } else if (name == "R_RI10-R_FR10") {
    config.inspection1_cost = 1.0;
    config.costs.perfect_repair_cost = 10.0;
    config.costs.failure_cost = 1e2;
  } else if (name == "R_RI50-R_FR20") {
    config.inspection1_cost = 1.0;
    config.costs.perfect_repair_cost = 50.0;
    config.costs.failure_cost = 1e3;
  } else if (name == "COMPLEX") {
    config.complex_setting = true;
    config.inspection1_cost = 1.0;
    config.inspection2_cost = 2.0;
    config.costs.perfect_repair_cost = 50.0;
    config.costs.minor_repair_cost = 10.0;
    config.costs.failure_cost = 1e3;
  } else {
    throw std::invalid_argument("unknown experiment preset: " + name);
  }
  return config;
}

std::vector<std::string> scheme_preset_names() {
  return {"DR_d15",      "DR_d30",      "PAR_K50-d40", "PAR_K50-d80",
          "PAR_K50-d160", "PAR_K100-d80", "PAR_K100-d160"};
}

PodCurve standard_pod() { return PodCurve{8.0, 1.0}; }

InspectionTechnique inspection_type1(double cost) {
  return InspectionTechnique::binary("inspection-1", standard_pod(), cost);
}

InspectionTechnique inspection_type2(double cost) {
  InspectionTechnique tech;
  tech.name = "inspection-2";
  tech.indicators.boundaries = {
      PodCurve{4.0, 1.0}, PodCurve{7.0, 1.0}, PodCurve{10.0, 1.0},
      PodCurve{13.0, 1.0}};
  tech.cost = cost;
  return tech;
}

std::vector<ActionObservationGroup> experiment_groups(
    const ExperimentConfig& config) {
  std::vector<ActionObservationGroup> groups;
  if (!config.complex_setting) {
    groups.resize(3);
    groups[0].name = "DN-NI";
    groups[1].name = "DN-I";
    groups[1].inspection = inspection_type1(config.inspection1_cost);
    groups[2].name = "PR-NI";
    groups[2].maintenance = MaintenanceAction::perfect_repair;
    return groups;
  }
  groups.resize(7);
  groups[0].name = "DN-NI";
  groups[1].name = "DN-I1";
  groups[1].inspection = inspection_type1(config.inspection1_cost);
  groups[2].name = "DN-I2";
  groups[2].inspection = inspection_type2(config.inspection2_cost);
  groups[3].name = "mRP-NI";
  groups[3].maintenance = MaintenanceAction::minor_repair;
  groups[4].name = "mRP-I1";
  groups[4].maintenance = MaintenanceAction::minor_repair;
  groups[4].inspection = inspection_type1(config.inspection1_cost);
  groups[5].name = "mRP-I2";
  groups[5].maintenance = MaintenanceAction::minor_repair;
  groups[5].inspection = inspection_type2(config.inspection2_cost);
  groups[6].name = "pRP-NI";
  groups[6].maintenance = MaintenanceAction::perfect_repair;
  return groups;
}

CompiledDbn compile_for(const ExperimentConfig& config,
                        const TrajectorySet* trajectories) {
  const DiscretizationScheme scheme =
      scheme_from_name(config.scheme, config.deterioration);
  return compile_transition(scheme, config.deterioration,
                            config.samples_per_cell, config.seed, trajectories);
}

HeuristicRule no_inspection_rule(int horizon) {
  HeuristicRule rule;
  rule.plan.kind = InspectionPlan::Kind::equidistant;
  rule.plan.interval = horizon + 1;
  rule.inspection = inspection_type1(0.0);
  return rule;
}

double calibrate_discount(const CompiledDbn& dbn, double target_cost,
                          double tolerance) {
  const HeuristicRule rule = no_inspection_rule(dbn.params.horizon_years);
  CostSpec costs;
  costs.failure_cost = 100.0;
  auto cost_at = [&](double discount) {
    costs.discount = discount;
    return evaluate_analytic(dbn, rule, costs).total();
  };
  double lo = 0.5;
  double hi = 1.0;
  if (cost_at(hi) < target_cost - tolerance || cost_at(lo) > target_cost) {
    throw std::runtime_error(
        "calibrate_discount: target cost outside the attainable range");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double cost = cost_at(mid);
    if (std::abs(cost - target_cost) <= tolerance * 0.1 || hi - lo < 1e-12) {
      return mid;
    }
    if (cost > target_cost) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<HeuristicRule> equidistant_grid(const InspectionTechnique& tech,
                                            int horizon) {
  MaintenanceRule maintenance;
  maintenance.kind = MaintenanceRule::Kind::repair_on_detection;
  return equidistant_family(tech, maintenance, 1, horizon);
}

std::vector<HeuristicRule> threshold_grid(const InspectionTechnique& tech) {
  MaintenanceRule maintenance;
  maintenance.kind = MaintenanceRule::Kind::repair_on_detection;
  return threshold_family(tech, maintenance,
                          {1e-2, 5e-3, 3e-3, 2e-3, 1.5e-3, 1.1e-3, 1e-3, 7e-4,
                           5e-4, 3e-4, 2e-4, 1.5e-4, 1e-4});
}

std::vector<SchemeAccuracy> discretization_table(
    const std::vector<std::string>& schemes, const CrackGrowthParams& params,
    std::int64_t mcs_samples, std::int64_t samples_per_cell,
    std::uint64_t seed) {
  const TrajectorySet trajectories =
      sample_trajectories(params, mcs_samples, seed);
  const std::vector<InspectionRecord> records = {
      {18, standard_pod(), false}, {25, standard_pod(), false}};
  const FailureCurve reference = conditional_failure_curve(trajectories, records);

  const std::vector<ScheduledInspection> inspections = {
      {18, inspection_type1(0.0).indicators, 0},
      {25, inspection_type1(0.0).indicators, 0}};

  std::vector<SchemeAccuracy> table;
  for (const std::string& name : schemes) {
    const DiscretizationScheme scheme = scheme_from_name(name, params);
    const bool rate = scheme.variant == DbnVariant::deterioration_rate;
    const CompiledDbn dbn =
        compile_transition(scheme, params, samples_per_cell, seed + 1,
                           rate ? &trajectories : nullptr);
    const std::vector<double> curve =
        unroll_failure_curve(dbn, inspections, params.horizon_years);
    SchemeAccuracy row;
    row.scheme = name;
    row.states = dbn.num_states();
    row.xi = discretization_error(curve, reference.probability);
    row.reference_ess = reference.effective_sample_size;
    row.compile = dbn.report;
    table.push_back(std::move(row));
  }
  return table;
}

namespace {

double delta_pct(double cost, double baseline) {
  return 100.0 * (cost - baseline) / baseline;
}

}  // namespace

ReproduceResult reproduce_experiment(const ExperimentConfig& config,
                                     std::ostream* log) {
  auto note = [&](const std::string& line) {
    if (log != nullptr) {
      (*log) << line << "\n";
    }
  };
  ReproduceResult result;
  result.experiment = config.name;

  note("compiling " + config.scheme);
  const CompiledDbn dbn = compile_for(config);
  note("calibrating discount");
  CostSpec costs = config.costs;
  costs.discount = calibrate_discount(dbn, 2.25, 0.01);
  result.calibrated_discount = costs.discount;

  const std::vector<ActionObservationGroup> groups = experiment_groups(config);
  for (const ActionObservationGroup& g : groups) {
    result.group_names.push_back(g.name);
  }

  note("assembling finite-horizon model");
  const DiscretePomdp finite_model =
      assemble_finite(dbn, groups, costs, config.horizon);
  note("solving finite-horizon model");
  SolverConfig solver = config.solver;
  const SolveResult finite_solve = solve(finite_model, solver);
  result.solver_trace = finite_solve.trace;
  result.finite_lower_bound = -finite_solve.lower_at_initial;
  const double baseline = result.finite_lower_bound;
  result.rows.push_back(
      {"POMDP finite-horizon (lower bound)", baseline, 0.0, 0.0, false});

  note("simulating the finite-horizon policy");
  {
    AlphaPolicyDriver driver(finite_solve.bounds.lower);
    SimulationOptions options;
    options.num_episodes = config.evaluation_episodes;
    options.horizon = config.horizon;
    options.seed = config.seed + 101;
    const SimulationResult sim =
        simulate_policy(finite_model, groups, costs, driver, options);
    result.rows.push_back({"POMDP finite-horizon (simulated)", sim.mean_cost,
                           sim.ci95, delta_pct(sim.mean_cost, baseline), true});
  }

  note("solving the infinite-horizon model");
  const DiscretePomdp infinite_model = assemble_infinite(dbn, groups, costs);
  SolverConfig inf_solver = config.solver;
  const SolveResult infinite_solve = solve(infinite_model, inf_solver);
  {
    AlphaPolicyDriver driver(infinite_solve.bounds.lower);
    SimulationOptions options;
    options.num_episodes = config.evaluation_episodes;
    options.horizon = config.horizon;
    options.seed = config.seed + 202;
    const SimulationResult sim =
        simulate_policy(infinite_model, groups, costs, driver, options);
    result.rows.push_back({"POMDP infinite-horizon (simulated, 30 years)",
                           sim.mean_cost, sim.ci95,
                           delta_pct(sim.mean_cost, baseline), true});
    result.pomdp_histogram = sim.group_histogram;
  }

  note("optimizing heuristics");
  if (!config.complex_setting) {
    const InspectionTechnique tech = inspection_type1(config.inspection1_cost);
    auto analytic_eval = [&](const HeuristicRule& rule) {
      GridSearchEntry entry;
      entry.rule = rule;
      entry.terms = evaluate_analytic(dbn, rule, costs);
      entry.cost = entry.terms.total();
      return entry;
    };
    const GridSearchResult eq =
        grid_search(equidistant_grid(tech, config.horizon), analytic_eval);
    const GridSearchResult thr = grid_search(threshold_grid(tech), analytic_eval);
    for (const GridSearchResult* search : {&eq, &thr}) {
      const GridSearchEntry& best = search->best();
      result.rows.push_back({"Heuristic " + best.rule.label() + " (analytic)",
                             best.cost, 0.0, delta_pct(best.cost, baseline),
                             false});
      const SimulatedValue sim = evaluate_simulated(
          dbn, best.rule, costs, config.heuristic_episodes, config.seed + 303);
      result.rows.push_back({"Heuristic " + best.rule.label() + " (simulated)",
                             sim.mean, sim.ci95, delta_pct(sim.mean, baseline),
                             true});
    }
  } else {
    // The competitive rule families of the complex setting, evaluated in
    // simulation.
    const InspectionTechnique tech1 = inspection_type1(config.inspection1_cost);
    const InspectionTechnique tech2 = inspection_type2(config.inspection2_cost);
    std::vector<HeuristicRule> rules;
    {
      HeuristicRule rule;  // EQ-INS1, perfect repair on detection
      rule.plan.kind = InspectionPlan::Kind::equidistant;
      rule.plan.interval = 11;
      rule.inspection = tech1;
      rules.push_back(rule);
    }
    {
      HeuristicRule rule;  // EQ-INS2, perfect repair on the extreme indicator
      rule.plan.kind = InspectionPlan::Kind::equidistant;
      rule.plan.interval = 11;
      rule.inspection = tech2;
      rule.maintenance.kind = MaintenanceRule::Kind::indicator_map;
      rule.maintenance.indicator_actions = {
          MaintenanceAction::do_nothing, MaintenanceAction::do_nothing,
          MaintenanceAction::do_nothing, MaintenanceAction::do_nothing,
          MaintenanceAction::perfect_repair};
      rules.push_back(rule);
    }
    {
      HeuristicRule rule;  // THR-INS1
      rule.plan.kind = InspectionPlan::Kind::risk_threshold;
      rule.plan.annual_risk_threshold = 1.5e-3;
      rule.inspection = tech1;
      rules.push_back(rule);
    }
    {
      HeuristicRule rule;  // THR-INS2, repair on the extreme indicator
      rule.plan.kind = InspectionPlan::Kind::risk_threshold;
      rule.plan.annual_risk_threshold = 1.1e-3;
      rule.inspection = tech2;
      rule.maintenance.kind = MaintenanceRule::Kind::indicator_map;
      rule.maintenance.indicator_actions = {
          MaintenanceAction::do_nothing, MaintenanceAction::do_nothing,
          MaintenanceAction::do_nothing, MaintenanceAction::do_nothing,
          MaintenanceAction::perfect_repair};
      rules.push_back(rule);
    }
    {
      HeuristicRule rule;  // THR-INS2 with a failure-probability repair rule
      rule.plan.kind = InspectionPlan::Kind::risk_threshold;
      rule.plan.annual_risk_threshold = 5e-4;
      rule.inspection = tech2;
      rule.maintenance.kind =
          MaintenanceRule::Kind::failure_probability_threshold;
      rule.maintenance.threshold = 2.2e-2;
      rules.push_back(rule);
    }
    {
      HeuristicRule rule;  // THR-INS2 with an expected-damage repair rule
      rule.plan.kind = InspectionPlan::Kind::risk_threshold;
      rule.plan.annual_risk_threshold = 1e-3;
      rule.inspection = tech2;
      rule.maintenance.kind = MaintenanceRule::Kind::expected_damage_threshold;
      rule.maintenance.threshold = 4.0;
      rules.push_back(rule);
    }
    for (const HeuristicRule& rule : rules) {
      const SimulatedValue sim = evaluate_simulated(
          dbn, rule, costs, config.heuristic_episodes, config.seed + 303);
      result.rows.push_back({"Heuristic " + rule.label(), sim.mean, sim.ci95,
                             delta_pct(sim.mean, baseline), true});
    }
  }
  return result;
}

}  // namespace implan
