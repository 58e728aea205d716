// implan: compile deterioration models into POMDPs, solve them, evaluate
// heuristic baselines, and reproduce the benchmark tables.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "implan/experiments.hpp"
#include "implan/interchange.hpp"

using namespace implan;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitNumericFailure = 2;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out_dir;
};

void apply_json_overrides(ExperimentConfig& config, const json& j) {
  if (j.contains("scheme")) config.scheme = j.at("scheme").get<std::string>();
  if (j.contains("horizon")) config.horizon = j.at("horizon").get<int>();
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("mcs_samples"))
    config.mcs_samples = j.at("mcs_samples").get<std::int64_t>();
  if (j.contains("samples_per_cell"))
    config.samples_per_cell = j.at("samples_per_cell").get<std::int64_t>();
  if (j.contains("heuristic_episodes"))
    config.heuristic_episodes = j.at("heuristic_episodes").get<std::int64_t>();
  if (j.contains("evaluation_episodes"))
    config.evaluation_episodes = j.at("evaluation_episodes").get<std::int64_t>();
  if (j.contains("inspection1_cost"))
    config.inspection1_cost = j.at("inspection1_cost").get<double>();
  if (j.contains("inspection2_cost"))
    config.inspection2_cost = j.at("inspection2_cost").get<double>();
  if (j.contains("costs")) {
    const json& c = j.at("costs");
    if (c.contains("perfect_repair"))
      config.costs.perfect_repair_cost = c.at("perfect_repair").get<double>();
    if (c.contains("minor_repair"))
      config.costs.minor_repair_cost = c.at("minor_repair").get<double>();
    if (c.contains("failure"))
      config.costs.failure_cost = c.at("failure").get<double>();
    if (c.contains("discount"))
      config.costs.discount = c.at("discount").get<double>();
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    if (s.contains("time_budget_seconds"))
      config.solver.time_budget_seconds = s.at("time_budget_seconds").get<double>();
    if (s.contains("target_gap_rel"))
      config.solver.target_gap_rel = s.at("target_gap_rel").get<double>();
    if (s.contains("strategy")) {
      const std::string name = s.at("strategy").get<std::string>();
      if (name == "gap-driven") {
        config.solver.strategy = SolverConfig::Strategy::gap_driven;
      } else if (name == "random-reachable") {
        config.solver.strategy = SolverConfig::Strategy::random_reachable;
      } else {
        throw std::invalid_argument("unknown solver strategy: " + name);
      }
    }
    if (s.contains("seed")) config.solver.seed = s.at("seed").get<std::uint64_t>();
  }
  if (j.contains("deterioration")) {
    const json& d = j.at("deterioration");
    CrackGrowthParams& p = config.deterioration;
    if (d.contains("ln_growth_mean")) p.ln_growth_mean = d.at("ln_growth_mean");
    if (d.contains("ln_growth_std")) p.ln_growth_std = d.at("ln_growth_std");
    if (d.contains("stress_mean")) p.stress_mean = d.at("stress_mean");
    if (d.contains("stress_std")) p.stress_std = d.at("stress_std");
    if (d.contains("initial_crack_mean"))
      p.initial_crack_mean = d.at("initial_crack_mean");
    if (d.contains("exponent")) p.exponent = d.at("exponent");
    if (d.contains("cycles_per_year")) p.cycles_per_year = d.at("cycles_per_year");
    if (d.contains("horizon_years")) p.horizon_years = d.at("horizon_years");
    if (d.contains("critical_crack")) p.critical_crack = d.at("critical_crack");
  }
}

json config_to_json(const ExperimentConfig& config) {
  json j;
  j["experiment"] = config.name;
  j["scheme"] = config.scheme;
  j["complex_setting"] = config.complex_setting;
  j["horizon"] = config.horizon;
  j["seed"] = config.seed;
  j["mcs_samples"] = config.mcs_samples;
  j["samples_per_cell"] = config.samples_per_cell;
  j["heuristic_episodes"] = config.heuristic_episodes;
  j["evaluation_episodes"] = config.evaluation_episodes;
  j["inspection1_cost"] = config.inspection1_cost;
  j["inspection2_cost"] = config.inspection2_cost;
  j["costs"] = {{"perfect_repair", config.costs.perfect_repair_cost},
                {"minor_repair", config.costs.minor_repair_cost},
                {"failure", config.costs.failure_cost},
                {"discount", config.costs.discount}};
  j["solver"] = {
      {"time_budget_seconds", config.solver.time_budget_seconds},
      {"target_gap_rel", config.solver.target_gap_rel},
      {"strategy", config.solver.strategy == SolverConfig::Strategy::gap_driven
                       ? "gap-driven"
                       : "random-reachable"},
      {"seed", config.solver.seed}};
  j["deterioration"] = {
      {"ln_growth_mean", config.deterioration.ln_growth_mean},
      {"ln_growth_std", config.deterioration.ln_growth_std},
      {"stress_mean", config.deterioration.stress_mean},
      {"stress_std", config.deterioration.stress_std},
      {"initial_crack_mean", config.deterioration.initial_crack_mean},
      {"exponent", config.deterioration.exponent},
      {"cycles_per_year", config.deterioration.cycles_per_year},
      {"horizon_years", config.deterioration.horizon_years},
      {"critical_crack", config.deterioration.critical_crack}};
  return j;
}

RunContext make_context(const std::string& experiment,
                        const std::string& config_path,
                        const std::string& out_dir) {
  RunContext ctx;
  ctx.config = experiment_preset(experiment);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      throw std::invalid_argument("cannot read config file: " + config_path);
    }
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
    apply_json_overrides(ctx.config, j);
  }
  ctx.out_dir = out_dir;
  std::filesystem::create_directories(ctx.out_dir);
  std::ofstream resolved(ctx.out_dir / "resolved_config.json");
  resolved << config_to_json(ctx.config).dump(2) << "\n";
  return ctx;
}

void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::string>& rows) {
  std::ofstream out(path);
  out << header << "\n";
  for (const std::string& row : rows) {
    out << row << "\n";
  }
}

int cmd_discretize(const RunContext& ctx, const std::vector<std::string>& schemes) {
  const std::vector<std::string> list =
      schemes.empty() ? scheme_preset_names() : schemes;
  std::cout << "discretization accuracy (reference: " << ctx.config.mcs_samples
            << " samples, no-detection inspections at years 18 and 25)\n";
  const std::vector<SchemeAccuracy> table = discretization_table(
      list, ctx.config.deterioration, ctx.config.mcs_samples,
      ctx.config.samples_per_cell, ctx.config.seed);
  std::vector<std::string> rows;
  for (const SchemeAccuracy& row : table) {
    std::cout << "  " << row.scheme << "  states=" << row.states
              << "  xi=" << fmt6(row.xi) << "  (" << row.compile.summary()
              << ")\n";
    rows.push_back(row.scheme + "," + std::to_string(row.states) + "," +
                   fmt(row.xi) + "," +
                   std::to_string(row.compile.fallback_states.size()));
  }
  write_csv(ctx.out_dir / "discretization.csv", "scheme,states,xi,fallback_rows",
            rows);
  return kExitOk;
}

DiscretePomdp build_model(const RunContext& ctx, bool finite, double* gamma_out) {
  const CompiledDbn dbn = compile_for(ctx.config);
  CostSpec costs = ctx.config.costs;
  costs.discount = calibrate_discount(dbn, 2.25, 0.01);
  if (gamma_out != nullptr) {
    *gamma_out = costs.discount;
  }
  const std::vector<ActionObservationGroup> groups =
      experiment_groups(ctx.config);
  return finite ? assemble_finite(dbn, groups, costs, ctx.config.horizon)
                : assemble_infinite(dbn, groups, costs);
}

int cmd_build(const RunContext& ctx, bool finite) {
  double gamma = 0.0;
  const DiscretePomdp model = build_model(ctx, finite, &gamma);
  const std::vector<Violation> violations = validate(model);
  std::cout << "assembled " << (finite ? "finite" : "infinite")
            << "-horizon model: " << model.num_states << " states, "
            << model.num_actions << " actions, " << model.num_observations
            << " observations, discount " << fmt6(gamma) << "\n";
  std::cout << "validate: " << violations.size() << " violations\n";
  std::ofstream out(ctx.out_dir / "model.pomdp");
  export_interchange(model, out);
  std::cout << "wrote " << (ctx.out_dir / "model.pomdp").string() << "\n";
  return violations.empty() ? kExitOk : kExitNumericFailure;
}

int cmd_solve(const RunContext& ctx, bool finite) {
  double gamma = 0.0;
  const DiscretePomdp model = build_model(ctx, finite, &gamma);
  const SolveResult result = solve(model, ctx.config.solver);
  std::cout << "lower bound at b0: " << fmt6(result.lower_at_initial)
            << " (expected cost " << fmt6(-result.lower_at_initial) << ")\n"
            << "upper bound at b0: " << fmt6(result.upper_at_initial) << "\n"
            << "backups: " << result.backups << ", seconds: "
            << fmt6(result.seconds) << (result.converged ? " (converged)" : "")
            << "\n";
  std::vector<std::string> rows;
  for (const AnytimeRecord& rec : result.trace) {
    rows.push_back(fmt(rec.seconds) + "," + fmt(rec.lower) + "," +
                   fmt(rec.upper) + "," + std::to_string(rec.backups));
  }
  write_csv(ctx.out_dir / "anytime_trace.csv", "seconds,lower,upper,backups", rows);
  std::ofstream policy_out(ctx.out_dir / "policy.alpha");
  save_policy(extract_policy(result.bounds), policy_out);
  std::cout << "wrote " << (ctx.out_dir / "anytime_trace.csv").string() << " and "
            << (ctx.out_dir / "policy.alpha").string() << "\n";
  return kExitOk;
}

int cmd_heuristics(const RunContext& ctx) {
  const CompiledDbn dbn = compile_for(ctx.config);
  CostSpec costs = ctx.config.costs;
  costs.discount = calibrate_discount(dbn, 2.25, 0.01);
  std::cout << "calibrated discount: " << fmt6(costs.discount) << "\n";
  const InspectionTechnique tech = inspection_type1(ctx.config.inspection1_cost);
  auto analytic = [&](const HeuristicRule& rule) {
    GridSearchEntry entry;
    entry.rule = rule;
    entry.terms = evaluate_analytic(dbn, rule, costs);
    entry.cost = entry.terms.total();
    return entry;
  };
  std::vector<std::string> rows;
  auto emit = [&](const GridSearchResult& search, const std::string& family) {
    for (std::size_t i = 0; i < search.table.size(); ++i) {
      const GridSearchEntry& e = search.table[i];
      rows.push_back(family + "," + e.rule.label() + "," + fmt(e.cost) + "," +
                     fmt(e.terms.inspection) + "," + fmt(e.terms.repair) + "," +
                     fmt(e.terms.failure) + "," +
                     (i == search.best_index ? "1" : "0"));
    }
    std::cout << "  best " << family << ": " << search.best().rule.label()
              << " -> " << fmt6(search.best().cost) << "\n";
  };
  emit(grid_search(equidistant_grid(tech, ctx.config.horizon), analytic),
       "equidistant");
  emit(grid_search(threshold_grid(tech), analytic), "risk-threshold");
  write_csv(ctx.out_dir / "heuristics.csv",
            "family,rule,total,inspection,repair,failure,best", rows);
  return kExitOk;
}

int cmd_evaluate(const RunContext& ctx, bool finite, const std::string& policy_path) {
  const CompiledDbn dbn = compile_for(ctx.config);
  CostSpec costs = ctx.config.costs;
  costs.discount = calibrate_discount(dbn, 2.25, 0.01);
  const std::vector<ActionObservationGroup> groups = experiment_groups(ctx.config);
  const DiscretePomdp model =
      finite ? assemble_finite(dbn, groups, costs, ctx.config.horizon)
             : assemble_infinite(dbn, groups, costs);
  std::optional<Policy> policy;
  if (!policy_path.empty()) {
    std::ifstream in(policy_path);
    if (!in) {
      throw std::invalid_argument("cannot read policy file: " + policy_path);
    }
    policy = load_policy(in);
  } else {
    const SolveResult result = solve(model, ctx.config.solver);
    policy = extract_policy(result.bounds);
  }
  AlphaPolicyDriver driver(policy->shared_alphas());
  SimulationOptions options;
  options.num_episodes = ctx.config.evaluation_episodes;
  options.horizon = ctx.config.horizon;
  options.seed = ctx.config.seed + 101;
  options.max_traces = 8;
  const SimulationResult sim =
      simulate_policy(model, groups, costs, driver, options);
  std::cout << "simulated expected cost: " << fmt6(sim.mean_cost) << " (+-"
            << fmt6(sim.ci95) << ", " << sim.episodes << " episodes)\n";
  std::vector<std::string> hist_rows;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    hist_rows.push_back(groups[g].name + "," +
                        std::to_string(sim.group_histogram[g]));
    std::cout << "  " << groups[g].name << ": " << sim.group_histogram[g] << "\n";
  }
  write_csv(ctx.out_dir / "action_histogram.csv", "group,count", hist_rows);
  std::vector<std::string> trace_rows;
  for (const EpisodeTrace& trace : sim.traces) {
    const RealizationSeries series = realization_report(trace);
    for (std::size_t i = 0; i < series.year.size(); ++i) {
      trace_rows.push_back(std::to_string(trace.episode) + "," +
                           std::to_string(series.year[i]) + "," +
                           fmt(series.failure_probability[i]) + "," +
                           groups[static_cast<std::size_t>(series.group[i])].name);
    }
  }
  write_csv(ctx.out_dir / "realizations.csv",
            "episode,year,failure_probability,group", trace_rows);
  write_csv(ctx.out_dir / "cost.csv", "mean,ci95,inspection,repair,failure_risk",
            {fmt(sim.mean_cost) + "," + fmt(sim.ci95) + "," +
             fmt(sim.mean_terms.inspection) + "," + fmt(sim.mean_terms.repair) +
             "," + fmt(sim.mean_terms.failure_risk)});
  return kExitOk;
}

int cmd_export(const RunContext& ctx, bool finite, bool toy) {
  std::ofstream out(ctx.out_dir / "model.pomdp");
  if (toy) {
    DiscretePomdp model;
    model.num_states = 2;
    model.num_actions = 2;
    model.num_observations = 2;
    model.transition.push_back(SparseMatrix::from_dense({{0.7, 0.3}, {0.0, 1.0}}));
    model.transition.push_back(SparseMatrix::from_dense({{1.0, 0.0}, {1.0, 0.0}}));
    model.observation.push_back(
        SparseMatrix::from_dense({{0.9, 0.1}, {0.368, 0.632}}));
    model.observation.push_back(SparseMatrix::from_dense({{0.5, 0.5}, {0.5, 0.5}}));
    model.reward.push_back({0.0, -10.0});
    model.reward.push_back({-4.0, -4.0});
    model.discount = 0.95;
    model.initial_belief = BeliefState({1.0, 0.0});
    model.failure_states = {1};
    export_interchange(model, out);
  } else {
    const DiscretePomdp model = build_model(ctx, finite, nullptr);
    export_interchange(model, out);
  }
  std::cout << "wrote " << (ctx.out_dir / "model.pomdp").string() << "\n";
  return kExitOk;
}

int cmd_import(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot read " + path);
  }
  const DiscretePomdp model = import_interchange(in);
  const std::vector<Violation> violations = validate(model);
  std::cout << "imported model: " << model.num_states << " states, "
            << model.num_actions << " actions, " << model.num_observations
            << " observations\n";
  std::cout << "validate: " << violations.size() << " violations\n";
  for (std::size_t i = 0; i < violations.size() && i < 10; ++i) {
    std::cout << "  " << violations[i].message << "\n";
  }
  return violations.empty() ? kExitOk : kExitNumericFailure;
}

int cmd_reproduce(const RunContext& ctx) {
  const ReproduceResult result = reproduce_experiment(ctx.config, &std::cout);
  std::cout << "\nexperiment " << result.experiment << " (calibrated discount "
            << fmt6(result.calibrated_discount) << ")\n";
  std::vector<std::string> rows;
  for (const ReproduceRow& row : result.rows) {
    std::cout << "  " << row.method << ": " << fmt6(row.cost);
    if (row.simulated) {
      std::cout << " (+-" << fmt6(row.ci95) << ")";
    }
    if (row.delta_pct != 0.0) {
      char pct[32];
      std::snprintf(pct, sizeof(pct), " [%+.0f%%]", row.delta_pct);
      std::cout << pct;
    }
    std::cout << "\n";
    rows.push_back(row.method + "," + fmt(row.cost) + "," + fmt(row.ci95) +
                   "," + fmt(row.delta_pct));
  }
  write_csv(ctx.out_dir / "comparison.csv", "method,cost,ci95,delta_pct", rows);
  std::vector<std::string> trace_rows;
  for (const AnytimeRecord& rec : result.solver_trace) {
    trace_rows.push_back(fmt(rec.seconds) + "," + fmt(rec.lower) + "," +
                         fmt(rec.upper) + "," + std::to_string(rec.backups));
  }
  write_csv(ctx.out_dir / "anytime_trace.csv", "seconds,lower,upper,backups",
            trace_rows);
  std::vector<std::string> hist_rows;
  for (std::size_t g = 0; g < result.group_names.size(); ++g) {
    hist_rows.push_back(result.group_names[g] + "," +
                        std::to_string(result.pomdp_histogram[g]));
  }
  write_csv(ctx.out_dir / "action_histogram.csv", "group,count", hist_rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inspection and maintenance planning over discrete POMDPs"};
  app.require_subcommand(1);

  std::string experiment = "R_RI50-R_FR20";
  std::string config_path;
  std::string out_dir = "implan-run";
  std::string policy_path;
  std::string import_path;
  std::vector<std::string> schemes;
  bool finite = false;
  bool toy = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--experiment", experiment, "experiment preset name");
    cmd->add_option("--config", config_path, "JSON config overriding the preset");
    cmd->add_option("--out", out_dir, "run directory for artifacts");
  };

  CLI::App* discretize = app.add_subcommand(
      "discretize", "compile schemes and report their accuracy");
  add_common(discretize);
  discretize->add_option("--schemes", schemes, "scheme names (default: all)");

  CLI::App* build = app.add_subcommand("build", "assemble and export a POMDP");
  add_common(build);
  build->add_flag("--finite", finite, "time-augmented finite-horizon model");

  CLI::App* solve_cmd = app.add_subcommand("solve", "run the point-based solver");
  add_common(solve_cmd);
  solve_cmd->add_flag("--finite", finite, "time-augmented finite-horizon model");

  CLI::App* heuristics = app.add_subcommand(
      "heuristics", "optimize the classical decision-rule baselines");
  add_common(heuristics);

  CLI::App* evaluate = app.add_subcommand("evaluate", "simulate a policy");
  add_common(evaluate);
  evaluate->add_flag("--finite", finite, "time-augmented finite-horizon model");
  evaluate->add_option("--policy", policy_path, "saved policy (default: solve)");

  CLI::App* export_cmd =
      app.add_subcommand("export", "write the interchange text format");
  add_common(export_cmd);
  export_cmd->add_flag("--finite", finite, "time-augmented finite-horizon model");
  export_cmd->add_flag("--toy", toy, "export a 2-state example model");

  CLI::App* import_cmd =
      app.add_subcommand("import", "parse and validate an interchange file");
  import_cmd->add_option("--in", import_path, "interchange file")->required();

  CLI::App* reproduce = app.add_subcommand(
      "reproduce", "full comparison pipeline for one experiment");
  add_common(reproduce);

  CLI11_PARSE(app, argc, argv);

  try {
    if (import_cmd->parsed()) {
      return cmd_import(import_path);
    }
    const RunContext ctx = make_context(experiment, config_path, out_dir);
    if (discretize->parsed()) {
      return cmd_discretize(ctx, schemes);
    }
    if (build->parsed()) {
      return cmd_build(ctx, finite);
    }
    if (solve_cmd->parsed()) {
      return cmd_solve(ctx, finite);
    }
    if (heuristics->parsed()) {
      return cmd_heuristics(ctx);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(ctx, finite, policy_path);
    }
    if (export_cmd->parsed()) {
      return cmd_export(ctx, finite, toy);
    }
    if (reproduce->parsed()) {
      return cmd_reproduce(ctx);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericFailure;
  }
  return kExitOk;
}
