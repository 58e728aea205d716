#include "implan/rbi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace implan {

void InspectionPlan::check() const {
  if (kind == Kind::equidistant && interval < 1) {
    throw std::invalid_argument("InspectionPlan: interval must be >= 1");
  }
  if (kind == Kind::risk_threshold && !(annual_risk_threshold > 0.0)) {
    throw std::invalid_argument("InspectionPlan: threshold must be > 0");
  }
}

std::string HeuristicRule::label() const {
  std::ostringstream out;
  if (plan.kind == InspectionPlan::Kind::equidistant) {
    out << "EQ-" << inspection.name << " interval=" << plan.interval;
  } else {
    out << "THR-" << inspection.name
        << " dPF=" << plan.annual_risk_threshold;
  }
  switch (maintenance.kind) {
    case MaintenanceRule::Kind::repair_on_detection:
      out << " repair-on-detection";
      break;
    case MaintenanceRule::Kind::indicator_map:
      out << " map=";
      for (MaintenanceAction a : maintenance.indicator_actions) {
        out << (a == MaintenanceAction::do_nothing        ? "-"
                : a == MaintenanceAction::perfect_repair ? "P"
                                                         : "m");
      }
      break;
    case MaintenanceRule::Kind::failure_probability_threshold:
      out << " PF>" << maintenance.threshold;
      break;
    case MaintenanceRule::Kind::expected_damage_threshold:
      out << " Ed>" << maintenance.threshold;
      break;
  }
  return out.str();
}

namespace {

// Transition push without evidence, in DBN state space.
std::vector<double> push_belief(const CompiledDbn& dbn,
                                const std::vector<double>& belief) {
  std::vector<double> next(belief.size(), 0.0);
  for (int s = 0; s < dbn.num_states(); ++s) {
    const double mass = belief[static_cast<std::size_t>(s)];
    if (mass == 0.0) {
      continue;
    }
    for (const SparseMatrix::Entry& e : dbn.transition.row(s)) {
      next[static_cast<std::size_t>(e.col)] += mass * e.value;
    }
  }
  return next;
}

double failure_mass(const CompiledDbn& dbn, const std::vector<double>& belief) {
  double mass = 0.0;
  for (int s : dbn.failure_states) {
    mass += belief[static_cast<std::size_t>(s)];
  }
  return mass;
}

}  // namespace

CostBreakdown evaluate_analytic(const CompiledDbn& dbn, const HeuristicRule& rule,
                                const CostSpec& costs) {
  rule.plan.check();
  costs.check();
  if (rule.maintenance.kind != MaintenanceRule::Kind::repair_on_detection) {
    throw std::invalid_argument(
        "evaluate_analytic: single-branch evaluation needs a "
        "repair-on-detection maintenance rule");
  }
  const SparseMatrix likelihood =
      indicator_likelihood_matrix(dbn, rule.inspection.indicators);
  const int horizon = dbn.params.horizon_years;
  const double gamma = costs.discount;

  std::vector<double> belief = dbn.initial_belief.probs;
  double prev_failure = failure_mass(dbn, belief);
  CostBreakdown out;
  double discount_pow = 1.0;
  for (int year = 1; year <= horizon; ++year) {
    discount_pow *= gamma;
    std::vector<double> predicted = push_belief(dbn, belief);
    const double failure_now = failure_mass(dbn, predicted);
    out.failure += costs.failure_cost * (failure_now - prev_failure) * discount_pow;

    bool inspect = false;
    if (rule.plan.kind == InspectionPlan::Kind::equidistant) {
      inspect = year % rule.plan.interval == 0;
    } else if (year < horizon) {
      // Inspect at the last year before the annual failure probability,
      // conditioned on the branch so far, would cross the threshold.
      const std::vector<double> ahead = push_belief(dbn, predicted);
      const double annual_risk = failure_mass(dbn, ahead) - failure_now;
      inspect = annual_risk > rule.plan.annual_risk_threshold;
    }
    if (!inspect) {
      belief.swap(predicted);
      prev_failure = failure_now;
      continue;
    }
    out.inspection += rule.inspection.cost * discount_pow;
    // Repair probability equals the detection probability at this
    // inspection; the branch itself continues as a no-detection outcome.
    double no_detection = 0.0;
    for (int s = 0; s < dbn.num_states(); ++s) {
      double l0 = 0.0;
      for (const SparseMatrix::Entry& e : likelihood.row(s)) {
        if (e.col == 0) {
          l0 = e.value;
          break;
        }
      }
      predicted[static_cast<std::size_t>(s)] *= l0;
      no_detection += predicted[static_cast<std::size_t>(s)];
    }
    out.repair += costs.perfect_repair_cost * (1.0 - no_detection) * discount_pow;
    if (!(no_detection > 0.0)) {
      throw std::runtime_error("evaluate_analytic: no-detection branch died out");
    }
    for (double& p : predicted) {
      p /= no_detection;
    }
    belief.swap(predicted);
    prev_failure = failure_mass(dbn, belief);
  }
  return out;
}

namespace {

class HeuristicDriver : public PolicyDriver {
 public:
  HeuristicDriver(const CompiledDbn* dbn, HeuristicRule rule, int dn_group,
                  int inspect_group, int perfect_reaction, int minor_reaction,
                  int horizon)
      : dbn_(dbn),
        rule_(std::move(rule)),
        dn_group_(dn_group),
        inspect_group_(inspect_group),
        perfect_reaction_(perfect_reaction),
        minor_reaction_(minor_reaction),
        horizon_(horizon) {}

  std::unique_ptr<PolicyDriver> clone() const override {
    return std::make_unique<HeuristicDriver>(*this);
  }

  void begin_episode() override { inspected_ = false; }

  int select_group(int year, const BeliefState& belief) override {
    inspected_ = false;
    if (rule_.plan.kind == InspectionPlan::Kind::equidistant) {
      inspected_ = year % rule_.plan.interval == 0;
    } else if (year < horizon_) {
      const std::vector<double> predicted = push_belief(*dbn_, belief.probs);
      const std::vector<double> ahead = push_belief(*dbn_, predicted);
      inspected_ = failure_mass(*dbn_, ahead) - failure_mass(*dbn_, predicted) >
                   rule_.plan.annual_risk_threshold;
    }
    return inspected_ ? inspect_group_ : dn_group_;
  }

  int react(int /*year*/, const BeliefState& posterior, int indicator) override {
    if (!inspected_) {
      return -1;
    }
    MaintenanceAction action = MaintenanceAction::do_nothing;
    switch (rule_.maintenance.kind) {
      case MaintenanceRule::Kind::repair_on_detection:
        action = indicator >= 1 ? MaintenanceAction::perfect_repair
                                : MaintenanceAction::do_nothing;
        break;
      case MaintenanceRule::Kind::indicator_map:
        action = rule_.maintenance.indicator_actions.at(
            static_cast<std::size_t>(indicator));
        break;
      case MaintenanceRule::Kind::failure_probability_threshold:
        if (failure_mass(*dbn_, posterior.probs) > rule_.maintenance.threshold) {
          action = rule_.maintenance.threshold_action;
        }
        break;
      case MaintenanceRule::Kind::expected_damage_threshold: {
        double expected = 0.0;
        for (int s = 0; s < dbn_->num_states(); ++s) {
          expected += posterior.probs[static_cast<std::size_t>(s)] *
                      dbn_->scheme.crack_cell_midpoint(dbn_->crack_cell_of(s));
        }
        if (expected > rule_.maintenance.threshold) {
          action = rule_.maintenance.threshold_action;
        }
        break;
      }
    }
    switch (action) {
      case MaintenanceAction::perfect_repair:
        return perfect_reaction_;
      case MaintenanceAction::minor_repair:
        return minor_reaction_;
      case MaintenanceAction::do_nothing:
        return -1;
    }
    return -1;
  }

 private:
  const CompiledDbn* dbn_;
  HeuristicRule rule_;
  int dn_group_;
  int inspect_group_;
  int perfect_reaction_;
  int minor_reaction_;
  int horizon_;
  bool inspected_ = false;
};

bool rule_uses_minor_repair(const HeuristicRule& rule) {
  if (rule.maintenance.kind == MaintenanceRule::Kind::indicator_map) {
    for (MaintenanceAction a : rule.maintenance.indicator_actions) {
      if (a == MaintenanceAction::minor_repair) {
        return true;
      }
    }
    return false;
  }
  return rule.maintenance.threshold_action == MaintenanceAction::minor_repair &&
         (rule.maintenance.kind ==
              MaintenanceRule::Kind::failure_probability_threshold ||
          rule.maintenance.kind == MaintenanceRule::Kind::expected_damage_threshold);
}

}  // namespace

SimulatedValue evaluate_simulated(const CompiledDbn& dbn,
                                  const HeuristicRule& rule,
                                  const CostSpec& costs,
                                  std::int64_t num_episodes, std::uint64_t seed,
                                  HeuristicSemantics semantics,
                                  RiskMode risk_mode) {
  if (num_episodes < 2) {
    throw std::invalid_argument("evaluate_simulated: need at least 2 episodes");
  }
  rule.plan.check();
  std::vector<ActionObservationGroup> groups(2);
  groups[0].name = "do-nothing/no-inspection";
  groups[1].name = "do-nothing/" + rule.inspection.name;
  groups[1].inspection = rule.inspection;

  const DiscretePomdp model = assemble_infinite(dbn, groups, costs);

  SimulationOptions options;
  options.num_episodes = num_episodes;
  options.horizon = dbn.params.horizon_years;
  options.seed = seed;
  options.risk_mode = risk_mode;
  const bool branch = semantics == HeuristicSemantics::no_detection_branch;
  options.observations_from_belief = branch;
  options.force_no_detection_update = branch;

  // Reaction transitions: real resets under natural semantics; pure cost
  // bookkeeping (identity) under single-branch semantics.
  Reaction perfect;
  perfect.name = "perfect-repair";
  perfect.cost = costs.perfect_repair_cost;
  perfect.transition = branch ? SparseMatrix::identity(dbn.num_states())
                              : perfect_repair_matrix(dbn.initial_belief);
  options.reactions.push_back(std::move(perfect));
  int minor_reaction = -1;
  if (rule_uses_minor_repair(rule)) {
    Reaction minor;
    minor.name = "minor-repair";
    minor.cost = costs.minor_repair_cost;
    minor.transition = branch ? SparseMatrix::identity(dbn.num_states())
                              : minor_repair_matrix(dbn);
    options.reactions.push_back(std::move(minor));
    minor_reaction = 1;
  }

  HeuristicDriver driver(&dbn, rule, 0, 1, 0, minor_reaction,
                         dbn.params.horizon_years);
  SimulationResult detail = simulate_policy(model, groups, costs, driver, options);
  SimulatedValue value;
  value.mean = detail.mean_cost;
  value.ci95 = detail.ci95;
  value.terms.inspection = detail.mean_terms.inspection;
  value.terms.repair = detail.mean_terms.repair;
  value.terms.failure = detail.mean_terms.failure_risk;
  value.detail = std::move(detail);
  return value;
}

GridSearchResult grid_search(
    const std::vector<HeuristicRule>& rules,
    const std::function<GridSearchEntry(const HeuristicRule&)>& evaluate) {
  if (rules.empty()) {
    throw std::invalid_argument("grid_search: empty rule grid");
  }
  GridSearchResult result;
  result.table.reserve(rules.size());
  for (const HeuristicRule& rule : rules) {
    result.table.push_back(evaluate(rule));
    if (result.table.back().cost < result.table[result.best_index].cost) {
      result.best_index = result.table.size() - 1;
    }
  }
  return result;
}

std::vector<HeuristicRule> equidistant_family(const InspectionTechnique& tech,
                                              const MaintenanceRule& maintenance,
                                              int min_interval, int max_interval) {
  std::vector<HeuristicRule> rules;
  for (int interval = min_interval; interval <= max_interval; ++interval) {
    HeuristicRule rule;
    rule.plan.kind = InspectionPlan::Kind::equidistant;
    rule.plan.interval = interval;
    rule.inspection = tech;
    rule.maintenance = maintenance;
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<HeuristicRule> threshold_family(const InspectionTechnique& tech,
                                            const MaintenanceRule& maintenance,
                                            std::vector<double> thresholds) {
  std::sort(thresholds.rbegin(), thresholds.rend());
  std::vector<HeuristicRule> rules;
  for (double threshold : thresholds) {
    HeuristicRule rule;
    rule.plan.kind = InspectionPlan::Kind::risk_threshold;
    rule.plan.annual_risk_threshold = threshold;
    rule.inspection = tech;
    rule.maintenance = maintenance;
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<std::vector<MaintenanceAction>> monotone_indicator_maps(
    int num_indicators, bool include_minor_repair) {
  std::vector<std::vector<MaintenanceAction>> maps;
  // A monotone map is determined by where minor repair starts and where
  // perfect repair starts.
  for (int perfect_from = 0; perfect_from <= num_indicators; ++perfect_from) {
    const int minor_first = include_minor_repair ? 0 : perfect_from;
    for (int minor_from = minor_first; minor_from <= perfect_from; ++minor_from) {
      std::vector<MaintenanceAction> map(
          static_cast<std::size_t>(num_indicators),
          MaintenanceAction::do_nothing);
      for (int i = minor_from; i < perfect_from; ++i) {
        map[static_cast<std::size_t>(i)] = MaintenanceAction::minor_repair;
      }
      for (int i = perfect_from; i < num_indicators; ++i) {
        map[static_cast<std::size_t>(i)] = MaintenanceAction::perfect_repair;
      }
      maps.push_back(std::move(map));
    }
  }
  return maps;
}

}  // namespace implan
