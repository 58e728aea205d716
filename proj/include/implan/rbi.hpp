#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "implan/discretization.hpp"
#include "implan/im_builder.hpp"
#include "implan/policy_eval.hpp"

namespace implan {

/// When inspections happen.
struct InspectionPlan {
  enum class Kind {
    equidistant,     ///< every `interval` years
    risk_threshold,  ///< just before the annual failure probability crosses
  };
  Kind kind = Kind::equidistant;
  int interval = 1;
  double annual_risk_threshold = 0.0;

  void check() const;
};

/// What maintenance follows an inspection outcome.
struct MaintenanceRule {
  enum class Kind {
    repair_on_detection,            ///< perfect repair on any indication
    indicator_map,                  ///< action per indicator
    failure_probability_threshold,  ///< act when P_F(belief) crosses
    expected_damage_threshold,      ///< act when E[d](belief) crosses
  };
  Kind kind = Kind::repair_on_detection;
  std::vector<MaintenanceAction> indicator_actions;  ///< indicator_map only
  double threshold = 0.0;
  MaintenanceAction threshold_action = MaintenanceAction::perfect_repair;
};

/// A classical decision rule: inspection plan + technique + maintenance rule.
struct HeuristicRule {
  InspectionPlan plan;
  InspectionTechnique inspection;
  MaintenanceRule maintenance;

  std::string label() const;
};

struct CostBreakdown {
  double inspection = 0.0;
  double repair = 0.0;
  double failure = 0.0;

  double total() const { return inspection + repair + failure; }
};

/// Closed-form expected cost of a repair-on-detection rule along the single
/// no-detection branch of the decision tree. Threshold plans place an
/// inspection at the last year before the conditioned annual failure
/// probability would cross the threshold.
CostBreakdown evaluate_analytic(const CompiledDbn& dbn, const HeuristicRule& rule,
                                const CostSpec& costs);

enum class HeuristicSemantics {
  reset_on_repair,      ///< repairs return the component to its initial state
  no_detection_branch,  ///< single-branch semantics matching evaluate_analytic
};

struct SimulatedValue {
  double mean = 0.0;
  double ci95 = 0.0;
  CostBreakdown terms;
  SimulationResult detail;
};

/// Monte Carlo evaluation of a heuristic rule on the compiled model.
SimulatedValue evaluate_simulated(
    const CompiledDbn& dbn, const HeuristicRule& rule, const CostSpec& costs,
    std::int64_t num_episodes, std::uint64_t seed,
    HeuristicSemantics semantics = HeuristicSemantics::reset_on_repair,
    RiskMode risk_mode = RiskMode::belief_accrual);

struct GridSearchEntry {
  HeuristicRule rule;
  double cost = 0.0;
  double ci95 = 0.0;
  CostBreakdown terms;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  std::vector<GridSearchEntry> table;

  const GridSearchEntry& best() const { return table[best_index]; }
};

/// Evaluates every rule and keeps the argmin expected cost. Ties break
/// toward the earlier rule, so grids should list smaller intervals and
/// larger thresholds first.
GridSearchResult grid_search(
    const std::vector<HeuristicRule>& rules,
    const std::function<GridSearchEntry(const HeuristicRule&)>& evaluate);

/// Equidistant-inspection rule family over a span of intervals.
std::vector<HeuristicRule> equidistant_family(const InspectionTechnique& tech,
                                              const MaintenanceRule& maintenance,
                                              int min_interval, int max_interval);

/// Risk-threshold rule family over the given thresholds (sorted descending
/// internally for the tie-break order).
std::vector<HeuristicRule> threshold_family(const InspectionTechnique& tech,
                                            const MaintenanceRule& maintenance,
                                            std::vector<double> thresholds);

/// Monotone indicator->action maps (more severe indication never maps to a
/// milder action); the search space for observation-based maintenance rules.
std::vector<std::vector<MaintenanceAction>> monotone_indicator_maps(
    int num_indicators, bool include_minor_repair);

}  // namespace implan
