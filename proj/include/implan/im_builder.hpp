#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "implan/discretization.hpp"
#include "implan/fatigue.hpp"
#include "implan/pomdp.hpp"

namespace implan {

enum class MaintenanceAction { do_nothing, perfect_repair, minor_repair };

/// An inspection technique: indicator curves plus its per-use cost.
struct InspectionTechnique {
  std::string name;
  PoiCurve indicators;
  double cost = 0.0;

  static InspectionTechnique binary(std::string name, PodCurve pod,
                                    double cost);
};

/// A maintenance action paired with an observation decision; one POMDP
/// action corresponds to one group.
struct ActionObservationGroup {
  std::string name;
  MaintenanceAction maintenance = MaintenanceAction::do_nothing;
  std::optional<InspectionTechnique> inspection;
};

struct CostSpec {
  double perfect_repair_cost = 0.0;
  double minor_repair_cost = 0.0;
  double failure_cost = 0.0;
  double discount = 0.95;
  /// When set, perfect repair also resets failed states (default keeps
  /// failure absorbing so repair cannot be exploited as resurrection).
  bool repair_resets_failed = false;

  void check() const;
};

struct UnsupportedActionError : std::logic_error {
  explicit UnsupportedActionError(const std::string& what)
      : std::logic_error(what) {}
};

struct StateBudgetError : std::runtime_error {
  StateBudgetError(std::int64_t required, std::int64_t budget);
  std::int64_t required_states;
  std::int64_t budget_states;
};

/// Rank-one reset matrix: every row equals the initial belief, so
/// b P = b0 for any belief b.
SparseMatrix perfect_repair_matrix(const BeliefState& initial_belief);

/// Deterministic rate rewind (crack cell, age) -> (crack cell, max(age-2, 0)).
/// Damage marginal unchanged; failure cells stay absorbing. Rate-variant
/// models only.
SparseMatrix minor_repair_matrix(const CompiledDbn& dbn);

/// Per-group state rewards: the newly-entering-failure risk term under the
/// group's transition, minus inspection and repair costs where applicable.
std::vector<std::vector<double>> build_rewards(
    const CompiledDbn& dbn, const std::vector<ActionObservationGroup>& groups,
    const CostSpec& costs);

/// Stationary-state POMDP over the compiled joint space.
///
/// Assembled rewards carry one year of discount (costs bill at the end of
/// the action year), so V(b0) matches analytic expected-cost sums whose
/// discounting starts at gamma^1.
DiscretePomdp assemble_infinite(const CompiledDbn& dbn,
                                const std::vector<ActionObservationGroup>& groups,
                                const CostSpec& costs);

/// Index layout of the time-augmented state space.
struct FiniteHorizonLayout {
  DbnVariant variant = DbnVariant::deterioration_rate;
  int horizon = 0;
  int crack_cells = 0;
  int stationary_states = 0;  ///< parametric layer width
  std::vector<int> layer_offset;
  std::int64_t augmented_states = 0;  ///< excluding the terminal state
  int terminal_state = 0;

  /// Rate variant: step t carries ages 0..t.
  int state_of(int step, int age, int crack_cell) const {
    return layer_offset[static_cast<std::size_t>(step)] + age * crack_cells +
           crack_cell;
  }
  /// Parametric variant: step t carries the full stationary space.
  int state_of_flat(int step, int flat_state) const {
    return layer_offset[static_cast<std::size_t>(step)] + flat_state;
  }
  int step_of(int state) const;
};

FiniteHorizonLayout finite_layout(const CompiledDbn& dbn, int horizon);

/// Finite-horizon POMDP via state augmentation: the rate variant uses the
/// triangular (step, ages 0..step) layout, the parametric variant repeats
/// the stationary space per step; both end in a zero-reward terminal state.
DiscretePomdp assemble_finite(const CompiledDbn& dbn,
                              const std::vector<ActionObservationGroup>& groups,
                              const CostSpec& costs, int horizon,
                              std::int64_t state_budget = 1'000'000);

}  // namespace implan
