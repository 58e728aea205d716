#include "implan/im_builder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace implan {

InspectionTechnique InspectionTechnique::binary(std::string name, PodCurve pod,
                                                double cost) {
  InspectionTechnique tech;
  tech.name = std::move(name);
  tech.indicators.boundaries = {pod};
  tech.cost = cost;
  return tech;
}

void CostSpec::check() const {
  if (perfect_repair_cost < 0.0 || minor_repair_cost < 0.0 ||
      failure_cost < 0.0) {
    throw std::invalid_argument("CostSpec: costs must be non-negative");
  }
  if (!(discount > 0.0) || discount > 1.0) {
    throw std::invalid_argument("CostSpec: discount outside (0, 1]");
  }
}

StateBudgetError::StateBudgetError(std::int64_t required, std::int64_t budget)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "finite-horizon augmentation needs " << required
            << " states, over the configured budget of " << budget;
        return msg.str();
      }()),
      required_states(required),
      budget_states(budget) {}

SparseMatrix perfect_repair_matrix(const BeliefState& initial_belief) {
  const int n = initial_belief.size();
  SparseMatrix m(n, n);
  std::vector<SparseMatrix::Entry> reset_row;
  for (int s = 0; s < n; ++s) {
    if (initial_belief.probs[static_cast<std::size_t>(s)] > 0.0) {
      reset_row.push_back({s, initial_belief.probs[static_cast<std::size_t>(s)]});
    }
  }
  std::vector<int> all_rows(static_cast<std::size_t>(n));
  std::iota(all_rows.begin(), all_rows.end(), 0);
  m.set_rows_shared(all_rows, reset_row);
  return m;
}

SparseMatrix minor_repair_matrix(const CompiledDbn& dbn) {
  if (dbn.scheme.variant != DbnVariant::deterioration_rate) {
    throw UnsupportedActionError(
        "minor repair is only defined for deterioration-rate models");
  }
  const int nd = dbn.num_crack_cells();
  SparseMatrix m(dbn.num_states(), dbn.num_states());
  for (int s = 0; s < dbn.num_states(); ++s) {
    const int age = dbn.layer_of(s);
    const int cell = dbn.crack_cell_of(s);
    const int target = dbn.is_failure_cell(cell)
                           ? s
                           : std::max(age - 2, 0) * nd + cell;
    const SparseMatrix::Entry e{target, 1.0};
    m.set_row(s, {&e, 1});
  }
  return m;
}

namespace {

double group_repair_cost(const ActionObservationGroup& group,
                         const CostSpec& costs) {
  switch (group.maintenance) {
    case MaintenanceAction::perfect_repair:
      return costs.perfect_repair_cost;
    case MaintenanceAction::minor_repair:
      return costs.minor_repair_cost;
    case MaintenanceAction::do_nothing:
      return 0.0;
  }
  return 0.0;
}

/// Perfect repair with failure kept absorbing (the default assembly form).
SparseMatrix guarded_perfect_repair(const CompiledDbn& dbn,
                                    const CostSpec& costs) {
  if (costs.repair_resets_failed) {
    return perfect_repair_matrix(dbn.initial_belief);
  }
  const int n = dbn.num_states();
  SparseMatrix m(n, n);
  std::vector<SparseMatrix::Entry> reset_row;
  for (int s = 0; s < n; ++s) {
    if (dbn.initial_belief.probs[static_cast<std::size_t>(s)] > 0.0) {
      reset_row.push_back({s, dbn.initial_belief.probs[static_cast<std::size_t>(s)]});
    }
  }
  std::vector<int> healthy;
  for (int s = 0; s < n; ++s) {
    if (dbn.is_failure_cell(dbn.crack_cell_of(s))) {
      const SparseMatrix::Entry self{s, 1.0};
      m.set_row(s, {&self, 1});
    } else {
      healthy.push_back(s);
    }
  }
  m.set_rows_shared(healthy, reset_row);
  return m;
}

SparseMatrix group_transition(const CompiledDbn& dbn,
                              const ActionObservationGroup& group,
                              const CostSpec& costs) {
  switch (group.maintenance) {
    case MaintenanceAction::do_nothing:
      return dbn.transition;
    case MaintenanceAction::perfect_repair:
      return guarded_perfect_repair(dbn, costs);
    case MaintenanceAction::minor_repair:
      return minor_repair_matrix(dbn);
  }
  throw std::logic_error("unknown maintenance action");
}

std::vector<double> risk_reward(const SparseMatrix& transition,
                                const std::vector<char>& is_failure,
                                double failure_cost) {
  // R_F(s) = sum_s' P(s'|s) Rbar(s') - Rbar(s) with Rbar = -C_f on failure
  // states: the cost of newly entering failure during the year.
  const int n = transition.rows();
  std::vector<double> reward(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    double mass_to_failure = 0.0;
    for (const SparseMatrix::Entry& e : transition.row(s)) {
      if (is_failure[static_cast<std::size_t>(e.col)]) {
        mass_to_failure += e.value;
      }
    }
    const double already = is_failure[static_cast<std::size_t>(s)] ? 1.0 : 0.0;
    reward[static_cast<std::size_t>(s)] = -failure_cost * (mass_to_failure - already);
  }
  return reward;
}

}  // namespace

std::vector<std::vector<double>> build_rewards(
    const CompiledDbn& dbn, const std::vector<ActionObservationGroup>& groups,
    const CostSpec& costs) {
  costs.check();
  std::vector<char> is_failure(static_cast<std::size_t>(dbn.num_states()), 0);
  for (int s : dbn.failure_states) {
    is_failure[static_cast<std::size_t>(s)] = 1;
  }
  std::vector<std::vector<double>> rewards;
  rewards.reserve(groups.size());
  for (const ActionObservationGroup& group : groups) {
    const SparseMatrix matrix = group_transition(dbn, group, costs);
    std::vector<double> r = risk_reward(matrix, is_failure, costs.failure_cost);
    const double fixed = (group.inspection ? group.inspection->cost : 0.0) +
                         group_repair_cost(group, costs);
    for (double& v : r) {
      v -= fixed;
    }
    rewards.push_back(std::move(r));
  }
  return rewards;
}

namespace {

int observation_count(const std::vector<ActionObservationGroup>& groups) {
  int count = 1;
  for (const ActionObservationGroup& g : groups) {
    if (g.inspection) {
      count = std::max(count, g.inspection->indicators.num_indicators());
    }
  }
  return count;
}

SparseMatrix uniform_observation(int states, int observations) {
  SparseMatrix z(states, observations);
  std::vector<SparseMatrix::Entry> row;
  for (int o = 0; o < observations; ++o) {
    row.push_back({o, 1.0 / static_cast<double>(observations)});
  }
  std::vector<int> all(static_cast<std::size_t>(states));
  std::iota(all.begin(), all.end(), 0);
  z.set_rows_shared(all, row);
  return z;
}

}  // namespace

DiscretePomdp assemble_infinite(const CompiledDbn& dbn,
                                const std::vector<ActionObservationGroup>& groups,
                                const CostSpec& costs) {
  costs.check();
  if (groups.empty()) {
    throw std::invalid_argument("assemble_infinite: no action-observation groups");
  }
  DiscretePomdp model;
  model.num_states = dbn.num_states();
  model.num_actions = static_cast<int>(groups.size());
  model.num_observations = observation_count(groups);
  model.discount = costs.discount;
  model.initial_belief = dbn.initial_belief;
  model.failure_states = dbn.failure_states;

  const std::vector<std::vector<double>> raw = build_rewards(dbn, groups, costs);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    model.transition.push_back(group_transition(dbn, groups[g], costs));
    if (groups[g].inspection) {
      model.observation.push_back(indicator_likelihood_matrix(
          dbn, groups[g].inspection->indicators, model.num_observations));
    } else {
      model.observation.push_back(
          uniform_observation(model.num_states, model.num_observations));
    }
    // End-of-year billing: one year of discount folded into the rewards.
    std::vector<double> r = raw[g];
    for (double& v : r) {
      v *= costs.discount;
    }
    model.reward.push_back(std::move(r));
  }
  return model;
}

int FiniteHorizonLayout::step_of(int state) const {
  if (state >= augmented_states) {
    return horizon + 1;  // terminal
  }
  const auto it = std::upper_bound(layer_offset.begin(), layer_offset.end(), state);
  return static_cast<int>(it - layer_offset.begin()) - 1;
}

FiniteHorizonLayout finite_layout(const CompiledDbn& dbn, int horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("finite_layout: horizon must be >= 1");
  }
  FiniteHorizonLayout layout;
  layout.variant = dbn.scheme.variant;
  layout.horizon = horizon;
  layout.crack_cells = dbn.num_crack_cells();
  layout.stationary_states = dbn.num_states();
  std::int64_t offset = 0;
  for (int t = 0; t <= horizon; ++t) {
    layout.layer_offset.push_back(static_cast<int>(offset));
    if (dbn.scheme.variant == DbnVariant::deterioration_rate) {
      offset += static_cast<std::int64_t>(t + 1) * layout.crack_cells;
    } else {
      offset += layout.stationary_states;
    }
  }
  layout.augmented_states = offset;
  layout.terminal_state = static_cast<int>(offset);
  return layout;
}

DiscretePomdp assemble_finite(const CompiledDbn& dbn,
                              const std::vector<ActionObservationGroup>& groups,
                              const CostSpec& costs, int horizon,
                              std::int64_t state_budget) {
  costs.check();
  if (groups.empty()) {
    throw std::invalid_argument("assemble_finite: no action-observation groups");
  }
  const FiniteHorizonLayout layout = finite_layout(dbn, horizon);
  const std::int64_t total_states = layout.augmented_states + 1;
  if (total_states > state_budget) {
    throw StateBudgetError(total_states, state_budget);
  }
  if (dbn.scheme.variant == DbnVariant::deterioration_rate &&
      horizon + 1 > dbn.scheme.rate_count) {
    throw std::invalid_argument(
        "assemble_finite: horizon exceeds the compiled rate range");
  }

  const int n = static_cast<int>(total_states);
  const int nd = dbn.num_crack_cells();
  const int terminal = layout.terminal_state;
  const bool rate_variant =
      dbn.scheme.variant == DbnVariant::deterioration_rate;

  DiscretePomdp model;
  model.num_states = n;
  model.num_actions = static_cast<int>(groups.size());
  model.num_observations = observation_count(groups);
  model.discount = costs.discount;
  model.terminal_states = {terminal};

  // Initial belief: step 0 carries age 0 (rate variant) or the stationary
  // initial belief (parametric).
  model.initial_belief.probs.assign(static_cast<std::size_t>(n), 0.0);
  if (rate_variant) {
    for (int d = 0; d < nd; ++d) {
      model.initial_belief.probs[static_cast<std::size_t>(layout.state_of(0, 0, d))] =
          dbn.initial_belief.probs[static_cast<std::size_t>(d)];
    }
  } else {
    for (int s = 0; s < dbn.num_states(); ++s) {
      model.initial_belief.probs[static_cast<std::size_t>(layout.state_of_flat(0, s))] =
          dbn.initial_belief.probs[static_cast<std::size_t>(s)];
    }
  }
  model.initial_belief.normalize();

  // Failure states per step (the terminal state is not a failure state).
  std::vector<char> is_failure(static_cast<std::size_t>(n), 0);
  for (int t = 0; t <= horizon; ++t) {
    if (rate_variant) {
      for (int age = 0; age <= t; ++age) {
        is_failure[static_cast<std::size_t>(layout.state_of(t, age, nd - 1))] = 1;
      }
    } else {
      for (int s : dbn.failure_states) {
        is_failure[static_cast<std::size_t>(layout.state_of_flat(t, s))] = 1;
      }
    }
  }
  for (int s = 0; s < n; ++s) {
    if (is_failure[static_cast<std::size_t>(s)]) {
      model.failure_states.push_back(s);
    }
  }

  // Reset row over next-step age-0 cells (rate) or next-step initial belief
  // (parametric), built per step below.
  const std::vector<double>& b0 = dbn.initial_belief.probs;

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const ActionObservationGroup& group = groups[g];
    if (group.maintenance == MaintenanceAction::minor_repair && !rate_variant) {
      throw UnsupportedActionError(
          "minor repair is only defined for deterioration-rate models");
    }
    SparseMatrix transition(n, n);
    std::vector<SparseMatrix::Entry> row;
    for (int t = 0; t <= horizon; ++t) {
      // Shared perfect-repair reset row for this step.
      std::vector<SparseMatrix::Entry> reset_row;
      std::vector<int> reset_states;
      if (group.maintenance == MaintenanceAction::perfect_repair && t < horizon) {
        if (rate_variant) {
          for (int d = 0; d < nd; ++d) {
            if (b0[static_cast<std::size_t>(d)] > 0.0) {
              reset_row.push_back({layout.state_of(t + 1, 0, d),
                                   b0[static_cast<std::size_t>(d)]});
            }
          }
        } else {
          for (int s = 0; s < dbn.num_states(); ++s) {
            if (b0[static_cast<std::size_t>(s)] > 0.0) {
              reset_row.push_back({layout.state_of_flat(t + 1, s),
                                   b0[static_cast<std::size_t>(s)]});
            }
          }
        }
      }
      const int step_begin = layout.layer_offset[static_cast<std::size_t>(t)];
      const int step_states = rate_variant ? (t + 1) * nd : dbn.num_states();
      for (int local = 0; local < step_states; ++local) {
        const int state = step_begin + local;
        row.clear();
        if (t == horizon) {
          row.push_back({terminal, 1.0});
          transition.set_row(state, row);
          continue;
        }
        const int age = rate_variant ? local / nd : -1;
        const int cell = rate_variant ? local % nd : dbn.crack_cell_of(local);
        const bool failed = dbn.is_failure_cell(cell);
        const bool repair_applies =
            group.maintenance != MaintenanceAction::do_nothing &&
            (!failed || costs.repair_resets_failed);
        if (repair_applies) {
          if (group.maintenance == MaintenanceAction::perfect_repair) {
            reset_states.push_back(state);
            continue;
          }
          // Minor repair: keep the crack cell, rewind the age two steps.
          row.push_back({layout.state_of(t + 1, std::max(age - 2, 0), cell), 1.0});
          transition.set_row(state, row);
          continue;
        }
        if (failed) {
          const int next_age = rate_variant ? age + 1 : -1;
          const int target = rate_variant
                                 ? layout.state_of(t + 1, next_age, cell)
                                 : layout.state_of_flat(t + 1, local);
          row.push_back({target, 1.0});
          transition.set_row(state, row);
          continue;
        }
        // Do-nothing deterioration through the stationary one-year kernel.
        const int dbn_state = rate_variant ? age * nd + cell : local;
        for (const SparseMatrix::Entry& e : dbn.transition.row(dbn_state)) {
          const int target =
              rate_variant
                  ? layout.state_of(t + 1, age + 1, e.col % nd)
                  : layout.state_of_flat(t + 1, e.col);
          row.push_back({target, e.value});
        }
        transition.set_row(state, row);
      }
      if (!reset_states.empty()) {
        transition.set_rows_shared(reset_states, reset_row);
      }
    }
    row.assign(1, {terminal, 1.0});
    transition.set_row(terminal, row);

    // Rewards: newly-entering-failure risk under this group's transition,
    // minus inspection/repair costs; zero at the last step and terminal;
    // one year of discount folded in (end-of-year billing).
    std::vector<double> reward(static_cast<std::size_t>(n), 0.0);
    const double fixed = (group.inspection ? group.inspection->cost : 0.0) +
                         group_repair_cost(group, costs);
    for (int t = 0; t < horizon; ++t) {
      const int step_begin = layout.layer_offset[static_cast<std::size_t>(t)];
      const int step_states = rate_variant ? (t + 1) * nd : dbn.num_states();
      for (int local = 0; local < step_states; ++local) {
        const int state = step_begin + local;
        double mass_to_failure = 0.0;
        for (const SparseMatrix::Entry& e : transition.row(state)) {
          if (is_failure[static_cast<std::size_t>(e.col)]) {
            mass_to_failure += e.value;
          }
        }
        const double already = is_failure[static_cast<std::size_t>(state)] ? 1.0 : 0.0;
        reward[static_cast<std::size_t>(state)] =
            (-costs.failure_cost * (mass_to_failure - already) - fixed) *
            costs.discount;
      }
    }
    model.transition.push_back(std::move(transition));

    // Observations keyed by the crack cell; terminal and last step uniform.
    if (group.inspection) {
      group.inspection->indicators.check();
      SparseMatrix z(n, model.num_observations);
      std::vector<std::vector<int>> by_cell(static_cast<std::size_t>(nd));
      for (int s = 0; s < terminal; ++s) {
        const int local = s - layout.layer_offset[static_cast<std::size_t>(
                                  layout.step_of(s))];
        const int cell = rate_variant ? local % nd : dbn.crack_cell_of(local);
        by_cell[static_cast<std::size_t>(cell)].push_back(s);
      }
      for (int d = 0; d < nd; ++d) {
        const std::vector<double> probs = poi_eval(
            group.inspection->indicators, dbn.scheme.crack_cell_midpoint(d));
        std::vector<SparseMatrix::Entry> like;
        for (int o = 0; o < static_cast<int>(probs.size()); ++o) {
          if (probs[static_cast<std::size_t>(o)] > 0.0) {
            like.push_back({o, probs[static_cast<std::size_t>(o)]});
          }
        }
        z.set_rows_shared(by_cell[static_cast<std::size_t>(d)], like);
      }
      std::vector<SparseMatrix::Entry> uniform;
      for (int o = 0; o < model.num_observations; ++o) {
        uniform.push_back({o, 1.0 / model.num_observations});
      }
      const int term = terminal;
      z.set_rows_shared({&term, 1}, uniform);
      model.observation.push_back(std::move(z));
    } else {
      model.observation.push_back(
          uniform_observation(n, model.num_observations));
    }
    model.reward.push_back(std::move(reward));
  }
  return model;
}

}  // namespace implan
