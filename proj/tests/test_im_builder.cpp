#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "implan/experiments.hpp"
#include "implan/im_builder.hpp"
#include "implan/rng.hpp"

using namespace implan;

namespace {

const CrackGrowthParams kParams;

CompiledDbn rate_dbn(int crack_cells = 12) {
  const DiscretizationScheme scheme =
      build_scheme(DbnVariant::deterioration_rate, crack_cells, 0, kParams);
  return compile_transition(scheme, kParams, 300, 17);
}

CostSpec basic_costs() {
  CostSpec costs;
  costs.perfect_repair_cost = 50.0;
  costs.minor_repair_cost = 10.0;
  costs.failure_cost = 1000.0;
  costs.discount = 0.95;
  return costs;
}

BeliefState random_belief(RngStream& rng, int n) {
  std::vector<double> probs(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (double& p : probs) {
    p = rng.next_open_double();
    sum += p;
  }
  for (double& p : probs) {
    p /= sum;
  }
  return BeliefState(std::move(probs));
}

}  // namespace

TEST_CASE("perfect repair pulls every belief back to the initial one") {
  BeliefState b0({0.25, 0.5, 0.25, 0.0});
  const SparseMatrix reset = perfect_repair_matrix(b0);
  RngStream rng(31, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const BeliefState b = random_belief(rng, 4);
    const std::vector<double> after = reset.pre_multiply(b.probs);
    double l1 = 0.0;
    for (int s = 0; s < 4; ++s) {
      l1 += std::abs(after[s] - b0.probs[s]);
    }
    CHECK(l1 < 1e-12);
  }
}

TEST_CASE("perfect repair of a point-mass initial state sends everything there") {
  const SparseMatrix reset = perfect_repair_matrix(BeliefState::point_mass(3, 0));
  for (int s = 0; s < 3; ++s) {
    const auto row = reset.row(s);
    REQUIRE(row.size() == 1);
    CHECK(row[0].col == 0);
    CHECK(row[0].value == doctest::Approx(1.0));
  }
}

TEST_CASE("perfect repair of a uniform two-state belief is all halves") {
  const SparseMatrix reset = perfect_repair_matrix(BeliefState::uniform(2));
  for (int s = 0; s < 2; ++s) {
    for (const SparseMatrix::Entry& e : reset.row(s)) {
      CHECK(e.value == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("minor repair rewinds the deterioration rate, not the damage") {
  const CompiledDbn dbn = rate_dbn();
  const SparseMatrix minor = minor_repair_matrix(dbn);
  const int nd = dbn.num_crack_cells();
  // rate floor
  const auto at_floor = minor.row(dbn.state_index(0, 3));
  REQUIRE(at_floor.size() == 1);
  CHECK(at_floor[0].col == dbn.state_index(0, 3));
  // two rates back
  const auto mid = minor.row(dbn.state_index(10, 7));
  REQUIRE(mid.size() == 1);
  CHECK(mid[0].col == dbn.state_index(8, 7));
  // damage marginal is untouched for a random belief
  RngStream rng(5, 1);
  const BeliefState b = random_belief(rng, dbn.num_states());
  const std::vector<double> after = minor.pre_multiply(b.probs);
  for (int d = 0; d < nd; ++d) {
    double before_mass = 0.0;
    double after_mass = 0.0;
    for (int tau = 0; tau < dbn.num_layers(); ++tau) {
      before_mass += b.probs[dbn.state_index(tau, d)];
      after_mass += after[static_cast<std::size_t>(dbn.state_index(tau, d))];
    }
    CHECK(after_mass == doctest::Approx(before_mass).epsilon(1e-12));
  }
  // failure cells stay absorbing
  const auto failed = minor.row(dbn.state_index(9, nd - 1));
  REQUIRE(failed.size() == 1);
  CHECK(failed[0].col == dbn.state_index(9, nd - 1));
}

TEST_CASE("minor repair is rejected for parametric models") {
  const DiscretizationScheme scheme =
      build_scheme(DbnVariant::parametric, 8, 5, kParams);
  const CompiledDbn dbn = compile_transition(scheme, kParams, 100, 2);
  CHECK_THROWS_AS(minor_repair_matrix(dbn), UnsupportedActionError);
}

TEST_CASE("build_rewards encodes the newly-entering-failure risk") {
  // Hand-built 3-state chain: healthy -> degraded -> failed (absorbing).
  CompiledDbn dbn;
  dbn.scheme = build_scheme(DbnVariant::deterioration_rate, 3, 0, kParams);
  dbn.scheme.rate_count = 1;
  dbn.params = kParams;
  dbn.transition = SparseMatrix::from_dense(
      {{0.9, 0.08, 0.02}, {0.0, 0.7, 0.3}, {0.0, 0.0, 1.0}});
  dbn.initial_belief = BeliefState({1.0, 0.0, 0.0});
  dbn.failure_states = {2};

  std::vector<ActionObservationGroup> groups(2);
  groups[0].name = "DN-NI";
  groups[1].name = "DN-I";
  groups[1].inspection = inspection_type1(1.0);

  CostSpec costs = basic_costs();
  const std::vector<std::vector<double>> rewards =
      build_rewards(dbn, groups, costs);
  REQUIRE(rewards.size() == 2);
  CHECK(rewards[0][0] == doctest::Approx(-1000.0 * 0.02).epsilon(1e-12));
  CHECK(rewards[0][1] == doctest::Approx(-1000.0 * 0.3).epsilon(1e-12));
  CHECK(rewards[0][2] == doctest::Approx(0.0));  // already failed
  // inspection adds its cost uniformly
  for (int s = 0; s < 3; ++s) {
    CHECK(rewards[1][s] == doctest::Approx(rewards[0][s] - 1.0).epsilon(1e-12));
  }
}

TEST_CASE("belief-weighted risk reward equals the one-step failure increment") {
  const CompiledDbn dbn = rate_dbn();
  std::vector<ActionObservationGroup> groups(1);
  groups[0].name = "DN-NI";
  const CostSpec costs = basic_costs();
  const std::vector<std::vector<double>> rewards =
      build_rewards(dbn, groups, costs);
  const BeliefState pushed = forward_step(dbn, dbn.initial_belief, std::nullopt);
  const double increment = failure_probability(dbn, pushed) -
                           failure_probability(dbn, dbn.initial_belief);
  double weighted = 0.0;
  for (int s = 0; s < dbn.num_states(); ++s) {
    weighted += dbn.initial_belief.probs[s] * (-rewards[0][s] / costs.failure_cost);
  }
  CHECK(weighted == doctest::Approx(increment).epsilon(1e-9));
}

TEST_CASE("assembled infinite-horizon model matches the published state count") {
  const DiscretizationScheme scheme =
      build_scheme(DbnVariant::deterioration_rate, 30, 0, kParams);
  const CompiledDbn dbn = compile_transition(scheme, kParams, 500, 3);
  ExperimentConfig config = experiment_preset("R_RI50-R_FR20");
  const DiscretePomdp model =
      assemble_infinite(dbn, experiment_groups(config), basic_costs());
  CHECK(model.num_states == 930);
  CHECK(model.num_actions == 3);
  CHECK(model.num_observations == 2);
  CHECK(validate(model).empty());
}

TEST_CASE("no-observation groups emit uniform observation rows") {
  const CompiledDbn dbn = rate_dbn();
  ExperimentConfig config = experiment_preset("R_RI50-R_FR20");
  const DiscretePomdp model =
      assemble_infinite(dbn, experiment_groups(config), basic_costs());
  const SparseMatrix& z = model.observation[0];  // DN-NI
  for (int s = 0; s < model.num_states; ++s) {
    const auto row = z.row(s);
    REQUIRE(row.size() == 2);
    CHECK(row[0].value == doctest::Approx(0.5));
    CHECK(row[1].value == doctest::Approx(0.5));
  }
}

TEST_CASE("complex grouping yields seven validated actions") {
  const CompiledDbn dbn = rate_dbn();
  ExperimentConfig config = experiment_preset("COMPLEX");
  const DiscretePomdp model =
      assemble_infinite(dbn, experiment_groups(config), basic_costs());
  CHECK(model.num_actions == 7);
  CHECK(model.num_observations == 5);
  CHECK(validate(model).empty());
}

TEST_CASE("finite-horizon layout matches the published augmented sizes") {
  const DiscretizationScheme scheme =
      build_scheme(DbnVariant::deterioration_rate, 30, 0, kParams);
  const CompiledDbn dbn = compile_transition(scheme, kParams, 500, 3);
  const FiniteHorizonLayout layout = finite_layout(dbn, 30);
  CHECK(layout.augmented_states == 14880);
  const FiniteHorizonLayout one_year = finite_layout(dbn, 1);
  CHECK(one_year.augmented_states == 90);

  ExperimentConfig config = experiment_preset("R_RI50-R_FR20");
  const DiscretePomdp model =
      assemble_finite(dbn, experiment_groups(config), basic_costs(), 30);
  CHECK(model.num_states == 14881);
  CHECK(validate(model).empty());
}

TEST_CASE("terminal state is absorbing with zero reward") {
  const CompiledDbn dbn = rate_dbn(8);
  ExperimentConfig config = experiment_preset("R_RI50-R_FR20");
  const DiscretePomdp model =
      assemble_finite(dbn, experiment_groups(config), basic_costs(), 10);
  const int terminal = model.terminal_states.front();
  for (int a = 0; a < model.num_actions; ++a) {
    const auto row = model.transition[a].row(terminal);
    REQUIRE(row.size() == 1);
    CHECK(row[0].col == terminal);
    CHECK(model.reward[a][terminal] == 0.0);
  }
}

TEST_CASE("state budget overflow names the computed size") {
  const CompiledDbn dbn = rate_dbn(8);
  ExperimentConfig config = experiment_preset("R_RI50-R_FR20");
  try {
    assemble_finite(dbn, experiment_groups(config), basic_costs(), 10, 100);
    FAIL("expected StateBudgetError");
  } catch (const StateBudgetError& e) {
    CHECK(e.required_states == 8 * 11 * 12 / 2 + 1);
    CHECK(e.budget_states == 100);
  }
}

TEST_CASE("finite-horizon beliefs stay on the time-consistent layer") {
  const CompiledDbn dbn = rate_dbn(8);
  ExperimentConfig config = experiment_preset("COMPLEX");
  const CostSpec costs = basic_costs();
  const std::vector<ActionObservationGroup> groups = experiment_groups(config);
  const DiscretePomdp model = assemble_finite(dbn, groups, costs, 10);
  const FiniteHorizonLayout layout = finite_layout(dbn, 10);
  for (int action : {0, 1, 3, 6}) {  // deteriorate, inspect, minor, perfect
    BeliefState belief = model.initial_belief;
    for (int step = 1; step <= 10; ++step) {
      const BeliefUpdateResult result = belief_update(model, belief, action, 0);
      REQUIRE(!result.impossible());
      belief = result.posterior;
      for (int s = 0; s < model.num_states; ++s) {
        if (belief.probs[s] > 0.0 && s != layout.terminal_state) {
          CHECK(layout.step_of(s) == step);
        }
      }
    }
  }
}

TEST_CASE("finite-horizon value telescopes the discounted annual risks") {
  // With only a do-nothing group, the finite model's expected discounted
  // reward equals -C_f sum_t gamma^t dPF(t): check one step by hand.
  const CompiledDbn dbn = rate_dbn(8);
  std::vector<ActionObservationGroup> groups(1);
  groups[0].name = "DN-NI";
  CostSpec costs = basic_costs();
  const DiscretePomdp model = assemble_finite(dbn, groups, costs, 10);
  const BeliefState pushed = forward_step(dbn, dbn.initial_belief, std::nullopt);
  const double increment = failure_probability(dbn, pushed) -
                           failure_probability(dbn, dbn.initial_belief);
  const double expected = -costs.failure_cost * increment * costs.discount;
  CHECK(belief_reward(model, model.initial_belief, 0) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("repair groups replace deterioration in their year") {
  const CompiledDbn dbn = rate_dbn(8);
  ExperimentConfig config = experiment_preset("R_RI50-R_FR20");
  const CostSpec costs = basic_costs();
  const DiscretePomdp model =
      assemble_infinite(dbn, experiment_groups(config), costs);
  // After a perfect repair the belief equals the initial belief (healthy
  // mass only; the initial failure tail is ~e^-20).
  BeliefState drifted = forward_step(dbn, dbn.initial_belief, std::nullopt);
  drifted = forward_step(dbn, drifted, std::nullopt);
  const BeliefUpdateResult reset = belief_update(model, drifted, 2, 0);
  REQUIRE(!reset.impossible());
  CHECK(reset.posterior.l1_distance(dbn.initial_belief) < 1e-6);
}
