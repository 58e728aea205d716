#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "implan/pomdp.hpp"
#include "implan/rng.hpp"

using namespace implan;

namespace {

DiscretePomdp two_state_model() {
  // T = [[0.7, 0.3], [0, 1]], detection likelihood (0.1, 1 - e^{-1}).
  DiscretePomdp model;
  model.num_states = 2;
  model.num_actions = 1;
  model.num_observations = 2;
  model.transition.push_back(SparseMatrix::from_dense({{0.7, 0.3}, {0.0, 1.0}}));
  const double detect_hi = 1.0 - std::exp(-1.0);
  model.observation.push_back(SparseMatrix::from_dense(
      {{1.0 - 0.1, 0.1}, {1.0 - detect_hi, detect_hi}}));
  model.reward.push_back({0.0, 0.0});
  model.discount = 0.95;
  model.initial_belief = BeliefState({1.0, 0.0});
  return model;
}

DiscretePomdp random_model(RngStream& rng, int states, int actions, int obs) {
  DiscretePomdp model;
  model.num_states = states;
  model.num_actions = actions;
  model.num_observations = obs;
  for (int a = 0; a < actions; ++a) {
    std::vector<std::vector<double>> t(static_cast<std::size_t>(states),
                                       std::vector<double>(states));
    std::vector<std::vector<double>> z(static_cast<std::size_t>(states),
                                       std::vector<double>(obs));
    std::vector<double> r(static_cast<std::size_t>(states));
    for (int s = 0; s < states; ++s) {
      double t_sum = 0.0;
      for (int s2 = 0; s2 < states; ++s2) {
        t[s][s2] = rng.next_open_double();
        t_sum += t[s][s2];
      }
      for (int s2 = 0; s2 < states; ++s2) {
        t[s][s2] /= t_sum;
      }
      double z_sum = 0.0;
      for (int o = 0; o < obs; ++o) {
        z[s][o] = rng.next_open_double();
        z_sum += z[s][o];
      }
      for (int o = 0; o < obs; ++o) {
        z[s][o] /= z_sum;
      }
      r[s] = -10.0 * rng.next_double();
    }
    model.transition.push_back(SparseMatrix::from_dense(t));
    model.observation.push_back(SparseMatrix::from_dense(z));
    model.reward.push_back(std::move(r));
  }
  std::vector<double> b(static_cast<std::size_t>(states));
  double sum = 0.0;
  for (double& p : b) {
    p = rng.next_open_double();
    sum += p;
  }
  for (double& p : b) {
    p /= sum;
  }
  model.initial_belief = BeliefState(std::move(b));
  model.discount = 0.95;
  return model;
}

}  // namespace

TEST_CASE("belief_update leaves the belief unchanged under identity dynamics") {
  DiscretePomdp model;
  model.num_states = 3;
  model.num_actions = 1;
  model.num_observations = 4;
  model.transition.push_back(SparseMatrix::identity(3));
  model.observation.push_back(SparseMatrix::from_dense(
      {{0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}}));
  model.reward.push_back({0, 0, 0});
  model.discount = 0.9;
  model.initial_belief = BeliefState({0.5, 0.3, 0.2});

  const BeliefState b({0.6, 0.1, 0.3});
  const BeliefUpdateResult result = belief_update(model, b, 0, 2);
  REQUIRE(!result.impossible());
  CHECK(result.probability == doctest::Approx(0.25).epsilon(1e-12));
  for (int s = 0; s < 3; ++s) {
    CHECK(result.posterior.probs[s] ==
          doctest::Approx(b.probs[s]).epsilon(1e-12));
  }
}

TEST_CASE("belief_update propagates a point mass deterministically") {
  DiscretePomdp model;
  model.num_states = 2;
  model.num_actions = 1;
  model.num_observations = 2;
  model.transition.push_back(SparseMatrix::from_dense({{0.0, 1.0}, {0.0, 1.0}}));
  model.observation.push_back(SparseMatrix::from_dense({{0.5, 0.5}, {0.1, 0.9}}));
  model.reward.push_back({0, 0});
  model.discount = 0.9;
  model.initial_belief = BeliefState({1.0, 0.0});

  const BeliefUpdateResult result =
      belief_update(model, BeliefState({1.0, 0.0}), 0, 1);
  CHECK(result.probability == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(result.posterior.probs[0] == doctest::Approx(0.0));
  CHECK(result.posterior.probs[1] == doctest::Approx(1.0));
}

TEST_CASE("belief_update matches the filtering identity on a 2-state model") {
  const DiscretePomdp model = two_state_model();
  // Direct evaluation of the update rule: predicted (0.7, 0.3), detection
  // likelihoods (0.1, 0.6321...).
  const double detect_hi = 1.0 - std::exp(-1.0);
  const double w0 = 0.7 * 0.1;
  const double w1 = 0.3 * detect_hi;
  const BeliefUpdateResult result =
      belief_update(model, BeliefState({1.0, 0.0}), 0, 1);
  REQUIRE(!result.impossible());
  CHECK(result.probability == doctest::Approx(w0 + w1).epsilon(1e-14));
  CHECK(result.posterior.probs[0] ==
        doctest::Approx(w0 / (w0 + w1)).epsilon(1e-14));
  CHECK(result.posterior.probs[1] ==
        doctest::Approx(w1 / (w0 + w1)).epsilon(1e-14));
  // Spot values from the hand evaluation.
  CHECK(result.posterior.probs[0] == doctest::Approx(0.2697).epsilon(2e-4));
  CHECK(result.posterior.probs[1] == doctest::Approx(0.7303).epsilon(2e-4));
}

TEST_CASE("impossible observation reports a zero normalizer") {
  DiscretePomdp model;
  model.num_states = 2;
  model.num_actions = 1;
  model.num_observations = 2;
  model.transition.push_back(SparseMatrix::identity(2));
  model.observation.push_back(SparseMatrix::from_dense({{1.0, 0.0}, {1.0, 0.0}}));
  model.reward.push_back({0, 0});
  model.initial_belief = BeliefState({0.5, 0.5});
  const BeliefUpdateResult result =
      belief_update(model, BeliefState({0.5, 0.5}), 0, 1);
  CHECK(result.impossible());
  CHECK(result.probability == 0.0);
}

TEST_CASE("normalizers over all observations sum to one") {
  RngStream rng(7771, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const DiscretePomdp model = random_model(rng, 5, 2, 3);
    std::vector<double> b(5);
    double sum = 0.0;
    for (double& p : b) {
      p = rng.next_open_double();
      sum += p;
    }
    for (double& p : b) {
      p /= sum;
    }
    for (int a = 0; a < model.num_actions; ++a) {
      double total = 0.0;
      for (int o = 0; o < model.num_observations; ++o) {
        total += belief_update(model, BeliefState(b), a, o).probability;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("belief_update posterior is a valid belief when possible") {
  RngStream rng(555, 3);
  const DiscretePomdp model = random_model(rng, 6, 3, 4);
  for (int a = 0; a < 3; ++a) {
    for (int o = 0; o < 4; ++o) {
      const BeliefUpdateResult result =
          belief_update(model, model.initial_belief, a, o);
      if (!result.impossible()) {
        CHECK(result.posterior.is_valid(1e-9));
      }
    }
  }
}

TEST_CASE("belief_reward point mass, mean and constant-reward cases") {
  DiscretePomdp model;
  model.num_states = 2;
  model.num_actions = 2;
  model.num_observations = 1;
  for (int a = 0; a < 2; ++a) {
    model.transition.push_back(SparseMatrix::identity(2));
    model.observation.push_back(SparseMatrix::from_dense({{1.0}, {1.0}}));
  }
  model.reward = {{-4.0, -6.0}, {-50.0, -50.0}};
  model.initial_belief = BeliefState({1.0, 0.0});

  CHECK(belief_reward(model, BeliefState({1.0, 0.0}), 0) == doctest::Approx(-4.0));
  CHECK(belief_reward(model, BeliefState({0.5, 0.5}), 0) == doctest::Approx(-5.0));
  CHECK(belief_reward(model, BeliefState({0.8, 0.2}), 1) == doctest::Approx(-50.0));
}

TEST_CASE("belief_reward is linear in the belief") {
  RngStream rng(99, 1);
  const DiscretePomdp model = random_model(rng, 4, 2, 2);
  const BeliefState b1({0.7, 0.1, 0.1, 0.1});
  const BeliefState b2({0.1, 0.2, 0.3, 0.4});
  for (double lambda : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    BeliefState mix;
    for (int s = 0; s < 4; ++s) {
      mix.probs.push_back(lambda * b1.probs[s] + (1 - lambda) * b2.probs[s]);
    }
    for (int a = 0; a < 2; ++a) {
      const double expected = lambda * belief_reward(model, b1, a) +
                              (1 - lambda) * belief_reward(model, b2, a);
      CHECK(std::abs(belief_reward(model, mix, a) - expected) < 1e-12);
    }
  }
}

TEST_CASE("value_at picks the maximizing vector with deterministic ties") {
  AlphaVectorSet set;
  set.vectors.push_back({{0.0, 0.0}, 4});
  CHECK(value_at(set, BeliefState({0.5, 0.5})).value == doctest::Approx(0.0));
  CHECK(value_at(set, BeliefState({0.5, 0.5})).action == 4);

  AlphaVectorSet corners;
  corners.vectors.push_back({{1.0, 0.0}, 0});
  corners.vectors.push_back({{0.0, 1.0}, 1});
  const ValueAtResult r = value_at(corners, BeliefState({0.3, 0.7}));
  CHECK(r.value == doctest::Approx(0.7));
  CHECK(r.action == 1);

  AlphaVectorSet ties;
  ties.vectors.push_back({{0.5, 0.5}, 2});
  ties.vectors.push_back({{0.5, 0.5}, 3});
  CHECK(value_at(ties, BeliefState({0.4, 0.6})).action == 2);
}

TEST_CASE("value_at throws on an empty set") {
  AlphaVectorSet set;
  CHECK_THROWS_AS(value_at(set, BeliefState({1.0})), UninitializedPolicyError);
}

TEST_CASE("value_at is invariant under permutation away from ties") {
  RngStream rng(11, 0);
  AlphaVectorSet set;
  for (int i = 0; i < 6; ++i) {
    AlphaVector alpha;
    alpha.action = i;
    for (int s = 0; s < 3; ++s) {
      alpha.values.push_back(rng.next_double());
    }
    set.vectors.push_back(std::move(alpha));
  }
  AlphaVectorSet reversed;
  for (auto it = set.vectors.rbegin(); it != set.vectors.rend(); ++it) {
    reversed.vectors.push_back(*it);
  }
  const BeliefState b({0.2, 0.5, 0.3});
  CHECK(value_at(set, b).value == doctest::Approx(value_at(reversed, b).value));
}

TEST_CASE("validate accepts a well-formed model") {
  const DiscretePomdp model = two_state_model();
  CHECK(validate(model).empty());
}

TEST_CASE("validate reports a transition row deficit with its location") {
  DiscretePomdp model = two_state_model();
  model.transition[0] = SparseMatrix::from_dense({{0.68, 0.3}, {0.0, 1.0}});
  const std::vector<Violation> violations = validate(model);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].where == "transition");
  CHECK(violations[0].action == 0);
  CHECK(violations[0].row == 0);
  CHECK(violations[0].deviation == doctest::Approx(-0.02).epsilon(1e-9));
}

TEST_CASE("validate flags a negative initial-belief entry") {
  DiscretePomdp model = two_state_model();
  model.initial_belief = BeliefState({1.2, -0.2});
  const std::vector<Violation> violations = validate(model);
  REQUIRE(!violations.empty());
  bool found = false;
  for (const Violation& v : violations) {
    found = found || (v.where == "initial_belief" && v.row == 1);
  }
  CHECK(found);
}

TEST_CASE("validate flags discount 1 on infinite-horizon models") {
  DiscretePomdp model = two_state_model();
  model.discount = 1.0;
  CHECK(!validate(model).empty());
  model.terminal_states = {1};
  CHECK(validate(model).empty());
}
