#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "implan/sparse.hpp"

namespace implan {

/// Row-sum tolerance for stochastic matrices and beliefs.
inline constexpr double kStochasticTol = 1e-9;

/// Probability distribution over states; the filtering and planning object.
struct BeliefState {
  std::vector<double> probs;

  BeliefState() = default;
  explicit BeliefState(std::vector<double> p) : probs(std::move(p)) {}
  static BeliefState point_mass(int num_states, int state);
  static BeliefState uniform(int num_states);

  int size() const { return static_cast<int>(probs.size()); }
  double sum() const;
  /// Rescales to sum 1; throws std::domain_error on non-positive mass.
  void normalize();
  double l1_distance(const BeliefState& other) const;
  bool is_valid(double tol = kStochasticTol) const;
};

/// One supporting hyperplane of the value function, tagged with its action.
struct AlphaVector {
  std::vector<double> values;
  int action = 0;
};

/// Piecewise-linear value-function lower bound: pointwise max over vectors.
struct AlphaVectorSet {
  std::vector<AlphaVector> vectors;

  bool empty() const { return vectors.empty(); }
  std::size_t size() const { return vectors.size(); }
};

/// Discrete POMDP as sparse stochastic matrices plus an initial belief.
///
/// transition[a] is row-stochastic S x S; observation[a] is row-stochastic
/// S x O indexed by the post-transition state; reward[a] is a dense state
/// reward vector.
struct DiscretePomdp {
  int num_states = 0;
  int num_actions = 0;
  int num_observations = 0;
  std::vector<SparseMatrix> transition;
  std::vector<SparseMatrix> observation;
  std::vector<std::vector<double>> reward;
  double discount = 1.0;
  BeliefState initial_belief;
  std::vector<int> failure_states;
  std::vector<int> terminal_states;
};

struct BeliefUpdateResult {
  BeliefState posterior;
  /// Normalizer P(o | b, a); zero means the observation is impossible.
  double probability = 0.0;

  bool impossible() const { return !(probability > 0.0); }
};

/// Bayes filter step: b'(s') ~ P(o|s',a) sum_s P(s'|s,a) b(s).
///
/// On an impossible observation the posterior is left empty and
/// probability is 0; the caller decides whether to abort or resample.
BeliefUpdateResult belief_update(const DiscretePomdp& model,
                                 const BeliefState& belief, int action,
                                 int observation);

/// Expected immediate reward sum_s b(s) R(s,a).
double belief_reward(const DiscretePomdp& model, const BeliefState& belief,
                     int action);

struct UninitializedPolicyError : std::logic_error {
  UninitializedPolicyError()
      : std::logic_error("value_at: empty alpha-vector set") {}
};

struct ValueAtResult {
  double value = 0.0;
  int action = 0;
  std::size_t vector_index = 0;
};

/// Max over vectors of alpha . b; ties break toward the lowest vector index.
ValueAtResult value_at(const AlphaVectorSet& set, const BeliefState& belief);

struct Violation {
  std::string where;   // "transition", "observation", ...
  int action = -1;     // -1 when not action-specific
  int row = -1;        // -1 when not row-specific
  double deviation = 0.0;
  std::string message;
};

/// Empty result iff every DiscretePomdp invariant holds.
std::vector<Violation> validate(const DiscretePomdp& model);

}  // namespace implan
