#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "implan/pomdp.hpp"

namespace implan {

struct SolverConfig {
  double time_budget_seconds = 120.0;
  double target_gap_abs = 1e-6;
  /// Relative target gap, scaled by |lower bound at the initial belief|.
  double target_gap_rel = 0.01;
  enum class Strategy {
    gap_driven,        ///< descend the search tree toward the largest gaps
    random_reachable,  ///< batch backups over a sampled reachable set
  };
  Strategy strategy = Strategy::gap_driven;
  /// Sawtooth point budget for the upper bound.
  int max_belief_points = 20000;
  /// random_reachable: size of the sampled belief set.
  int reachable_set_size = 2000;
  /// random_reachable: walk depth when sampling beliefs.
  int sample_depth = 30;
  int backup_batch = 1;
  /// Bottom-up backup passes over each sampled path (gap-driven strategy).
  int backup_passes = 2;
  double pruning_tol = 1e-9;
  std::uint64_t seed = 0;
  std::int64_t max_iterations = -1;  ///< < 0: no iteration cap
  int max_depth = 200;
};

/// Belief with explicit support, the solver's working representation.
struct SparseBelief {
  std::vector<int> index;
  std::vector<double> value;

  static SparseBelief from_dense(const BeliefState& belief);
  BeliefState to_dense(int num_states) const;
  std::uint64_t fingerprint() const;
};

struct SawtoothPoint {
  SparseBelief belief;
  double value = 0.0;
  double corner_dot = 0.0;  ///< corner value at this belief, cached
};

/// Lower bound (alpha vectors) and sawtooth upper bound of the optimal value.
class BoundPair {
 public:
  AlphaVectorSet lower;
  std::vector<double> corner_values;  ///< fully-observable MDP values
  std::vector<SawtoothPoint> points;
  double pruning_tol = 1e-9;

  double lower_value_at(const BeliefState& belief) const;
  double upper_value_at(const BeliefState& belief) const;
  double lower_value_at(const SparseBelief& belief) const;
  double upper_value_at(const SparseBelief& belief) const;
  double gap_at(const BeliefState& belief) const;
  /// Action of the maximizing lower-bound vector.
  int lower_best_action(const SparseBelief& belief) const;
};

struct BoundInitializationError : std::runtime_error {
  explicit BoundInitializationError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Lower bound from the best fixed-action policy, upper bound from the
/// fully-observable MDP solved by value iteration. Throws
/// BoundInitializationError when value iteration cannot converge
/// (discount 1 without terminal states).
BoundPair initialize_bounds(const DiscretePomdp& model);

/// Exact point-based Bellman backup at one belief; improves the lower bound
/// with one new alpha vector and the upper bound with one sawtooth point.
void backup(const DiscretePomdp& model, const BeliefState& belief,
            BoundPair& bounds);

struct AnytimeRecord {
  double seconds = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t backups = 0;
};

struct SolveResult {
  BoundPair bounds;
  std::vector<AnytimeRecord> trace;
  double lower_at_initial = 0.0;
  double upper_at_initial = 0.0;
  std::int64_t backups = 0;
  double seconds = 0.0;
  bool converged = false;
  /// Budget ran out before a single backup happened.
  bool exhausted_before_backup = false;
};

SolveResult solve(const DiscretePomdp& model, const SolverConfig& config);

/// Stationary policy carried by the lower-bound alpha vectors.
class Policy {
 public:
  explicit Policy(AlphaVectorSet alphas)
      : alphas_(std::make_shared<const AlphaVectorSet>(std::move(alphas))) {}

  int action(const BeliefState& belief) const {
    return value_at(*alphas_, belief).action;
  }
  const AlphaVectorSet& alphas() const { return *alphas_; }
  std::shared_ptr<const AlphaVectorSet> shared_alphas() const { return alphas_; }

 private:
  std::shared_ptr<const AlphaVectorSet> alphas_;
};

Policy extract_policy(const BoundPair& bounds);

/// Versioned text persistence of an alpha-vector policy.
void save_policy(const Policy& policy, std::ostream& out);
Policy load_policy(std::istream& in);

}  // namespace implan
