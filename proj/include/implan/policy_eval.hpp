#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "implan/im_builder.hpp"
#include "implan/pomdp.hpp"

namespace implan {

struct CostTerms {
  double inspection = 0.0;
  double repair = 0.0;
  double failure_risk = 0.0;

  double total() const { return inspection + repair + failure_risk; }
  CostTerms& operator+=(const CostTerms& other);
};

struct YearRecord {
  int year = 0;
  int group = 0;
  int indicator = -1;  ///< -1 when the group carries no inspection
  int reaction = -1;   ///< immediate maintenance index, -1 for none
  bool maintenance = false;  ///< the group or a reaction repaired this year
  double failure_probability = 0.0;  ///< belief failure mass after the year
  CostTerms costs;  ///< discounted cost contributions of this year
};

struct EpisodeTrace {
  std::int64_t episode = 0;
  std::vector<YearRecord> years;
  CostTerms totals;
};

/// Immediate same-year maintenance available to rule-based policies
/// (applied after the observation, on top of the yearly group).
struct Reaction {
  std::string name;
  SparseMatrix transition;
  double cost = 0.0;
};

/// Policy interface driven by the episode engine. Episodes within one worker
/// chunk run sequentially on one clone, so drivers may keep per-episode
/// state as long as begin_episode resets it.
class PolicyDriver {
 public:
  virtual ~PolicyDriver() = default;
  virtual std::unique_ptr<PolicyDriver> clone() const = 0;
  virtual void begin_episode() {}
  /// Group to execute during the coming year (year runs 1..horizon).
  virtual int select_group(int year, const BeliefState& belief) = 0;
  /// Reaction index fired right after the year's observation, -1 for none.
  virtual int react(int /*year*/, const BeliefState& /*posterior*/,
                    int /*indicator*/) {
    return -1;
  }
};

/// Stationary policy defined by an alpha-vector set.
class AlphaPolicyDriver : public PolicyDriver {
 public:
  explicit AlphaPolicyDriver(AlphaVectorSet alphas)
      : alphas_(std::make_shared<const AlphaVectorSet>(std::move(alphas))) {}
  explicit AlphaPolicyDriver(std::shared_ptr<const AlphaVectorSet> alphas)
      : alphas_(std::move(alphas)) {}
  std::unique_ptr<PolicyDriver> clone() const override {
    return std::make_unique<AlphaPolicyDriver>(alphas_);
  }
  int select_group(int year, const BeliefState& belief) override;

 private:
  std::shared_ptr<const AlphaVectorSet> alphas_;
};

enum class RiskMode {
  belief_accrual,   ///< bill annual failure-probability increments
  sampled_failure,  ///< bill the failure cost once when the sampled state fails
};

struct SimulationOptions {
  std::int64_t num_episodes = 10000;
  int horizon = 30;
  std::uint64_t seed = 1;
  int max_traces = 0;
  RiskMode risk_mode = RiskMode::belief_accrual;
  /// Draw observations from the predicted belief instead of the sampled
  /// ground-truth state (single-branch evaluation semantics).
  bool observations_from_belief = false;
  /// Update the tracked belief as if indicator 0 had been observed,
  /// whatever was drawn (single-branch evaluation semantics).
  bool force_no_detection_update = false;
  std::vector<Reaction> reactions;
};

struct SimulationResult {
  double mean_cost = 0.0;
  double ci95 = 0.0;
  CostTerms mean_terms;
  std::vector<EpisodeTrace> traces;
  /// Yearly group choices; sums to num_episodes * horizon.
  std::vector<std::int64_t> group_histogram;
  std::vector<std::int64_t> reaction_histogram;
  std::int64_t episodes = 0;
};

/// Monte Carlo policy evaluation on the assembled model. Per-episode RNG
/// substreams and fixed-chunk reductions keep results identical for any
/// worker count.
SimulationResult simulate_policy(const DiscretePomdp& model,
                                 const std::vector<ActionObservationGroup>& groups,
                                 const CostSpec& costs, PolicyDriver& driver,
                                 const SimulationOptions& options);

/// Plot-ready columns extracted from one episode.
struct RealizationSeries {
  std::vector<int> year;
  std::vector<double> failure_probability;
  std::vector<int> group;
  std::vector<int> maintenance_years;  ///< repair group or reaction fired
  std::vector<int> detection_years;    ///< inspection indicator >= 1
  std::vector<int> no_detection_years; ///< inspection indicator == 0
};

RealizationSeries realization_report(const EpisodeTrace& trace);

}  // namespace implan
