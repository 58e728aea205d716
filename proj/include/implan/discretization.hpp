#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "implan/fatigue.hpp"
#include "implan/pomdp.hpp"
#include "implan/sparse.hpp"

namespace implan {

enum class DbnVariant {
  parametric,          ///< joint state (crack cell, growth-rate cell)
  deterioration_rate,  ///< joint state (crack cell, age-of-deterioration)
};

/// Interval boundaries mapping the continuous crack / growth-rate space to
/// state indices. Boundaries run {0, exp-spaced interior points, +inf}.
struct DiscretizationScheme {
  DbnVariant variant = DbnVariant::deterioration_rate;
  std::vector<double> crack_boundaries;
  std::vector<double> growth_boundaries;  ///< parametric variant only
  int rate_count = 0;                     ///< deterioration-rate variant: horizon+1

  int num_crack_cells() const {
    return static_cast<int>(crack_boundaries.size()) - 1;
  }
  int num_growth_cells() const {
    return growth_boundaries.empty()
               ? 0
               : static_cast<int>(growth_boundaries.size()) - 1;
  }
  /// Layers are growth-rate cells (parametric) or rate steps (rate variant).
  int num_layers() const {
    return variant == DbnVariant::parametric ? num_growth_cells() : rate_count;
  }

  int crack_cell_of(double crack) const;
  int growth_cell_of(double rate) const;
  /// Geometric midpoint; the first cell uses half its upper boundary and the
  /// top (failure) cell its lower boundary.
  double crack_cell_midpoint(int cell) const;
};

/// Exp-spaced boundaries per the published spacing rules. The parametric
/// variant needs growth_cells >= 3; both variants need crack_cells >= 3.
DiscretizationScheme build_scheme(DbnVariant variant, int crack_cells,
                                  int growth_cells,
                                  const CrackGrowthParams& params);

/// Parses scheme names like "DR_d30" or "PAR_K50-d40".
DiscretizationScheme scheme_from_name(const std::string& name,
                                      const CrackGrowthParams& params);

struct CompileReport {
  std::int64_t samples_used = 0;
  std::vector<int> fallback_states;   ///< rows filled by the midpoint map
  std::vector<int> low_count_states;  ///< rows estimated from < 50 samples
  std::string summary() const;
};

/// Compiled do-nothing dynamics over the joint discrete state space.
/// State index = layer * num_crack_cells + crack_cell.
struct CompiledDbn {
  DiscretizationScheme scheme;
  CrackGrowthParams params;
  SparseMatrix transition;
  BeliefState initial_belief;
  std::vector<int> failure_states;
  CompileReport report;

  int num_states() const { return transition.rows(); }
  int num_crack_cells() const { return scheme.num_crack_cells(); }
  int num_layers() const { return scheme.num_layers(); }
  int state_index(int layer, int crack_cell) const {
    return layer * num_crack_cells() + crack_cell;
  }
  int layer_of(int state) const { return state / num_crack_cells(); }
  int crack_cell_of(int state) const { return state % num_crack_cells(); }
  bool is_failure_cell(int crack_cell) const {
    return crack_cell == num_crack_cells() - 1;
  }
};

/// Discretized prior over crack cells (exponential initial crack).
std::vector<double> crack_cell_prior(const DiscretizationScheme& scheme,
                                     const CrackGrowthParams& params);

/// Discretized prior over growth-rate cells, integrated by quadrature over
/// the stress and ln-growth-parameter distributions.
std::vector<double> growth_cell_prior(const DiscretizationScheme& scheme,
                                      const CrackGrowthParams& params);

/// P(combined growth rate <= x) under the parameter priors.
double combined_rate_cdf(const CrackGrowthParams& params, double x);

/// Compiles the one-year do-nothing transition.
///
/// Parametric: every (crack, growth) cell is pushed through one year using a
/// seeded stratified sample of (crack within cell, rate from its truncated
/// prior). Rate variant: transitions are counted from simulated trajectories
/// conditioned on the cell occupied at each age; pass `trajectories` to reuse
/// an existing set (common random numbers with a reference curve), otherwise
/// samples_per_cell * num_crack_cells fresh trajectories are drawn.
CompiledDbn compile_transition(const DiscretizationScheme& scheme,
                               const CrackGrowthParams& params,
                               std::int64_t samples_per_cell,
                               std::uint64_t seed,
                               const TrajectorySet* trajectories = nullptr);

/// Per-state indicator likelihood matrix for an inspection technique,
/// evaluated at crack-cell midpoints. num_columns pads unused indicators
/// with zero columns (0 keeps the natural width).
SparseMatrix indicator_likelihood_matrix(const CompiledDbn& dbn,
                                         const PoiCurve& indicators,
                                         int num_columns = 0);

struct ImpossibleEvidenceError : std::runtime_error {
  ImpossibleEvidenceError()
      : std::runtime_error("forward_step: evidence has zero posterior mass") {}
};

struct DbnEvidence {
  const SparseMatrix* likelihood = nullptr;  ///< states x indicators
  int indicator = 0;
};

/// One forward filtering step: transition push, then an optional Bayes
/// correction. Kept as an independent implementation of the same mathematics
/// as pomdp belief_update so the two can be cross-checked.
BeliefState forward_step(const CompiledDbn& dbn, const BeliefState& belief,
                         const std::optional<DbnEvidence>& evidence);

/// Marginal probability mass on failure states.
double failure_probability(const CompiledDbn& dbn, const BeliefState& belief);

struct ScheduledInspection {
  int year = 0;
  PoiCurve indicators;
  int observed_indicator = 0;  ///< 0 = nothing indicated
};

/// Unrolled cumulative failure-probability series P_F(t), t = 0..years,
/// with evidence applied (and the curve recorded post-update) at each
/// scheduled inspection year.
std::vector<double> unroll_failure_curve(
    const CompiledDbn& dbn, const std::vector<ScheduledInspection>& inspections,
    int years);

/// Mean squared standardized difference between a DBN curve and a Monte
/// Carlo reference curve: both series are standardized by the reference
/// mean and standard deviation, and the squared differences are averaged
/// over the time steps. Throws std::invalid_argument on length mismatch or
/// a zero-variance reference.
double discretization_error(std::span<const double> dbn_curve,
                            std::span<const double> reference_curve);

}  // namespace implan
