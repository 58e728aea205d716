#pragma once

#include <cstdint>
#include <vector>

namespace implan {

/// Random variables and deterministic constants of the fatigue crack-growth
/// model. Crack sizes are in mm, stress in N/mm^2.
struct CrackGrowthParams {
  double ln_growth_mean = -35.2;  ///< mean of ln C (normal)
  double ln_growth_std = 0.5;
  double stress_mean = 70.0;      ///< stress range S (normal)
  double stress_std = 10.0;
  double initial_crack_mean = 1.0;  ///< initial crack d0 (exponential)
  double exponent = 3.5;            ///< deterministic crack-growth exponent m
  double cycles_per_year = 1e6;
  int horizon_years = 30;
  double critical_crack = 20.0;  ///< plate thickness; failure at d >= this

  /// Combined growth rate C * S^m * pi^(m/2) * n; one draw of it fixes the
  /// whole deterioration path of a component.
  double combined_rate(double growth_c, double stress) const;
  /// Combined rate at the parameter means (ln C at its mean, S at its mean).
  double mean_combined_rate() const;

  /// Throws std::invalid_argument when the recursion would be singular
  /// (m == 2) or scales are non-positive.
  void check() const;
};

/// One-year crack advance. Clamps to critical_crack once the closed form
/// blows up or overshoots (failure is absorbing).
/// Throws std::domain_error for non-positive cracks.
double grow_crack(const CrackGrowthParams& params, double crack,
                  double growth_c, double stress);

/// Same recursion expressed through the combined growth rate.
double grow_crack_rate(const CrackGrowthParams& params, double crack,
                       double combined_rate);

/// Exponential probability-of-detection curve PoD(d) = plateau * (1 - e^(-d/scale)).
struct PodCurve {
  double scale = 8.0;
  double plateau = 1.0;
};

double pod_eval(const PodCurve& curve, double crack);

/// Ordered detection boundaries partitioning damage into k+1 indicators.
/// Indicator 0 is "nothing indicated"; higher indicators mean more damage.
struct PoiCurve {
  std::vector<PodCurve> boundaries;

  int num_indicators() const { return static_cast<int>(boundaries.size()) + 1; }
  /// Throws std::invalid_argument unless boundary scales strictly increase.
  void check() const;
};

/// Probability of each indicator at crack size d; entries sum to 1.
std::vector<double> poi_eval(const PoiCurve& curve, double crack);

/// Sampled crack paths, one row per component, columns t = 0..horizon.
/// Values are clamped at critical_crack after failure.
class TrajectorySet {
 public:
  TrajectorySet(CrackGrowthParams params, std::int64_t num_samples);

  const CrackGrowthParams& params() const { return params_; }
  std::int64_t num_samples() const { return num_samples_; }
  int years() const { return params_.horizon_years; }

  double crack_at(std::int64_t sample, int year) const {
    return crack_[static_cast<std::size_t>(sample) *
                      static_cast<std::size_t>(years() + 1) +
                  static_cast<std::size_t>(year)];
  }
  void set_path(std::int64_t sample, const double* path);

  /// First year with crack >= critical_crack, or horizon+1 if never.
  int failure_year(std::int64_t sample) const;

 private:
  CrackGrowthParams params_;
  std::int64_t num_samples_ = 0;
  std::vector<float> crack_;
};

/// Crude Monte Carlo over (ln C, S, d0); each sample draws the time-invariant
/// parameters once and iterates the yearly recursion. Per-sample RNG
/// substreams keep the result identical for any worker count.
TrajectorySet sample_trajectories(const CrackGrowthParams& params,
                                  std::int64_t num_samples,
                                  std::uint64_t seed);

/// A recorded inspection: year, quality curve, and outcome.
struct InspectionRecord {
  int year = 0;
  PodCurve pod;
  bool detected = false;
};

struct FailureCurve {
  /// Cumulative failure probability per year, index 0..horizon.
  std::vector<double> probability;
  double effective_sample_size = 0.0;
  /// Set when the effective sample size fell below the configured floor.
  bool degenerate = false;
};

/// Weighted cumulative failure probability conditioned on inspection
/// outcomes. Each recorded outcome multiplies the sample weights from its
/// inspection year onward (filtering semantics).
FailureCurve conditional_failure_curve(
    const TrajectorySet& trajectories,
    const std::vector<InspectionRecord>& inspections,
    double ess_floor = 100.0);

}  // namespace implan
