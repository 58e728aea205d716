#include "implan/fatigue.hpp"

#include <cmath>
#include <stdexcept>

#include "implan/rng.hpp"
#include "implan/threading.hpp"

namespace implan {
namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

double CrackGrowthParams::combined_rate(double growth_c, double stress) const {
  return growth_c * std::pow(stress, exponent) *
         std::pow(kPi, exponent / 2.0) * cycles_per_year;
}

double CrackGrowthParams::mean_combined_rate() const {
  return combined_rate(std::exp(ln_growth_mean), stress_mean);
}

void CrackGrowthParams::check() const {
  if (exponent == 2.0) {
    throw std::invalid_argument("CrackGrowthParams: exponent 2 is singular");
  }
  if (!(critical_crack > 0.0)) {
    throw std::invalid_argument("CrackGrowthParams: critical_crack must be > 0");
  }
  if (!(ln_growth_std > 0.0) || !(stress_std > 0.0) ||
      !(initial_crack_mean > 0.0)) {
    throw std::invalid_argument("CrackGrowthParams: scales must be > 0");
  }
  if (horizon_years < 1) {
    throw std::invalid_argument("CrackGrowthParams: horizon must be >= 1");
  }
}

double grow_crack_rate(const CrackGrowthParams& params, double crack,
                       double combined_rate) {
  if (!(crack > 0.0)) {
    throw std::domain_error("grow_crack: crack size must be positive");
  }
  if (crack >= params.critical_crack) {
    return params.critical_crack;  // already failed, absorbing
  }
  const double m = params.exponent;
  const double base =
      (1.0 - m / 2.0) * combined_rate + std::pow(crack, 1.0 - m / 2.0);
  if (!(base > 0.0)) {
    return params.critical_crack;  // growth past the closed form's domain
  }
  const double next = std::pow(base, 2.0 / (2.0 - m));
  if (!(next < params.critical_crack) || !std::isfinite(next)) {
    return params.critical_crack;
  }
  return next;
}

double grow_crack(const CrackGrowthParams& params, double crack,
                  double growth_c, double stress) {
  return grow_crack_rate(params, crack, params.combined_rate(growth_c, stress));
}

double pod_eval(const PodCurve& curve, double crack) {
  if (crack <= 0.0) {
    return 0.0;
  }
  return curve.plateau * (1.0 - std::exp(-crack / curve.scale));
}

void PoiCurve::check() const {
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (!(boundaries[i].scale > 0.0)) {
      throw std::invalid_argument("PoiCurve: boundary scale must be > 0");
    }
    if (i > 0 && !(boundaries[i].scale > boundaries[i - 1].scale)) {
      throw std::invalid_argument(
          "PoiCurve: boundary scales must strictly increase");
    }
  }
}

std::vector<double> poi_eval(const PoiCurve& curve, double crack) {
  // P(indicator >= j) is the j-th boundary's detection probability; scales
  // increase with j so the exceedance probabilities are non-increasing.
  const int k = static_cast<int>(curve.boundaries.size());
  std::vector<double> probs(static_cast<std::size_t>(k) + 1, 0.0);
  double above_prev = 1.0;
  for (int j = 0; j < k; ++j) {
    const double above =
        pod_eval(curve.boundaries[static_cast<std::size_t>(j)], crack);
    probs[static_cast<std::size_t>(j)] = above_prev - above;
    above_prev = above;
  }
  probs[static_cast<std::size_t>(k)] = above_prev;
  return probs;
}

TrajectorySet::TrajectorySet(CrackGrowthParams params, std::int64_t num_samples)
    : params_(params), num_samples_(num_samples) {
  if (num_samples < 1) {
    throw std::invalid_argument("TrajectorySet: num_samples must be >= 1");
  }
  crack_.assign(static_cast<std::size_t>(num_samples) *
                    static_cast<std::size_t>(params_.horizon_years + 1),
                0.0f);
}

void TrajectorySet::set_path(std::int64_t sample, const double* path) {
  const std::size_t base = static_cast<std::size_t>(sample) *
                           static_cast<std::size_t>(years() + 1);
  for (int t = 0; t <= years(); ++t) {
    crack_[base + static_cast<std::size_t>(t)] = static_cast<float>(path[t]);
  }
}

int TrajectorySet::failure_year(std::int64_t sample) const {
  for (int t = 0; t <= years(); ++t) {
    if (crack_at(sample, t) >= params_.critical_crack) {
      return t;
    }
  }
  return years() + 1;
}

TrajectorySet sample_trajectories(const CrackGrowthParams& params,
                                  std::int64_t num_samples,
                                  std::uint64_t seed) {
  params.check();
  TrajectorySet set(params, num_samples);
  const int years = params.horizon_years;
  parallel_for(num_samples, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    const double growth_c =
        std::exp(params.ln_growth_mean + params.ln_growth_std * rng.next_normal());
    double stress = params.stress_mean + params.stress_std * rng.next_normal();
    while (stress <= 0.0) {  // ~7 sigma; keeps S^m real
      stress = params.stress_mean + params.stress_std * rng.next_normal();
    }
    const double rate = params.combined_rate(growth_c, stress);
    std::vector<double> path(static_cast<std::size_t>(years) + 1);
    double crack = rng.next_exponential(params.initial_crack_mean);
    if (crack <= 0.0 || crack >= params.critical_crack) {
      crack = std::min(std::max(crack, 1e-12), params.critical_crack);
    }
    path[0] = crack;
    for (int t = 1; t <= years; ++t) {
      crack = grow_crack_rate(params, crack, rate);
      path[static_cast<std::size_t>(t)] = crack;
    }
    set.set_path(i, path.data());
  });
  return set;
}

FailureCurve conditional_failure_curve(
    const TrajectorySet& trajectories,
    const std::vector<InspectionRecord>& inspections, double ess_floor) {
  const int years = trajectories.years();
  for (const InspectionRecord& rec : inspections) {
    if (rec.year < 0 || rec.year > years) {
      throw std::invalid_argument(
          "conditional_failure_curve: inspection year outside horizon");
    }
  }
  const std::int64_t n = trajectories.num_samples();
  std::vector<double> weight(static_cast<std::size_t>(n), 1.0);
  FailureCurve curve;
  curve.probability.assign(static_cast<std::size_t>(years) + 1, 0.0);
  // Weights change only at inspection years, so years are processed in
  // order with a fixed summation order for reproducibility.
  for (int t = 0; t <= years; ++t) {
    for (const InspectionRecord& rec : inspections) {
      if (rec.year != t) {
        continue;
      }
      for (std::int64_t i = 0; i < n; ++i) {
        const double pod = pod_eval(rec.pod, trajectories.crack_at(i, t));
        weight[static_cast<std::size_t>(i)] *= rec.detected ? pod : 1.0 - pod;
      }
    }
    double total = 0.0;
    double failed = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double w = weight[static_cast<std::size_t>(i)];
      total += w;
      if (trajectories.crack_at(i, t) >= trajectories.params().critical_crack) {
        failed += w;
      }
    }
    if (!(total > 0.0)) {
      curve.degenerate = true;
      curve.effective_sample_size = 0.0;
      return curve;
    }
    curve.probability[static_cast<std::size_t>(t)] = failed / total;
  }
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double w = weight[static_cast<std::size_t>(i)];
    sum_w += w;
    sum_w2 += w * w;
  }
  curve.effective_sample_size = sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
  curve.degenerate = curve.effective_sample_size < ess_floor;
  return curve;
}

}  // namespace implan
