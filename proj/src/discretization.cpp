#include "implan/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "implan/rng.hpp"
#include "implan/threading.hpp"

namespace implan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> exp_spaced_boundaries(double interior_lo, double interior_hi,
                                          int cells) {
  // {0, exp-spaced interior points, +inf}; cells-1 interior points span
  // [interior_lo, interior_hi] uniformly in log space.
  std::vector<double> bounds;
  bounds.reserve(static_cast<std::size_t>(cells) + 1);
  bounds.push_back(0.0);
  const int interior = cells - 1;
  const double lo = std::log(interior_lo);
  const double hi = std::log(interior_hi);
  for (int i = 0; i < interior; ++i) {
    const double f = interior == 1 ? 0.0
                                   : static_cast<double>(i) /
                                         static_cast<double>(interior - 1);
    bounds.push_back(std::exp(lo + f * (hi - lo)));
  }
  bounds.push_back(kInf);
  return bounds;
}

int cell_of(const std::vector<double>& bounds, double x) {
  // Cell i covers [bounds[i], bounds[i+1]).
  const auto it = std::upper_bound(bounds.begin(), bounds.end(), x);
  int idx = static_cast<int>(it - bounds.begin()) - 1;
  idx = std::max(idx, 0);
  idx = std::min(idx, static_cast<int>(bounds.size()) - 2);
  return idx;
}

}  // namespace

int DiscretizationScheme::crack_cell_of(double crack) const {
  return cell_of(crack_boundaries, crack);
}

int DiscretizationScheme::growth_cell_of(double rate) const {
  return cell_of(growth_boundaries, rate);
}

double DiscretizationScheme::crack_cell_midpoint(int cell) const {
  const double lo = crack_boundaries[static_cast<std::size_t>(cell)];
  const double hi = crack_boundaries[static_cast<std::size_t>(cell) + 1];
  if (lo == 0.0) {
    return hi / 2.0;
  }
  if (!std::isfinite(hi)) {
    return lo;
  }
  return std::sqrt(lo * hi);
}

DiscretizationScheme build_scheme(DbnVariant variant, int crack_cells,
                                  int growth_cells,
                                  const CrackGrowthParams& params) {
  params.check();
  if (crack_cells < 3) {
    throw std::invalid_argument("build_scheme: need at least 3 crack cells");
  }
  DiscretizationScheme scheme;
  scheme.variant = variant;
  if (variant == DbnVariant::parametric) {
    if (growth_cells < 3) {
      throw std::invalid_argument(
          "build_scheme: parametric variant needs at least 3 growth cells");
    }
    scheme.crack_boundaries =
        exp_spaced_boundaries(1e-1, params.critical_crack, crack_cells);
    scheme.growth_boundaries = exp_spaced_boundaries(1e-5, 1.0, growth_cells);
  } else {
    scheme.crack_boundaries =
        exp_spaced_boundaries(1e-4, params.critical_crack, crack_cells);
    scheme.rate_count = params.horizon_years + 1;
  }
  return scheme;
}

DiscretizationScheme scheme_from_name(const std::string& name,
                                      const CrackGrowthParams& params) {
  // DR_d<cells> or PAR_K<growth>-d<cells>
  auto fail = [&]() -> DiscretizationScheme {
    throw std::invalid_argument("unknown discretization scheme name: " + name);
  };
  if (name.rfind("DR_d", 0) == 0) {
    const int cells = std::atoi(name.c_str() + 4);
    if (cells < 3) {
      return fail();
    }
    return build_scheme(DbnVariant::deterioration_rate, cells, 0, params);
  }
  if (name.rfind("PAR_K", 0) == 0) {
    const std::size_t dash = name.find("-d");
    if (dash == std::string::npos) {
      return fail();
    }
    const int growth = std::atoi(name.substr(5, dash - 5).c_str());
    const int cells = std::atoi(name.c_str() + dash + 2);
    if (growth < 3 || cells < 3) {
      return fail();
    }
    return build_scheme(DbnVariant::parametric, cells, growth, params);
  }
  return fail();
}

std::string CompileReport::summary() const {
  std::ostringstream out;
  out << "samples_used=" << samples_used
      << " fallback_rows=" << fallback_states.size()
      << " low_count_rows=" << low_count_states.size();
  return out.str();
}

std::vector<double> crack_cell_prior(const DiscretizationScheme& scheme,
                                     const CrackGrowthParams& params) {
  const int n = scheme.num_crack_cells();
  std::vector<double> prior(static_cast<std::size_t>(n), 0.0);
  const double mean = params.initial_crack_mean;
  for (int i = 0; i < n; ++i) {
    const double lo = scheme.crack_boundaries[static_cast<std::size_t>(i)];
    const double hi = scheme.crack_boundaries[static_cast<std::size_t>(i) + 1];
    const double upper = std::isfinite(hi) ? std::exp(-hi / mean) : 0.0;
    prior[static_cast<std::size_t>(i)] = std::exp(-lo / mean) - upper;
  }
  double total = 0.0;
  for (double p : prior) {
    total += p;
  }
  for (double& p : prior) {
    p /= total;
  }
  return prior;
}

namespace {

// Stress values are integrated on a fixed Simpson grid truncated to S > 0,
// matching the sampler's resample-if-nonpositive convention.
struct StressGrid {
  std::vector<double> stress;
  std::vector<double> weight;  // Simpson weight * normal pdf, normalized
};

StressGrid make_stress_grid(const CrackGrowthParams& params) {
  constexpr int kIntervals = 1200;  // even
  StressGrid grid;
  const double lo = std::max(1e-9, params.stress_mean - 10.0 * params.stress_std);
  const double hi = params.stress_mean + 10.0 * params.stress_std;
  const double h = (hi - lo) / kIntervals;
  double norm = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double s = lo + h * i;
    const double z = (s - params.stress_mean) / params.stress_std;
    const double pdf = std::exp(-0.5 * z * z);
    const double simpson = (i == 0 || i == kIntervals) ? 1.0
                           : (i % 2 == 1)              ? 4.0
                                                       : 2.0;
    grid.stress.push_back(s);
    grid.weight.push_back(simpson * pdf);
    norm += simpson * pdf;
  }
  for (double& w : grid.weight) {
    w /= norm;
  }
  return grid;
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

}  // namespace

double combined_rate_cdf(const CrackGrowthParams& params, double x) {
  if (!(x > 0.0)) {
    return 0.0;
  }
  static thread_local StressGrid cached_grid;
  static thread_local double cached_key[3] = {0.0, 0.0, 0.0};
  if (cached_grid.stress.empty() || cached_key[0] != params.stress_mean ||
      cached_key[1] != params.stress_std || cached_key[2] != params.exponent) {
    cached_grid = make_stress_grid(params);
    cached_key[0] = params.stress_mean;
    cached_key[1] = params.stress_std;
    cached_key[2] = params.exponent;
  }
  const double ln_const = std::log(params.cycles_per_year) +
                          (params.exponent / 2.0) * std::log(3.14159265358979323846);
  const double ln_x = std::log(x);
  double cdf = 0.0;
  for (std::size_t i = 0; i < cached_grid.stress.size(); ++i) {
    const double ln_c_needed =
        ln_x - ln_const - params.exponent * std::log(cached_grid.stress[i]);
    cdf += cached_grid.weight[i] *
           normal_cdf((ln_c_needed - params.ln_growth_mean) / params.ln_growth_std);
  }
  return cdf;
}

std::vector<double> growth_cell_prior(const DiscretizationScheme& scheme,
                                      const CrackGrowthParams& params) {
  const int n = scheme.num_growth_cells();
  std::vector<double> prior(static_cast<std::size_t>(n), 0.0);
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double hi = scheme.growth_boundaries[static_cast<std::size_t>(i) + 1];
    const double cdf = std::isfinite(hi) ? combined_rate_cdf(params, hi) : 1.0;
    prior[static_cast<std::size_t>(i)] = std::max(0.0, cdf - prev);
    prev = cdf;
  }
  double total = 0.0;
  for (double p : prior) {
    total += p;
  }
  for (double& p : prior) {
    p /= total;
  }
  return prior;
}

namespace {

// Inverse of combined_rate_cdf on a fixed log grid, for truncated-prior
// sampling within a growth cell.
class GrowthRateInverseCdf {
 public:
  explicit GrowthRateInverseCdf(const CrackGrowthParams& params) {
    constexpr int kPoints = 3000;
    const double ln_lo = std::log(1e-9);
    const double ln_hi = std::log(100.0);
    ln_rate_.reserve(kPoints);
    cdf_.reserve(kPoints);
    for (int i = 0; i < kPoints; ++i) {
      const double ln_r =
          ln_lo + (ln_hi - ln_lo) * static_cast<double>(i) / (kPoints - 1);
      ln_rate_.push_back(ln_r);
      cdf_.push_back(combined_rate_cdf(params, std::exp(ln_r)));
    }
  }

  double cdf_at(double rate) const {
    if (!(rate > 0.0)) {
      return 0.0;
    }
    const double ln_r = std::log(rate);
    if (ln_r <= ln_rate_.front()) {
      return 0.0;
    }
    if (ln_r >= ln_rate_.back()) {
      return 1.0;
    }
    const auto it = std::upper_bound(ln_rate_.begin(), ln_rate_.end(), ln_r);
    const std::size_t j = static_cast<std::size_t>(it - ln_rate_.begin());
    const double f = (ln_r - ln_rate_[j - 1]) / (ln_rate_[j] - ln_rate_[j - 1]);
    return cdf_[j - 1] + f * (cdf_[j] - cdf_[j - 1]);
  }

  double invert(double target) const {
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), target);
    if (it == cdf_.begin()) {
      return std::exp(ln_rate_.front());
    }
    if (it == cdf_.end()) {
      return std::exp(ln_rate_.back());
    }
    const std::size_t j = static_cast<std::size_t>(it - cdf_.begin());
    const double denom = cdf_[j] - cdf_[j - 1];
    const double f = denom > 0.0 ? (target - cdf_[j - 1]) / denom : 0.0;
    return std::exp(ln_rate_[j - 1] + f * (ln_rate_[j] - ln_rate_[j - 1]));
  }

 private:
  std::vector<double> ln_rate_;
  std::vector<double> cdf_;
};

CompiledDbn compile_parametric(const DiscretizationScheme& scheme,
                               const CrackGrowthParams& params,
                               std::int64_t samples_per_cell,
                               std::uint64_t seed) {
  const int nd = scheme.num_crack_cells();
  const int nk = scheme.num_growth_cells();
  const int num_states = nd * nk;
  const int grid_side =
      std::max(2, static_cast<int>(std::llround(std::sqrt(
                      static_cast<double>(samples_per_cell)))));
  const GrowthRateInverseCdf inverse_cdf(params);

  CompiledDbn dbn;
  dbn.scheme = scheme;
  dbn.params = params;
  dbn.transition = SparseMatrix(num_states, num_states);
  dbn.report.samples_used = static_cast<std::int64_t>(grid_side) * grid_side *
                            static_cast<std::int64_t>(num_states);

  std::vector<std::vector<SparseMatrix::Entry>> rows(
      static_cast<std::size_t>(num_states));
  parallel_for(num_states, [&](std::int64_t state) {
    const int k = static_cast<int>(state) / nd;
    const int d = static_cast<int>(state) % nd;
    auto& row = rows[static_cast<std::size_t>(state)];
    if (d == nd - 1) {  // failure cell, absorbing
      row.push_back({static_cast<int>(state), 1.0});
      return;
    }
    const double d_lo = scheme.crack_boundaries[static_cast<std::size_t>(d)];
    const double d_hi = scheme.crack_boundaries[static_cast<std::size_t>(d) + 1];
    const double k_lo = scheme.growth_boundaries[static_cast<std::size_t>(k)];
    const double k_hi = scheme.growth_boundaries[static_cast<std::size_t>(k) + 1];
    const double cdf_lo = inverse_cdf.cdf_at(k_lo);
    const double cdf_hi = std::isfinite(k_hi) ? inverse_cdf.cdf_at(k_hi) : 1.0;
    const bool degenerate_cell = !(cdf_hi - cdf_lo > 1e-14);

    RngStream rng(seed, static_cast<std::uint64_t>(state));
    const double shift_d = rng.next_double();
    const double shift_k = rng.next_double();
    std::vector<double> counts(static_cast<std::size_t>(nd), 0.0);
    for (int i = 0; i < grid_side; ++i) {
      const double ud = (static_cast<double>(i) + shift_d) / grid_side;
      const double crack = std::max(d_lo + ud * (d_hi - d_lo), 1e-12);
      for (int j = 0; j < grid_side; ++j) {
        const double uk = (static_cast<double>(j) + shift_k) / grid_side;
        double rate;
        if (degenerate_cell) {
          // Essentially no prior mass here; sample the cell log-uniformly.
          const double lo = std::max(k_lo, 1e-12);
          const double hi = std::isfinite(k_hi) ? k_hi : 100.0;
          rate = std::exp(std::log(lo) + uk * (std::log(hi) - std::log(lo)));
        } else {
          rate = inverse_cdf.invert(cdf_lo + uk * (cdf_hi - cdf_lo));
        }
        const double next = grow_crack_rate(params, crack, rate);
        counts[static_cast<std::size_t>(scheme.crack_cell_of(next))] += 1.0;
      }
    }
    const double total = static_cast<double>(grid_side) * grid_side;
    for (int to = 0; to < nd; ++to) {
      if (counts[static_cast<std::size_t>(to)] > 0.0) {
        row.push_back({k * nd + to, counts[static_cast<std::size_t>(to)] / total});
      }
    }
  });
  for (int s = 0; s < num_states; ++s) {
    dbn.transition.set_row(s, rows[static_cast<std::size_t>(s)]);
  }

  const std::vector<double> d_prior = crack_cell_prior(scheme, params);
  const std::vector<double> k_prior = growth_cell_prior(scheme, params);
  dbn.initial_belief.probs.assign(static_cast<std::size_t>(num_states), 0.0);
  for (int k = 0; k < nk; ++k) {
    for (int d = 0; d < nd; ++d) {
      dbn.initial_belief.probs[static_cast<std::size_t>(k * nd + d)] =
          k_prior[static_cast<std::size_t>(k)] * d_prior[static_cast<std::size_t>(d)];
    }
  }
  dbn.initial_belief.normalize();
  for (int k = 0; k < nk; ++k) {
    dbn.failure_states.push_back(k * nd + (nd - 1));
  }
  return dbn;
}

CompiledDbn compile_rate(const DiscretizationScheme& scheme,
                         const CrackGrowthParams& params,
                         std::int64_t samples_per_cell, std::uint64_t seed,
                         const TrajectorySet* shared) {
  const int nd = scheme.num_crack_cells();
  const int rates = scheme.rate_count;
  const int years = rates - 1;
  const int num_states = nd * rates;

  std::optional<TrajectorySet> local;
  if (shared == nullptr) {
    local = sample_trajectories(params, samples_per_cell * nd, seed);
  }
  const TrajectorySet& traj = shared != nullptr ? *shared : *local;

  // Transition counts per (age, from-cell, to-cell), conditioned on the
  // trajectory occupying from-cell at that age.
  std::vector<double> counts(static_cast<std::size_t>(years) * nd * nd, 0.0);
  std::vector<int> cells(static_cast<std::size_t>(years) + 1);
  for (std::int64_t i = 0; i < traj.num_samples(); ++i) {
    for (int t = 0; t <= years; ++t) {
      cells[static_cast<std::size_t>(t)] =
          scheme.crack_cell_of(traj.crack_at(i, t));
    }
    for (int t = 0; t < years; ++t) {
      counts[(static_cast<std::size_t>(t) * nd +
              static_cast<std::size_t>(cells[static_cast<std::size_t>(t)])) *
                 nd +
             static_cast<std::size_t>(cells[static_cast<std::size_t>(t) + 1])] +=
          1.0;
    }
  }

  CompiledDbn dbn;
  dbn.scheme = scheme;
  dbn.params = params;
  dbn.transition = SparseMatrix(num_states, num_states);
  dbn.report.samples_used = traj.num_samples();
  const double mean_rate = params.mean_combined_rate();

  std::vector<SparseMatrix::Entry> row;
  for (int tau = 0; tau < rates; ++tau) {
    for (int d = 0; d < nd; ++d) {
      const int state = tau * nd + d;
      row.clear();
      if (tau == years) {  // horizon cap: the chain stops deteriorating
        row.push_back({state, 1.0});
        dbn.transition.set_row(state, row);
        continue;
      }
      if (d == nd - 1) {  // failure is absorbing
        row.push_back({state, 1.0});
        dbn.transition.set_row(state, row);
        continue;
      }
      const double* c =
          &counts[(static_cast<std::size_t>(tau) * nd + static_cast<std::size_t>(d)) *
                  nd];
      double total = 0.0;
      for (int to = 0; to < nd; ++to) {
        total += c[to];
      }
      if (total > 0.0) {
        for (int to = 0; to < nd; ++to) {
          if (c[to] > 0.0) {
            row.push_back({(tau + 1) * nd + to, c[to] / total});
          }
        }
        if (total < 50.0) {
          dbn.report.low_count_states.push_back(state);
        }
      } else {
        // No trajectory reached this cell at this age; map the cell midpoint
        // through one mean-parameter year.
        const double mid = scheme.crack_cell_midpoint(d);
        const double next = grow_crack_rate(params, mid, mean_rate);
        row.push_back({(tau + 1) * nd + scheme.crack_cell_of(next), 1.0});
        dbn.report.fallback_states.push_back(state);
      }
      dbn.transition.set_row(state, row);
    }
  }

  const std::vector<double> d_prior = crack_cell_prior(scheme, params);
  dbn.initial_belief.probs.assign(static_cast<std::size_t>(num_states), 0.0);
  for (int d = 0; d < nd; ++d) {
    dbn.initial_belief.probs[static_cast<std::size_t>(d)] =
        d_prior[static_cast<std::size_t>(d)];
  }
  dbn.initial_belief.normalize();
  for (int tau = 0; tau < rates; ++tau) {
    dbn.failure_states.push_back(tau * nd + (nd - 1));
  }
  return dbn;
}

}  // namespace

CompiledDbn compile_transition(const DiscretizationScheme& scheme,
                               const CrackGrowthParams& params,
                               std::int64_t samples_per_cell,
                               std::uint64_t seed,
                               const TrajectorySet* trajectories) {
  params.check();
  if (samples_per_cell < 1) {
    throw std::invalid_argument("compile_transition: samples_per_cell >= 1");
  }
  if (scheme.variant == DbnVariant::parametric) {
    return compile_parametric(scheme, params, samples_per_cell, seed);
  }
  return compile_rate(scheme, params, samples_per_cell, seed, trajectories);
}

SparseMatrix indicator_likelihood_matrix(const CompiledDbn& dbn,
                                         const PoiCurve& indicators,
                                         int num_columns) {
  indicators.check();
  const int natural = indicators.num_indicators();
  const int cols = num_columns > 0 ? num_columns : natural;
  if (cols < natural) {
    throw std::invalid_argument(
        "indicator_likelihood_matrix: column count below indicator count");
  }
  SparseMatrix z(dbn.num_states(), cols);
  const int nd = dbn.num_crack_cells();
  // Likelihood depends only on the crack cell: one stored row per cell,
  // shared across layers.
  std::vector<std::vector<int>> cell_states(static_cast<std::size_t>(nd));
  for (int s = 0; s < dbn.num_states(); ++s) {
    cell_states[static_cast<std::size_t>(dbn.crack_cell_of(s))].push_back(s);
  }
  for (int d = 0; d < nd; ++d) {
    const std::vector<double> probs =
        poi_eval(indicators, dbn.scheme.crack_cell_midpoint(d));
    std::vector<SparseMatrix::Entry> row;
    for (int o = 0; o < natural; ++o) {
      if (probs[static_cast<std::size_t>(o)] > 0.0) {
        row.push_back({o, probs[static_cast<std::size_t>(o)]});
      }
    }
    z.set_rows_shared(cell_states[static_cast<std::size_t>(d)], row);
  }
  return z;
}

BeliefState forward_step(const CompiledDbn& dbn, const BeliefState& belief,
                         const std::optional<DbnEvidence>& evidence) {
  // Chapman-Kolmogorov push, written out directly (kept independent of
  // pomdp belief_update for cross-checking).
  const int n = dbn.num_states();
  std::vector<double> next(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    const double mass = belief.probs[static_cast<std::size_t>(s)];
    if (mass == 0.0) {
      continue;
    }
    for (const SparseMatrix::Entry& e : dbn.transition.row(s)) {
      next[static_cast<std::size_t>(e.col)] += mass * e.value;
    }
  }
  if (evidence.has_value()) {
    double total = 0.0;
    for (int s = 0; s < n; ++s) {
      double likelihood = 0.0;
      for (const SparseMatrix::Entry& e : evidence->likelihood->row(s)) {
        if (e.col == evidence->indicator) {
          likelihood = e.value;
          break;
        }
      }
      next[static_cast<std::size_t>(s)] *= likelihood;
      total += next[static_cast<std::size_t>(s)];
    }
    if (!(total > 0.0)) {
      throw ImpossibleEvidenceError();
    }
    for (double& p : next) {
      p /= total;
    }
  }
  return BeliefState(std::move(next));
}

double failure_probability(const CompiledDbn& dbn, const BeliefState& belief) {
  double mass = 0.0;
  for (int s : dbn.failure_states) {
    mass += belief.probs[static_cast<std::size_t>(s)];
  }
  return mass;
}

std::vector<double> unroll_failure_curve(
    const CompiledDbn& dbn, const std::vector<ScheduledInspection>& inspections,
    int years) {
  std::vector<SparseMatrix> likelihoods;
  likelihoods.reserve(inspections.size());
  for (const ScheduledInspection& insp : inspections) {
    likelihoods.push_back(indicator_likelihood_matrix(dbn, insp.indicators));
  }
  BeliefState belief = dbn.initial_belief;
  std::vector<double> curve(static_cast<std::size_t>(years) + 1, 0.0);
  curve[0] = failure_probability(dbn, belief);
  for (int t = 1; t <= years; ++t) {
    std::optional<DbnEvidence> evidence;
    for (std::size_t i = 0; i < inspections.size(); ++i) {
      if (inspections[i].year == t) {
        evidence = DbnEvidence{&likelihoods[i], inspections[i].observed_indicator};
        break;
      }
    }
    belief = forward_step(dbn, belief, evidence);
    curve[static_cast<std::size_t>(t)] = failure_probability(dbn, belief);
  }
  return curve;
}

double discretization_error(std::span<const double> dbn_curve,
                            std::span<const double> reference_curve) {
  if (dbn_curve.size() != reference_curve.size() || dbn_curve.empty()) {
    throw std::invalid_argument("discretization_error: length mismatch");
  }
  const double n = static_cast<double>(reference_curve.size());
  double mean = 0.0;
  for (double p : reference_curve) {
    mean += p;
  }
  mean /= n;
  double var = 0.0;
  for (double p : reference_curve) {
    var += (p - mean) * (p - mean);
  }
  var /= n;
  if (!(var > 0.0)) {
    throw std::invalid_argument("discretization_error: reference has zero variance");
  }
  const double sd = std::sqrt(var);
  double xi = 0.0;
  for (std::size_t t = 0; t < dbn_curve.size(); ++t) {
    const double diff = (reference_curve[t] - mean) / sd - (dbn_curve[t] - mean) / sd;
    xi += diff * diff;
  }
  return xi / n;
}

}  // namespace implan
