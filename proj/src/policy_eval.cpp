#include "implan/policy_eval.hpp"

#include <cmath>
#include <stdexcept>

#include "implan/rng.hpp"
#include "implan/threading.hpp"

namespace implan {

CostTerms& CostTerms::operator+=(const CostTerms& other) {
  inspection += other.inspection;
  repair += other.repair;
  failure_risk += other.failure_risk;
  return *this;
}

int AlphaPolicyDriver::select_group(int /*year*/, const BeliefState& belief) {
  return value_at(*alphas_, belief).action;
}

namespace {

int sample_from_row(const SparseMatrix& m, int row, double u) {
  double acc = 0.0;
  int last = -1;
  for (const SparseMatrix::Entry& e : m.row(row)) {
    acc += e.value;
    last = e.col;
    if (u < acc) {
      return e.col;
    }
  }
  return last;  // guard against roundoff at u ~ 1
}

int sample_from_dense(const std::vector<double>& probs, double u) {
  double acc = 0.0;
  int last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) {
      continue;
    }
    acc += probs[i];
    last = static_cast<int>(i);
    if (u < acc) {
      return last;
    }
  }
  return last;
}

double failure_mass(const std::vector<double>& probs,
                    const std::vector<char>& is_failure) {
  double mass = 0.0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (is_failure[s]) {
      mass += probs[s];
    }
  }
  return mass;
}

struct EpisodeOutcome {
  CostTerms totals;
  double total_cost = 0.0;
};

}  // namespace

SimulationResult simulate_policy(const DiscretePomdp& model,
                                 const std::vector<ActionObservationGroup>& groups,
                                 const CostSpec& costs, PolicyDriver& driver,
                                 const SimulationOptions& options) {
  if (options.horizon < 1) {
    throw std::invalid_argument("simulate_policy: horizon must be >= 1");
  }
  if (static_cast<int>(groups.size()) != model.num_actions) {
    throw std::invalid_argument("simulate_policy: group count != num_actions");
  }
  std::vector<char> is_failure(static_cast<std::size_t>(model.num_states), 0);
  for (int s : model.failure_states) {
    is_failure[static_cast<std::size_t>(s)] = 1;
  }
  std::vector<double> fixed_cost(groups.size(), 0.0);
  std::vector<double> inspection_cost(groups.size(), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    inspection_cost[g] = groups[g].inspection ? groups[g].inspection->cost : 0.0;
    switch (groups[g].maintenance) {
      case MaintenanceAction::perfect_repair:
        fixed_cost[g] = costs.perfect_repair_cost;
        break;
      case MaintenanceAction::minor_repair:
        fixed_cost[g] = costs.minor_repair_cost;
        break;
      case MaintenanceAction::do_nothing:
        break;
    }
  }

  SimulationResult result;
  result.episodes = options.num_episodes;
  result.group_histogram.assign(groups.size(), 0);
  result.reaction_histogram.assign(options.reactions.size(), 0);

  const std::int64_t chunks = num_chunks(options.num_episodes);
  std::vector<EpisodeOutcome> chunk_totals(static_cast<std::size_t>(chunks));
  std::vector<double> chunk_sq(static_cast<std::size_t>(chunks), 0.0);
  std::vector<std::vector<std::int64_t>> chunk_groups(
      static_cast<std::size_t>(chunks),
      std::vector<std::int64_t>(groups.size(), 0));
  std::vector<std::vector<std::int64_t>> chunk_reactions(
      static_cast<std::size_t>(chunks),
      std::vector<std::int64_t>(options.reactions.size(), 0));
  std::vector<EpisodeTrace> traces(
      static_cast<std::size_t>(std::min<std::int64_t>(
          options.max_traces, options.num_episodes)));

  parallel_chunks(options.num_episodes, [&](std::int64_t begin, std::int64_t end,
                                            std::int64_t chunk) {
    const std::unique_ptr<PolicyDriver> local_driver = driver.clone();
    // Beliefs are carried dense with an explicit support list; in the
    // time-augmented models the support is tiny.
    std::vector<double> belief(static_cast<std::size_t>(model.num_states), 0.0);
    std::vector<double> predicted(static_cast<std::size_t>(model.num_states), 0.0);
    std::vector<int> support;
    std::vector<int> next_support;
    auto scatter = [&](const SparseMatrix& matrix) {
      next_support.clear();
      for (int s : support) {
        const double mass = belief[static_cast<std::size_t>(s)];
        for (const SparseMatrix::Entry& e : matrix.row(s)) {
          if (predicted[static_cast<std::size_t>(e.col)] == 0.0) {
            next_support.push_back(e.col);
          }
          predicted[static_cast<std::size_t>(e.col)] += mass * e.value;
        }
      }
      std::sort(next_support.begin(), next_support.end());
    };
    auto support_failure_mass = [&](const std::vector<double>& probs,
                                    const std::vector<int>& idx) {
      double mass = 0.0;
      for (int s : idx) {
        if (is_failure[static_cast<std::size_t>(s)]) {
          mass += probs[static_cast<std::size_t>(s)];
        }
      }
      return mass;
    };
    for (std::int64_t ep = begin; ep < end; ++ep) {
      RngStream rng(options.seed, static_cast<std::uint64_t>(ep));
      local_driver->begin_episode();
      std::fill(belief.begin(), belief.end(), 0.0);
      support.clear();
      for (int s = 0; s < model.num_states; ++s) {
        const double p = model.initial_belief.probs[static_cast<std::size_t>(s)];
        if (p != 0.0) {
          belief[static_cast<std::size_t>(s)] = p;
          support.push_back(s);
        }
      }
      int truth = sample_from_dense(model.initial_belief.probs, rng.next_double());
      bool truth_failed = is_failure[static_cast<std::size_t>(truth)] != 0;
      EpisodeTrace trace;
      trace.episode = ep;
      const bool keep_trace = ep < static_cast<std::int64_t>(traces.size());
      double discount_pow = 1.0;
      CostTerms totals;
      for (int year = 1; year <= options.horizon; ++year) {
        discount_pow *= costs.discount;
        BeliefState belief_view(belief);
        const int g = local_driver->select_group(year, belief_view);
        if (g < 0 || g >= model.num_actions) {
          throw std::runtime_error("policy returned invalid group at episode " +
                                   std::to_string(ep) + " year " +
                                   std::to_string(year));
        }
        chunk_groups[static_cast<std::size_t>(chunk)][static_cast<std::size_t>(g)]++;
        const SparseMatrix& t_matrix = model.transition[static_cast<std::size_t>(g)];
        const SparseMatrix& z_matrix = model.observation[static_cast<std::size_t>(g)];

        scatter(t_matrix);
        CostTerms year_costs;
        if (options.risk_mode == RiskMode::belief_accrual) {
          const double delta = support_failure_mass(predicted, next_support) -
                               support_failure_mass(belief, support);
          year_costs.failure_risk = costs.failure_cost * delta * discount_pow;
        }
        const int next_truth = sample_from_row(t_matrix, truth, rng.next_double());
        if (options.risk_mode == RiskMode::sampled_failure && !truth_failed &&
            is_failure[static_cast<std::size_t>(next_truth)]) {
          year_costs.failure_risk = costs.failure_cost * discount_pow;
        }
        truth = next_truth;
        truth_failed = truth_failed || is_failure[static_cast<std::size_t>(truth)] != 0;
        year_costs.inspection =
            inspection_cost[static_cast<std::size_t>(g)] * discount_pow;
        year_costs.repair = fixed_cost[static_cast<std::size_t>(g)] * discount_pow;

        // Observation: from ground truth, or from the predicted belief under
        // single-branch semantics.
        int indicator;
        if (options.observations_from_belief) {
          std::vector<double> obs_probs(
              static_cast<std::size_t>(model.num_observations), 0.0);
          for (int s : next_support) {
            const double mass = predicted[static_cast<std::size_t>(s)];
            for (const SparseMatrix::Entry& e : z_matrix.row(s)) {
              obs_probs[static_cast<std::size_t>(e.col)] += mass * e.value;
            }
          }
          double norm = 0.0;
          for (double p : obs_probs) {
            norm += p;
          }
          for (double& p : obs_probs) {
            p /= norm;
          }
          indicator = sample_from_dense(obs_probs, rng.next_double());
        } else {
          indicator = sample_from_row(z_matrix, truth, rng.next_double());
        }

        // Bayes correction over the predicted support.
        const int update_indicator =
            options.force_no_detection_update ? 0 : indicator;
        double norm = 0.0;
        for (int s : next_support) {
          double likelihood = 0.0;
          for (const SparseMatrix::Entry& e : z_matrix.row(s)) {
            if (e.col == update_indicator) {
              likelihood = e.value;
              break;
            }
          }
          predicted[static_cast<std::size_t>(s)] *= likelihood;
          norm += predicted[static_cast<std::size_t>(s)];
        }
        if (!(norm > 0.0)) {
          throw std::runtime_error(
              "simulate_policy: impossible observation during episode " +
              std::to_string(ep));
        }
        for (int s : next_support) {
          predicted[static_cast<std::size_t>(s)] /= norm;
        }
        // Swap belief <- predicted; the old belief array, fully cleared
        // through its support, becomes the next scatter scratch.
        for (int s : support) {
          belief[static_cast<std::size_t>(s)] = 0.0;
        }
        belief.swap(predicted);
        support.swap(next_support);

        // Optional immediate maintenance (heuristic rules).
        BeliefState posterior_view(belief);
        const int reaction = local_driver->react(year, posterior_view, indicator);
        if (reaction >= 0) {
          if (reaction >= static_cast<int>(options.reactions.size())) {
            throw std::runtime_error("driver returned unknown reaction index");
          }
          const Reaction& r = options.reactions[static_cast<std::size_t>(reaction)];
          chunk_reactions[static_cast<std::size_t>(chunk)]
                         [static_cast<std::size_t>(reaction)]++;
          year_costs.repair += r.cost * discount_pow;
          scatter(r.transition);
          for (int s : support) {
            belief[static_cast<std::size_t>(s)] = 0.0;
          }
          belief.swap(predicted);
          support.swap(next_support);
          truth = sample_from_row(r.transition, truth, rng.next_double());
          truth_failed = is_failure[static_cast<std::size_t>(truth)] != 0;
        }

        totals += year_costs;
        if (keep_trace) {
          YearRecord record;
          record.year = year;
          record.group = g;
          record.indicator = groups[static_cast<std::size_t>(g)].inspection
                                 ? indicator
                                 : -1;
          record.reaction = reaction;
          record.maintenance =
              reaction >= 0 || groups[static_cast<std::size_t>(g)].maintenance !=
                                   MaintenanceAction::do_nothing;
          record.failure_probability = support_failure_mass(belief, support);
          record.costs = year_costs;
          trace.years.push_back(record);
        }
      }
      const double episode_cost = totals.total();
      chunk_totals[static_cast<std::size_t>(chunk)].totals += totals;
      chunk_totals[static_cast<std::size_t>(chunk)].total_cost += episode_cost;
      chunk_sq[static_cast<std::size_t>(chunk)] += episode_cost * episode_cost;
      if (keep_trace) {
        trace.totals = totals;
        traces[static_cast<std::size_t>(ep)] = std::move(trace);
      }
      // reset for the next episode
      for (int s : support) {
        belief[static_cast<std::size_t>(s)] = 0.0;
      }
      support.clear();
    }
  });

  CostTerms sum_terms;
  double sum_cost = 0.0;
  double sum_sq = 0.0;
  for (std::int64_t c = 0; c < chunks; ++c) {
    sum_terms += chunk_totals[static_cast<std::size_t>(c)].totals;
    sum_cost += chunk_totals[static_cast<std::size_t>(c)].total_cost;
    sum_sq += chunk_sq[static_cast<std::size_t>(c)];
    for (std::size_t g = 0; g < result.group_histogram.size(); ++g) {
      result.group_histogram[g] += chunk_groups[static_cast<std::size_t>(c)][g];
    }
    for (std::size_t r = 0; r < result.reaction_histogram.size(); ++r) {
      result.reaction_histogram[r] +=
          chunk_reactions[static_cast<std::size_t>(c)][r];
    }
  }
  const double n = static_cast<double>(options.num_episodes);
  result.mean_cost = sum_cost / n;
  result.mean_terms.inspection = sum_terms.inspection / n;
  result.mean_terms.repair = sum_terms.repair / n;
  result.mean_terms.failure_risk = sum_terms.failure_risk / n;
  if (options.num_episodes > 1) {
    const double var =
        std::max(0.0, (sum_sq - n * result.mean_cost * result.mean_cost) / (n - 1.0));
    result.ci95 = 1.96 * std::sqrt(var / n);
  }
  result.traces = std::move(traces);
  return result;
}

RealizationSeries realization_report(const EpisodeTrace& trace) {
  RealizationSeries series;
  for (const YearRecord& record : trace.years) {
    series.year.push_back(record.year);
    series.failure_probability.push_back(record.failure_probability);
    series.group.push_back(record.group);
    if (record.indicator > 0) {
      series.detection_years.push_back(record.year);
    } else if (record.indicator == 0) {
      series.no_detection_years.push_back(record.year);
    }
    if (record.maintenance) {
      series.maintenance_years.push_back(record.year);
    }
  }
  return series;
}

}  // namespace implan
