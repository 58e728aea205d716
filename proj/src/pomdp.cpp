#include "implan/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace implan {

BeliefState BeliefState::point_mass(int num_states, int state) {
  BeliefState b;
  b.probs.assign(static_cast<std::size_t>(num_states), 0.0);
  b.probs.at(static_cast<std::size_t>(state)) = 1.0;
  return b;
}

BeliefState BeliefState::uniform(int num_states) {
  BeliefState b;
  b.probs.assign(static_cast<std::size_t>(num_states),
                 1.0 / static_cast<double>(num_states));
  return b;
}

double BeliefState::sum() const {
  double s = 0.0;
  for (double p : probs) {
    s += p;
  }
  return s;
}

void BeliefState::normalize() {
  const double s = sum();
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw std::domain_error("BeliefState::normalize: non-positive mass");
  }
  for (double& p : probs) {
    p /= s;
  }
}

double BeliefState::l1_distance(const BeliefState& other) const {
  double d = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    d += std::abs(probs[i] - other.probs[i]);
  }
  return d;
}

bool BeliefState::is_valid(double tol) const {
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      return false;
    }
  }
  return std::abs(sum() - 1.0) <= tol;
}

BeliefUpdateResult belief_update(const DiscretePomdp& model,
                                 const BeliefState& belief, int action,
                                 int observation) {
  if (action < 0 || action >= model.num_actions) {
    throw std::out_of_range("belief_update: action out of range");
  }
  if (observation < 0 || observation >= model.num_observations) {
    throw std::out_of_range("belief_update: observation out of range");
  }
  // Prediction: b_pred(s') = sum_s T(s,a,s') b(s).
  std::vector<double> predicted =
      model.transition[static_cast<std::size_t>(action)].pre_multiply(
          belief.probs);
  // Correction: multiply by Z(o | s', a) and normalize.
  const SparseMatrix& z = model.observation[static_cast<std::size_t>(action)];
  double normalizer = 0.0;
  for (int s = 0; s < model.num_states; ++s) {
    double likelihood = 0.0;
    for (const SparseMatrix::Entry& e : z.row(s)) {
      if (e.col == observation) {
        likelihood = e.value;
        break;
      }
    }
    predicted[static_cast<std::size_t>(s)] *= likelihood;
    normalizer += predicted[static_cast<std::size_t>(s)];
  }
  BeliefUpdateResult result;
  result.probability = normalizer;
  if (!(normalizer > 0.0)) {
    result.probability = 0.0;
    return result;
  }
  for (double& p : predicted) {
    p /= normalizer;
  }
  result.posterior = BeliefState(std::move(predicted));
  return result;
}

double belief_reward(const DiscretePomdp& model, const BeliefState& belief,
                     int action) {
  const std::vector<double>& r = model.reward[static_cast<std::size_t>(action)];
  double total = 0.0;
  for (std::size_t s = 0; s < r.size(); ++s) {
    total += belief.probs[s] * r[s];
  }
  return total;
}

ValueAtResult value_at(const AlphaVectorSet& set, const BeliefState& belief) {
  if (set.empty()) {
    throw UninitializedPolicyError();
  }
  // Beliefs are often sparse (time-augmented models); dot over the support.
  thread_local std::vector<int> support;
  support.clear();
  for (std::size_t s = 0; s < belief.probs.size(); ++s) {
    if (belief.probs[s] != 0.0) {
      support.push_back(static_cast<int>(s));
    }
  }
  ValueAtResult best;
  bool first = true;
  for (std::size_t i = 0; i < set.vectors.size(); ++i) {
    const AlphaVector& alpha = set.vectors[i];
    double v = 0.0;
    for (int s : support) {
      v += alpha.values[static_cast<std::size_t>(s)] *
           belief.probs[static_cast<std::size_t>(s)];
    }
    if (first || v > best.value) {
      best = {v, alpha.action, i};
      first = false;
    }
  }
  return best;
}

namespace {

void check_stochastic(const SparseMatrix& m, const std::string& name,
                      int action, std::vector<Violation>& out) {
  for (int r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    bool negative = false;
    for (const SparseMatrix::Entry& e : m.row(r)) {
      if (e.value < 0.0 || !std::isfinite(e.value)) {
        negative = true;
      }
      sum += e.value;
    }
    if (negative) {
      std::ostringstream msg;
      msg << name << " action " << action << " row " << r
          << " has a negative or non-finite entry";
      out.push_back({name, action, r, 0.0, msg.str()});
    }
    const double deviation = sum - 1.0;
    if (std::abs(deviation) > kStochasticTol) {
      std::ostringstream msg;
      msg << name << " action " << action << " row " << r << " sums to " << sum
          << " (deviation " << deviation << ")";
      out.push_back({name, action, r, deviation, msg.str()});
    }
  }
}

}  // namespace

std::vector<Violation> validate(const DiscretePomdp& model) {
  std::vector<Violation> out;
  if (model.num_states <= 0 || model.num_actions <= 0 ||
      model.num_observations <= 0) {
    out.push_back({"shape", -1, -1, 0.0, "non-positive state/action/observation count"});
    return out;
  }
  if (static_cast<int>(model.transition.size()) != model.num_actions ||
      static_cast<int>(model.observation.size()) != model.num_actions ||
      static_cast<int>(model.reward.size()) != model.num_actions) {
    out.push_back({"shape", -1, -1, 0.0,
                   "per-action matrix/reward counts do not match num_actions"});
    return out;
  }
  for (int a = 0; a < model.num_actions; ++a) {
    const SparseMatrix& t = model.transition[static_cast<std::size_t>(a)];
    const SparseMatrix& z = model.observation[static_cast<std::size_t>(a)];
    if (t.rows() != model.num_states || t.cols() != model.num_states) {
      out.push_back({"transition", a, -1, 0.0, "transition matrix shape mismatch"});
      continue;
    }
    if (z.rows() != model.num_states || z.cols() != model.num_observations) {
      out.push_back({"observation", a, -1, 0.0, "observation matrix shape mismatch"});
      continue;
    }
    if (static_cast<int>(model.reward[static_cast<std::size_t>(a)].size()) !=
        model.num_states) {
      out.push_back({"reward", a, -1, 0.0, "reward vector length mismatch"});
      continue;
    }
    check_stochastic(t, "transition", a, out);
    check_stochastic(z, "observation", a, out);
    for (int s = 0; s < model.num_states; ++s) {
      if (!std::isfinite(
              model.reward[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)])) {
        out.push_back({"reward", a, s, 0.0, "non-finite reward"});
      }
    }
  }
  if (static_cast<int>(model.initial_belief.probs.size()) != model.num_states) {
    out.push_back({"initial_belief", -1, -1, 0.0, "initial belief length mismatch"});
  } else {
    for (int s = 0; s < model.num_states; ++s) {
      const double p = model.initial_belief.probs[static_cast<std::size_t>(s)];
      if (p < 0.0 || !std::isfinite(p)) {
        std::ostringstream msg;
        msg << "initial_belief entry " << s << " is " << p;
        out.push_back({"initial_belief", -1, s, p, msg.str()});
      }
    }
    const double deviation = model.initial_belief.sum() - 1.0;
    if (std::abs(deviation) > kStochasticTol) {
      std::ostringstream msg;
      msg << "initial_belief sums to " << (1.0 + deviation) << " (deviation "
          << deviation << ")";
      out.push_back({"initial_belief", -1, -1, deviation, msg.str()});
    }
  }
  for (int s : model.failure_states) {
    if (s < 0 || s >= model.num_states) {
      out.push_back({"failure_states", -1, s, 0.0, "failure state out of range"});
    }
  }
  for (int s : model.terminal_states) {
    if (s < 0 || s >= model.num_states) {
      out.push_back({"terminal_states", -1, s, 0.0, "terminal state out of range"});
    }
  }
  if (!(model.discount > 0.0) || model.discount > 1.0) {
    out.push_back({"discount", -1, -1, model.discount, "discount outside (0, 1]"});
  } else if (model.discount == 1.0 && model.terminal_states.empty()) {
    out.push_back({"discount", -1, -1, 1.0,
                   "discount 1 requires terminal states (infinite horizon)"});
  }
  return out;
}

}  // namespace implan
