#include "implan/pbvi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <limits>
#include <unordered_map>

#include "implan/rng.hpp"

namespace implan {
namespace {

constexpr double kDropMass = 1e-250;  // guards against denormal buildup

double dot_sparse(const SparseBelief& b, const std::vector<double>& dense) {
  double v = 0.0;
  for (std::size_t i = 0; i < b.index.size(); ++i) {
    v += b.value[i] * dense[static_cast<std::size_t>(b.index[i])];
  }
  return v;
}

}  // namespace

SparseBelief SparseBelief::from_dense(const BeliefState& belief) {
  SparseBelief out;
  for (int s = 0; s < belief.size(); ++s) {
    const double p = belief.probs[static_cast<std::size_t>(s)];
    if (p > kDropMass) {
      out.index.push_back(s);
      out.value.push_back(p);
    }
  }
  return out;
}

BeliefState SparseBelief::to_dense(int num_states) const {
  BeliefState out;
  out.probs.assign(static_cast<std::size_t>(num_states), 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    out.probs[static_cast<std::size_t>(index[i])] = value[i];
  }
  return out;
}

std::uint64_t SparseBelief::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over (index, bits)
  auto mix = [&h](std::uint64_t x) {
    h ^= x;
    h *= 1099511628211ull;
  };
  for (std::size_t i = 0; i < index.size(); ++i) {
    mix(static_cast<std::uint64_t>(index[i]));
    std::uint64_t bits;
    std::memcpy(&bits, &value[i], sizeof(bits));
    mix(bits);
  }
  return h;
}

double BoundPair::lower_value_at(const SparseBelief& belief) const {
  if (lower.empty()) {
    throw UninitializedPolicyError();
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const AlphaVector& alpha : lower.vectors) {
    const double v = dot_sparse(belief, alpha.values);
    if (v > best) {
      best = v;
    }
  }
  return best;
}

double BoundPair::upper_value_at(const SparseBelief& belief) const {
  const double corner = dot_sparse(belief, corner_values);
  double best = corner;
  // Sawtooth interpolation: a point pulls the corner bound down by its
  // slack, scaled by the minimum belief ratio over the point's support.
  std::vector<double> dense;
  for (const SawtoothPoint& point : points) {
    const double slack = point.value - point.corner_dot;
    if (slack >= 0.0) {
      continue;
    }
    if (dense.empty()) {
      dense.assign(corner_values.size(), 0.0);
      for (std::size_t i = 0; i < belief.index.size(); ++i) {
        dense[static_cast<std::size_t>(belief.index[i])] = belief.value[i];
      }
    }
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < point.belief.index.size(); ++i) {
      const double q = dense[static_cast<std::size_t>(point.belief.index[i])];
      if (q <= 0.0) {
        min_ratio = 0.0;
        break;
      }
      min_ratio = std::min(min_ratio, q / point.belief.value[i]);
    }
    if (min_ratio > 0.0) {
      best = std::min(best, corner + min_ratio * slack);
    }
  }
  return best;
}

int BoundPair::lower_best_action(const SparseBelief& belief) const {
  if (lower.empty()) {
    throw UninitializedPolicyError();
  }
  double best = -std::numeric_limits<double>::infinity();
  int action = 0;
  for (const AlphaVector& alpha : lower.vectors) {
    const double v = dot_sparse(belief, alpha.values);
    if (v > best) {
      best = v;
      action = alpha.action;
    }
  }
  return action;
}

double BoundPair::lower_value_at(const BeliefState& belief) const {
  return lower_value_at(SparseBelief::from_dense(belief));
}

double BoundPair::upper_value_at(const BeliefState& belief) const {
  return upper_value_at(SparseBelief::from_dense(belief));
}

double BoundPair::gap_at(const BeliefState& belief) const {
  return upper_value_at(belief) - lower_value_at(belief);
}

namespace {

struct RewardRange {
  double min_reward = 0.0;
  double max_reward = 0.0;
};

RewardRange reward_range(const DiscretePomdp& model) {
  RewardRange range;
  bool first = true;
  for (const std::vector<double>& r : model.reward) {
    for (double v : r) {
      if (first) {
        range.min_reward = range.max_reward = v;
        first = false;
      } else {
        range.min_reward = std::min(range.min_reward, v);
        range.max_reward = std::max(range.max_reward, v);
      }
    }
  }
  return range;
}

// Fixed-action value iteration from below; any stop point remains a valid
// lower bound of that policy's value.
std::vector<double> blind_alpha(const DiscretePomdp& model, int action,
                                double floor_value) {
  const int n = model.num_states;
  std::vector<double> v(static_cast<std::size_t>(n), floor_value);
  std::vector<double> next(static_cast<std::size_t>(n), 0.0);
  const SparseMatrix& t = model.transition[static_cast<std::size_t>(action)];
  const std::vector<double>& r = model.reward[static_cast<std::size_t>(action)];
  const double tol = 1e-12 * std::max(1.0, std::abs(floor_value));
  const int max_iter = std::max(20000, 10 * n);
  for (int iter = 0; iter < max_iter; ++iter) {
    double residual = 0.0;
    const SparseMatrix::Entry* cached_row = nullptr;
    std::size_t cached_size = 0;
    double cached_dot = 0.0;
    for (int s = 0; s < n; ++s) {
      const std::span<const SparseMatrix::Entry> row = t.row(s);
      if (row.data() != cached_row || row.size() != cached_size) {
        double acc = 0.0;
        for (const SparseMatrix::Entry& e : row) {
          acc += e.value * v[static_cast<std::size_t>(e.col)];
        }
        cached_row = row.data();
        cached_size = row.size();
        cached_dot = acc;
      }
      const double value =
          r[static_cast<std::size_t>(s)] + model.discount * cached_dot;
      residual = std::max(residual, std::abs(value - v[static_cast<std::size_t>(s)]));
      next[static_cast<std::size_t>(s)] = value;
    }
    v.swap(next);
    if (residual <= tol) {
      return v;
    }
  }
  throw BoundInitializationError("blind-policy value iteration did not converge");
}

// Fully-observable MDP value iteration from above; every iterate upper
// bounds the optimal MDP (hence POMDP) value.
std::vector<double> mdp_upper_values(const DiscretePomdp& model,
                                     double ceiling_value) {
  const int n = model.num_states;
  std::vector<double> v(static_cast<std::size_t>(n), ceiling_value);
  std::vector<double> next(static_cast<std::size_t>(n), 0.0);
  const double tol = 1e-12 * std::max(1.0, std::abs(ceiling_value));
  const int max_iter = std::max(20000, 10 * n);
  for (int iter = 0; iter < max_iter; ++iter) {
    double residual = 0.0;
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < model.num_actions; ++a) {
        double acc = 0.0;
        for (const SparseMatrix::Entry& e :
             model.transition[static_cast<std::size_t>(a)].row(s)) {
          acc += e.value * v[static_cast<std::size_t>(e.col)];
        }
        best = std::max(
            best, model.reward[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)] +
                      model.discount * acc);
      }
      residual = std::max(residual, std::abs(best - v[static_cast<std::size_t>(s)]));
      next[static_cast<std::size_t>(s)] = best;
    }
    v.swap(next);
    if (residual <= tol) {
      return v;
    }
  }
  throw BoundInitializationError("MDP value iteration did not converge");
}

// Fast informed bound: tightens the fully-observable values by folding the
// observation likelihoods into the lookahead,
//   Q(s,a) <- R(s,a) + gamma sum_o max_a' sum_s' T(s,a,s') Z(o|s',a) Q(s',a').
// Initialized at the MDP iterate and monotone decreasing, so any stop point
// stays a valid upper bound.
std::vector<double> fib_upper_values(const DiscretePomdp& model,
                                     const std::vector<double>& mdp_values) {
  const int n = model.num_states;
  const int num_a = model.num_actions;
  const int num_o = model.num_observations;
  std::vector<std::vector<double>> q(
      static_cast<std::size_t>(num_a),
      std::vector<double>(static_cast<std::size_t>(n)));
  for (int a = 0; a < num_a; ++a) {
    q[static_cast<std::size_t>(a)] = mdp_values;
  }
  std::vector<std::vector<double>> q_next = q;
  // zq[o][a'](s') = Z(o|s',a) Q(s',a'), rebuilt per (a, sweep)
  std::vector<std::vector<std::vector<double>>> zq(
      static_cast<std::size_t>(num_o),
      std::vector<std::vector<double>>(
          static_cast<std::size_t>(num_a),
          std::vector<double>(static_cast<std::size_t>(n), 0.0)));
  std::vector<double> candidate(static_cast<std::size_t>(num_a), 0.0);
  const int sweeps =
      model.discount < 1.0
          ? static_cast<int>(std::ceil(std::log(1e-9) / std::log(model.discount))) + 1
          : 2 * n + 4;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double residual = 0.0;
    for (int a = 0; a < num_a; ++a) {
      const SparseMatrix& z = model.observation[static_cast<std::size_t>(a)];
      const SparseMatrix& t = model.transition[static_cast<std::size_t>(a)];
      const std::vector<double>& r = model.reward[static_cast<std::size_t>(a)];
      for (int o = 0; o < num_o; ++o) {
        for (int a2 = 0; a2 < num_a; ++a2) {
          std::fill(zq[static_cast<std::size_t>(o)][static_cast<std::size_t>(a2)].begin(),
                    zq[static_cast<std::size_t>(o)][static_cast<std::size_t>(a2)].end(),
                    0.0);
        }
      }
      for (int s2 = 0; s2 < n; ++s2) {
        for (const SparseMatrix::Entry& e : z.row(s2)) {
          for (int a2 = 0; a2 < num_a; ++a2) {
            zq[static_cast<std::size_t>(e.col)][static_cast<std::size_t>(a2)]
              [static_cast<std::size_t>(s2)] =
                  e.value *
                  q[static_cast<std::size_t>(a2)][static_cast<std::size_t>(s2)];
          }
        }
      }
      for (int s = 0; s < n; ++s) {
        double future = 0.0;
        for (int o = 0; o < num_o; ++o) {
          for (int a2 = 0; a2 < num_a; ++a2) {
            double acc = 0.0;
            for (const SparseMatrix::Entry& e : t.row(s)) {
              acc += e.value *
                     zq[static_cast<std::size_t>(o)][static_cast<std::size_t>(a2)]
                       [static_cast<std::size_t>(e.col)];
            }
            candidate[static_cast<std::size_t>(a2)] = acc;
          }
          double best = candidate[0];
          for (int a2 = 1; a2 < num_a; ++a2) {
            best = std::max(best, candidate[static_cast<std::size_t>(a2)]);
          }
          future += best;
        }
        const double value = r[static_cast<std::size_t>(s)] + model.discount * future;
        residual = std::max(
            residual,
            std::abs(value - q[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)]));
        q_next[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)] = value;
      }
    }
    q.swap(q_next);
    if (residual <= 1e-10) {
      break;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    double best = q[0][static_cast<std::size_t>(s)];
    for (int a = 1; a < num_a; ++a) {
      best = std::max(best, q[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)]);
    }
    out[static_cast<std::size_t>(s)] = best;
  }
  return out;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Backup and descent machinery sharing scratch space.
class Engine {
 public:
  Engine(const DiscretePomdp& model, BoundPair& bounds, double pruning_tol)
      : model_(model),
        bounds_(bounds),
        tol_(pruning_tol),
        scratch_(static_cast<std::size_t>(model.num_states), 0.0),
        mcol_(static_cast<std::size_t>(model.num_states), 0.0) {
    obs_scratch_.resize(static_cast<std::size_t>(model.num_observations));
    obs_touched_.resize(static_cast<std::size_t>(model.num_observations));
    for (auto& v : obs_scratch_) {
      v.assign(static_cast<std::size_t>(model.num_states), 0.0);
    }
  }

  struct Child {
    SparseBelief belief;
    double probability = 0.0;  ///< P(o | b, a)
  };

  struct Expansion {
    std::vector<Child> children;  ///< children[a * num_observations + o]
    std::vector<double> q_upper;
    int best_upper_action = 0;
  };

  void expand(const SparseBelief& belief, Expansion& out) {
    const int num_a = model_.num_actions;
    const int num_o = model_.num_observations;
    out.children.assign(static_cast<std::size_t>(num_a) * num_o, Child{});
    out.q_upper.assign(static_cast<std::size_t>(num_a), 0.0);
    for (int a = 0; a < num_a; ++a) {
      const SparseMatrix& t = model_.transition[static_cast<std::size_t>(a)];
      const SparseMatrix& z = model_.observation[static_cast<std::size_t>(a)];
      touched_.clear();
      for (std::size_t i = 0; i < belief.index.size(); ++i) {
        const double mass = belief.value[i];
        for (const SparseMatrix::Entry& e : t.row(belief.index[i])) {
          if (scratch_[static_cast<std::size_t>(e.col)] == 0.0) {
            touched_.push_back(e.col);
          }
          scratch_[static_cast<std::size_t>(e.col)] += mass * e.value;
        }
      }
      std::sort(touched_.begin(), touched_.end());
      for (auto& list : obs_touched_) {
        list.clear();
      }
      for (int s : touched_) {
        const double mass = scratch_[static_cast<std::size_t>(s)];
        scratch_[static_cast<std::size_t>(s)] = 0.0;
        if (mass <= kDropMass) {
          continue;
        }
        for (const SparseMatrix::Entry& e : z.row(s)) {
          if (e.value == 0.0) {
            continue;
          }
          auto& dense = obs_scratch_[static_cast<std::size_t>(e.col)];
          if (dense[static_cast<std::size_t>(s)] == 0.0) {
            obs_touched_[static_cast<std::size_t>(e.col)].push_back(s);
          }
          dense[static_cast<std::size_t>(s)] += mass * e.value;
        }
      }
      double reward = 0.0;
      const std::vector<double>& r = model_.reward[static_cast<std::size_t>(a)];
      for (std::size_t i = 0; i < belief.index.size(); ++i) {
        reward += belief.value[i] * r[static_cast<std::size_t>(belief.index[i])];
      }
      double upper_future = 0.0;
      for (int o = 0; o < num_o; ++o) {
        Child& child = out.children[static_cast<std::size_t>(a) * num_o +
                                    static_cast<std::size_t>(o)];
        auto& dense = obs_scratch_[static_cast<std::size_t>(o)];
        auto& idx = obs_touched_[static_cast<std::size_t>(o)];
        double norm = 0.0;
        for (int s : idx) {
          norm += dense[static_cast<std::size_t>(s)];
        }
        if (norm > 1e-300) {
          child.probability = norm;
          child.belief.index.reserve(idx.size());
          child.belief.value.reserve(idx.size());
          for (int s : idx) {
            const double p = dense[static_cast<std::size_t>(s)] / norm;
            if (p > kDropMass) {
              child.belief.index.push_back(s);
              child.belief.value.push_back(p);
            }
          }
          upper_future += norm * bounds_.upper_value_at(child.belief);
        }
        for (int s : idx) {
          dense[static_cast<std::size_t>(s)] = 0.0;
        }
      }
      out.q_upper[static_cast<std::size_t>(a)] =
          reward + model_.discount * upper_future;
    }
    out.best_upper_action = 0;
    for (int a = 1; a < num_a; ++a) {
      if (out.q_upper[static_cast<std::size_t>(a)] >
          out.q_upper[static_cast<std::size_t>(out.best_upper_action)]) {
        out.best_upper_action = a;
      }
    }
  }

  /// Point-based Bellman backup at `belief`. The freshly composed vector is
  /// kept in last_alpha() for improvement bookkeeping.
  double backup_at(const SparseBelief& belief, Expansion& expansion) {
    expand(belief, expansion);
    const int num_a = model_.num_actions;
    const int num_o = model_.num_observations;
    // argmax supporting vector per child
    best_alpha_.assign(static_cast<std::size_t>(num_a) * num_o, -1);
    for (int a = 0; a < num_a; ++a) {
      for (int o = 0; o < num_o; ++o) {
        const Child& child = expansion.children[static_cast<std::size_t>(a) * num_o +
                                                static_cast<std::size_t>(o)];
        if (child.probability <= 0.0) {
          continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = -1;
        for (std::size_t g = 0; g < bounds_.lower.vectors.size(); ++g) {
          const double v = dot_sparse(child.belief, bounds_.lower.vectors[g].values);
          if (v > best) {
            best = v;
            best_idx = static_cast<int>(g);
          }
        }
        best_alpha_[static_cast<std::size_t>(a) * num_o + static_cast<std::size_t>(o)] =
            best_idx;
      }
    }
    double best_value = -std::numeric_limits<double>::infinity();
    int best_action = 0;
    for (int a = 0; a < num_a; ++a) {
      const SparseMatrix& t = model_.transition[static_cast<std::size_t>(a)];
      const SparseMatrix& z = model_.observation[static_cast<std::size_t>(a)];
      // mcol(s') = sum_o Z(o|s') alpha_{a,o}(s'), then one row-dot per state.
      // Reset matrices and uniform observation rows alias one stored row;
      // identical spans reuse the previous dot.
      for (int s = 0; s < model_.num_states; ++s) {
        const std::span<const SparseMatrix::Entry> row = z.row(s);
        double acc = 0.0;
        for (const SparseMatrix::Entry& e : row) {
          const int g = best_alpha_[static_cast<std::size_t>(a) * num_o +
                                    static_cast<std::size_t>(e.col)];
          if (g >= 0) {
            acc += e.value *
                   bounds_.lower.vectors[static_cast<std::size_t>(g)]
                       .values[static_cast<std::size_t>(s)];
          }
        }
        mcol_[static_cast<std::size_t>(s)] = acc;
      }
      const std::vector<double>& r = model_.reward[static_cast<std::size_t>(a)];
      candidate_.resize(static_cast<std::size_t>(model_.num_states));
      const SparseMatrix::Entry* cached_row = nullptr;
      std::size_t cached_size = 0;
      double cached_dot = 0.0;
      for (int s = 0; s < model_.num_states; ++s) {
        const std::span<const SparseMatrix::Entry> row = t.row(s);
        if (row.data() != cached_row || row.size() != cached_size) {
          double acc = 0.0;
          for (const SparseMatrix::Entry& e : row) {
            acc += e.value * mcol_[static_cast<std::size_t>(e.col)];
          }
          cached_row = row.data();
          cached_size = row.size();
          cached_dot = acc;
        }
        candidate_[static_cast<std::size_t>(s)] =
            r[static_cast<std::size_t>(s)] + model_.discount * cached_dot;
      }
      const double value = dot_sparse(belief, candidate_);
      if (value > best_value) {
        best_value = value;
        best_action = a;
        last_alpha_.swap(candidate_);
      }
    }
    last_action_ = best_action;
    install_lower(belief, best_action, best_value);
    install_upper(belief,
                  expansion.q_upper[static_cast<std::size_t>(expansion.best_upper_action)]);
    return best_value;
  }

  const std::vector<double>& last_alpha() const { return last_alpha_; }

  void prune_points(int max_points) {
    std::vector<SawtoothPoint>& pts = bounds_.points;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].value < pts[i].corner_dot - tol_) {
        keep.push_back(i);
      }
    }
    if (static_cast<int>(keep.size()) > max_points) {
      std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
        return pts[a].value - pts[a].corner_dot < pts[b].value - pts[b].corner_dot;
      });
      keep.resize(static_cast<std::size_t>(max_points));
      std::sort(keep.begin(), keep.end());
    }
    if (keep.size() == pts.size()) {
      return;
    }
    std::vector<SawtoothPoint> kept;
    kept.reserve(keep.size());
    point_owner_.clear();
    for (std::size_t i : keep) {
      point_owner_[pts[i].belief.fingerprint()] = kept.size();
      kept.push_back(std::move(pts[i]));
    }
    pts.swap(kept);
  }

  /// Keeps vectors that support some backed-up belief (witnesses are the
  /// sawtooth point beliefs plus the root), so values at probed beliefs
  /// never drop. Blind vectors are always kept.
  void prune_by_witness(const SparseBelief& root, int blind_count) {
    std::vector<AlphaVector>& vecs = bounds_.lower.vectors;
    if (static_cast<int>(vecs.size()) <= blind_count) {
      return;
    }
    std::vector<bool> keep(vecs.size(), false);
    for (int g = 0; g < blind_count; ++g) {
      keep[static_cast<std::size_t>(g)] = true;
    }
    auto mark_best = [&](const SparseBelief& b) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_idx = 0;
      for (std::size_t g = 0; g < vecs.size(); ++g) {
        const double v = dot_sparse(b, vecs[g].values);
        if (v > best) {
          best = v;
          best_idx = g;
        }
      }
      keep[best_idx] = true;
    };
    mark_best(root);
    for (const SawtoothPoint& point : bounds_.points) {
      mark_best(point.belief);
    }
    std::size_t kept_count = 0;
    for (bool k : keep) {
      kept_count += k ? 1 : 0;
    }
    if (kept_count == vecs.size()) {
      return;
    }
    std::vector<AlphaVector> kept;
    kept.reserve(kept_count);
    std::unordered_map<std::size_t, std::size_t> remap;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      if (keep[i]) {
        remap[i] = kept.size();
        kept.push_back(std::move(vecs[i]));
      }
    }
    vecs.swap(kept);
    for (auto it = owner_.begin(); it != owner_.end();) {
      const auto found = remap.find(it->second);
      if (found == remap.end()) {
        it = owner_.erase(it);
      } else {
        it->second = found->second;
        ++it;
      }
    }
  }

 private:
  void install_lower(const SparseBelief& belief, int action, double value) {
    const std::uint64_t key = belief.fingerprint();
    const auto it = owner_.find(key);
    if (it != owner_.end()) {
      AlphaVector& owned = bounds_.lower.vectors[it->second];
      // Replace the point-owned vector only when the new one is at least as
      // good at its belief: tracked values never regress.
      if (dot_sparse(belief, owned.values) <= value + tol_) {
        owned.values = last_alpha_;
        owned.action = action;
      }
      return;
    }
    owner_[key] = bounds_.lower.vectors.size();
    AlphaVector vec;
    vec.values = last_alpha_;
    vec.action = action;
    bounds_.lower.vectors.push_back(std::move(vec));
  }

  void install_upper(const SparseBelief& belief, double value) {
    const std::uint64_t key = belief.fingerprint();
    const auto it = point_owner_.find(key);
    if (it != point_owner_.end()) {
      SawtoothPoint& point = bounds_.points[it->second];
      point.value = std::min(point.value, value);
      return;
    }
    SawtoothPoint point;
    point.corner_dot = dot_sparse(belief, bounds_.corner_values);
    point.value = value;
    point.belief = belief;
    point_owner_[key] = bounds_.points.size();
    bounds_.points.push_back(std::move(point));
  }

  const DiscretePomdp& model_;
  BoundPair& bounds_;
  double tol_;
  std::vector<double> scratch_;
  std::vector<int> touched_;
  std::vector<std::vector<double>> obs_scratch_;
  std::vector<std::vector<int>> obs_touched_;
  std::vector<double> mcol_;
  std::vector<double> candidate_;
  std::vector<double> last_alpha_;
  int last_action_ = 0;
  std::vector<int> best_alpha_;
  std::unordered_map<std::uint64_t, std::size_t> owner_;
  std::unordered_map<std::uint64_t, std::size_t> point_owner_;
};

}  // namespace

BoundPair initialize_bounds(const DiscretePomdp& model) {
  const RewardRange range = reward_range(model);
  double floor_value;
  double ceiling_value;
  if (model.discount < 1.0) {
    floor_value = std::min(0.0, range.min_reward) / (1.0 - model.discount);
    ceiling_value = std::max(0.0, range.max_reward) / (1.0 - model.discount);
  } else {
    if (model.terminal_states.empty()) {
      throw BoundInitializationError(
          "discount 1 without terminal states: value iteration diverges");
    }
    if (range.max_reward > 0.0) {
      throw BoundInitializationError(
          "discount 1 with positive rewards is not supported");
    }
    // Proper absorbing chain with non-positive rewards; iterates absorb
    // within the state count, so these init values remain valid bounds.
    floor_value = range.min_reward * static_cast<double>(model.num_states + 1);
    ceiling_value = 0.0;
  }
  BoundPair bounds;
  for (int a = 0; a < model.num_actions; ++a) {
    AlphaVector alpha;
    alpha.values = blind_alpha(model, a, floor_value);
    alpha.action = a;
    bounds.lower.vectors.push_back(std::move(alpha));
  }
  bounds.corner_values =
      fib_upper_values(model, mdp_upper_values(model, ceiling_value));
  return bounds;
}

void backup(const DiscretePomdp& model, const BeliefState& belief,
            BoundPair& bounds) {
  Engine engine(model, bounds, bounds.pruning_tol);
  Engine::Expansion expansion;
  engine.backup_at(SparseBelief::from_dense(belief), expansion);
}

SolveResult solve(const DiscretePomdp& model, const SolverConfig& config) {
  {
    const std::vector<Violation> violations = validate(model);
    if (!violations.empty()) {
      throw std::invalid_argument("solve: model invalid: " +
                                  violations.front().message);
    }
  }
  const auto start = Clock::now();
  SolveResult result;
  result.bounds = initialize_bounds(model);
  result.bounds.pruning_tol = config.pruning_tol;
  const int blind_count = model.num_actions;

  Engine engine(model, result.bounds, config.pruning_tol);
  const SparseBelief root = SparseBelief::from_dense(model.initial_belief);
  auto record = [&]() {
    AnytimeRecord rec;
    rec.seconds = seconds_since(start);
    rec.lower = result.bounds.lower_value_at(root);
    rec.upper = result.bounds.upper_value_at(root);
    rec.backups = result.backups;
    result.trace.push_back(rec);
  };
  record();
  if (seconds_since(start) >= config.time_budget_seconds) {
    result.exhausted_before_backup = true;
    result.lower_at_initial = result.trace.back().lower;
    result.upper_at_initial = result.trace.back().upper;
    result.seconds = seconds_since(start);
    return result;
  }
  auto target_eps = [&](double lower_at_root) {
    return std::max(config.target_gap_abs,
                    config.target_gap_rel * std::abs(lower_at_root));
  };

  Engine::Expansion expansion;
  std::int64_t iteration = 0;
  if (config.strategy == SolverConfig::Strategy::gap_driven) {
    std::vector<SparseBelief> path;
    while (true) {
      if (config.max_iterations >= 0 && iteration >= config.max_iterations) {
        break;
      }
      const double lower_root = result.bounds.lower_value_at(root);
      const double upper_root = result.bounds.upper_value_at(root);
      const double eps = target_eps(lower_root);
      if (upper_root - lower_root <= eps) {
        result.converged = true;
        break;
      }
      if (seconds_since(start) >= config.time_budget_seconds) {
        break;
      }
      // Descend toward the largest discount-weighted excess gap. Once the
      // run is past its exploration phase, every other pass follows the
      // current greedy policy instead of the optimistic upper-bound action,
      // concentrating backups where the extracted policy actually lives.
      const bool past_exploration =
          seconds_since(start) > 0.4 * config.time_budget_seconds ||
          (config.max_iterations >= 0 && iteration >= config.max_iterations / 2);
      const bool policy_guided = past_exploration && iteration % 2 == 1;
      path.clear();
      path.push_back(root);
      double depth_scale = 1.0;
      while (static_cast<int>(path.size()) <= config.max_depth) {
        depth_scale /= model.discount;
        engine.expand(path.back(), expansion);
        const int a_star = policy_guided
                               ? result.bounds.lower_best_action(path.back())
                               : expansion.best_upper_action;
        double best_excess = 0.0;
        int best_o = -1;
        for (int o = 0; o < model.num_observations; ++o) {
          const Engine::Child& child =
              expansion.children[static_cast<std::size_t>(a_star) *
                                     model.num_observations +
                                 static_cast<std::size_t>(o)];
          if (child.probability <= 0.0) {
            continue;
          }
          const double child_gap = result.bounds.upper_value_at(child.belief) -
                                   result.bounds.lower_value_at(child.belief);
          const double excess = child.probability * (child_gap - eps * depth_scale);
          if (excess > best_excess) {
            best_excess = excess;
            best_o = o;
          }
        }
        if (best_o < 0) {
          break;
        }
        path.push_back(std::move(
            expansion.children[static_cast<std::size_t>(a_star) *
                                   model.num_observations +
                               static_cast<std::size_t>(best_o)]
                .belief));
      }
      for (int pass = 0; pass < std::max(1, config.backup_passes); ++pass) {
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
          engine.backup_at(*it, expansion);
          ++result.backups;
        }
      }
      ++iteration;
      if (iteration % 16 == 0) {
        engine.prune_points(config.max_belief_points);
      }
      if (iteration % 64 == 0) {
        engine.prune_by_witness(root, blind_count);
      }
      record();
    }
  } else {
    // Random-reachable strategy: backups sweep a sampled belief set in
    // random order until every sampled belief improved.
    RngStream rng(config.seed, 0);
    std::vector<SparseBelief> beliefs;
    beliefs.push_back(root);
    std::vector<double> scratch(static_cast<std::size_t>(model.num_states), 0.0);
    while (static_cast<int>(beliefs.size()) < config.reachable_set_size) {
      SparseBelief current = root;
      for (int d = 0; d < config.sample_depth &&
                      static_cast<int>(beliefs.size()) < config.reachable_set_size;
           ++d) {
        const int a = static_cast<int>(
            rng.next_below(static_cast<std::uint64_t>(model.num_actions)));
        std::vector<int> touched;
        for (std::size_t i = 0; i < current.index.size(); ++i) {
          for (const SparseMatrix::Entry& e :
               model.transition[static_cast<std::size_t>(a)].row(current.index[i])) {
            if (scratch[static_cast<std::size_t>(e.col)] == 0.0) {
              touched.push_back(e.col);
            }
            scratch[static_cast<std::size_t>(e.col)] += current.value[i] * e.value;
          }
        }
        std::sort(touched.begin(), touched.end());
        std::vector<double> obs_probs(
            static_cast<std::size_t>(model.num_observations), 0.0);
        for (int s : touched) {
          for (const SparseMatrix::Entry& e :
               model.observation[static_cast<std::size_t>(a)].row(s)) {
            obs_probs[static_cast<std::size_t>(e.col)] +=
                scratch[static_cast<std::size_t>(s)] * e.value;
          }
        }
        double total = 0.0;
        for (double p : obs_probs) {
          total += p;
        }
        double u = rng.next_double() * total;
        int obs = 0;
        for (int k = 0; k < model.num_observations; ++k) {
          u -= obs_probs[static_cast<std::size_t>(k)];
          if (u <= 0.0) {
            obs = k;
            break;
          }
        }
        SparseBelief next;
        double norm = 0.0;
        for (int s : touched) {
          double mass = scratch[static_cast<std::size_t>(s)];
          scratch[static_cast<std::size_t>(s)] = 0.0;
          double like = 0.0;
          for (const SparseMatrix::Entry& e :
               model.observation[static_cast<std::size_t>(a)].row(s)) {
            if (e.col == obs) {
              like = e.value;
              break;
            }
          }
          mass *= like;
          if (mass > kDropMass) {
            next.index.push_back(s);
            next.value.push_back(mass);
            norm += mass;
          }
        }
        if (!(norm > 0.0)) {
          break;
        }
        for (double& p : next.value) {
          p /= norm;
        }
        beliefs.push_back(next);
        current = std::move(next);
      }
    }
    std::vector<double> values(beliefs.size(), 0.0);
    std::vector<std::size_t> order(beliefs.size());
    std::vector<bool> improved(beliefs.size(), false);
    while (true) {
      if (config.max_iterations >= 0 && iteration >= config.max_iterations) {
        break;
      }
      const double lower_root = result.bounds.lower_value_at(root);
      const double upper_root = result.bounds.upper_value_at(root);
      if (upper_root - lower_root <= target_eps(lower_root)) {
        result.converged = true;
        break;
      }
      if (seconds_since(start) >= config.time_budget_seconds) {
        break;
      }
      for (std::size_t i = 0; i < beliefs.size(); ++i) {
        values[i] = result.bounds.lower_value_at(beliefs[i]);
        order[i] = i;
        improved[i] = false;
      }
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.next_below(i))]);
      }
      for (std::size_t pick : order) {
        if (improved[pick]) {
          continue;
        }
        if (seconds_since(start) >= config.time_budget_seconds) {
          break;
        }
        engine.backup_at(beliefs[pick], expansion);
        ++result.backups;
        improved[pick] = true;
        // The fresh vector witnesses improvement wherever it reaches the
        // sweep-start value.
        const std::vector<double>& alpha = engine.last_alpha();
        for (std::size_t i = 0; i < beliefs.size(); ++i) {
          if (!improved[i] && dot_sparse(beliefs[i], alpha) >= values[i] - 1e-12) {
            improved[i] = true;
          }
        }
      }
      engine.backup_at(root, expansion);
      ++result.backups;
      ++iteration;
      engine.prune_points(config.max_belief_points);
      record();
    }
  }
  // Final compaction: keep the vectors supporting the sampled beliefs, so
  // extracted policies stay cheap to evaluate.
  engine.prune_points(config.max_belief_points);
  engine.prune_by_witness(root, blind_count);
  record();
  result.lower_at_initial = result.trace.back().lower;
  result.upper_at_initial = result.trace.back().upper;
  result.seconds = seconds_since(start);
  return result;
}

Policy extract_policy(const BoundPair& bounds) {
  if (bounds.lower.empty()) {
    throw UninitializedPolicyError();
  }
  return Policy(bounds.lower);
}

void save_policy(const Policy& policy, std::ostream& out) {
  const AlphaVectorSet& set = policy.alphas();
  const int states = set.vectors.empty()
                         ? 0
                         : static_cast<int>(set.vectors.front().values.size());
  out << "implan-alpha 1\n" << set.vectors.size() << ' ' << states << "\n";
  char buf[40];
  for (const AlphaVector& alpha : set.vectors) {
    out << alpha.action;
    for (double v : alpha.values) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      out << buf;
    }
    out << "\n";
  }
}

Policy load_policy(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "implan-alpha" || version != 1) {
    throw std::runtime_error("load_policy: unrecognized policy file header");
  }
  std::size_t count = 0;
  int states = 0;
  in >> count >> states;
  AlphaVectorSet set;
  for (std::size_t i = 0; i < count; ++i) {
    AlphaVector alpha;
    in >> alpha.action;
    alpha.values.resize(static_cast<std::size_t>(states));
    for (double& v : alpha.values) {
      in >> v;
    }
    if (!in) {
      throw std::runtime_error("load_policy: truncated policy file");
    }
    set.vectors.push_back(std::move(alpha));
  }
  return Policy(std::move(set));
}

}  // namespace implan
