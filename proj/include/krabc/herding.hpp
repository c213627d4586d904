#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "krabc/errors.hpp"
#include "krabc/kabc.hpp"
#include "krabc/kernels.hpp"
#include "krabc/random.hpp"
#include "krabc/types.hpp"

namespace krabc {

/// How the per-round argmax over parameter space is approximated.
///
/// Each round evaluates the source particles lying in `box`, `pool_size`
/// uniform draws from the box and `pool_size` Gaussian perturbations of the
/// incumbent (scale `perturb_scale` times the box width), then runs
/// `refine_steps` rounds of `refine_pool` perturbations whose scale halves
/// every step. Candidates are clipped to the box.
struct SearchConfig {
  std::vector<Interval> box;
  int pool_size = 128;
  int refine_steps = 8;
  int refine_pool = 16;
  double perturb_scale = 0.1;

  void validate(Eigen::Index dim) const {
    if (static_cast<Eigen::Index>(box.size()) != dim)
      throw ContractViolation("SearchConfig: box has " + std::to_string(box.size()) + " dimensions, expected " +
                              std::to_string(dim));
    for (std::size_t i = 0; i < box.size(); ++i)
      if (!box[i].finite() || !(box[i].lo < box[i].hi))
        throw ContractViolation("SearchConfig: box dimension " + std::to_string(i) + " must be finite with lo < hi");
    if (pool_size < 0 || refine_steps < 0 || refine_pool < 0 || !(perturb_scale > 0.0))
      throw ContractViolation("SearchConfig: negative pool sizes or non-positive perturbation scale");
  }
};

/// Herding residual: the source embedding plus the points selected so far.
class HerdingState {
 public:
  explicit HerdingState(WeightedParticleSet source) : source_(std::move(source)) {}

  const WeightedParticleSet& source() const noexcept { return source_; }
  const PointList& selected() const noexcept { return selected_; }
  const KernelConfig& kernel() const noexcept { return source_.kernel; }

  /// sum_i w_i k(theta, theta_i) - (1 / (t + 1)) sum_{j <= t} k(theta, s_j), t = |selected|.
  double objective(const Vector& theta) const {
    if (theta.size() != source_.dim()) throw ContractViolation("herding objective: parameter dimension mismatch");
    return source_(theta) - repulsion(theta) / static_cast<double>(selected_.size() + 1);
  }

  double repulsion(const Vector& theta) const {
    double s = 0.0;
    for (const auto& p : selected_) s += source_.kernel((theta - p).squaredNorm());
    return s;
  }

  void accept(Vector theta) { selected_.push_back(std::move(theta)); }

 private:
  WeightedParticleSet source_;
  PointList selected_;
};

struct HerdingRound {
  double accepted_objective = 0.0;  // recomputed from the herding state, not the candidate cache
  double best_evaluated = 0.0;  // max objective over every candidate of the round
  std::size_t evaluated = 0;
};

struct HerdResult {
  PointList points;
  std::vector<HerdingRound> rounds;
};

namespace detail {

inline void clip_to_box(Vector& v, const std::vector<Interval>& box) {
  for (Eigen::Index d = 0; d < v.size(); ++d) v(d) = std::clamp(v(d), box[d].lo, box[d].hi);
}

inline bool inside_box(const Vector& v, const std::vector<Interval>& box) {
  for (Eigen::Index d = 0; d < v.size(); ++d)
    if (!box[d].contains(v(d))) return false;
  return true;
}

}  // namespace detail

/// Greedy kernel herding of `count` points from the embedding `source`.
/// Deterministic in (source, count, search, seed); ties go to the earliest
/// evaluated candidate.
inline HerdResult herd(const WeightedParticleSet& source, int count, const SearchConfig& search, std::uint64_t seed) {
  if (count < 1) throw ContractViolation("herd: count must be >= 1");
  const Eigen::Index dim = source.dim();
  search.validate(dim);

  const auto& box = search.box;
  // Source particles in the box are candidates every round; their embedding
  // values are fixed and their repulsion sums are updated incrementally.
  PointList fixed;
  std::vector<double> fixed_mu, fixed_rep;
  for (const auto& p : source.particles) {
    if (!detail::inside_box(p, box)) continue;
    fixed.push_back(p);
    fixed_mu.push_back(source(p));
    fixed_rep.push_back(0.0);
  }
  if (fixed.empty() && search.pool_size == 0 && search.refine_pool * search.refine_steps == 0)
    throw ContractViolation("herd: empty candidate pool");

  HerdingState state(source);
  HerdResult out;
  out.points.reserve(static_cast<std::size_t>(count));
  out.rounds.reserve(static_cast<std::size_t>(count));

  Vector width(dim);
  for (Eigen::Index d = 0; d < dim; ++d) width(d) = box[d].width();

  for (int t = 0; t < count; ++t) {
    auto rng = make_rng(derive_seed({seed, static_cast<std::uint64_t>(t)}));
    const double inv = 1.0 / static_cast<double>(t + 1);
    double best = -std::numeric_limits<double>::infinity();
    Vector incumbent;
    std::size_t evaluated = 0;
    auto consider = [&](const Vector& cand, double value) {
      ++evaluated;
      if (value > best) {
        best = value;
        incumbent = cand;
      }
    };

    for (std::size_t i = 0; i < fixed.size(); ++i) consider(fixed[i], fixed_mu[i] - inv * fixed_rep[i]);

    Vector cand(dim);
    for (int k = 0; k < search.pool_size; ++k) {
      for (Eigen::Index d = 0; d < dim; ++d) cand(d) = box[d].lo + uniform01(rng) * width(d);
      consider(cand, state.objective(cand));
    }
    if (incumbent.size() == 0) {
      // Only perturbation candidates were requested: start from the box centre.
      for (Eigen::Index d = 0; d < dim; ++d) cand(d) = box[d].lo + 0.5 * width(d);
      consider(cand, state.objective(cand));
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    auto perturb_round = [&](int draws, double scale) {
      const Vector centre = incumbent;
      for (int k = 0; k < draws; ++k) {
        for (Eigen::Index d = 0; d < dim; ++d) cand(d) = centre(d) + scale * width(d) * gauss(rng);
        detail::clip_to_box(cand, box);
        consider(cand, state.objective(cand));
      }
    };
    perturb_round(search.pool_size, search.perturb_scale);
    double scale = search.perturb_scale;
    for (int s = 0; s < search.refine_steps; ++s) {
      scale *= 0.5;
      perturb_round(search.refine_pool, scale);
    }

    out.rounds.push_back({state.objective(incumbent), best, evaluated});
    for (std::size_t i = 0; i < fixed.size(); ++i) fixed_rep[i] += source.kernel((fixed[i] - incumbent).squaredNorm());
    state.accept(incumbent);
    out.points.push_back(std::move(incumbent));
  }
  return out;
}

}  // namespace krabc
