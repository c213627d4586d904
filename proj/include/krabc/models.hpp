#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>

#include "krabc/errors.hpp"
#include "krabc/random.hpp"
#include "krabc/types.hpp"

namespace krabc {

// ---------------------------------------------------------------------------
// Simulators
// ---------------------------------------------------------------------------

/// Noiseless simulator y = theta (one observation).
inline Dataset sim_identity(const ParamPoint& theta) { return theta.transpose(); }

/// n_obs i.i.d. draws from Normal(theta, cov_diag * I).
inline Dataset sim_gaussian_mean(const ParamPoint& theta, int n_obs, double cov_diag, std::uint64_t seed) {
  if (n_obs < 1) throw ContractViolation("sim_gaussian_mean: n_obs must be >= 1");
  if (!(cov_diag > 0.0)) throw ContractViolation("sim_gaussian_mean: cov_diag must be positive");
  if (!theta.allFinite()) throw InvalidParameter("sim_gaussian_mean: non-finite mean");
  auto rng = make_rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double sd = std::sqrt(cov_diag);
  Dataset out(n_obs, theta.size());
  for (int i = 0; i < n_obs; ++i)
    for (Eigen::Index d = 0; d < theta.size(); ++d) out(i, d) = theta(d) + sd * z(rng);
  return out;
}

// Blowfly population dynamics --------------------------------------------------

struct BlowflyParams {
  long P = 1;
  long N0 = 1;
  double sigma_d = 1.0;
  double sigma_p = 1.0;
  long tau = 1;
  double delta = 1.0;

  /// From (P, N0, sigma_d, sigma_p, tau, delta); the integer coordinates are
  /// rounded to the nearest positive integer.
  static BlowflyParams from(const ParamPoint& theta) {
    if (theta.size() != 6) throw ContractViolation("blowfly: expected 6 parameters");
    if (!theta.allFinite()) throw InvalidParameter("blowfly: non-finite parameter");
    auto positive_int = [](double v) {
      if (v > 1e18) throw InvalidParameter("blowfly: integer parameter out of range");
      return std::max(1L, std::lround(v));
    };
    BlowflyParams p{positive_int(theta(0)), positive_int(theta(1)), theta(2), theta(3), positive_int(theta(4)), theta(5)};
    if (!(p.sigma_d > 0.0) || !(p.sigma_p > 0.0) || !(p.delta > 0.0))
      throw InvalidParameter("blowfly: sigma_d, sigma_p and delta must be positive");
    for (double s : {p.sigma_d, p.sigma_p})
      if (!(s * s > 0.0) || !std::isfinite(1.0 / (s * s)) || !std::isfinite(s * s))
        throw InvalidParameter("blowfly: noise scale out of range");
    return p;
  }
};

/// One step of N_{t+1} = P N_{t-tau} exp(-N_{t-tau} / N0) e_t + N_t exp(-delta eps_t).
inline double blowfly_step(const BlowflyParams& p, double n_lagged, double n_now, double e_t, double eps_t) {
  return static_cast<double>(p.P) * n_lagged * std::exp(-n_lagged / static_cast<double>(p.N0)) * e_t +
         n_now * std::exp(-p.delta * eps_t);
}

/// Mean-one Gamma noise: shape 1/sigma^2, scale sigma^2.
inline std::gamma_distribution<double> unit_mean_gamma(double sigma) {
  return std::gamma_distribution<double>(1.0 / (sigma * sigma), sigma * sigma);
}

inline constexpr long kBlowflyMaxTau = 100000;

/// Blowfly series N_1..N_T (one column) after discarding burn_in steps.
///
/// The first tau + 1 values are 100 times independent unit-mean Gamma draws
/// (process noise); the recurrence then runs burn_in + T further steps.
inline Dataset sim_blowfly(const ParamPoint& theta, int T, int burn_in, std::uint64_t seed) {
  if (T < 1 || burn_in < 0) throw ContractViolation("sim_blowfly: T must be >= 1 and burn_in >= 0");
  const auto p = BlowflyParams::from(theta);
  if (p.tau > kBlowflyMaxTau) throw InvalidParameter("blowfly: tau too large");
  auto rng = make_rng(seed);
  auto e_noise = unit_mean_gamma(p.sigma_p);
  auto eps_noise = unit_mean_gamma(p.sigma_d);

  const auto lag = static_cast<std::size_t>(p.tau);
  const std::size_t steps = static_cast<std::size_t>(burn_in) + static_cast<std::size_t>(T);
  std::vector<double> n;
  n.reserve(lag + 1 + steps);
  for (std::size_t i = 0; i <= lag; ++i) n.push_back(100.0 * e_noise(rng));
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = n.size() - 1;
    const double e_t = e_noise(rng);
    const double eps_t = eps_noise(rng);
    const double next = blowfly_step(p, n[t - lag], n[t], e_t, eps_t);
    if (!std::isfinite(next) || next > 1e300) throw SimulationDiverged("blowfly: population overflow");
    n.push_back(next);
  }
  Dataset out(T, 1);
  const std::size_t first = n.size() - static_cast<std::size_t>(T);
  for (int i = 0; i < T; ++i) out(i, 0) = n[first + static_cast<std::size_t>(i)];
  return out;
}

// Alpha-stable (Chambers-Mallows-Stuck map) -----------------------------------

inline double cms_B(double alpha, double beta) {
  return std::atan(beta * std::tan(std::numbers::pi * alpha / 2.0)) / alpha;
}

inline double cms_S(double alpha, double beta) {
  const double t = std::tan(std::numbers::pi * alpha / 2.0);
  return std::pow(1.0 + beta * beta * t * t, 1.0 / (2.0 * alpha));
}

/// Standardised CMS map tau_{alpha,beta}(U1, U2) for U1 in (-pi/2, pi/2), U2 > 0.
inline double cms_tau(double alpha, double beta, double u1, double u2) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  if (alpha == 1.0) {
    const double a = half_pi + beta * u1;
    return (2.0 / std::numbers::pi) * (a * std::tan(u1) - beta * std::log((u2 * std::cos(u1)) / a));
  }
  const double b = cms_B(alpha, beta);
  const double s = cms_S(alpha, beta);
  const double shifted = alpha * (u1 + b);
  return s * std::sin(shifted) / std::pow(std::cos(u1), 1.0 / alpha) *
         std::pow(std::cos(u1 - shifted) / u2, (1.0 - alpha) / alpha);
}

/// sigma * tau_{alpha,beta}(U1, U2) + mu.
inline double cms_map(double alpha, double beta, double mu, double sigma, double u1, double u2) {
  return sigma * cms_tau(alpha, beta, u1, u2) + mu;
}

/// Law of the amplitude A in X = A^{1/2} G.
enum class AmplitudeLaw {
  Verbatim,   // A = tau_theta(U1, U2) with (alpha, beta = 1, mu = 0, sigma = 1)
  HalfAlpha,  // A ~ S(alpha/2, 1, 2 cos(pi alpha / 4)^{2/alpha}, 0), always positive
};

inline constexpr int kAmplitudeMaxRetries = 100;

struct AlphaStableStats {
  long resampled = 0;  // amplitude draws rejected for a non-finite square root
};

inline bool alpha_stable_q_positive_definite(double q_diag, double q_offdiag, int d) {
  return q_diag > 0.0 && q_diag - q_offdiag > 0.0 && q_diag + (d - 1) * q_offdiag > 0.0;
}

/// n_obs draws of A^{1/2} G with G ~ Normal(0, Q), Q = q_offdiag everywhere
/// except q_diag on the diagonal, theta = (alpha, q_diag, q_offdiag).
inline Dataset sim_alpha_stable(const ParamPoint& theta, int d, int n_obs, std::uint64_t seed,
                                AmplitudeLaw law = AmplitudeLaw::Verbatim, AlphaStableStats* stats = nullptr) {
  if (theta.size() != 3) throw ContractViolation("sim_alpha_stable: expected (alpha, q_diag, q_offdiag)");
  if (d < 1 || n_obs < 1) throw ContractViolation("sim_alpha_stable: d and n_obs must be >= 1");
  const double alpha = theta(0), qd = theta(1), qo = theta(2);
  if (!theta.allFinite() || !(alpha > 0.0) || alpha > 2.0)
    throw InvalidParameter("sim_alpha_stable: alpha must lie in (0, 2]");
  if (!alpha_stable_q_positive_definite(qd, qo, d))
    throw InvalidParameter("sim_alpha_stable: Q is not positive definite");
  Matrix q = Matrix::Constant(d, d, qo);
  q.diagonal().setConstant(qd);
  const Matrix l = Eigen::LLT<Matrix>(q).matrixL();

  double a_alpha = alpha, a_sigma = 1.0;
  if (law == AmplitudeLaw::HalfAlpha) {
    a_alpha = alpha / 2.0;
    a_sigma = 2.0 * std::pow(std::cos(std::numbers::pi * alpha / 4.0), 2.0 / alpha);
  }

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset out(n_obs, d);
  Vector g(d);
  for (int i = 0; i < n_obs; ++i) {
    double root = std::numeric_limits<double>::quiet_NaN();
    for (int attempt = 0; attempt <= kAmplitudeMaxRetries; ++attempt) {
      const double a = cms_map(a_alpha, 1.0, 0.0, a_sigma, unif(rng), expo(rng));
      root = std::sqrt(a);
      if (std::isfinite(root)) break;
      if (stats) ++stats->resampled;
    }
    if (!std::isfinite(root)) throw SimulationDiverged("sim_alpha_stable: amplitude retries exhausted");
    for (int k = 0; k < d; ++k) g(k) = z(rng);
    out.row(i) = (root * (l * g)).transpose();
  }
  return out;
}

// Gaussian mixture -------------------------------------------------------------

/// n_obs draws from sum_i phi_i Normal(mu_i, sd^2).
inline Dataset sim_gaussian_mixture(const Vector& phi, const Vector& mu, double sd, int n_obs, std::uint64_t seed) {
  if (phi.size() != mu.size() || phi.size() == 0) throw ContractViolation("sim_gaussian_mixture: |phi| != |mu|");
  if (n_obs < 1 || !(sd > 0.0)) throw ContractViolation("sim_gaussian_mixture: need n_obs >= 1 and sd > 0");
  if ((phi.array() < 0.0).any() || std::abs(phi.sum() - 1.0) > 1e-9 || !phi.allFinite())
    throw InvalidParameter("sim_gaussian_mixture: phi is not on the simplex");
  if (!mu.allFinite()) throw InvalidParameter("sim_gaussian_mixture: non-finite component mean");
  auto rng = make_rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset out(n_obs, 1);
  const Eigen::Index k = phi.size();
  for (int i = 0; i < n_obs; ++i) {
    const double u = uniform01(rng);
    double cum = 0.0;
    Eigen::Index c = k - 1;
    for (Eigen::Index j = 0; j < k; ++j) {
      cum += phi(j);
      if (u < cum) {
        c = j;
        break;
      }
    }
    while (phi(c) == 0.0 && c > 0) --c;  // rounding in the cumulative sum must not select an empty component
    out(i, 0) = mu(c) + sd * z(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

struct UniformBoxPrior {
  Vector lo, hi;
};

/// theta_i = exp(loc_i + scale_i * eps_i), eps_i ~ Normal(0, 1).
struct LogNormalPrior {
  Vector loc, scale;
};

/// scale * Dirichlet(concentration, ..., concentration) with `size` components.
struct DirichletPrior {
  int size = 1;
  double concentration = 1.0;
  double scale = 1.0;
};

/// Independent Normal(mean_i, var_i) coordinates.
struct NormalPrior {
  Vector mean, var;
};

using PriorBlock = std::variant<UniformBoxPrior, LogNormalPrior, DirichletPrior, NormalPrior>;

/// Product of independent blocks; the parameter vector is their concatenation.
struct PriorSpec {
  std::vector<PriorBlock> blocks;

  int dim() const {
    int d = 0;
    for (const auto& b : blocks)
      d += std::visit(
          [](const auto& p) -> int {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, UniformBoxPrior>) return static_cast<int>(p.lo.size());
            else if constexpr (std::is_same_v<T, LogNormalPrior>) return static_cast<int>(p.loc.size());
            else if constexpr (std::is_same_v<T, DirichletPrior>) return p.size;
            else return static_cast<int>(p.mean.size());
          },
          b);
    return d;
  }

  void validate() const {
    if (blocks.empty()) throw ContractViolation("prior: no blocks");
    for (const auto& b : blocks)
      std::visit(
          [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, UniformBoxPrior>) {
              if (p.lo.size() != p.hi.size() || p.lo.size() == 0) throw ContractViolation("prior: uniform bounds size mismatch");
              if (!p.lo.allFinite() || !p.hi.allFinite() || !(p.lo.array() < p.hi.array()).all())
                throw ContractViolation("prior: uniform bounds must be finite with lo < hi");
            } else if constexpr (std::is_same_v<T, LogNormalPrior>) {
              if (p.loc.size() != p.scale.size() || p.loc.size() == 0) throw ContractViolation("prior: log-normal size mismatch");
              if (!(p.scale.array() > 0.0).all()) throw ContractViolation("prior: log-normal scales must be positive");
            } else if constexpr (std::is_same_v<T, DirichletPrior>) {
              if (p.size < 1 || !(p.concentration > 0.0) || !(p.scale > 0.0))
                throw ContractViolation("prior: Dirichlet needs size >= 1 and positive concentration/scale");
            } else {
              if (p.mean.size() != p.var.size() || p.mean.size() == 0) throw ContractViolation("prior: normal size mismatch");
              if (!(p.var.array() > 0.0).all()) throw ContractViolation("prior: normal variances must be positive");
            }
          },
          b);
  }
};

inline ParamPoint sample_prior(const PriorSpec& spec, Rng& rng) {
  ParamPoint out(spec.dim());
  Eigen::Index at = 0;
  std::normal_distribution<double> z(0.0, 1.0);
  for (const auto& b : spec.blocks) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, UniformBoxPrior>) {
            for (Eigen::Index i = 0; i < p.lo.size(); ++i) out(at++) = p.lo(i) + uniform01(rng) * (p.hi(i) - p.lo(i));
          } else if constexpr (std::is_same_v<T, LogNormalPrior>) {
            for (Eigen::Index i = 0; i < p.loc.size(); ++i) out(at++) = std::exp(p.loc(i) + p.scale(i) * z(rng));
          } else if constexpr (std::is_same_v<T, DirichletPrior>) {
            std::vector<double> lg(static_cast<std::size_t>(p.size));
            for (auto& v : lg) v = log_gamma_variate(p.concentration, rng);
            const double m = *std::max_element(lg.begin(), lg.end());
            double total = 0.0;
            for (auto& v : lg) total += (v = std::exp(v - m));
            for (double v : lg) out(at++) = p.scale * v / total;
          } else {
            for (Eigen::Index i = 0; i < p.mean.size(); ++i) out(at++) = p.mean(i) + std::sqrt(p.var(i)) * z(rng);
          }
        },
        b);
  }
  return out;
}

inline ParamPoint sample_prior(const PriorSpec& spec, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return sample_prior(spec, rng);
}

// ---------------------------------------------------------------------------
// Summarizers
// ---------------------------------------------------------------------------

enum class SummaryKind {
  Identity,   // all observations flattened row by row
  Mean,       // per-coordinate sample mean
  Histogram,  // per-coordinate normalised histogram over fixed bins
  Quantiles,  // asinh of quantiles of coordinate and pairwise sum/difference projections
};

struct Summarizer {
  SummaryKind kind = SummaryKind::Identity;
  int bins = 0;
  std::vector<Interval> ranges;  // histogram only; one per coordinate, empty = fit to observed data
  std::vector<double> levels{0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};  // quantiles only

  void validate() const {
    if (kind == SummaryKind::Histogram) {
      if (bins < 1) throw ContractViolation("summarizer: histogram needs bins >= 1");
      for (const auto& r : ranges)
        if (!r.finite() || !(r.lo < r.hi)) throw ContractViolation("summarizer: histogram range needs finite lo < hi");
    }
    if (kind == SummaryKind::Quantiles) {
      if (levels.empty()) throw ContractViolation("summarizer: no quantile levels");
      for (double q : levels)
        if (!(q >= 0.0 && q <= 1.0)) throw ContractViolation("summarizer: quantile levels must lie in [0, 1]");
    }
  }
};

/// Resolves missing histogram ranges to the per-coordinate [min, max] of the
/// observed data.
inline Summarizer fit_summarizer(Summarizer s, const Dataset& observed) {
  if (s.kind != SummaryKind::Histogram || !s.ranges.empty()) return s;
  for (Eigen::Index c = 0; c < observed.cols(); ++c) {
    double lo = observed.col(c).minCoeff(), hi = observed.col(c).maxCoeff();
    if (!(lo < hi)) {
      lo -= 0.5;
      hi += 0.5;
    }
    s.ranges.push_back({lo, hi});
  }
  return s;
}

namespace detail {

inline double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + frac * (v[i + 1] - v[i]);
}

}  // namespace detail

inline Vector summarize(const Dataset& data, const Summarizer& s) {
  if (data.rows() == 0) throw ContractViolation("summarize: empty dataset");
  switch (s.kind) {
    case SummaryKind::Identity: {
      Vector out(data.size());
      Eigen::Index at = 0;
      for (Eigen::Index r = 0; r < data.rows(); ++r)
        for (Eigen::Index c = 0; c < data.cols(); ++c) out(at++) = data(r, c);
      return out;
    }
    case SummaryKind::Mean:
      return data.colwise().mean().transpose();
    case SummaryKind::Histogram: {
      if (static_cast<Eigen::Index>(s.ranges.size()) != data.cols())
        throw ContractViolation("summarize: histogram ranges unresolved or wrong dimension");
      Vector out = Vector::Zero(data.cols() * s.bins);
      const double inv_n = 1.0 / static_cast<double>(data.rows());
      for (Eigen::Index c = 0; c < data.cols(); ++c) {
        const auto& r = s.ranges[static_cast<std::size_t>(c)];
        std::vector<long> counts(static_cast<std::size_t>(s.bins), 0);
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
          const double x = data(i, c);
          long b = std::isnan(x) ? s.bins - 1 : static_cast<long>(std::floor((x - r.lo) / r.width() * s.bins));
          b = std::clamp(b, 0L, static_cast<long>(s.bins - 1));
          ++counts[static_cast<std::size_t>(b)];
        }
        for (int b = 0; b < s.bins; ++b) out(c * s.bins + b) = static_cast<double>(counts[static_cast<std::size_t>(b)]) * inv_n;
      }
      return out;
    }
    case SummaryKind::Quantiles: {
      std::vector<Vector> proj;
      for (Eigen::Index c = 0; c < data.cols(); ++c) proj.push_back(data.col(c));
      const double r2 = 1.0 / std::sqrt(2.0);
      for (Eigen::Index a = 0; a < data.cols(); ++a)
        for (Eigen::Index b = a + 1; b < data.cols(); ++b) {
          proj.push_back(r2 * (data.col(a) + data.col(b)));
          proj.push_back(r2 * (data.col(a) - data.col(b)));
        }
      Vector out(static_cast<Eigen::Index>(proj.size() * s.levels.size()));
      Eigen::Index at = 0;
      for (const auto& p : proj) {
        std::vector<double> v(p.data(), p.data() + p.size());
        std::sort(v.begin(), v.end());
        for (double q : s.levels) out(at++) = std::asinh(detail::quantile_sorted(v, q));
      }
      return out;
    }
  }
  throw ContractViolation("summarize: unknown summary kind");
}

/// Summary assigned to a simulation that diverged: the top histogram bin of
/// every coordinate. Other summary kinds have no natural "far away" point and
/// return nullopt; drivers then drop the particle from the embedding.
inline std::optional<Vector> diverged_summary(const Summarizer& s, Eigen::Index obs_dim) {
  if (s.kind != SummaryKind::Histogram) return std::nullopt;
  Vector out = Vector::Zero(obs_dim * s.bins);
  for (Eigen::Index c = 0; c < obs_dim; ++c) out(c * s.bins + s.bins - 1) = 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Simulator specifications
// ---------------------------------------------------------------------------

/// A seeded simulator plus the metadata the driver needs.
///
/// The driver works in "working" coordinates: log(theta_i) where log_scale[i]
/// is set, theta_i otherwise, divided by unit[i] when `unit` is non-empty. `bounds` are in working coordinates. The
/// natural parameter handed to `simulate` has integer coordinates rounded and
/// the optional simplex block normalised.
struct SimulatorSpec {
  std::string name;
  int param_dim = 1;
  int obs_dim = 1;
  std::vector<std::string> param_names;
  std::vector<bool> integer_mask;
  std::vector<bool> log_scale;
  std::vector<Interval> bounds;
  std::vector<double> unit;  // empty: 1 for every coordinate
  std::optional<std::pair<int, int>> simplex;  // (first coordinate, count)
  std::function<Dataset(const ParamPoint& natural, std::uint64_t seed)> simulate;

  void validate() const {
    if (param_dim < 1 || obs_dim < 1) throw ContractViolation("simulator: param_dim and obs_dim must be >= 1");
    const auto n = static_cast<std::size_t>(param_dim);
    if (integer_mask.size() != n || log_scale.size() != n || bounds.size() != n || param_names.size() != n)
      throw ContractViolation("simulator: metadata arrays must have param_dim entries");
    if (!unit.empty()) {
      if (unit.size() != n) throw ContractViolation("simulator: unit must be empty or have param_dim entries");
      for (double u : unit)
        if (!(u > 0.0) || !std::isfinite(u)) throw ContractViolation("simulator: unit entries must be positive");
    }
    if (simplex && (simplex->first < 0 || simplex->second < 1 || simplex->first + simplex->second > param_dim))
      throw ContractViolation("simulator: simplex block out of range");
    if (!simulate) throw ContractViolation("simulator: no simulate function");
  }
};

inline ParamPoint to_natural(const SimulatorSpec& spec, const ParamPoint& working) {
  ParamPoint out = working;
  for (int i = 0; i < spec.param_dim; ++i) {
    if (!spec.unit.empty()) out(i) *= spec.unit[static_cast<std::size_t>(i)];
    if (spec.log_scale[static_cast<std::size_t>(i)]) out(i) = std::exp(out(i));
    if (spec.integer_mask[static_cast<std::size_t>(i)]) {
      out(i) = std::round(out(i));
      if (spec.log_scale[static_cast<std::size_t>(i)]) out(i) = std::max(1.0, out(i));
    }
  }
  if (spec.simplex) {
    auto block = out.segment(spec.simplex->first, spec.simplex->second);
    block = block.cwiseMax(0.0);
    const double total = block.sum();
    if (total > 0.0) block /= total;
    else block.setConstant(1.0 / static_cast<double>(block.size()));
  }
  return out;
}

inline ParamPoint to_working(const SimulatorSpec& spec, const ParamPoint& natural) {
  ParamPoint out = natural;
  for (int i = 0; i < spec.param_dim; ++i) {
    if (spec.log_scale[static_cast<std::size_t>(i)]) {
      if (!(natural(i) > 0.0)) throw InvalidParameter("to_working: log-scale coordinate must be positive");
      out(i) = std::log(natural(i));
    }
    if (!spec.unit.empty()) out(i) /= spec.unit[static_cast<std::size_t>(i)];
  }
  return out;
}

enum class SimulatorKind { Identity, GaussianMean, Blowfly, AlphaStable, GaussianMixture };

/// Serializable description of a built-in simulator.
struct SimulatorConfig {
  SimulatorKind kind = SimulatorKind::Identity;
  int dim = 1;              // identity, gaussian-mean: parameter dimension; alpha-stable: observation dimension
  int n_obs = 100;          // gaussian-mean, alpha-stable, mixture
  double cov_diag = 40.0;   // gaussian-mean
  int T = 1000;             // blowfly
  int burn_in = 50;         // blowfly
  AmplitudeLaw amplitude = AmplitudeLaw::Verbatim;  // alpha-stable
  int components = 4;       // mixture
  double component_var = 20.0;  // mixture; Normal(mu, 20) read as variance 20
  double mean_unit = 10.0;      // mixture; working mu = mu / mean_unit

  bool operator==(const SimulatorConfig&) const = default;
};

inline SimulatorSpec make_simulator(const SimulatorConfig& cfg) {
  SimulatorSpec s;
  auto fill = [&s](int dim) {
    const auto n = static_cast<std::size_t>(dim);
    s.param_dim = dim;
    s.integer_mask.assign(n, false);
    s.log_scale.assign(n, false);
    s.bounds.assign(n, Interval{});
    s.param_names.clear();
    for (int i = 0; i < dim; ++i) s.param_names.push_back("theta" + std::to_string(i + 1));
  };
  switch (cfg.kind) {
    case SimulatorKind::Identity: {
      if (cfg.dim < 1) throw ContractViolation("identity simulator: dim must be >= 1");
      s.name = "identity";
      fill(cfg.dim);
      s.obs_dim = cfg.dim;
      s.simulate = [](const ParamPoint& theta, std::uint64_t) { return sim_identity(theta); };
      break;
    }
    case SimulatorKind::GaussianMean: {
      if (cfg.dim < 1 || cfg.n_obs < 1 || !(cfg.cov_diag > 0.0))
        throw ContractViolation("gaussian-mean simulator: need dim, n_obs >= 1 and cov_diag > 0");
      s.name = "gaussian-mean";
      fill(cfg.dim);
      s.obs_dim = cfg.dim;
      s.simulate = [n = cfg.n_obs, v = cfg.cov_diag](const ParamPoint& theta, std::uint64_t seed) {
        return sim_gaussian_mean(theta, n, v, seed);
      };
      break;
    }
    case SimulatorKind::Blowfly: {
      if (cfg.T < 1 || cfg.burn_in < 0) throw ContractViolation("blowfly simulator: need T >= 1, burn_in >= 0");
      s.name = "blowfly";
      fill(6);
      s.obs_dim = 1;
      s.param_names = {"P", "N0", "sigma_d", "sigma_p", "tau", "delta"};
      s.integer_mask = {true, true, false, false, true, false};
      s.log_scale.assign(6, true);
      s.bounds.assign(6, Interval{-15.0, 15.0});
      s.bounds[4] = Interval{-1.0, std::log(1000.0)};
      s.simulate = [T = cfg.T, b = cfg.burn_in](const ParamPoint& theta, std::uint64_t seed) {
        return sim_blowfly(theta, T, b, seed);
      };
      break;
    }
    case SimulatorKind::AlphaStable: {
      if (cfg.dim < 1 || cfg.n_obs < 1) throw ContractViolation("alpha-stable simulator: need dim, n_obs >= 1");
      s.name = "alpha-stable";
      fill(3);
      s.obs_dim = cfg.dim;
      s.param_names = {"alpha", "q_diag", "q_offdiag"};
      s.bounds[0] = Interval{1e-3, 2.0};
      s.bounds[1] = Interval{0.0, std::numeric_limits<double>::infinity()};
      s.simulate = [d = cfg.dim, n = cfg.n_obs, law = cfg.amplitude](const ParamPoint& theta, std::uint64_t seed) {
        return sim_alpha_stable(theta, d, n, seed, law);
      };
      break;
    }
    case SimulatorKind::GaussianMixture: {
      if (cfg.components < 1 || cfg.n_obs < 1 || !(cfg.component_var > 0.0) || !(cfg.mean_unit > 0.0) ||
          !std::isfinite(cfg.mean_unit))
        throw ContractViolation("mixture simulator: need components, n_obs >= 1, component_var > 0 and mean_unit > 0");
      const int k = cfg.components;
      s.name = "gaussian-mixture";
      fill(2 * k);
      s.obs_dim = 1;
      s.param_names.clear();
      for (int i = 0; i < k; ++i) s.param_names.push_back("phi" + std::to_string(i + 1));
      for (int i = 0; i < k; ++i) s.param_names.push_back("mu" + std::to_string(i + 1));
      for (int i = 0; i < k; ++i) s.bounds[static_cast<std::size_t>(i)] = Interval{0.0, 1.0};
      s.simplex = std::make_pair(0, k);
      s.unit.assign(static_cast<std::size_t>(2 * k), 1.0);
      for (int i = k; i < 2 * k; ++i) s.unit[static_cast<std::size_t>(i)] = cfg.mean_unit;
      s.simulate = [k, n = cfg.n_obs, sd = std::sqrt(cfg.component_var)](const ParamPoint& theta, std::uint64_t seed) {
        return sim_gaussian_mixture(theta.head(k), theta.tail(k), sd, n, seed);
      };
      break;
    }
  }
  s.validate();
  return s;
}

}  // namespace krabc
