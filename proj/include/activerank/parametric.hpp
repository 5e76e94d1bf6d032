#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "activerank/comparison_matrix.hpp"
#include "activerank/error.hpp"
#include "activerank/family.hpp"
#include "activerank/model.hpp"

namespace activerank {

struct FitOptions {
  double tolerance = 1e-10;  // on max |achieved - target|
  int max_iters = 500;
  bool throw_on_failure = true;
  // When set, fitted entries below p_min - 1e-6 are flagged.
  std::optional<double> p_min;
};

struct FitResult {
  std::vector<double> w;  // centred: sum w = 0
  ComparisonMatrix matrix;
  ScoreVector achieved_scores;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double min_entry = 0.5;
  bool p_min_violated = false;
};

namespace detail {

inline void centre(std::vector<double>& w) {
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  for (double& x : w) x -= mean;
}

// Score map minus target, and its max-norm.
inline double score_residual(const ParametricFamily& f, const std::vector<double>& w,
                             const std::vector<double>& target, Eigen::VectorXd& out) {
  const std::size_t n = w.size();
  out.setZero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = f.cdf(w[i] - w[j]);
      out(static_cast<Eigen::Index>(i)) += p;
      out(static_cast<Eigen::Index>(j)) += 1.0 - p;
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& v = out(static_cast<Eigen::Index>(i));
    v = v / static_cast<double>(n - 1) - target[i];
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

}  // namespace detail

// Finds w with (1/(n-1)) sum_{j != i} cdf(w_i - w_j) = tau_i for every i.
//
// Damped Newton on the score map. Its Jacobian is a weighted graph Laplacian
// (weights cdf'(w_i - w_j)) whose null space is the all-ones direction; adding
// the rank-one term 11^T/n fixes the gauge sum w = 0. Steps are halved until
// the max-norm residual decreases.
inline FitResult fit_parametric_scores(const ScoreVector& tau, const ParametricFamily& family,
                                       const FitOptions& opts = {}) {
  family.check_symmetric_at_zero();
  if (!family.has_derivative())
    throw ConfigError("family '" + family.name + "' has no derivative; cannot fit");
  const FeasibilityReport feas = check_score_feasibility(tau);
  if (!feas.feasible) throw ConfigError("scores are not realizable: " + feas.message);

  const std::size_t n = tau.size();
  const auto N = static_cast<Eigen::Index>(n);
  const std::vector<double>& target = tau.values();

  // Exact for two items.
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * family.inverse(std::clamp(target[i], 1e-12, 1.0 - 1e-12));
  detail::centre(w);

  Eigen::VectorXd F(N), F_trial(N);
  double res = detail::score_residual(family, w, target, F);
  int iter = 0;
  const double inv = 1.0 / static_cast<double>(n - 1);
  Eigen::MatrixXd J(N, N);
  std::vector<double> trial(n);
  while (res > opts.tolerance && iter < opts.max_iters) {
    ++iter;
    J.setConstant(1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = family.pdf(w[i] - w[j]) * inv;
        const auto I = static_cast<Eigen::Index>(i), K = static_cast<Eigen::Index>(j);
        J(I, I) += d;
        J(K, K) += d;
        J(I, K) -= d;
        J(K, I) -= d;
      }
    }
    const Eigen::VectorXd step = J.ldlt().solve(-F);
    double scale = 1.0;
    double trial_res = res;
    while (scale > 1e-12) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + scale * step(static_cast<Eigen::Index>(i));
      detail::centre(trial);
      trial_res = detail::score_residual(family, trial, target, F_trial);
      if (std::isfinite(trial_res) && trial_res < res) break;
      scale *= 0.5;
    }
    if (!(trial_res < res)) break;  // no descent left: stalled
    w = trial;
    F = F_trial;
    res = trial_res;
  }

  Eigen::VectorXd final_F(N);
  const double final_res = detail::score_residual(family, w, target, final_F);
  if (!(final_res <= opts.tolerance) && opts.throw_on_failure) {
    std::ostringstream os;
    os << "parametric fit did not converge: residual " << final_res << " after " << iter
       << " iterations (scores infeasible or too close to 0/1?)";
    throw SolverError(os.str());
  }

  FitResult r;
  // A stalled fit can push entries to 0 or 1 in double precision.
  std::vector<double> upper;
  upper.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      upper.push_back(std::clamp(family.cdf(w[i] - w[j]), kMinEntry, 1.0 - kMinEntry));
  r.matrix = ComparisonMatrix(n, std::move(upper));
  r.w = std::move(w);
  r.achieved_scores = scores(r.matrix);
  r.residual = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    r.residual = std::max(r.residual, std::abs(r.achieved_scores[i] - target[i]));
  r.iterations = iter;
  r.converged = r.residual <= opts.tolerance;
  r.min_entry = r.matrix.min_off_diagonal();
  if (opts.p_min) r.p_min_violated = r.min_entry < *opts.p_min - 1e-6;
  if (!r.converged && opts.throw_on_failure) {
    std::ostringstream os;
    os << "parametric fit did not converge: residual " << r.residual << " after " << iter
       << " iterations";
    throw SolverError(os.str());
  }
  return r;
}

inline constexpr double kKktTolerance = 1e-8;

struct KktReport {
  std::vector<double> nu;  // potentials with nu_0 = 0
  double max_residual = 0.0;
  std::size_t worst_i = 0, worst_j = 0;
  bool parametric = true;  // max_residual <= kKktTolerance
};

// Checks whether M has the parametric form cdf^-1(M_ij) = nu_j - nu_i for
// some potentials nu. Potentials come from the star of pairs (0, j); every
// other pair contributes a consistency residual.
inline KktReport kkt_verify(const ComparisonMatrix& m, const ParametricFamily& family) {
  const std::size_t n = m.size();
  KktReport r;
  r.nu.assign(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) r.nu[j] = family.inverse(m(0, j));
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double res = std::abs(family.inverse(m(i, j)) - (r.nu[j] - r.nu[i]));
      if (res > r.max_residual) {
        r.max_residual = res;
        r.worst_i = i;
        r.worst_j = j;
      }
    }
  }
  r.parametric = r.max_residual <= kKktTolerance;
  return r;
}

// psi(u) = (1/2) int_{1/2}^{u} cdf^-1(x) dx, evaluated after substituting
// x = cdf(s) as (1/2) int_0^{cdf^-1(u)} s cdf'(s) ds.
inline double psi(const ParametricFamily& family, double u) {
  if (!(u >= kMinEntry && u <= 1.0 - kMinEntry)) {
    std::ostringstream os;
    os << "psi(" << u << "): argument within " << kMinEntry << " of {0, 1}";
    throw SolverError(os.str());
  }
  if (!family.has_derivative())
    throw ConfigError("family '" + family.name + "' has no derivative");
  if (u == 0.5) return 0.0;
  const double upper = family.inverse(u);
  double err = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double s) { return s * family.pdf(s); }, 0.0, upper, 12, 1e-12, &err);
  if (!(err <= 1e-10)) {
    std::ostringstream os;
    os << "psi(" << u << "): quadrature error estimate " << err << " exceeds 1e-10";
    throw SolverError(os.str());
  }
  return 0.5 * value;
}

// sum_{i<j} psi(M_ij) + psi(1 - M_ij); parametric matrices minimise it among
// all matrices with the same scores.
inline double schur_objective(const ComparisonMatrix& m, const ParametricFamily& family) {
  double total = 0.0;
  for (double v : m.upper()) total += psi(family, v) + psi(family, 1.0 - v);
  return total;
}

}  // namespace activerank
