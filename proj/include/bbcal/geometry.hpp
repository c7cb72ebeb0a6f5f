#pragma once

#include <Eigen/Dense>
#include <utility>

#include "bbcal/model.hpp"
#include "bbcal/polytope.hpp"
#include "bbcal/rng.hpp"
#include "bbcal/stats.hpp"

namespace bbcal {

// Observation-anchored subset {x in X : ||y - Kx||^2 <= chi2_quantile(n, 1-eta)}.
// Holds a reference to the (whitened) problem; keep the problem alive while
// the set is in use.
struct BergerBoosSet {
  const LinearGaussianProblem* problem;
  Eigen::VectorXd y;
  double eta;
  double threshold;

  double quad_residual(const Eigen::VectorXd& x) const { return (y - problem->K * x).squaredNorm(); }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const {
    return problem->constraints.contains(x, tol) && quad_residual(x) <= threshold + tol;
  }
};

BergerBoosSet make_bb_set(const LinearGaussianProblem& problem, const Eigen::VectorXd& y, double eta);

inline bool bb_membership(const BergerBoosSet& set, const Eigen::VectorXd& x) { return set.contains(x); }

// b = max_{x in B_eta} a'x. Throws "unbounded support" / "empty Berger-Boos set".
double support_value(const BergerBoosSet& set, const Eigen::VectorXd& a);

// Bounding polytope from three face families: the constraint rows verbatim
// (plus upper axis bounds for nonnegativity rows), +-eigenvector faces for
// the bounded principal axes, and n_random Gaussian directions.
Polytope bounding_polytope(const BergerBoosSet& set, int n_random, Rng& rng);

// Center and radius of the largest inscribed ball (linear program).
std::pair<Eigen::VectorXd, double> chebyshev_center(const Polytope& poly);

struct FunctionalExtremes {
  Eigen::VectorXd x_lower, x_upper;
  double mu_lower = 0.0, mu_upper = 0.0;
};

// min/max of h'x over B_eta; with threshold chi2(n, alpha) this is the SSB interval.
FunctionalExtremes functional_extremes(const BergerBoosSet& set);

}  // namespace bbcal
