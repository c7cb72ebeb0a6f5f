#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "bbcal/polytope.hpp"
#include "bbcal/rng.hpp"

namespace bbcal {

// Linear-Gaussian inverse problem: y = K x + eps, eps ~ N(0, Sigma),
// x constrained to the polytope A_c x <= b_c, functional phi(x) = h' x.
struct LinearGaussianProblem {
  Eigen::MatrixXd K;      // n x p forward matrix
  Eigen::MatrixXd Sigma;  // n x n noise covariance
  Polytope constraints;   // constraint set X
  Eigen::VectorXd h;      // functional vector, length p

  int n() const { return static_cast<int>(K.rows()); }
  int p() const { return static_cast<int>(K.cols()); }
  bool is_whitened(double tol = 1e-12) const {
    return (Sigma - Eigen::MatrixXd::Identity(n(), n())).cwiseAbs().maxCoeff() <= tol;
  }

  void validate() const;  // dimension and SPD checks
};

struct Observation {
  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> true_x;
  std::optional<std::uint64_t> seed;
};

// Eigenstructure of K' Sigma^{-1} K = P Omega P'.
struct EigenStructure {
  Eigen::MatrixXd vectors;  // P, p x p, orthonormal columns
  Eigen::VectorXd values;   // omega^2, descending
  int numerical_rank;       // count of omega^2 > 1e-10 * max
};

// Returns the problem with K <- L^{-1} K and Sigma <- I, where L L' = Sigma.
// Observations from the original problem must be mapped with
// whiten_observation to stay consistent.
LinearGaussianProblem whiten(const LinearGaussianProblem& problem);
Eigen::VectorXd whiten_observation(const LinearGaussianProblem& original, const Eigen::VectorXd& y);

// y = K x_true + eps with standard normal eps (post-whitening). x_true outside
// the constraint set only warns so tests can probe off-boundary behavior.
// zero_noise = true is the deterministic test hook (eps = 0).
Observation simulate(const LinearGaussianProblem& problem, const Eigen::VectorXd& x_true, Rng& rng,
                     bool zero_noise = false);

// Unconstrained GLS estimate; requires K'Sigma^{-1}K numerically full rank.
Eigen::VectorXd gls_estimate(const LinearGaussianProblem& problem, const Eigen::VectorXd& y);

EigenStructure eigendecompose(const LinearGaussianProblem& problem);

}  // namespace bbcal
