#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <utility>

#include "bbcal/model.hpp"
#include "bbcal/qp.hpp"

namespace bbcal {

// LLR test statistic value at one (mu, y).
struct LlrValue {
  double value = 0.0;  // >= 0, +inf when the slice is infeasible
  bool slice_feasible = true;
  double fit_residual = 0.0;  // s(y)^2
};

struct LsqResult {
  Eigen::VectorXd x;
  double objective = 0.0;  // ||y - Kx||^2, clamped nonnegative
};

// Range of h'x over the constraint set; endpoints may be +-inf.
struct FunctionalRange {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double mu, double tol) const { return mu >= lo - tol && mu <= hi + tol; }
};

FunctionalRange functional_range(const LinearGaussianProblem& problem);

// min ||y - Kx||^2 over X, optionally restricted to h'x = mu.
LsqResult constrained_lsq(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                          std::optional<double> slice_mu = std::nullopt);

LlrValue llr(const LinearGaussianProblem& problem, const Eigen::VectorXd& y, double mu);

// min/max of h'x over D(psi^2, y) = {x in X : ||y - Kx||^2 <= psi^2}.
std::pair<double, double> endpoint_optimize(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                                            double psi_sq);

// Minimize c'x over {x in X : ||y - Kx||^2 <= rho}. x0 must be feasible for
// the quadratic (typically the X-constrained least-squares solution).
// Throws Error(unbounded_msg) when the program is unbounded.
Eigen::VectorXd minimize_linear_on_residual_ball(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                                                 double rho, const Eigen::VectorXd& c,
                                                 const Eigen::VectorXd& x0, const char* unbounded_msg);

// Caches per-(problem, y) state for repeated lambda evaluations: K'K, the
// X-constrained fit s(y)^2 and its minimizer, and the feasible range of h'x.
class LlrEvaluator {
 public:
  LlrEvaluator(const LinearGaussianProblem& problem, Eigen::VectorXd y);

  double s_squared() const { return s2_; }
  const Eigen::VectorXd& xhat() const { return xhat_; }
  double mu_hat() const { return mu_hat_; }
  const Eigen::VectorXd& y() const { return y_; }
  const LinearGaussianProblem& problem() const { return *problem_; }

  LlrValue operator()(double mu);

 private:
  const LinearGaussianProblem* problem_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd KtK2_;  // 2 K'K
  Eigen::VectorXd g_;     // -2 K'y
  double yty_ = 0.0;
  double s2_ = 0.0;
  Eigen::VectorXd xhat_;
  double mu_hat_ = 0.0;
  FunctionalRange range_;
  Eigen::MatrixXd h_row_;  // 1 x p equality row for slices
  Eigen::VectorXd warm_;
  bool small_ = false;  // exact enumeration path applies
};

}  // namespace bbcal
