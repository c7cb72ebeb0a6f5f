#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "bbcal/model.hpp"
#include "bbcal/quantiles.hpp"

namespace bbcal {

enum class Method { OSB, SSB, GlobalInverted, GlobalOptimized, SlicedInverted, SlicedOptimized };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct IntervalResult {
  Method method = Method::OSB;
  double lower = 0.0, upper = 0.0;
  bool degenerate = false;
  long n_accepted = 0;
  double cutoff_used = 0.0;
  double alpha = 0.0, eta = 0.0, gamma = 0.0;

  double length() const { return upper - lower; }
  // degenerate point intervals count as a miss unless mu* hits the point
  bool covers(double mu_star) const {
    if (degenerate) return std::abs(mu_star - lower) <= 1e-9 && std::abs(mu_star - upper) <= 1e-9;
    return lower <= mu_star && mu_star <= upper;
  }
};

// Per-observation state shared by every method: the X-constrained fit and the
// LLR evaluated at each sampled functional value (lambda uses the constraint
// set X; the Berger-Boos set enters only through where the samples live).
struct AcceptanceContext {
  const LinearGaussianProblem* problem = nullptr;
  Eigen::VectorXd y;
  double s2 = 0.0;
  double mu_hat = 0.0;  // h' xhat_c
  std::vector<double> mu;
  std::vector<double> q_hat;
  std::vector<double> lambda;
};

AcceptanceContext make_acceptance_context(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                                          const std::vector<CalibrationSample>& samples);

IntervalResult osb_interval(const LinearGaussianProblem& problem, const Eigen::VectorXd& y, double alpha);
IntervalResult ssb_interval(const LinearGaussianProblem& problem, const Eigen::VectorXd& y, double alpha);

IntervalResult global_inverted(const AcceptanceContext& ctx, double alpha, double eta);
IntervalResult global_optimized(const AcceptanceContext& ctx, double alpha, double eta);
IntervalResult sliced_inverted(const AcceptanceContext& ctx, double alpha, double eta);
IntervalResult sliced_optimized(const AcceptanceContext& ctx, const RollingMaxQuantile& rolling, double alpha,
                                double eta);

// Spec-shaped conveniences building the context internally.
IntervalResult global_inverted(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                               const std::vector<CalibrationSample>& samples, double alpha, double eta);
IntervalResult sliced_inverted(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                               const std::vector<CalibrationSample>& samples, double alpha, double eta);

}  // namespace bbcal
