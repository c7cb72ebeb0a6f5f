#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bbcal/gbt.hpp"
#include "bbcal/model.hpp"
#include "bbcal/rng.hpp"

namespace bbcal {

// One design point with either a single null-LLR draw or an estimated
// gamma-quantile (or both).
struct CalibrationSample {
  Eigen::VectorXd x;
  double mu = 0.0;  // h'x
  std::optional<double> llr_draw;
  std::optional<double> q_hat;
};

// lambda(h'x, Kx + eps; X) with fresh standard-normal eps.
double sample_null_llr(const LinearGaussianProblem& problem, const Eigen::VectorXd& x, Rng& rng,
                       bool zero_noise = false);

// Percentile estimate hat q = lambda_({(1-gamma) N}), nearest integer with
// ties rounded half-up, 1-indexed.
double mc_quantile(const LinearGaussianProblem& problem, const Eigen::VectorXd& x, double gamma, int N,
                   Rng& rng);

// Pinball loss exactly in its nonnegative form: (1-gamma)(q-z) for z < q and
// gamma(z-q) for z >= q; minimizing over q yields the gamma-level quantile.
double pinball_loss(double z, double q, double gamma);

// Fitted upper-gamma-quantile surface (predictions clamped to >= 0).
struct QuantileRegressor {
  GradientBoostedQuantile model;
  double gamma = 0.0;
  int training_size = 0;
  GbtHyper hyper;
  bool constant_flagged = false;
  double constant_value = 0.0;

  double predict(const Eigen::VectorXd& x) const {
    const double q = constant_flagged ? constant_value : model.predict(x);
    return q > 0.0 ? q : 0.0;
  }
};

// Boosted quantile regression on (x, llr_draw) pairs at the upper
// gamma-quantile. Hyperparameters come from `hyper` when given, otherwise
// from cv_folds-fold cross-validation over default_hyper_grid().
QuantileRegressor fit_quantile_regressor(const std::vector<CalibrationSample>& samples, double gamma,
                                         std::optional<GbtHyper> hyper, int cv_folds, Rng& rng);

// max_k q_hat_k over samples carrying quantile estimates.
double max_quantile_estimate(const std::vector<CalibrationSample>& samples);

// Rolling maximum of quantiles ordered by functional value: evaluate(mu)
// returns max over the T+1 sorted entries ending at the index nearest mu.
class RollingMaxQuantile {
 public:
  RollingMaxQuantile(std::vector<double> mus, std::vector<double> q_hats, int T);

  double evaluate(double mu) const;
  int window() const { return T_; }
  const std::vector<double>& sorted_mu() const { return mu_; }
  const std::vector<double>& sorted_q() const { return q_; }

 private:
  std::vector<double> mu_, q_, window_max_;
  int T_;
};

RollingMaxQuantile rolling_max(const std::vector<CalibrationSample>& samples, int T);

}  // namespace bbcal
