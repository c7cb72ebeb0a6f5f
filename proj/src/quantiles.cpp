#include "bbcal/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bbcal/error.hpp"
#include "bbcal/optim.hpp"

namespace bbcal {

double sample_null_llr(const LinearGaussianProblem& problem, const Eigen::VectorXd& x, Rng& rng,
                       bool zero_noise) {
  Eigen::VectorXd y = problem.K * x;
  if (!zero_noise) {
    for (int i = 0; i < y.size(); ++i) y[i] += rng.normal();
  }
  LlrEvaluator eval(problem, std::move(y));
  return eval(problem.h.dot(x)).value;
}

double mc_quantile(const LinearGaussianProblem& problem, const Eigen::VectorXd& x, double gamma, int N,
                   Rng& rng) {
  if (N < 50) throw Error("mc_quantile needs N >= 50");
  std::vector<double> draws(N);
  for (int i = 0; i < N; ++i) draws[i] = sample_null_llr(problem, x, rng);
  std::sort(draws.begin(), draws.end());
  // order statistic index: nearest integer, ties round half-up, 1-indexed
  long k = static_cast<long>(std::floor((1.0 - gamma) * N + 0.5));
  k = std::max(1L, std::min(static_cast<long>(N), k));
  return draws[k - 1];
}

double pinball_loss(double z, double q, double gamma) {
  return (z < q) ? (1.0 - gamma) * (q - z) : gamma * (z - q);
}

QuantileRegressor fit_quantile_regressor(const std::vector<CalibrationSample>& samples, double gamma,
                                         std::optional<GbtHyper> hyper, int cv_folds, Rng& rng) {
  const int n = static_cast<int>(samples.size());
  if (n < 200) throw Error("fit_quantile_regressor needs at least 200 training samples");

  const int p = static_cast<int>(samples.front().x.size());
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    if (!samples[i].llr_draw) throw Error("fit_quantile_regressor: sample without llr_draw");
    X.row(i) = samples[i].x.transpose();
    z[i] = *samples[i].llr_draw;
  }

  QuantileRegressor out;
  out.gamma = gamma;
  out.training_size = n;

  const double spread = z.maxCoeff() - z.minCoeff();
  if (spread <= 1e-12 * (1.0 + std::abs(z.maxCoeff()))) {
    out.constant_flagged = true;
    out.constant_value = z[0];
    return out;
  }

  // the upper gamma-quantile is the (1-gamma)-level quantile
  const double tau = 1.0 - gamma;
  if (hyper) {
    out.hyper = *hyper;
  } else {
    out.hyper = select_hyper_cv(X, z, tau, default_hyper_grid(), cv_folds, rng);
  }
  out.model.fit(X, z, tau, out.hyper);
  return out;
}

double max_quantile_estimate(const std::vector<CalibrationSample>& samples) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& s : samples) {
    if (!s.q_hat) continue;
    best = std::max(best, *s.q_hat);
    any = true;
  }
  if (!any) throw Error("max_quantile_estimate: no quantile estimates");
  return best;
}

RollingMaxQuantile::RollingMaxQuantile(std::vector<double> mus, std::vector<double> q_hats, int T) : T_(T) {
  const std::size_t M = mus.size();
  if (M != q_hats.size() || M == 0) throw Error("rolling_max: size mismatch");
  if (!(T >= 1 && static_cast<std::size_t>(T) < M)) throw Error("rolling_max needs M > T >= 1");

  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mus[a] < mus[b]; });
  mu_.resize(M);
  q_.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    mu_[i] = mus[order[i]];
    q_[i] = q_hats[order[i]];
  }

  // backward window max over indices [k-T, k] via monotone deque
  window_max_.resize(M);
  std::vector<std::size_t> deque;
  std::size_t head = 0;
  for (std::size_t k = 0; k < M; ++k) {
    while (deque.size() > head && q_[deque.back()] <= q_[k]) deque.pop_back();
    deque.push_back(k);
    if (deque[head] + static_cast<std::size_t>(T_) < k) ++head;
    window_max_[k] = q_[deque[head]];
  }
}

double RollingMaxQuantile::evaluate(double mu) const {
  const auto it = std::lower_bound(mu_.begin(), mu_.end(), mu);
  std::size_t k;
  if (it == mu_.begin()) {
    k = 0;
  } else if (it == mu_.end()) {
    k = mu_.size() - 1;
  } else {
    const std::size_t hi = static_cast<std::size_t>(it - mu_.begin());
    const std::size_t lo = hi - 1;
    k = (mu - mu_[lo] <= mu_[hi] - mu) ? lo : hi;
  }
  return window_max_[k];
}

RollingMaxQuantile rolling_max(const std::vector<CalibrationSample>& samples, int T) {
  std::vector<double> mus, qs;
  mus.reserve(samples.size());
  qs.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.q_hat) continue;
    mus.push_back(s.mu);
    qs.push_back(*s.q_hat);
  }
  return RollingMaxQuantile(std::move(mus), std::move(qs), T);
}

}  // namespace bbcal
