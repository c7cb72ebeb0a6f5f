#include "bbcal/intervals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "bbcal/error.hpp"
#include "bbcal/geometry.hpp"
#include "bbcal/optim.hpp"
#include "bbcal/stats.hpp"

namespace bbcal {

const char* method_name(Method m) {
  switch (m) {
    case Method::OSB:
      return "OSB";
    case Method::SSB:
      return "SSB";
    case Method::GlobalInverted:
      return "GlobalInverted";
    case Method::GlobalOptimized:
      return "GlobalOptimized";
    case Method::SlicedInverted:
      return "SlicedInverted";
    case Method::SlicedOptimized:
      return "SlicedOptimized";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  for (Method m : {Method::OSB, Method::SSB, Method::GlobalInverted, Method::GlobalOptimized,
                   Method::SlicedInverted, Method::SlicedOptimized}) {
    if (name == method_name(m)) return m;
  }
  // tolerant lowercase aliases for config files
  std::string low;
  for (char c : name) low.push_back(static_cast<char>(std::tolower(c)));
  if (low == "osb") return Method::OSB;
  if (low == "ssb") return Method::SSB;
  if (low == "global_inverted" || low == "globalinverted") return Method::GlobalInverted;
  if (low == "global_optimized" || low == "globaloptimized") return Method::GlobalOptimized;
  if (low == "sliced_inverted" || low == "slicedinverted") return Method::SlicedInverted;
  if (low == "sliced_optimized" || low == "slicedoptimized") return Method::SlicedOptimized;
  return std::nullopt;
}

AcceptanceContext make_acceptance_context(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                                          const std::vector<CalibrationSample>& samples) {
  AcceptanceContext ctx;
  ctx.problem = &problem;
  ctx.y = y;

  LlrEvaluator eval(problem, y);
  ctx.s2 = eval.s_squared();
  ctx.mu_hat = eval.mu_hat();

  const std::size_t M = samples.size();
  ctx.mu.resize(M);
  ctx.q_hat.resize(M);
  ctx.lambda.resize(M);
  for (std::size_t k = 0; k < M; ++k) {
    ctx.mu[k] = samples[k].mu;
    ctx.q_hat[k] = samples[k].q_hat.value_or(std::numeric_limits<double>::quiet_NaN());
  }

  // evaluate in sorted-mu order so the slice solver can warm start
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ctx.mu[a] < ctx.mu[b]; });
  for (std::size_t idx : order) ctx.lambda[idx] = eval(ctx.mu[idx]).value;
  return ctx;
}

namespace {

IntervalResult degenerate_point(Method m, double mu, double alpha, double eta, double cutoff) {
  IntervalResult out;
  out.method = m;
  out.lower = out.upper = mu;
  out.degenerate = true;
  out.n_accepted = 0;
  out.cutoff_used = cutoff;
  out.alpha = alpha;
  out.eta = eta;
  out.gamma = eta > 0.0 ? alpha - eta : 0.0;
  return out;
}

// endpoints of {mu_k : lambda_k <= cutoff_k}
IntervalResult invert_accepted(Method m, const AcceptanceContext& ctx,
                               const std::vector<double>& cutoffs, double alpha, double eta,
                               double cutoff_report) {
  IntervalResult out;
  out.method = m;
  out.alpha = alpha;
  out.eta = eta;
  out.gamma = alpha - eta;
  out.cutoff_used = cutoff_report;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  long accepted = 0;
  for (std::size_t k = 0; k < ctx.mu.size(); ++k) {
    if (ctx.lambda[k] <= cutoffs[k]) {
      lo = std::min(lo, ctx.mu[k]);
      hi = std::max(hi, ctx.mu[k]);
      ++accepted;
    }
  }
  out.n_accepted = accepted;
  if (accepted == 0) {
    out.lower = out.upper = ctx.mu_hat;
    out.degenerate = true;
  } else {
    out.lower = lo;
    out.upper = hi;
    out.degenerate = accepted <= 1;
  }
  return out;
}

}  // namespace

IntervalResult osb_interval(const LinearGaussianProblem& problem, const Eigen::VectorXd& y, double alpha) {
  const double cutoff = chi2_quantile(1, 1.0 - alpha);
  LsqResult base = constrained_lsq(problem, y);
  const auto [lo, hi] = endpoint_optimize(problem, y, cutoff + base.objective);
  IntervalResult out;
  out.method = Method::OSB;
  out.lower = lo;
  out.upper = hi;
  out.cutoff_used = cutoff;
  out.alpha = alpha;
  return out;
}

IntervalResult ssb_interval(const LinearGaussianProblem& problem, const Eigen::VectorXd& y, double alpha) {
  IntervalResult out;
  out.method = Method::SSB;
  out.alpha = alpha;
  out.cutoff_used = chi2_quantile(problem.n(), 1.0 - alpha);
  try {
    BergerBoosSet set = make_bb_set(problem, y, alpha);
    const FunctionalExtremes ext = functional_extremes(set);
    out.lower = ext.mu_lower;
    out.upper = ext.mu_upper;
  } catch (const Error& e) {
    if (std::string(e.what()).find("empty") == std::string::npos) throw;
    // empty level-alpha residual set: collapse to the constrained fit
    LsqResult base = constrained_lsq(problem, y);
    out.lower = out.upper = problem.h.dot(base.x);
    out.degenerate = true;
  }
  return out;
}

IntervalResult global_inverted(const AcceptanceContext& ctx, double alpha, double eta) {
  double qmax = -std::numeric_limits<double>::infinity();
  for (double q : ctx.q_hat) qmax = std::max(qmax, q);
  if (!std::isfinite(qmax)) {
    return degenerate_point(Method::GlobalInverted, ctx.mu_hat, alpha, eta, 0.0);
  }
  std::vector<double> cutoffs(ctx.mu.size(), qmax);
  return invert_accepted(Method::GlobalInverted, ctx, cutoffs, alpha, eta, qmax);
}

IntervalResult global_optimized(const AcceptanceContext& ctx, double alpha, double eta) {
  double qmax = -std::numeric_limits<double>::infinity();
  for (double q : ctx.q_hat) qmax = std::max(qmax, q);
  if (!std::isfinite(qmax)) {
    return degenerate_point(Method::GlobalOptimized, ctx.mu_hat, alpha, eta, 0.0);
  }
  const auto [lo, hi] = endpoint_optimize(*ctx.problem, ctx.y, qmax + ctx.s2);
  IntervalResult out;
  out.method = Method::GlobalOptimized;
  out.lower = lo;
  out.upper = hi;
  out.cutoff_used = qmax;
  out.alpha = alpha;
  out.eta = eta;
  out.gamma = alpha - eta;
  return out;
}

IntervalResult sliced_inverted(const AcceptanceContext& ctx, double alpha, double eta) {
  return invert_accepted(Method::SlicedInverted, ctx, ctx.q_hat, alpha, eta,
                         std::numeric_limits<double>::quiet_NaN());
}

IntervalResult sliced_optimized(const AcceptanceContext& ctx, const RollingMaxQuantile& rolling, double alpha,
                                double eta) {
  std::vector<double> cutoffs(ctx.mu.size());
  for (std::size_t k = 0; k < ctx.mu.size(); ++k) cutoffs[k] = rolling.evaluate(ctx.mu[k]);
  return invert_accepted(Method::SlicedOptimized, ctx, cutoffs, alpha, eta,
                         std::numeric_limits<double>::quiet_NaN());
}

IntervalResult global_inverted(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                               const std::vector<CalibrationSample>& samples, double alpha, double eta) {
  return global_inverted(make_acceptance_context(problem, y, samples), alpha, eta);
}

IntervalResult sliced_inverted(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                               const std::vector<CalibrationSample>& samples, double alpha, double eta) {
  return sliced_inverted(make_acceptance_context(problem, y, samples), alpha, eta);
}

}  // namespace bbcal
