#include "bbcal/optim.hpp"

#include <cmath>

#include "bbcal/error.hpp"

namespace bbcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_orthant(const Polytope& X) {
  const int p = X.dim();
  if (X.faces() != p) return false;
  if (X.b.cwiseAbs().maxCoeff() != 0.0) return false;
  return (X.A + Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() == 0.0;
}

bool enum_applicable(const LinearGaussianProblem& problem) {
  return problem.p() <= detail::kEnumMaxDim && problem.constraints.faces() <= detail::kEnumMaxRows;
}

// LP min c'x s.t. Gx <= h via the interior-point path.
double lp_value(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                bool* unbounded) {
  QpSpec spec;
  spec.dim = static_cast<int>(G.cols());
  spec.c = c;
  spec.G = &G;
  spec.h = h;
  QpResult r = solve_qp(spec);
  if (r.status == QpStatus::Unbounded) {
    if (unbounded) *unbounded = true;
    return -kInf;
  }
  if (r.status != QpStatus::Optimal) throw Error("QP failed: LP subproblem did not converge");
  if (unbounded) *unbounded = false;
  return r.objective;
}

}  // namespace

FunctionalRange functional_range(const LinearGaussianProblem& problem) {
  FunctionalRange out;
  const Eigen::VectorXd& h = problem.h;
  const Polytope& X = problem.constraints;
  const int p = problem.p();

  if (X.faces() == 0) {
    // unconstrained: any nonzero h spans the line
    if (h.cwiseAbs().maxCoeff() == 0.0) out = {0.0, 0.0};
    return out;
  }
  if (is_orthant(X)) {
    const bool has_pos = (h.array() > 0.0).any();
    const bool has_neg = (h.array() < 0.0).any();
    out.lo = has_neg ? -kInf : 0.0;
    out.hi = has_pos ? kInf : 0.0;
    return out;
  }

  // recession cone test: h'v unbounded below over {A v <= 0} iff the boxed LP
  // min h'v s.t. A v <= 0, -1 <= v <= 1 is strictly negative
  Eigen::MatrixXd Grec(X.faces() + 2 * p, p);
  Eigen::VectorXd hrec(X.faces() + 2 * p);
  Grec.topRows(X.faces()) = X.A;
  hrec.head(X.faces()).setZero();
  Grec.middleRows(X.faces(), p) = Eigen::MatrixXd::Identity(p, p);
  Grec.bottomRows(p) = -Eigen::MatrixXd::Identity(p, p);
  hrec.tail(2 * p).setOnes();

  const double tol = 1e-9 * (1.0 + h.cwiseAbs().maxCoeff());
  bool unb = false;
  if (lp_value(Grec, hrec, problem.h, &unb) < -tol) {
    out.lo = -kInf;
  } else {
    out.lo = lp_value(X.A, X.b, problem.h, &unb);
    if (unb) out.lo = -kInf;
  }
  if (lp_value(Grec, hrec, Eigen::VectorXd(-problem.h), &unb) < -tol) {
    out.hi = kInf;
  } else {
    out.hi = -lp_value(X.A, X.b, Eigen::VectorXd(-problem.h), &unb);
    if (unb) out.hi = kInf;
  }
  return out;
}

LsqResult constrained_lsq(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                          std::optional<double> slice_mu) {
  const int p = problem.p();
  if (slice_mu) {
    const FunctionalRange range = functional_range(problem);
    if (!range.contains(*slice_mu, 1e-9 * (1.0 + std::abs(*slice_mu)))) {
      throw Error("slice infeasible");
    }
  }

  const Eigen::MatrixXd H = 2.0 * problem.K.transpose() * problem.K;
  const Eigen::VectorXd g = -2.0 * problem.K.transpose() * y;
  const double yty = y.squaredNorm();

  LsqResult out;
  if (enum_applicable(problem)) {
    Eigen::VectorXd x(p);
    double obj = 0.0;
    const double* eq = slice_mu ? problem.h.data() : nullptr;
    if (detail::qp_enum_raw(p, problem.constraints.faces(), H.data(), g.data(),
                            problem.constraints.A.data(), problem.constraints.b.data(), eq,
                            slice_mu.value_or(0.0), x.data(), &obj)) {
      out.x = x;
      out.objective = std::max(0.0, obj + yty);
      return out;
    }
  }

  QpSpec spec;
  spec.dim = p;
  spec.P = &H;
  spec.c = g;
  const Polytope& X = problem.constraints;
  if (X.faces() > 0) {
    spec.G = &X.A;
    spec.h = X.b;
  }
  Eigen::MatrixXd hrow;
  if (slice_mu) {
    hrow = problem.h.transpose();
    spec.E = &hrow;
    spec.d = Eigen::VectorXd::Constant(1, *slice_mu);
  }
  QpResult r = solve_qp(spec);
  if (r.status != QpStatus::Optimal) {
    throw Error("QP failed: status " + std::to_string(static_cast<int>(r.status)) + ", residual " +
                std::to_string(r.residual) + " after " + std::to_string(r.iters) + " iterations");
  }
  out.x = r.x;
  out.objective = std::max(0.0, r.objective + yty);
  return out;
}

LlrValue llr(const LinearGaussianProblem& problem, const Eigen::VectorXd& y, double mu) {
  LlrEvaluator eval(problem, y);
  return eval(mu);
}

LlrEvaluator::LlrEvaluator(const LinearGaussianProblem& problem, Eigen::VectorXd y)
    : problem_(&problem), y_(std::move(y)) {
  KtK2_ = 2.0 * problem.K.transpose() * problem.K;
  g_ = -2.0 * problem.K.transpose() * y_;
  yty_ = y_.squaredNorm();
  small_ = enum_applicable(problem);
  range_ = functional_range(problem);
  h_row_ = problem.h.transpose();

  LsqResult base = constrained_lsq(problem, y_);
  s2_ = base.objective;
  xhat_ = base.x;
  mu_hat_ = problem.h.dot(xhat_);
  warm_ = xhat_;
}

LlrValue LlrEvaluator::operator()(double mu) {
  LlrValue out;
  out.fit_residual = s2_;
  if (!range_.contains(mu, 1e-9 * (1.0 + std::abs(mu)))) {
    out.slice_feasible = false;
    out.value = kInf;
    return out;
  }

  const int p = problem_->p();
  double sliced = 0.0;
  bool solved = false;
  if (small_) {
    Eigen::VectorXd x(p);
    double obj = 0.0;
    if (detail::qp_enum_raw(p, problem_->constraints.faces(), KtK2_.data(), g_.data(),
                            problem_->constraints.A.data(), problem_->constraints.b.data(),
                            problem_->h.data(), mu, x.data(), &obj)) {
      sliced = obj + yty_;
      solved = true;
    }
  }
  if (!solved) {
    QpSpec spec;
    spec.dim = p;
    spec.P = &KtK2_;
    spec.c = g_;
    const Polytope& X = problem_->constraints;
    if (X.faces() > 0) {
      spec.G = &X.A;
      spec.h = X.b;
    }
    spec.E = &h_row_;
    spec.d = Eigen::VectorXd::Constant(1, mu);
    spec.x0 = warm_;
    QpResult r = solve_qp(spec);
    if (r.status != QpStatus::Optimal) {
      throw Error("QP failed: slice solve, residual " + std::to_string(r.residual));
    }
    sliced = r.objective + yty_;
    warm_ = r.x;
  }
  out.value = std::max(0.0, sliced - s2_);
  return out;
}

Eigen::VectorXd minimize_linear_on_residual_ball(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                                                 double rho, const Eigen::VectorXd& c,
                                                 const Eigen::VectorXd& x0, const char* unbounded_msg) {
  Eigen::MatrixXd Q = 2.0 * problem.K.transpose() * problem.K;
  QpSpec spec;
  spec.dim = problem.p();
  spec.c = c;
  const Polytope& X = problem.constraints;
  if (X.faces() > 0) {
    spec.G = &X.A;
    spec.h = X.b;
  }
  spec.has_quad = true;
  spec.Q = &Q;
  spec.r = -2.0 * problem.K.transpose() * y;
  spec.t = y.squaredNorm() - rho;
  spec.x0 = x0;
  QpResult r = solve_qp(spec);
  if (r.status == QpStatus::Unbounded) throw Error(unbounded_msg);
  if (r.status != QpStatus::Optimal) {
    throw Error("QP failed: quadratically constrained solve, residual " + std::to_string(r.residual));
  }
  return r.x;
}

std::pair<double, double> endpoint_optimize(const LinearGaussianProblem& problem, const Eigen::VectorXd& y,
                                            double psi_sq) {
  LsqResult base = constrained_lsq(problem, y);
  const double s2 = base.objective;
  const double tol = 1e-9 * (1.0 + s2);
  if (psi_sq < s2 - tol) throw Error("empty feasible region");
  if (psi_sq <= s2 + tol) {
    const double mu = problem.h.dot(base.x);
    return {mu, mu};
  }
  const Eigen::VectorXd xlo = minimize_linear_on_residual_ball(problem, y, psi_sq, problem.h, base.x,
                                                               "unbounded endpoint optimization");
  const Eigen::VectorXd xhi = minimize_linear_on_residual_ball(problem, y, psi_sq, Eigen::VectorXd(-problem.h),
                                                               base.x, "unbounded endpoint optimization");
  double lo = problem.h.dot(xlo);
  double hi = problem.h.dot(xhi);
  if (lo > hi) std::swap(lo, hi);
  return {lo, hi};
}

}  // namespace bbcal
