#include "bbcal/geometry.hpp"

#include <cmath>
#include <vector>

#include "bbcal/error.hpp"
#include "bbcal/optim.hpp"
#include "bbcal/qp.hpp"

namespace bbcal {

BergerBoosSet make_bb_set(const LinearGaussianProblem& problem, const Eigen::VectorXd& y, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw Error("eta must lie in (0,1)");
  BergerBoosSet set;
  set.problem = &problem;
  set.y = y;
  set.eta = eta;
  set.threshold = chi2_quantile(problem.n(), 1.0 - eta);
  return set;
}

namespace {

// X-constrained least-squares center; also certifies B_eta nonempty.
Eigen::VectorXd feasible_center(const BergerBoosSet& set) {
  LsqResult base = constrained_lsq(*set.problem, set.y);
  if (base.objective > set.threshold + 1e-9 * (1.0 + set.threshold)) {
    throw Error("empty Berger-Boos set");
  }
  return base.x;
}

}  // namespace

double support_value(const BergerBoosSet& set, const Eigen::VectorXd& a) {
  const Eigen::VectorXd x0 = feasible_center(set);
  const Eigen::VectorXd x = minimize_linear_on_residual_ball(*set.problem, set.y, set.threshold,
                                                             Eigen::VectorXd(-a), x0, "unbounded support");
  return a.dot(x);
}

Polytope bounding_polytope(const BergerBoosSet& set, int n_random, Rng& rng) {
  const LinearGaussianProblem& pr = *set.problem;
  const int p = pr.p();
  const Polytope& X = pr.constraints;
  const Eigen::VectorXd x0 = feasible_center(set);

  const auto support = [&](const Eigen::VectorXd& a) {
    const Eigen::VectorXd x = minimize_linear_on_residual_ball(
        pr, set.y, set.threshold, Eigen::VectorXd(-a), x0,
        "Berger-Boos set unbounded; no bounded confidence set");
    return a.dot(x);
  };

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> offs;

  // (i) constraint rows verbatim
  for (int i = 0; i < X.faces(); ++i) {
    rows.push_back(X.A.row(i).transpose());
    offs.push_back(X.b[i]);
  }
  // upper axis bounds paired with nonnegativity rows -e_i' x <= 0
  for (int i = 0; i < X.faces(); ++i) {
    if (X.b[i] != 0.0) continue;
    Eigen::VectorXd row = X.A.row(i).transpose();
    int axis = -1;
    bool is_axis = true;
    for (int j = 0; j < p && is_axis; ++j) {
      if (row[j] == 0.0) continue;
      if (row[j] == -1.0 && axis < 0) {
        axis = j;
      } else {
        is_axis = false;
      }
    }
    if (!is_axis || axis < 0) continue;
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(p);
    dir[axis] = 1.0;
    rows.push_back(dir);
    offs.push_back(support(dir));
  }
  // (ii) +-eigenvector faces for the bounded principal axes
  const EigenStructure es = eigendecompose(pr);
  for (int i = 0; i < es.numerical_rank; ++i) {
    const Eigen::VectorXd v = es.vectors.col(i);
    rows.push_back(v);
    offs.push_back(support(v));
    rows.push_back(-v);
    offs.push_back(support(-v));
  }
  // (iii) random directions
  for (int i = 0; i < n_random; ++i) {
    Eigen::VectorXd v(p);
    for (int j = 0; j < p; ++j) v[j] = rng.normal();
    rows.push_back(v);
    offs.push_back(support(v));
  }

  Polytope out;
  out.A.resize(static_cast<int>(rows.size()), p);
  out.b.resize(static_cast<int>(rows.size()));
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    out.A.row(i) = rows[i].transpose();
    out.b[i] = offs[i];
  }
  return out;
}

std::pair<Eigen::VectorXd, double> chebyshev_center(const Polytope& poly) {
  const int p = poly.dim();
  const int d = poly.faces();
  if (d == 0) throw Error("degenerate polytope");

  // variables (x, r): maximize r s.t. a_i'x + r||a_i|| <= b_i
  Eigen::MatrixXd G(d, p + 1);
  G.leftCols(p) = poly.A;
  for (int i = 0; i < d; ++i) G(i, p) = poly.A.row(i).norm();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p + 1);
  c[p] = -1.0;

  QpSpec spec;
  spec.dim = p + 1;
  spec.c = c;
  spec.G = &G;
  spec.h = poly.b;
  QpResult r = solve_qp(spec);
  if (r.status == QpStatus::Unbounded) throw Error("degenerate polytope");
  if (r.status != QpStatus::Optimal) throw Error("QP failed: Chebyshev center LP");
  const double radius = r.x[p];
  // the LP itself is always feasible; an empty polytope shows up as a
  // strictly negative optimal radius
  if (radius < -1e-8 * (1.0 + poly.b.cwiseAbs().maxCoeff())) throw Error("empty polytope");
  if (!(radius > 0.0)) throw Error("degenerate polytope");
  return {r.x.head(p), radius};
}

FunctionalExtremes functional_extremes(const BergerBoosSet& set) {
  const LinearGaussianProblem& pr = *set.problem;
  const Eigen::VectorXd x0 = feasible_center(set);
  FunctionalExtremes out;
  out.x_lower = minimize_linear_on_residual_ball(pr, set.y, set.threshold, pr.h, x0,
                                                 "unbounded functional over Berger-Boos set");
  out.x_upper = minimize_linear_on_residual_ball(pr, set.y, set.threshold, Eigen::VectorXd(-pr.h), x0,
                                                 "unbounded functional over Berger-Boos set");
  out.mu_lower = pr.h.dot(out.x_lower);
  out.mu_upper = pr.h.dot(out.x_upper);
  if (out.mu_lower > out.mu_upper) {
    std::swap(out.mu_lower, out.mu_upper);
    std::swap(out.x_lower, out.x_upper);
  }
  return out;
}

}  // namespace bbcal
