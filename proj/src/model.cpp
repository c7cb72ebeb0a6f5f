#include "bbcal/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <iostream>

#include "bbcal/error.hpp"

namespace bbcal {

void LinearGaussianProblem::validate() const {
  if (Sigma.rows() != n() || Sigma.cols() != n()) throw Error("Sigma must be n x n");
  if (h.size() != p()) throw Error("functional h must have p entries");
  if (constraints.A.rows() > 0 && constraints.A.cols() != p()) {
    throw Error("constraint matrix must have p columns");
  }
  if (constraints.A.rows() != constraints.b.size()) throw Error("constraint rows and offsets disagree");
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw Error("covariance not SPD");
}

LinearGaussianProblem whiten(const LinearGaussianProblem& problem) {
  Eigen::LLT<Eigen::MatrixXd> llt(problem.Sigma);
  if (llt.info() != Eigen::Success) throw Error("covariance not SPD");
  LinearGaussianProblem out = problem;
  out.K = llt.matrixL().solve(problem.K);
  out.Sigma = Eigen::MatrixXd::Identity(problem.n(), problem.n());
  return out;
}

Eigen::VectorXd whiten_observation(const LinearGaussianProblem& original, const Eigen::VectorXd& y) {
  Eigen::LLT<Eigen::MatrixXd> llt(original.Sigma);
  if (llt.info() != Eigen::Success) throw Error("covariance not SPD");
  return llt.matrixL().solve(y);
}

Observation simulate(const LinearGaussianProblem& problem, const Eigen::VectorXd& x_true, Rng& rng,
                     bool zero_noise) {
  if (!problem.constraints.contains(x_true)) {
    std::cerr << "[bbcal] warning: simulate called with x_true outside the constraint set\n";
  }
  Eigen::VectorXd y = problem.K * x_true;
  if (!zero_noise) {
    for (int i = 0; i < y.size(); ++i) y[i] += rng.normal();
  }
  Observation obs;
  obs.y = std::move(y);
  obs.true_x = x_true;
  obs.seed = rng.seed();
  return obs;
}

Eigen::VectorXd gls_estimate(const LinearGaussianProblem& problem, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(problem.K);
  qr.setThreshold(1e-10);
  if (qr.rank() < problem.p()) {
    throw Error("GLS undefined; use constrained_lsq or polytope faces");
  }
  return qr.solve(y);
}

EigenStructure eigendecompose(const LinearGaussianProblem& problem) {
  Eigen::MatrixXd Kw = problem.K;
  if (!problem.is_whitened()) {
    Eigen::LLT<Eigen::MatrixXd> llt(problem.Sigma);
    if (llt.info() != Eigen::Success) throw Error("covariance not SPD");
    Kw = llt.matrixL().solve(problem.K);
  }
  const Eigen::MatrixXd M = Kw.transpose() * Kw;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");

  const int p = problem.p();
  EigenStructure out;
  out.vectors.resize(p, p);
  out.values.resize(p);
  // SelfAdjointEigenSolver sorts ascending; flip to descending
  for (int i = 0; i < p; ++i) {
    out.values[i] = std::max(0.0, es.eigenvalues()[p - 1 - i]);
    out.vectors.col(i) = es.eigenvectors().col(p - 1 - i);
  }
  const double wmax = out.values.size() ? out.values[0] : 0.0;
  int r = 0;
  for (int i = 0; i < p; ++i) {
    if (out.values[i] > 1e-10 * wmax) ++r;
  }
  out.numerical_rank = r;
  return out;
}

}  // namespace bbcal
