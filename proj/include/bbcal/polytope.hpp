#pragma once

#include <Eigen/Dense>

namespace bbcal {

// Half-space representation {x : A x <= b}.
struct Polytope {
  Eigen::MatrixXd A;  // d x p
  Eigen::VectorXd b;  // d

  int dim() const { return static_cast<int>(A.cols()); }
  int faces() const { return static_cast<int>(A.rows()); }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const {
    if (A.rows() == 0) return true;
    return ((A * x - b).array() <= tol).all();
  }

  // smallest slack b_i - a_i' x; +inf for a face-free polytope
  double min_slack(const Eigen::VectorXd& x) const {
    if (A.rows() == 0) return std::numeric_limits<double>::infinity();
    return (b - A * x).minCoeff();
  }

  static Polytope nonnegative_orthant(int p) {
    Polytope poly;
    poly.A = -Eigen::MatrixXd::Identity(p, p);
    poly.b = Eigen::VectorXd::Zero(p);
    return poly;
  }

  static Polytope unconstrained(int p) {
    Polytope poly;
    poly.A = Eigen::MatrixXd::Zero(0, p);
    poly.b = Eigen::VectorXd::Zero(0);
    return poly;
  }
};

}  // namespace bbcal
