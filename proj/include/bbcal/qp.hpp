#pragma once

#include <Eigen/Dense>

namespace bbcal {

// Convex program
//   min 1/2 x'P x + c'x
//   s.t. G x <= h,  E x = d,  1/2 x'Q x + r'x + t <= 0   (optional, Q PSD)
//
// Matrices are passed by pointer so callers can cache K'K across many solves;
// nullptr means the block is absent.
struct QpSpec {
  int dim = 0;
  const Eigen::MatrixXd* P = nullptr;
  Eigen::VectorXd c;
  const Eigen::MatrixXd* G = nullptr;
  Eigen::VectorXd h;
  const Eigen::MatrixXd* E = nullptr;
  Eigen::VectorXd d;
  bool has_quad = false;
  const Eigen::MatrixXd* Q = nullptr;
  Eigen::VectorXd r;
  double t = 0.0;
  Eigen::VectorXd x0;  // optional starting point
};

struct QpSettings {
  int max_iters = 120;
  double tol = 1e-10;         // relative KKT tolerance
  double divergence = 1e9;    // iterate blow-up => unbounded
  double reg = 1e-12;         // static regularization in the KKT factorization
};

enum class QpStatus { Optimal, MaxIter, Unbounded, Infeasible };

struct QpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  QpStatus status = QpStatus::MaxIter;
  int iters = 0;
  double gap = 0.0;
  double residual = 0.0;  // scaled max of primal/dual residuals
};

QpResult solve_qp(const QpSpec& spec, const QpSettings& settings = {});

namespace detail {

// Exact active-set enumeration for tiny QPs:
//   min 1/2 x'H x + g'x  s.t.  A x <= b  [, e'x = d0]
// All buffers row-major. Returns false when no KKT-certified candidate was
// found (caller falls back to the interior-point path).
bool qp_enum_raw(int p, int m, const double* H, const double* g, const double* A, const double* b,
                 const double* e, double d0, double* x_out, double* obj_out);

constexpr int kEnumMaxDim = 6;
constexpr int kEnumMaxRows = 8;

}  // namespace detail

}  // namespace bbcal
