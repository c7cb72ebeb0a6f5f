#include "bbcal/qp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "bbcal/error.hpp"

namespace bbcal {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// largest alpha in (0,1] with v + alpha*dv >= (1-frac)*v elementwise positive
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, double frac = 0.995) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -frac * v[i] / dv[i]);
  }
  return alpha;
}

}  // namespace

QpResult solve_qp(const QpSpec& spec, const QpSettings& st) {
  const int p = spec.dim;
  const int m = spec.G ? static_cast<int>(spec.G->rows()) : 0;
  const int k = spec.E ? static_cast<int>(spec.E->rows()) : 0;
  const int nq = spec.has_quad ? 1 : 0;

  QpResult res;
  Eigen::VectorXd x = (spec.x0.size() == p) ? spec.x0 : Eigen::VectorXd::Zero(p);

  const auto apply_P = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return spec.P ? Eigen::VectorXd(*spec.P * v) : Eigen::VectorXd::Zero(p);
  };
  const auto objective = [&](const Eigen::VectorXd& xx) {
    double obj = spec.c.dot(xx);
    if (spec.P) obj += 0.5 * xx.dot(*spec.P * xx);
    return obj;
  };

  // Equality-constrained (or unconstrained) quadratic program: direct KKT solve.
  if (m == 0 && nq == 0) {
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(p + k, p + k);
    if (spec.P) kkt.topLeftCorner(p, p) = *spec.P;
    kkt.topLeftCorner(p, p).diagonal().array() += st.reg;
    if (k) {
      kkt.block(0, p, p, k) = spec.E->transpose();
      kkt.block(p, 0, k, p) = *spec.E;
      kkt.bottomRightCorner(k, k).diagonal().array() -= st.reg;
    }
    Eigen::VectorXd rhs(p + k);
    rhs.head(p) = -spec.c;
    if (k) rhs.tail(k) = spec.d;
    Eigen::VectorXd sol = kkt.ldlt().solve(rhs);
    res.x = sol.head(p);
    if (res.x.cwiseAbs().maxCoeff() > st.divergence) {
      res.status = QpStatus::Unbounded;
      return res;
    }
    res.objective = objective(res.x);
    Eigen::VectorXd rd = apply_P(res.x) + spec.c;
    if (k) rd += spec.E->transpose() * sol.tail(k);
    res.residual = inf_norm(rd) / (1.0 + inf_norm(spec.c));
    res.status = (res.residual <= 1e-6) ? QpStatus::Optimal : QpStatus::MaxIter;
    return res;
  }

  const double scale_h = 1.0 + inf_norm(spec.h);
  const double scale_c = 1.0 + inf_norm(spec.c);
  const double scale_x0 = 1.0 + inf_norm(x);

  const auto quad_val = [&](const Eigen::VectorXd& xx) {
    return 0.5 * xx.dot(*spec.Q * xx) + spec.r.dot(xx) + spec.t;
  };

  // slacks and multipliers
  Eigen::VectorXd u(m), w(m);
  double s = 1.0, z = 1.0;
  if (m) {
    const Eigen::VectorXd slack = spec.h - *spec.G * x;
    for (int i = 0; i < m; ++i) u[i] = std::max(slack[i], 0.1 * scale_h);
    w.setConstant(1.0);
  }
  if (nq) {
    s = std::max(-quad_val(x), 0.1 * (1.0 + std::abs(spec.t)));
    z = 1.0;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k);

  Eigen::MatrixXd kkt(p + k, p + k);
  Eigen::MatrixXd Gscaled(m, p);
  Eigen::VectorXd rhs(p + k), rd(p), rG(m), grad_q(p);
  double rq = 0.0;
  Eigen::VectorXd du(m), dw(m), dx(p), dv(k);
  double ds = 0.0, dz = 0.0;

  const double quad_scale = nq ? (1.0 + std::abs(spec.t)) : 1.0;

  for (int iter = 0; iter < st.max_iters; ++iter) {
    // residuals
    rd = apply_P(x) + spec.c;
    if (k) rd += spec.E->transpose() * v;
    if (m) rd += spec.G->transpose() * w;
    double qv = 0.0;
    if (nq) {
      grad_q = *spec.Q * x + spec.r;
      qv = quad_val(x);
      rd += z * grad_q;
      rq = qv + s;
    }
    if (m) rG = *spec.G * x + u - spec.h;
    Eigen::VectorXd rE = k ? Eigen::VectorXd(*spec.E * x - spec.d) : Eigen::VectorXd();

    const double gap = ((m ? u.dot(w) : 0.0) + (nq ? s * z : 0.0)) / std::max(1, m + nq);
    const double pres = std::max({m ? inf_norm(rG) / scale_h : 0.0, nq ? std::abs(rq) / quad_scale : 0.0,
                                  k ? inf_norm(rE) / scale_h : 0.0});
    const double dres = inf_norm(rd) / scale_c;
    res.gap = gap;
    res.residual = std::max(pres, dres);
    res.iters = iter;

    const double obj_scale = 1.0 + std::abs(objective(x));
    if (gap <= st.tol * obj_scale && res.residual <= std::max(st.tol * 100.0, 1e-9)) {
      res.status = QpStatus::Optimal;
      break;
    }
    if (x.cwiseAbs().maxCoeff() > st.divergence * scale_x0) {
      res.status = QpStatus::Unbounded;
      break;
    }
    if ((m ? inf_norm(w) : 0.0) + (nq ? std::abs(z) : 0.0) > 1e13) {
      res.status = QpStatus::Infeasible;
      break;
    }

    // condensed Newton matrix
    kkt.setZero();
    auto M = kkt.topLeftCorner(p, p);
    if (spec.P) M = *spec.P;
    if (nq) {
      M += z * (*spec.Q);
      M += (z / s) * grad_q * grad_q.transpose();
    }
    if (m) {
      // G' diag(w/u) G as one symmetric rank-m update
      Gscaled = (w.array() / u.array()).sqrt().matrix().asDiagonal() * (*spec.G);
      Eigen::MatrixXd GtG = Eigen::MatrixXd::Zero(p, p);
      GtG.selfadjointView<Eigen::Lower>().rankUpdate(Gscaled.transpose());
      GtG.triangularView<Eigen::StrictlyUpper>() = GtG.transpose();
      M += GtG;
    }
    M.diagonal().array() += st.reg;
    if (k) {
      kkt.block(0, p, p, k) = spec.E->transpose();
      kkt.block(p, 0, k, p) = *spec.E;
      kkt.bottomRightCorner(k, k).diagonal().array() -= st.reg;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(kkt);

    // two passes: affine predictor then corrector
    double sigma_mu = 0.0;
    Eigen::VectorXd corr_u = Eigen::VectorXd::Zero(m);
    double corr_s = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      rhs.head(p) = -rd;
      if (m) {
        // cu_i = sigma*mu - u_i w_i - corr ; dw = (cu - w du)/u with du = -rG - G dx
        for (int i = 0; i < m; ++i) {
          const double cu = sigma_mu - u[i] * w[i] - (pass ? corr_u[i] : 0.0);
          rhs.head(p) -= spec.G->row(i).transpose() * (cu / u[i] + (w[i] / u[i]) * rG[i]);
        }
      }
      if (nq) {
        const double cs = sigma_mu - s * z - (pass ? corr_s : 0.0);
        rhs.head(p) -= grad_q * (cs / s + (z / s) * rq);
      }
      if (k) rhs.tail(k) = -(*spec.E * x - spec.d);

      const Eigen::VectorXd sol = ldlt.solve(rhs);
      dx = sol.head(p);
      if (k) dv = sol.tail(k);
      if (m) {
        du = -rG - *spec.G * dx;
        for (int i = 0; i < m; ++i) {
          const double cu = sigma_mu - u[i] * w[i] - (pass ? corr_u[i] : 0.0);
          dw[i] = (cu - w[i] * du[i]) / u[i];
        }
      }
      if (nq) {
        ds = -rq - grad_q.dot(dx);
        const double cs = sigma_mu - s * z - (pass ? corr_s : 0.0);
        dz = (cs - z * ds) / s;
      }

      Eigen::VectorXd prim(m + nq), dprim(m + nq), dual(m + nq), ddual(m + nq);
      if (m) {
        prim.head(m) = u;
        dprim.head(m) = du;
        dual.head(m) = w;
        ddual.head(m) = dw;
      }
      if (nq) {
        prim[m] = s;
        dprim[m] = ds;
        dual[m] = z;
        ddual[m] = dz;
      }
      const double ap = max_step(prim, dprim);
      const double ad = max_step(dual, ddual);
      const double alpha = std::min(1.0, std::min(ap, ad));

      if (pass == 0) {
        // Mehrotra centering from the affine step
        double gap_aff = 0.0;
        if (m) gap_aff += (u + alpha * du).dot(w + alpha * dw);
        if (nq) gap_aff += (s + alpha * ds) * (z + alpha * dz);
        gap_aff /= std::max(1, m + nq);
        double sigma = gap > 0.0 ? std::pow(gap_aff / gap, 3.0) : 0.1;
        sigma = std::min(0.99, std::max(1e-8, sigma));
        sigma_mu = sigma * gap;
        if (m) corr_u = du.cwiseProduct(dw);
        if (nq) corr_s = ds * dz;
        continue;
      }

      // corrected step
      const double step = 0.99 * alpha;
      x += step * dx;
      if (k) v += step * dv;
      if (m) {
        u += step * du;
        w += step * dw;
      }
      if (nq) {
        s += step * ds;
        z += step * dz;
      }
    }
    if (res.status == QpStatus::Unbounded || res.status == QpStatus::Infeasible) break;
  }

  res.x = x;
  res.objective = objective(x);
  if (res.status == QpStatus::MaxIter && res.gap <= 1e-7 * (1.0 + std::abs(res.objective)) &&
      res.residual <= 1e-6) {
    res.status = QpStatus::Optimal;  // converged slightly above the target tolerance
  }
  return res;
}

namespace detail {

bool qp_enum_raw(int p, int m, const double* H, const double* g, const double* A, const double* b,
                 const double* e, double d0, double* x_out, double* obj_out) {
  if (p > kEnumMaxDim || m > kEnumMaxRows) return false;
  const int neq = e ? 1 : 0;

  double scale_b = 1.0;
  for (int i = 0; i < m; ++i) scale_b = std::max(scale_b, std::abs(b[i]));

  // masks ordered by active-set size; the optimum usually has few active rows
  for (int size = 0; size <= m; ++size) {
    for (int mask = 0; mask < (1 << m); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != size) continue;

      int act[kEnumMaxRows];
      int na = 0;
      for (int i = 0; i < m; ++i) {
        if (mask & (1 << i)) act[na++] = i;
      }
      const int nn = p + na + neq;

      double mat[kEnumMaxDim + kEnumMaxRows + 1][kEnumMaxDim + kEnumMaxRows + 2];
      for (int i = 0; i < nn; ++i) {
        for (int j = 0; j <= nn; ++j) mat[i][j] = 0.0;
      }
      for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) mat[i][j] = H[i * p + j];
        for (int a = 0; a < na; ++a) {
          mat[i][p + a] = A[act[a] * p + i];
          mat[p + a][i] = A[act[a] * p + i];
        }
        if (neq) {
          mat[i][p + na] = e[i];
          mat[p + na][i] = e[i];
        }
        mat[i][nn] = -g[i];
      }
      for (int a = 0; a < na; ++a) mat[p + a][nn] = b[act[a]];
      if (neq) mat[p + na][nn] = d0;

      // Gaussian elimination with partial pivoting
      bool singular = false;
      for (int col = 0; col < nn; ++col) {
        int piv = col;
        double best = std::abs(mat[col][col]);
        for (int i2 = col + 1; i2 < nn; ++i2) {
          if (std::abs(mat[i2][col]) > best) {
            best = std::abs(mat[i2][col]);
            piv = i2;
          }
        }
        if (best < 1e-12) {
          singular = true;
          break;
        }
        if (piv != col) {
          for (int j = col; j <= nn; ++j) std::swap(mat[piv][j], mat[col][j]);
        }
        const double inv = 1.0 / mat[col][col];
        for (int i2 = col + 1; i2 < nn; ++i2) {
          const double f = mat[i2][col] * inv;
          if (f == 0.0) continue;
          for (int j = col; j <= nn; ++j) mat[i2][j] -= f * mat[col][j];
        }
      }
      if (singular) continue;
      double sol[kEnumMaxDim + kEnumMaxRows + 1];
      for (int i2 = nn - 1; i2 >= 0; --i2) {
        double acc = mat[i2][nn];
        for (int j = i2 + 1; j < nn; ++j) acc -= mat[i2][j] * sol[j];
        sol[i2] = acc / mat[i2][i2];
      }

      // dual feasibility of active rows
      bool ok = true;
      for (int a = 0; a < na && ok; ++a) {
        if (sol[p + a] < -1e-9) ok = false;
      }
      if (!ok) continue;
      // primal feasibility of inactive rows
      double xs = 1.0;
      for (int i2 = 0; i2 < p; ++i2) xs = std::max(xs, std::abs(sol[i2]));
      for (int i = 0; i < m && ok; ++i) {
        if (mask & (1 << i)) continue;
        double ax = 0.0;
        for (int j = 0; j < p; ++j) ax += A[i * p + j] * sol[j];
        if (ax > b[i] + 1e-9 * std::max(scale_b, xs)) ok = false;
      }
      if (!ok) continue;

      double obj = 0.0;
      for (int i2 = 0; i2 < p; ++i2) {
        double hx = 0.0;
        for (int j = 0; j < p; ++j) hx += H[i2 * p + j] * sol[j];
        obj += 0.5 * sol[i2] * hx + g[i2] * sol[i2];
      }
      for (int i2 = 0; i2 < p; ++i2) x_out[i2] = sol[i2];
      *obj_out = obj;
      return true;
    }
  }
  return false;
}

}  // namespace detail

}  // namespace bbcal
