#include "bbcal/samplers.hpp"

#include <cmath>

#include "bbcal/error.hpp"
#include "bbcal/optim.hpp"

namespace bbcal {

Eigen::VectorXd vgs_ball(int p, Rng& rng) {
  Eigen::VectorXd z(p + 2);
  for (int i = 0; i < p + 2; ++i) z[i] = rng.normal();
  z /= z.norm();
  return z.head(p);
}

SampleBatch vgs_sample(const BergerBoosSet& set, int M, Rng& rng, long long reject_cap) {
  const LinearGaussianProblem& pr = *set.problem;
  const int p = pr.p();

  const EigenStructure es = eigendecompose(pr);
  if (es.numerical_rank < p) throw Error("VGS requires full column rank K");
  const Eigen::VectorXd xhat = gls_estimate(pr, set.y);

  // sqrt(threshold) * P Omega^{-1/2}
  Eigen::MatrixXd T = es.vectors;
  for (int i = 0; i < p; ++i) T.col(i) *= std::sqrt(set.threshold / es.values[i]);

  SampleBatch batch;
  batch.provenance = Provenance::VGS;
  batch.points.resize(M, p);
  batch.functional_values.resize(M);
  batch.steps.resize(M);

  long long rejections = 0;
  for (int k = 0; k < M; ++k) {
    for (;;) {
      const Eigen::VectorXd w = T * vgs_ball(p, rng) + xhat;
      if (pr.constraints.contains(w)) {
        batch.points.row(k) = w.transpose();
        batch.functional_values[k] = pr.h.dot(w);
        batch.steps[k] = k;
        break;
      }
      if (++rejections > reject_cap) {
        throw Error("VGS acceptance too low; use polytope sampler");
      }
    }
  }
  return batch;
}

VaidyaWalk::VaidyaWalk(const Polytope& poly, double radius) : poly_(&poly), radius_(radius) {
  const int d = poly.faces();
  const int p = poly.dim();
  if (d == 0) throw Error("Vaidya walk needs at least one face");
  step_scale_ = radius * radius / std::sqrt(static_cast<double>(d) * p);
  beta_ = static_cast<double>(p) / d;
  Ax_.resize(d, p);
  work_.resize(p, d);
  slack_.resize(d);
  sigma_.resize(d);
}

void VaidyaWalk::metric_at(const Eigen::VectorXd& x, Metric* out) const {
  const int d = poly_->faces();
  const int p = poly_->dim();
  slack_ = poly_->b - poly_->A * x;

  // slack-scaled constraint matrix and log-barrier Hessian A_x' A_x
  for (int i = 0; i < d; ++i) Ax_.row(i) = poly_->A.row(i) / slack_[i];
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
  H.selfadjointView<Eigen::Lower>().rankUpdate(Ax_.transpose());
  Eigen::LLT<Eigen::MatrixXd> hchol(H.selfadjointView<Eigen::Lower>());
  if (hchol.info() != Eigen::Success) {
    // rank-revealing fallback: jitter proportional to the trace
    H.diagonal().array() += 1e-12 * H.trace() / p + 1e-300;
    hchol.compute(H.selfadjointView<Eigen::Lower>());
    if (hchol.info() != Eigen::Success) throw Error("Vaidya metric factorization failed");
  }

  // leverage scores sigma_i = a_i' H^{-1} a_i / s_i^2
  work_ = hchol.matrixL().solve(Ax_.transpose());
  for (int i = 0; i < d; ++i) sigma_[i] = work_.col(i).squaredNorm();

  // V(x) = sum (sigma_i + beta) a_i a_i' / s_i^2
  for (int i = 0; i < d; ++i) Ax_.row(i) *= std::sqrt(sigma_[i] + beta_);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(p, p);
  V.selfadjointView<Eigen::Lower>().rankUpdate(Ax_.transpose());
  out->chol.compute(V.selfadjointView<Eigen::Lower>());
  if (out->chol.info() != Eigen::Success) throw Error("Vaidya metric factorization failed");
  out->logdet = 0.0;
  for (int i = 0; i < p; ++i) out->logdet += 2.0 * std::log(out->chol.matrixLLT()(i, i));
}

void VaidyaWalk::set_state(const Eigen::VectorXd& x) {
  if (poly_->min_slack(x) <= 0.0) throw Error("invalid walk state");
  x_ = x;
  metric_at(x_, &cur_);
}

bool VaidyaWalk::step(Rng& rng) {
  const int p = poly_->dim();
  // proposal z ~ N(x, step_scale * V(x)^{-1}); z = x + sqrt(c) L^{-T} xi
  Eigen::VectorXd xi(p);
  for (int i = 0; i < p; ++i) xi[i] = rng.normal();
  Eigen::VectorXd dir = cur_.chol.matrixU().solve(xi);
  Eigen::VectorXd z = x_ + std::sqrt(step_scale_) * dir;

  if (poly_->min_slack(z) <= 0.0) return false;  // outside: reject, keep x

  Metric prop;
  metric_at(z, &prop);

  // log q(x|z) - log q(z|x) with q(.|x) = N(x, c V(x)^{-1})
  const Eigen::VectorXd diff = z - x_;
  const double qf_x = (cur_.chol.matrixL().transpose() * diff).squaredNorm();
  const double qf_z = (prop.chol.matrixL().transpose() * diff).squaredNorm();
  const double log_ratio = 0.5 * (prop.logdet - cur_.logdet) - (qf_z - qf_x) / (2.0 * step_scale_);

  if (std::log(rng.uniform()) <= log_ratio) {
    x_ = z;
    cur_ = std::move(prop);
    return true;
  }
  return false;
}

std::pair<Eigen::VectorXd, bool> vaidya_step(const Polytope& poly, const Eigen::VectorXd& x, double radius,
                                             Rng& rng) {
  VaidyaWalk walk(poly, radius);
  walk.set_state(x);
  const bool accepted = walk.step(rng);
  return {walk.state(), accepted};
}

std::vector<Eigen::VectorXd> chain_starts(const BergerBoosSet& set, const Polytope& poly, int C,
                                          const std::vector<double>& taus) {
  if (C <= 0 || C % 2 != 0) throw Error("chain count C must be even and positive");
  if (static_cast<int>(taus.size()) != C / 2) throw Error("need C/2 interpolation weights");

  const auto [xc, r] = chebyshev_center(poly);
  const FunctionalExtremes ext = functional_extremes(set);

  std::vector<Eigen::VectorXd> starts;
  starts.reserve(C);
  for (int k = 1; k <= C; ++k) {
    const double tau = taus[(k + 1) / 2 - 1];
    const Eigen::VectorXd& anchor = (k % 2 == 1) ? ext.x_lower : ext.x_upper;
    Eigen::VectorXd x = tau * anchor + (1.0 - tau) * xc;
    // extremes sit on the boundary; pull interior along the center direction
    double pull = 1e-6 * r;
    for (int tries = 0; tries < 80 && poly.min_slack(x) <= 0.0; ++tries) {
      const Eigen::VectorXd to_center = xc - x;
      const double len = to_center.norm();
      if (len <= 0.0) break;
      x += std::min(pull / len, 1.0) * to_center;
      pull *= 2.0;
    }
    if (poly.min_slack(x) <= 0.0) throw Error("invalid walk state");
    starts.push_back(std::move(x));
  }
  return starts;
}

namespace {

std::vector<double> uniform_taus(int C, double lo = 0.05, double hi = 0.95) {
  const int half = C / 2;
  std::vector<double> taus(half);
  if (half == 1) {
    taus[0] = 0.5 * (lo + hi);
  } else {
    for (int i = 0; i < half; ++i) taus[i] = lo + (hi - lo) * i / (half - 1);
  }
  return taus;
}

}  // namespace

SampleBatch polytope_sample(const BergerBoosSet& set, int C, int M_p, double radius, int n_random, Rng& rng) {
  const LinearGaussianProblem& pr = *set.problem;
  const int p = pr.p();
  if (n_random < 0) n_random = 2 * p;

  Rng poly_rng = rng.substream(0x706f6c79ULL);
  const Polytope poly = bounding_polytope(set, n_random, poly_rng);
  const auto starts = chain_starts(set, poly, C, uniform_taus(C));

  SampleBatch batch;
  batch.provenance = Provenance::Polytope;
  batch.points.resize(static_cast<long>(C) * M_p, p);
  batch.functional_values.resize(static_cast<long>(C) * M_p);
  batch.chain_ids.resize(static_cast<std::size_t>(C) * M_p);
  batch.steps.resize(static_cast<std::size_t>(C) * M_p);

  VaidyaWalk walk(poly, radius);
  long row = 0;
  for (int c = 0; c < C; ++c) {
    Rng chain_rng = rng.substream(1000 + static_cast<std::uint64_t>(c));
    walk.set_state(starts[c]);
    for (int s = 0; s < M_p; ++s) {
      walk.step(chain_rng);
      batch.points.row(row) = walk.state().transpose();
      batch.functional_values[row] = pr.h.dot(walk.state());
      batch.chain_ids[static_cast<std::size_t>(row)] = c;
      batch.steps[static_cast<std::size_t>(row)] = s;
      ++row;
    }
  }
  return batch;
}

SampleBatch importance_like_sample(const BergerBoosSet& set, int M, double gamma_p, double q_norm, Rng& rng,
                                   int C, const PolytopeSamplerOptions& opts, long long draw_cap) {
  if (!(q_norm > 0.0 && q_norm < 1.0)) throw Error("q_norm must lie in (0,1)");
  const LinearGaussianProblem& pr = *set.problem;
  const int p = pr.p();
  const int n_random = opts.n_random < 0 ? 2 * p : opts.n_random;

  Rng poly_rng = rng.substream(0x706f6c79ULL);
  const Polytope poly = bounding_polytope(set, n_random, poly_rng);
  const auto starts = chain_starts(set, poly, C, uniform_taus(C));

  const auto norm_q = [&](const Eigen::VectorXd& x) {
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]), q_norm);
    return std::pow(acc, 1.0 / q_norm);
  };

  SampleBatch batch;
  batch.provenance = Provenance::ImportanceLike;
  batch.points.resize(M, p);
  batch.functional_values.resize(M);
  batch.chain_ids.resize(M);
  batch.steps.resize(M);

  std::vector<VaidyaWalk> walks;
  std::vector<Rng> chain_rngs;
  walks.reserve(C);
  for (int c = 0; c < C; ++c) {
    walks.emplace_back(poly, opts.radius);
    walks.back().set_state(starts[c]);
    chain_rngs.push_back(rng.substream(1000 + static_cast<std::uint64_t>(c)));
  }
  Rng thin_rng = rng.substream(0x7468696eULL);

  long long drawn = 0;
  int kept = 0;
  int step_counter = 0;
  while (kept < M) {
    // one sweep: a step from every chain, thinned independently
    for (int c = 0; c < C && kept < M; ++c) {
      walks[c].step(chain_rngs[c]);
      ++drawn;
      const Eigen::VectorXd& x = walks[c].state();
      const double accept_prob = std::exp(-gamma_p * norm_q(x));
      if (thin_rng.uniform() <= accept_prob) {
        batch.points.row(kept) = x.transpose();
        batch.functional_values[kept] = pr.h.dot(x);
        batch.chain_ids[static_cast<std::size_t>(kept)] = c;
        batch.steps[static_cast<std::size_t>(kept)] = step_counter;
        ++kept;
      }
    }
    ++step_counter;
    if (drawn > draw_cap) throw Error("importance-like acceptance too low");
  }
  return batch;
}

double functional_occupancy(const SampleBatch& batch, double lo, double hi, int bins) {
  if (!(hi > lo) || bins <= 0 || batch.size() == 0) return 0.0;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < batch.size(); ++i) {
    const double t = (batch.functional_values[i] - lo) / (hi - lo);
    if (t < 0.0 || t > 1.0) continue;
    int b = static_cast<int>(t * bins);
    if (b == bins) b = bins - 1;
    ++counts[b];
  }
  int occupied = 0;
  for (int c : counts) occupied += (c > 0) ? 1 : 0;
  return static_cast<double>(occupied) / bins;
}

}  // namespace bbcal
