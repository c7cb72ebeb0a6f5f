#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "bbcal/geometry.hpp"
#include "bbcal/model.hpp"
#include "bbcal/rng.hpp"

namespace bbcal {

enum class Provenance { VGS, Polytope, ImportanceLike };

struct SampleBatch {
  Eigen::MatrixXd points;              // M x p, row per sample
  Eigen::VectorXd functional_values;   // h'x per row
  Provenance provenance = Provenance::VGS;
  std::vector<int> chain_ids;          // empty for VGS
  std::vector<int> steps;

  int size() const { return static_cast<int>(points.rows()); }
};

// Uniform draw from the unit p-ball: normalize a (p+2)-dim Gaussian and keep
// the first p coordinates.
Eigen::VectorXd vgs_ball(int p, Rng& rng);

// Accept-reject sampler on the pre-image ellipsoid; requires full column rank K.
SampleBatch vgs_sample(const BergerBoosSet& set, int M, Rng& rng, long long reject_cap = 10000000LL);

// One Metropolis-Hastings step of the Vaidya walk; rejected proposals return x.
std::pair<Eigen::VectorXd, bool> vaidya_step(const Polytope& poly, const Eigen::VectorXd& x, double radius,
                                             Rng& rng);

std::vector<Eigen::VectorXd> chain_starts(const BergerBoosSet& set, const Polytope& poly, int C,
                                          const std::vector<double>& taus);

struct PolytopeSamplerOptions {
  double radius = 0.5;
  int n_random = -1;  // -1 => 2p
};

// C Vaidya chains of M_p steps each from Chebyshev-anchored starts; all
// visited states are kept (no burn-in), ordered by chain then step.
SampleBatch polytope_sample(const BergerBoosSet& set, int C, int M_p, double radius, int n_random, Rng& rng);

// Thinned polytope sampling, keeping x with probability exp(-gamma_p ||x||_q).
SampleBatch importance_like_sample(const BergerBoosSet& set, int M, double gamma_p, double q_norm, Rng& rng,
                                   int C = 6, const PolytopeSamplerOptions& opts = {},
                                   long long draw_cap = 50000000LL);

// Fraction of occupied equal-width sub-bins of the sampled functional range
// relative to [lo, hi]; the Fig.-3-style mixing diagnostic.
double functional_occupancy(const SampleBatch& batch, double lo, double hi, int bins = 20);

// Stateful walk used by polytope_sample; exposed for diagnostics and tests.
class VaidyaWalk {
 public:
  VaidyaWalk(const Polytope& poly, double radius);

  void set_state(const Eigen::VectorXd& x);  // must be strictly interior
  const Eigen::VectorXd& state() const { return x_; }
  bool step(Rng& rng);  // true when the proposal was accepted

 private:
  struct Metric {
    Eigen::LLT<Eigen::MatrixXd> chol;  // V = L L'
    double logdet = 0.0;
  };
  void metric_at(const Eigen::VectorXd& x, Metric* out) const;

  const Polytope* poly_;
  double radius_;
  double step_scale_;  // radius^2 / sqrt(d p)
  double beta_;        // p / d
  Eigen::VectorXd x_;
  Metric cur_;
  mutable Eigen::MatrixXd Ax_, work_;
  mutable Eigen::VectorXd slack_, sigma_;
};

}  // namespace bbcal
