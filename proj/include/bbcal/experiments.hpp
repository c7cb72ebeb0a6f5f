#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bbcal/gbt.hpp"
#include "bbcal/intervals.hpp"
#include "bbcal/model.hpp"

namespace bbcal {

enum class SamplerKind { Auto, VGS, Polytope, ImportanceLike };
enum class CalibrationAlgo { McQuantile, Regression };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::Auto;
  CalibrationAlgo algo = CalibrationAlgo::McQuantile;
  int M = 1000;        // design points used for inversion
  int N = 100;         // null-LLR draws per point (Monte Carlo calibration)
  int M_tr = 0;        // regression training points; 0 => equal split (M_tr = M)
  int C = 14;          // parallel Vaidya chains
  double radius = 0.5;
  int n_random = -1;   // random bounding faces; -1 => 2p
  double gamma_p = 2.0;
  double q_norm = 0.5;
  std::optional<GbtHyper> hyper;  // fixed regressor settings; empty => pilot CV
  int cv_folds = 10;
};

struct Scenario {
  std::string name;
  LinearGaussianProblem problem;  // stored whitened
  Eigen::VectorXd x_true;
  double alpha = 0.32;
  double eta = 0.01;
  SamplerConfig sampler;
  std::vector<Method> methods;
  int replications = 1000;
  std::uint64_t master_seed = 20260810ULL;

  double mu_true() const { return problem.h.dot(x_true); }
};

Scenario scenario_gaussian2d();
Scenario scenario_gaussian3d();
// Binned Gaussian-smearing deconvolution with wide observation bins,
// K in R^{40x80}; smooth or sharp-jump truth.
Scenario scenario_widebin(bool smooth);

struct ReplicationRow {
  int rep = 0;
  Method method = Method::OSB;
  double mu_true = 0.0;
  double lower = 0.0, upper = 0.0;
  bool covered = false;
  bool degenerate = false;
  long n_accepted = 0;
  std::uint64_t seed = 0;

  double length() const { return upper - lower; }
};

struct MethodSummary {
  Method method = Method::OSB;
  long covered = 0, missed = 0;
  double coverage = 0.0, cp_lo = 0.0, cp_hi = 0.0;
  double mean_length = 0.0, sem_length = 0.0;
  long degenerate_count = 0;
};

struct StudyReport {
  std::string scenario;
  double mu_true = 0.0;
  double alpha = 0.0, eta = 0.0;
  int replications = 0;
  long failures = 0;
  std::uint64_t master_seed = 0;
  std::optional<GbtHyper> chosen_hyper;
  std::vector<MethodSummary> summary;
  std::vector<ReplicationRow> rows;

  const MethodSummary* find(Method m) const;
};

// Exact binomial confidence bounds for the coverage probability.
std::pair<double, double> clopper_pearson(long successes, long trials, double level);

struct BergerBoosSet;

// One observation's calibrated test samples (design points with q_hat),
// exactly as produced inside run_coverage_study.
std::vector<CalibrationSample> calibrate_for_study(const Scenario& scenario, const BergerBoosSet& set,
                                                   double gamma, Rng& rng);

StudyReport run_coverage_study(const Scenario& scenario, int workers = 0);

struct EtaSweepRow {
  Eigen::VectorXd x_true;
  double eta = 0.0;
  double eta_effective = 0.0;  // eta = 0 runs with a 1e-6 surrogate, flagged here
  double mean_length = 0.0;
  double sem_length = 0.0;
  long degenerate_count = 0;
  int replications = 0;
};

// Mean GlobalOptimized interval length per (x*, eta) cell; observation seeds
// are shared across eta so curves differ only through the construction.
std::vector<EtaSweepRow> eta_sweep(const Scenario& base, const std::vector<Eigen::VectorXd>& x_list,
                                   const std::vector<double>& eta_grid, int replications, int workers = 0);

}  // namespace bbcal
