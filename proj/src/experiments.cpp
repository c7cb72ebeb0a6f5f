#include "bbcal/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "bbcal/error.hpp"
#include "bbcal/geometry.hpp"
#include "bbcal/optim.hpp"
#include "bbcal/quantiles.hpp"
#include "bbcal/samplers.hpp"
#include "bbcal/stats.hpp"

namespace bbcal {

namespace {

const std::vector<Method> kAllMethods = {Method::OSB,          Method::SSB,
                                         Method::GlobalInverted, Method::GlobalOptimized,
                                         Method::SlicedInverted, Method::SlicedOptimized};

Eigen::VectorXd gaussian_bin_integrals(double lo, double hi, int bins, double mean, double sd) {
  Eigen::VectorXd out(bins);
  const double width = (hi - lo) / bins;
  for (int i = 0; i < bins; ++i) {
    const double a = lo + i * width;
    const double b = a + width;
    out[i] = normal_cdf((b - mean) / sd) - normal_cdf((a - mean) / sd);
  }
  return out;
}

}  // namespace

Scenario scenario_gaussian2d() {
  Scenario s;
  s.name = "gaussian2d";
  s.problem.K = Eigen::MatrixXd::Identity(2, 2);
  s.problem.Sigma = Eigen::MatrixXd::Identity(2, 2);
  s.problem.constraints = Polytope::nonnegative_orthant(2);
  s.problem.h = Eigen::Vector2d(1.0, -1.0);
  s.x_true = Eigen::Vector2d(0.5, 0.5);
  s.alpha = 0.32;
  s.eta = 0.01;
  s.sampler.kind = SamplerKind::VGS;
  s.sampler.algo = CalibrationAlgo::McQuantile;
  s.sampler.M = 1000;
  s.sampler.N = 100;
  s.methods = kAllMethods;
  s.replications = 1000;
  return s;
}

Scenario scenario_gaussian3d() {
  Scenario s;
  s.name = "gaussian3d";
  s.problem.K = Eigen::MatrixXd::Identity(3, 3);
  s.problem.Sigma = Eigen::MatrixXd::Identity(3, 3);
  s.problem.constraints = Polytope::nonnegative_orthant(3);
  s.problem.h = Eigen::Vector3d(1.0, 1.0, -1.0);
  s.x_true = Eigen::Vector3d(0.03, 0.03, 1.0);
  s.alpha = 0.32;
  s.eta = 0.01;
  s.sampler.kind = SamplerKind::ImportanceLike;
  s.sampler.algo = CalibrationAlgo::McQuantile;
  s.sampler.M = 1000;
  s.sampler.N = 100;
  s.sampler.C = 6;
  s.sampler.gamma_p = 2.0;
  s.sampler.q_norm = 0.5;
  s.methods = kAllMethods;
  s.replications = 1000;
  return s;
}

Scenario scenario_widebin(bool smooth) {
  constexpr int kTrueBins = 80;
  constexpr int kObsBins = 40;
  constexpr double kLo = -7.0, kHi = 7.0;
  constexpr double kSmear = 0.75;
  constexpr double kIntensity = 1e4;

  Scenario s;
  s.name = smooth ? "widebin_smooth" : "widebin_adversarial";

  // K[i][j] = integral over observation bin i of N(t; center_j, smear)
  Eigen::MatrixXd K(kObsBins, kTrueBins);
  const double true_width = (kHi - kLo) / kTrueBins;
  for (int j = 0; j < kTrueBins; ++j) {
    const double center = kLo + (j + 0.5) * true_width;
    K.col(j) = gaussian_bin_integrals(kLo, kHi, kObsBins, center, kSmear);
  }
  s.problem.K = K;
  s.problem.Sigma = Eigen::MatrixXd::Identity(kObsBins, kObsBins);
  s.problem.constraints = Polytope::nonnegative_orthant(kTrueBins);

  // functional: total intensity of a contiguous block of true bins
  Eigen::VectorXd h = Eigen::VectorXd::Zero(kTrueBins);
  h.segment(40, 8).setOnes();
  s.problem.h = h;

  // smooth truth: two Gaussian bumps plus a uniform background
  Eigen::VectorXd x = 0.35 * gaussian_bin_integrals(kLo, kHi, kTrueBins, -2.0, 1.0) +
                      0.50 * gaussian_bin_integrals(kLo, kHi, kTrueBins, 2.0, 1.2) +
                      0.15 * Eigen::VectorXd::Constant(kTrueBins, 1.0 / kTrueBins);
  x *= kIntensity / x.sum();
  if (!smooth) {
    x.segment(36, 4) *= 3.0;
    x.segment(52, 4) *= 3.0;
    x.segment(44, 4).setZero();
    x.segment(28, 4).setZero();
  }
  s.x_true = x;

  s.alpha = 0.32;
  s.eta = 0.01;
  s.sampler.kind = SamplerKind::Polytope;
  s.sampler.algo = CalibrationAlgo::Regression;
  s.sampler.M = 2500;
  s.sampler.M_tr = 2500;
  s.sampler.C = 14;
  s.sampler.radius = 0.5;
  s.sampler.n_random = 40;
  s.methods = kAllMethods;
  s.replications = 100;
  return s;
}

std::pair<double, double> clopper_pearson(long successes, long trials, double level) {
  if (trials <= 0 || successes < 0 || successes > trials) throw Error("clopper_pearson: bad counts");
  const double a = 1.0 - level;
  const double s = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  const double lo = (successes == 0) ? 0.0 : beta_inc_inv(s, n - s + 1.0, a / 2.0);
  const double hi = (successes == trials) ? 1.0 : beta_inc_inv(s + 1.0, n - s, 1.0 - a / 2.0);
  return {lo, hi};
}

namespace {

struct RepOutcome {
  bool failed = false;
  std::string error;
  std::vector<ReplicationRow> rows;
};

bool wants_bb_methods(const std::vector<Method>& methods) {
  for (Method m : methods) {
    if (m != Method::OSB && m != Method::SSB) return true;
  }
  return false;
}

SamplerKind resolve_kind(const Scenario& sc) {
  if (sc.sampler.kind != SamplerKind::Auto) return sc.sampler.kind;
  if (sc.problem.p() < 10 && eigendecompose(sc.problem).numerical_rank == sc.problem.p()) {
    return SamplerKind::VGS;
  }
  return SamplerKind::Polytope;
}

SampleBatch draw_design_points(const Scenario& sc, const BergerBoosSet& set, int total, Rng& rng) {
  switch (resolve_kind(sc)) {
    case SamplerKind::VGS:
      return vgs_sample(set, total, rng);
    case SamplerKind::Polytope: {
      const int C = sc.sampler.C;
      const int M_p = (total + C - 1) / C;
      return polytope_sample(set, C, M_p, sc.sampler.radius, sc.sampler.n_random, rng);
    }
    case SamplerKind::ImportanceLike: {
      PolytopeSamplerOptions opts;
      opts.radius = sc.sampler.radius;
      opts.n_random = sc.sampler.n_random;
      return importance_like_sample(set, total, sc.sampler.gamma_p, sc.sampler.q_norm, rng, sc.sampler.C,
                                    opts);
    }
    case SamplerKind::Auto:
      break;
  }
  throw Error("unresolved sampler kind");
}

std::vector<CalibrationSample> batch_to_samples(const SampleBatch& batch) {
  std::vector<CalibrationSample> out(batch.size());
  for (int i = 0; i < batch.size(); ++i) {
    out[i].x = batch.points.row(i).transpose();
    out[i].mu = batch.functional_values[i];
  }
  return out;
}

}  // namespace

// Calibrated test samples for one observation: Monte Carlo percentiles per
// point, or single draws + boosted quantile regression.
std::vector<CalibrationSample> calibrate_for_study(const Scenario& sc, const BergerBoosSet& set, double gamma,
                                                   Rng& rng) {
  const bool regression = sc.sampler.algo == CalibrationAlgo::Regression;
  const int M = sc.sampler.M;
  const int M_tr = regression ? (sc.sampler.M_tr > 0 ? sc.sampler.M_tr : M) : 0;

  Rng draw_rng = rng.substream(11);
  SampleBatch batch = draw_design_points(sc, set, M + M_tr, draw_rng);
  std::vector<CalibrationSample> all = batch_to_samples(batch);

  if (!regression) {
    Rng mc_rng = rng.substream(12);
    for (std::size_t k = 0; k < all.size(); ++k) {
      Rng point_rng = mc_rng.substream(k);
      all[k].q_hat = mc_quantile(*set.problem, all[k].x, gamma, sc.sampler.N, point_rng);
    }
    return all;
  }

  // alternate assignment keeps both batches balanced across chains/steps
  std::vector<CalibrationSample> train, test;
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (static_cast<int>(train.size()) < M_tr && (k % 2 == 0 || static_cast<int>(test.size()) >= M)) {
      train.push_back(std::move(all[k]));
    } else {
      test.push_back(std::move(all[k]));
    }
  }

  Rng llr_rng = rng.substream(13);
  for (std::size_t k = 0; k < train.size(); ++k) {
    Rng point_rng = llr_rng.substream(k);
    train[k].llr_draw = sample_null_llr(*set.problem, train[k].x, point_rng);
  }
  Rng fit_rng = rng.substream(14);
  const QuantileRegressor reg = fit_quantile_regressor(train, gamma, sc.sampler.hyper, sc.sampler.cv_folds,
                                                       fit_rng);
  for (auto& t : test) t.q_hat = reg.predict(t.x);
  return test;
}

namespace {

RepOutcome run_replication(const Scenario& sc, int rep) {
  RepOutcome out;
  const std::uint64_t seed = derive_seed(sc.master_seed, static_cast<std::uint64_t>(rep));
  Rng rng(seed);
  const double mu_star = sc.mu_true();
  const double gamma = sc.alpha - sc.eta;

  try {
    Rng sim_rng = rng.substream(1);
    const Observation obs = simulate(sc.problem, sc.x_true, sim_rng);

    std::vector<IntervalResult> results;
    std::optional<AcceptanceContext> ctx;
    std::vector<CalibrationSample> calibrated;

    if (wants_bb_methods(sc.methods)) {
      bool bb_ok = true;
      try {
        const BergerBoosSet set = make_bb_set(sc.problem, obs.y, sc.eta);
        Rng calib_rng = rng.substream(2);
        calibrated = calibrate_for_study(sc, set, gamma, calib_rng);
        ctx = make_acceptance_context(sc.problem, obs.y, calibrated);
      } catch (const Error& e) {
        if (std::string(e.what()).find("empty Berger-Boos set") == std::string::npos) throw;
        bb_ok = false;
      }
      if (!bb_ok) {
        // empty set: every Berger-Boos method degenerates to the fit point
        LsqResult base = constrained_lsq(sc.problem, obs.y);
        AcceptanceContext empty;
        empty.problem = &sc.problem;
        empty.y = obs.y;
        empty.s2 = base.objective;
        empty.mu_hat = sc.problem.h.dot(base.x);
        ctx = std::move(empty);
      }
    }

    for (Method m : sc.methods) {
      IntervalResult res;
      switch (m) {
        case Method::OSB:
          res = osb_interval(sc.problem, obs.y, sc.alpha);
          break;
        case Method::SSB:
          res = ssb_interval(sc.problem, obs.y, sc.alpha);
          break;
        case Method::GlobalInverted:
          res = global_inverted(*ctx, sc.alpha, sc.eta);
          break;
        case Method::GlobalOptimized:
          res = global_optimized(*ctx, sc.alpha, sc.eta);
          break;
        case Method::SlicedInverted:
          res = sliced_inverted(*ctx, sc.alpha, sc.eta);
          break;
        case Method::SlicedOptimized: {
          if (ctx->mu.empty()) {
            res = IntervalResult{};
            res.method = Method::SlicedOptimized;
            res.lower = res.upper = ctx->mu_hat;
            res.degenerate = true;
            res.alpha = sc.alpha;
            res.eta = sc.eta;
            res.gamma = gamma;
          } else {
            const int M = static_cast<int>(ctx->mu.size());
            const int T = std::max(10, static_cast<int>(std::ceil(0.02 * M)));
            const RollingMaxQuantile rolling = rolling_max(calibrated, std::min(T, M - 1));
            res = sliced_optimized(*ctx, rolling, sc.alpha, sc.eta);
          }
          break;
        }
      }
      ReplicationRow row;
      row.rep = rep;
      row.method = m;
      row.mu_true = mu_star;
      row.lower = res.lower;
      row.upper = res.upper;
      row.covered = res.covers(mu_star);
      row.degenerate = res.degenerate;
      row.n_accepted = res.n_accepted;
      row.seed = seed;
      out.rows.push_back(row);
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

// Pilot cross-validation on the first replication's training draws; the
// chosen setting is reused across all replications.
GbtHyper pilot_hyper(const Scenario& sc) {
  const std::uint64_t seed = derive_seed(sc.master_seed, 0);
  Rng rng(seed);
  Rng sim_rng = rng.substream(1);
  const Observation obs = simulate(sc.problem, sc.x_true, sim_rng);
  const BergerBoosSet set = make_bb_set(sc.problem, obs.y, sc.eta);
  const double gamma = sc.alpha - sc.eta;

  Rng calib_rng = rng.substream(2);
  Rng draw_rng = calib_rng.substream(11);
  const int M_tr = sc.sampler.M_tr > 0 ? sc.sampler.M_tr : sc.sampler.M;
  SampleBatch batch = draw_design_points(sc, set, M_tr, draw_rng);
  std::vector<CalibrationSample> train = batch_to_samples(batch);

  Rng llr_rng = calib_rng.substream(13);
  for (std::size_t k = 0; k < train.size(); ++k) {
    Rng point_rng = llr_rng.substream(k);
    train[k].llr_draw = sample_null_llr(sc.problem, train[k].x, point_rng);
  }

  Eigen::MatrixXd X(train.size(), sc.problem.p());
  Eigen::VectorXd z(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    X.row(i) = train[i].x.transpose();
    z[i] = *train[i].llr_draw;
  }
  Rng cv_rng = calib_rng.substream(14);
  return select_hyper_cv(X, z, 1.0 - gamma, default_hyper_grid(), sc.sampler.cv_folds, cv_rng);
}

}  // namespace

const MethodSummary* StudyReport::find(Method m) const {
  for (const auto& s : summary) {
    if (s.method == m) return &s;
  }
  return nullptr;
}

StudyReport run_coverage_study(const Scenario& scenario, int workers) {
  Scenario sc = scenario;
  sc.problem.validate();
  if (!sc.problem.is_whitened()) throw Error("scenario problem must be whitened");
  if (!sc.problem.constraints.contains(sc.x_true)) throw Error("scenario x_true violates constraints");
  if (sc.problem.h.cwiseAbs().maxCoeff() == 0.0) throw Error("scenario functional is identically zero");
  if (!(sc.eta > 0.0 && sc.eta < sc.alpha)) throw Error("scenario requires 0 < eta < alpha");
  if (sc.replications < 1) throw Error("scenario needs at least one replication");

  if (sc.sampler.algo == CalibrationAlgo::Regression && !sc.sampler.hyper &&
      wants_bb_methods(sc.methods)) {
    sc.sampler.hyper = pilot_hyper(sc);
  }

  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, sc.replications));

  std::vector<RepOutcome> outcomes(sc.replications);
  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= sc.replications) return;
      outcomes[rep] = run_replication(sc, rep);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  StudyReport report;
  report.scenario = sc.name;
  report.mu_true = sc.mu_true();
  report.alpha = sc.alpha;
  report.eta = sc.eta;
  report.replications = sc.replications;
  report.master_seed = sc.master_seed;
  report.chosen_hyper = sc.sampler.hyper;

  for (const auto& oc : outcomes) {
    if (oc.failed) {
      ++report.failures;
      continue;
    }
    report.rows.insert(report.rows.end(), oc.rows.begin(), oc.rows.end());
  }
  if (report.failures * 100 > sc.replications) {
    throw Error("study aborted: more than 1% of replications failed");
  }

  for (Method m : sc.methods) {
    MethodSummary s;
    s.method = m;
    double len_sum = 0.0, len_sq = 0.0;
    long n = 0;
    for (const auto& row : report.rows) {
      if (row.method != m) continue;
      ++n;
      if (row.covered) {
        ++s.covered;
      } else {
        ++s.missed;
      }
      if (row.degenerate) ++s.degenerate_count;
      len_sum += row.length();
      len_sq += row.length() * row.length();
    }
    if (n > 0) {
      s.coverage = static_cast<double>(s.covered) / n;
      const auto [lo, hi] = clopper_pearson(s.covered, n, 0.95);
      s.cp_lo = lo;
      s.cp_hi = hi;
      s.mean_length = len_sum / n;
      if (n > 1) {
        const double var = std::max(0.0, (len_sq - n * s.mean_length * s.mean_length) / (n - 1));
        s.sem_length = std::sqrt(var / n);
      }
    }
    report.summary.push_back(s);
  }
  return report;
}

std::vector<EtaSweepRow> eta_sweep(const Scenario& base, const std::vector<Eigen::VectorXd>& x_list,
                                   const std::vector<double>& eta_grid, int replications, int workers) {
  std::vector<EtaSweepRow> table;
  for (std::size_t xi = 0; xi < x_list.size(); ++xi) {
    for (double eta : eta_grid) {
      Scenario sc = base;
      sc.x_true = x_list[xi];
      sc.methods = {Method::GlobalOptimized};
      sc.replications = replications;
      const double eta_eff = (eta <= 0.0) ? 1e-6 : eta;
      sc.eta = eta_eff;
      // same observation seeds for every eta so curves share the y draws
      sc.master_seed = derive_seed(base.master_seed, 0xe7a, xi);
      sc.name = base.name + "_eta_sweep";

      const StudyReport rep = run_coverage_study(sc, workers);
      const MethodSummary* s = rep.find(Method::GlobalOptimized);
      EtaSweepRow row;
      row.x_true = x_list[xi];
      row.eta = eta;
      row.eta_effective = eta_eff;
      row.mean_length = s ? s->mean_length : 0.0;
      row.sem_length = s ? s->sem_length : 0.0;
      row.degenerate_count = s ? s->degenerate_count : 0;
      row.replications = replications;
      table.push_back(row);
    }
  }
  return table;
}

}  // namespace bbcal
