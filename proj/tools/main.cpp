#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "bbcal/error.hpp"
#include "bbcal/geometry.hpp"
#include "bbcal/io.hpp"
#include "bbcal/optim.hpp"
#include "bbcal/samplers.hpp"

namespace fs = std::filesystem;
using namespace bbcal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;
constexpr int kExitUnbounded = 4;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  long seed = -1;
  int workers = 0;
  bool full = false;
};

Scenario load_scenario(const CommonOpts& opts, Config* cfg_out = nullptr) {
  Config cfg = Config::parse_file(opts.config_path);
  Scenario sc = scenario_from_config(cfg, opts.full);
  if (opts.seed >= 0) sc.master_seed = static_cast<std::uint64_t>(opts.seed);
  if (cfg_out) *cfg_out = cfg;
  return sc;
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  return (fs::path(opts.out_dir) / name).string();
}

int cmd_run_study(const CommonOpts& opts) {
  Config cfg;
  Scenario sc = load_scenario(opts, &cfg);
  std::cerr << "[bbcal] study " << sc.name << ": " << sc.replications << " replications, seed "
            << sc.master_seed << "\n";
  StudyReport report = run_coverage_study(sc, opts.workers);
  const std::string rows = out_path(opts, cfg.get_string("study", "out_rows", "rows.csv"));
  const std::string summary = out_path(opts, cfg.get_string("study", "out_summary", "summary.json"));
  write_study_rows_csv(rows, report);
  write_study_summary_json(summary, report);
  std::cerr << "[bbcal] wrote " << rows << " and " << summary << " (failures: " << report.failures << ")\n";
  return kExitOk;
}

Eigen::VectorXd parse_inline_vector(const std::string& text) {
  std::istringstream ss(text);
  std::vector<double> vals;
  double v;
  while (ss >> v) vals.push_back(v);
  Eigen::VectorXd y(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) y[i] = vals[i];
  return y;
}

int cmd_interval(const CommonOpts& opts, const std::string& y_inline, const std::string& y_file) {
  Config cfg;
  Scenario sc = load_scenario(opts, &cfg);

  Eigen::VectorXd y;
  if (!y_inline.empty()) {
    y = parse_inline_vector(y_inline);
  } else if (!y_file.empty()) {
    std::ifstream in(y_file);
    if (!in) throw Error("config file not found: " + y_file);
    std::stringstream buf;
    buf << in.rdbuf();
    y = parse_inline_vector(buf.str());
  } else {
    throw Error("interval command needs --y or --y-file");
  }
  if (y.size() != sc.problem.n()) {
    throw Error("observation has wrong length: expected " + std::to_string(sc.problem.n()));
  }
  // inline problems may carry a non-identity covariance; map y accordingly
  if (cfg.get_string("study", "scenario", "inline") == "inline" && cfg.has("problem", "sigma")) {
    const LinearGaussianProblem original = problem_from_config(cfg);
    if (!original.is_whitened()) y = whiten_observation(original, y);
  }

  const double gamma = sc.alpha - sc.eta;
  std::optional<AcceptanceContext> ctx;
  std::vector<CalibrationSample> calibrated;

  nlohmann::json out = nlohmann::json::array();
  for (Method m : sc.methods) {
    IntervalResult res;
    if (m == Method::OSB) {
      res = osb_interval(sc.problem, y, sc.alpha);
    } else if (m == Method::SSB) {
      res = ssb_interval(sc.problem, y, sc.alpha);
    } else {
      if (!ctx) {
        Rng rng(derive_seed(sc.master_seed, 0));
        const BergerBoosSet set = make_bb_set(sc.problem, y, sc.eta);
        Rng calib_rng = rng.substream(2);
        calibrated = calibrate_for_study(sc, set, gamma, calib_rng);
        ctx = make_acceptance_context(sc.problem, y, calibrated);
      }
      if (m == Method::GlobalInverted) {
        res = global_inverted(*ctx, sc.alpha, sc.eta);
      } else if (m == Method::GlobalOptimized) {
        res = global_optimized(*ctx, sc.alpha, sc.eta);
      } else if (m == Method::SlicedInverted) {
        res = sliced_inverted(*ctx, sc.alpha, sc.eta);
      } else {
        const int M = static_cast<int>(ctx->mu.size());
        const int T = std::max(10, static_cast<int>(std::ceil(0.02 * M)));
        res = sliced_optimized(*ctx, rolling_max(calibrated, std::min(T, M - 1)), sc.alpha, sc.eta);
      }
    }
    out.push_back({{"method", method_name(m)},
                   {"lower", res.lower},
                   {"upper", res.upper},
                   {"length", res.length()},
                   {"degenerate", res.degenerate},
                   {"n_accepted", res.n_accepted},
                   {"cutoff", res.cutoff_used},
                   {"alpha", res.alpha},
                   {"eta", res.eta},
                   {"gamma", res.gamma}});
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_sampler_diag(const CommonOpts& opts) {
  Config cfg;
  Scenario sc = load_scenario(opts, &cfg);

  Rng rng(derive_seed(sc.master_seed, 1));
  Rng sim_rng = rng.substream(1);
  const Observation obs = simulate(sc.problem, sc.x_true, sim_rng);
  const BergerBoosSet set = make_bb_set(sc.problem, obs.y, sc.eta);

  Rng draw_rng = rng.substream(2);
  SampleBatch batch;
  if (sc.sampler.kind == SamplerKind::VGS ||
      (sc.sampler.kind == SamplerKind::Auto && sc.problem.p() < 10)) {
    batch = vgs_sample(set, sc.sampler.M, draw_rng);
  } else if (sc.sampler.kind == SamplerKind::ImportanceLike) {
    PolytopeSamplerOptions popts;
    popts.radius = sc.sampler.radius;
    popts.n_random = sc.sampler.n_random;
    batch = importance_like_sample(set, sc.sampler.M, sc.sampler.gamma_p, sc.sampler.q_norm, draw_rng,
                                   sc.sampler.C, popts);
  } else {
    const int M_p = (sc.sampler.M + sc.sampler.C - 1) / sc.sampler.C;
    batch = polytope_sample(set, sc.sampler.C, M_p, sc.sampler.radius, sc.sampler.n_random, draw_rng);
  }

  const std::string csv = out_path(opts, cfg.get_string("study", "out_samples", "samples.csv"));
  write_batch_csv(csv, batch);

  const FunctionalExtremes ext = functional_extremes(set);
  const double occupancy = functional_occupancy(batch, ext.mu_lower, ext.mu_upper, 20);
  nlohmann::json j = {{"samples", batch.size()},
                      {"mu_lower", ext.mu_lower},
                      {"mu_upper", ext.mu_upper},
                      {"occupancy_20bin", occupancy},
                      {"csv", csv}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confidence intervals for functionals of constrained linear-Gaussian inverse problems"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string y_inline, y_file;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", opts.config_path, "study config file")->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", opts.seed, "master seed override");
    sub->add_option("--workers", opts.workers, "worker threads (0 = all cores)");
    sub->add_flag("--full", opts.full, "full-scale study sizes");
  };

  CLI::App* run = app.add_subcommand("run-study", "run a coverage study");
  add_common(run);
  CLI::App* ival = app.add_subcommand("interval", "compute intervals for one observation");
  add_common(ival);
  ival->add_option("--y", y_inline, "observation values, whitespace separated");
  ival->add_option("--y-file", y_file, "file with observation values");
  CLI::App* diag = app.add_subcommand("sampler-diag", "emit sampler diagnostics");
  add_common(diag);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run_study(opts);
    if (ival->parsed()) return cmd_interval(opts, y_inline, y_file);
    if (diag->parsed()) return cmd_sampler_diag(opts);
  } catch (const Error& e) {
    const std::string msg = e.what();
    std::cerr << "error: " << msg << "\n";
    if (msg.find("unbounded") != std::string::npos) return kExitUnbounded;
    if (msg.find("aborted") != std::string::npos) return kExitAbort;
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAbort;
  }
  return kExitConfig;
}
