#include "bbcal/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bbcal/error.hpp"

namespace bbcal {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<double> parse_row(const std::string& line) {
  std::vector<double> row;
  std::istringstream ss(line);
  double v;
  while (ss >> v) row.push_back(v);
  return row;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config file not found: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::string open_key;  // key currently collecting matrix rows
  int lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;

    const bool indented = std::isspace(static_cast<unsigned char>(line[0])) != 0;
    const std::string t = trim(line);

    if (t.front() == '[' && t.back() == ']') {
      section = lower(trim(t.substr(1, t.size() - 2)));
      open_key.clear();
      continue;
    }
    const std::string::size_type eq = t.find('=');
    if (!indented && eq != std::string::npos) {
      if (section.empty()) throw Error(origin + ":" + std::to_string(lineno) + ": entry before any [section]");
      const std::string key = lower(trim(t.substr(0, eq)));
      const std::string value = trim(t.substr(eq + 1));
      ConfigValue cv;
      cv.scalar = value;
      cfg.sections_[section][key] = cv;
      open_key = value.empty() ? key : std::string();
      continue;
    }
    if (indented && !open_key.empty()) {
      const std::vector<double> row = parse_row(t);
      if (row.empty()) throw Error(origin + ":" + std::to_string(lineno) + ": expected numeric row");
      cfg.sections_[section][open_key].block.push_back(row);
      continue;
    }
    throw Error(origin + ":" + std::to_string(lineno) + ": unparseable line '" + t + "'");
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(lower(section));
  if (it == sections_.end()) return false;
  return it->second.find(lower(key)) != it->second.end();
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const auto it = sections_.find(lower(section));
  if (it == sections_.end()) return fallback;
  const auto jt = it->second.find(lower(key));
  if (jt == it->second.end()) return fallback;
  return jt->second.scalar;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  const std::string s = get_string(section, key, "");
  if (s.empty()) return fallback;
  try {
    return std::stod(s);
  } catch (...) {
    throw Error(origin_ + ": bad numeric value for " + section + "." + key + ": '" + s + "'");
  }
}

long Config::get_long(const std::string& section, const std::string& key, long fallback) const {
  const std::string s = get_string(section, key, "");
  if (s.empty()) return fallback;
  try {
    return std::stol(s);
  } catch (...) {
    throw Error(origin_ + ": bad integer value for " + section + "." + key + ": '" + s + "'");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const std::string s = lower(get_string(section, key, ""));
  if (s.empty()) return fallback;
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(origin_ + ": bad boolean value for " + section + "." + key + ": '" + s + "'");
}

Eigen::MatrixXd Config::get_matrix(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(lower(section));
  if (it == sections_.end()) throw Error("missing config section [" + section + "]");
  const auto jt = it->second.find(lower(key));
  if (jt == it->second.end()) throw Error("missing config entry " + section + "." + key);
  const auto& block = jt->second.block;
  std::vector<std::vector<double>> rows = block;
  if (rows.empty() && !jt->second.scalar.empty()) {
    rows.push_back(parse_row(jt->second.scalar));  // single inline row
  }
  if (rows.empty()) throw Error("empty matrix for " + section + "." + key);
  const std::size_t cols = rows.front().size();
  Eigen::MatrixXd M(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw Error("ragged matrix rows for " + section + "." + key);
    for (std::size_t j = 0; j < cols; ++j) M(i, j) = rows[i][j];
  }
  return M;
}

Eigen::VectorXd Config::get_vector(const std::string& section, const std::string& key) const {
  Eigen::MatrixXd M = get_matrix(section, key);
  if (M.rows() == 1) return M.row(0).transpose();
  if (M.cols() == 1) return M.col(0);
  throw Error("expected a vector for " + section + "." + key);
}

LinearGaussianProblem problem_from_config(const Config& cfg) {
  LinearGaussianProblem pr;
  pr.K = cfg.get_matrix("problem", "k");
  const int n = pr.n();
  const int p = pr.p();
  pr.Sigma = cfg.has("problem", "sigma") ? cfg.get_matrix("problem", "sigma")
                                         : Eigen::MatrixXd::Identity(n, n);
  const std::string cons = cfg.get_string("problem", "constraints", "");
  if (cfg.has("problem", "a")) {
    pr.constraints.A = cfg.get_matrix("problem", "a");
    pr.constraints.b = cfg.get_vector("problem", "b");
  } else if (cons == "orthant" || cons.empty()) {
    pr.constraints = Polytope::nonnegative_orthant(p);
  } else if (cons == "none") {
    pr.constraints = Polytope::unconstrained(p);
  } else {
    throw Error("unknown constraints shorthand '" + cons + "'");
  }
  pr.h = cfg.get_vector("problem", "h");
  pr.validate();
  return pr;
}

void apply_full_scale(Scenario& scenario) {
  if (scenario.name.rfind("widebin", 0) == 0) {
    scenario.replications = 1000;
    scenario.sampler.M = 10500;
    scenario.sampler.M_tr = 10500;
  }
}

Scenario scenario_from_config(const Config& cfg, bool full_scale_flag) {
  const std::string name = lower(cfg.get_string("study", "scenario", "inline"));
  Scenario sc;
  if (name == "gaussian2d") {
    sc = scenario_gaussian2d();
  } else if (name == "gaussian3d") {
    sc = scenario_gaussian3d();
  } else if (name == "widebin_smooth") {
    sc = scenario_widebin(true);
  } else if (name == "widebin_adversarial") {
    sc = scenario_widebin(false);
  } else if (name == "inline") {
    sc.name = "inline";
    sc.problem = whiten(problem_from_config(cfg));
    sc.x_true = cfg.get_vector("problem", "x_true");
    sc.methods = {Method::OSB,           Method::SSB,           Method::GlobalInverted,
                  Method::GlobalOptimized, Method::SlicedInverted, Method::SlicedOptimized};
  } else {
    throw Error("unknown scenario '" + name + "'");
  }

  sc.alpha = cfg.get_double("study", "alpha", sc.alpha);
  sc.eta = cfg.get_double("study", "eta", sc.eta);
  sc.replications = static_cast<int>(cfg.get_long("study", "replications", sc.replications));
  sc.master_seed = static_cast<std::uint64_t>(cfg.get_long("study", "master_seed",
                                                           static_cast<long>(sc.master_seed)));
  if (cfg.has("study", "methods")) {
    sc.methods.clear();
    std::istringstream ss(cfg.get_string("study", "methods", ""));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto m = method_from_name(trim(tok));
      if (!m) throw Error("unknown method name '" + trim(tok) + "'");
      sc.methods.push_back(*m);
    }
    if (sc.methods.empty()) throw Error("empty method list");
  }

  SamplerConfig& sm = sc.sampler;
  const std::string kind = lower(cfg.get_string("sampler", "kind", ""));
  if (!kind.empty()) {
    if (kind == "auto") {
      sm.kind = SamplerKind::Auto;
    } else if (kind == "vgs") {
      sm.kind = SamplerKind::VGS;
    } else if (kind == "polytope") {
      sm.kind = SamplerKind::Polytope;
    } else if (kind == "importance" || kind == "importancelike") {
      sm.kind = SamplerKind::ImportanceLike;
    } else {
      throw Error("unknown sampler kind '" + kind + "'");
    }
  }
  const std::string algo = lower(cfg.get_string("sampler", "algorithm", ""));
  if (!algo.empty()) {
    if (algo == "mc" || algo == "percentile") {
      sm.algo = CalibrationAlgo::McQuantile;
    } else if (algo == "regression" || algo == "qr") {
      sm.algo = CalibrationAlgo::Regression;
    } else {
      throw Error("unknown calibration algorithm '" + algo + "'");
    }
  }
  sm.M = static_cast<int>(cfg.get_long("sampler", "m", sm.M));
  sm.N = static_cast<int>(cfg.get_long("sampler", "n", sm.N));
  sm.M_tr = static_cast<int>(cfg.get_long("sampler", "m_tr", sm.M_tr));
  sm.C = static_cast<int>(cfg.get_long("sampler", "c", sm.C));
  sm.radius = cfg.get_double("sampler", "radius", sm.radius);
  sm.n_random = static_cast<int>(cfg.get_long("sampler", "n_random", sm.n_random));
  sm.gamma_p = cfg.get_double("sampler", "gamma_p", sm.gamma_p);
  sm.q_norm = cfg.get_double("sampler", "q_norm", sm.q_norm);
  sm.cv_folds = static_cast<int>(cfg.get_long("sampler", "cv_folds", sm.cv_folds));

  const bool full = full_scale_flag || cfg.get_bool("study", "full_scale", false);
  if (full) apply_full_scale(sc);
  return sc;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_study_rows_csv(const std::string& path, const StudyReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  out << "scenario,method,rep,mu_true,lower,upper,length,covered,degenerate,n_accepted,seed\n";
  for (const auto& r : report.rows) {
    out << report.scenario << ',' << method_name(r.method) << ',' << r.rep << ','
        << format_double(r.mu_true) << ',' << format_double(r.lower) << ',' << format_double(r.upper) << ','
        << format_double(r.length()) << ',' << (r.covered ? 1 : 0) << ',' << (r.degenerate ? 1 : 0) << ','
        << r.n_accepted << ',' << r.seed << '\n';
  }
}

void write_study_summary_json(const std::string& path, const StudyReport& report) {
  nlohmann::json j;
  j["scenario"] = report.scenario;
  j["mu_true"] = report.mu_true;
  j["alpha"] = report.alpha;
  j["eta"] = report.eta;
  j["replications"] = report.replications;
  j["failures"] = report.failures;
  j["master_seed"] = report.master_seed;
  if (report.chosen_hyper) {
    j["hyper"] = {{"depth", report.chosen_hyper->depth},
                  {"learning_rate", report.chosen_hyper->learning_rate},
                  {"stages", report.chosen_hyper->stages},
                  {"min_leaf", report.chosen_hyper->min_leaf},
                  {"min_split", report.chosen_hyper->min_split}};
  }
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& s : report.summary) {
    methods[method_name(s.method)] = {
        {"covered", s.covered},         {"missed", s.missed},
        {"coverage", s.coverage},       {"cp_lo", s.cp_lo},
        {"cp_hi", s.cp_hi},             {"mean_length", s.mean_length},
        {"sem_length", s.sem_length},   {"degenerate", s.degenerate_count}};
  }
  j["methods"] = methods;
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  out << j.dump(2) << '\n';
}

void write_batch_csv(const std::string& path, const SampleBatch& batch) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  const int p = static_cast<int>(batch.points.cols());
  out << "chain_id,step";
  for (int j = 0; j < p; ++j) out << ",x_" << (j + 1);
  out << ",mu\n";
  for (int i = 0; i < batch.size(); ++i) {
    const int chain = batch.chain_ids.empty() ? 0 : batch.chain_ids[i];
    const int step = batch.steps.empty() ? i : batch.steps[i];
    out << chain << ',' << step;
    for (int j = 0; j < p; ++j) out << ',' << format_double(batch.points(i, j));
    out << ',' << format_double(batch.functional_values[i]) << '\n';
  }
}

void write_eta_sweep_csv(const std::string& path, const std::vector<EtaSweepRow>& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  out << "x_true,eta,eta_effective,mean_length,sem_length,degenerate,replications\n";
  for (const auto& r : table) {
    out << '"';
    for (int i = 0; i < r.x_true.size(); ++i) {
      if (i) out << ' ';
      out << format_double(r.x_true[i]);
    }
    out << "\"," << format_double(r.eta) << ',' << format_double(r.eta_effective) << ','
        << format_double(r.mean_length) << ',' << format_double(r.sem_length) << ',' << r.degenerate_count
        << ',' << r.replications << '\n';
  }
}

namespace {

void write_matrix_block(std::ofstream& out, const std::string& key, const Eigen::MatrixXd& M) {
  out << key << " =\n";
  for (int i = 0; i < M.rows(); ++i) {
    out << " ";
    for (int j = 0; j < M.cols(); ++j) out << ' ' << format_double(M(i, j));
    out << '\n';
  }
}

}  // namespace

void write_problem(const std::string& path, const LinearGaussianProblem& problem,
                   const Eigen::VectorXd* x_true) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  out << "[problem]\n";
  write_matrix_block(out, "K", problem.K);
  write_matrix_block(out, "Sigma", problem.Sigma);
  write_matrix_block(out, "A", problem.constraints.A);
  write_matrix_block(out, "b", problem.constraints.b.transpose());
  write_matrix_block(out, "h", problem.h.transpose());
  if (x_true) write_matrix_block(out, "x_true", x_true->transpose());
}

void write_polytope(const std::string& path, const Polytope& poly) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  out << "[polytope]\n";
  write_matrix_block(out, "A", poly.A);
  write_matrix_block(out, "b", poly.b.transpose());
}

Polytope read_polytope(const std::string& path) {
  const Config cfg = Config::parse_file(path);
  Polytope poly;
  poly.A = cfg.get_matrix("polytope", "a");
  poly.b = cfg.get_vector("polytope", "b");
  if (poly.A.rows() != poly.b.size()) throw Error("polytope rows and offsets disagree");
  return poly;
}

}  // namespace bbcal
