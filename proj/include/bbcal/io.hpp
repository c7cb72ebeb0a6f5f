#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bbcal/experiments.hpp"
#include "bbcal/model.hpp"
#include "bbcal/samplers.hpp"

namespace bbcal {

// Flat sectioned text config: "[section]" headers, "key = value" entries,
// and matrix blocks as indented whitespace-separated rows after "key =".
struct ConfigValue {
  std::string scalar;
  std::vector<std::vector<double>> block;
};

class Config {
 public:
  using Section = std::map<std::string, ConfigValue>;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_long(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  Eigen::MatrixXd get_matrix(const std::string& section, const std::string& key) const;
  Eigen::VectorXd get_vector(const std::string& section, const std::string& key) const;

  const std::map<std::string, Section>& sections() const { return sections_; }

 private:
  std::map<std::string, Section> sections_;
  std::string origin_;
};

LinearGaussianProblem problem_from_config(const Config& cfg);

// Scenario assembly: named factory or inline problem, then overrides from the
// study/sampler sections. full_scale switches the wide-bin runs to the
// full-size sampling plan.
Scenario scenario_from_config(const Config& cfg, bool full_scale_flag = false);

void apply_full_scale(Scenario& scenario);

std::string format_double(double v);

void write_study_rows_csv(const std::string& path, const StudyReport& report);
void write_study_summary_json(const std::string& path, const StudyReport& report);
void write_batch_csv(const std::string& path, const SampleBatch& batch);
void write_eta_sweep_csv(const std::string& path, const std::vector<EtaSweepRow>& table);

void write_problem(const std::string& path, const LinearGaussianProblem& problem,
                   const Eigen::VectorXd* x_true = nullptr);
void write_polytope(const std::string& path, const Polytope& poly);
Polytope read_polytope(const std::string& path);

}  // namespace bbcal
