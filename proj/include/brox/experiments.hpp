#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace brox::experiments {

enum class Study { simulate, converge, moments, strong_roundtrip, matsumoto_yor, independence, ito_check };

Study parse_study(const std::string& name);
std::string study_name(Study s);
const std::vector<Study>& all_studies();

/// Everything a study reads. Defaults depend on the study (see default_config).
struct Config {
  Study study = Study::simulate;
  std::uint64_t seed = 20240611;
  std::int64_t replicas = 20;       ///< seeds / replicas; Monte Carlo paths for the moments study
  double dt = 1e-5;
  std::vector<double> dt_list;       ///< refinement sequence (converge, strong-roundtrip, ito-check)
  double fine_dt = 1e-6;             ///< step of the reference Brownian path for refinement studies
  double h = 0.01;                   ///< environment grid step
  double epsilon_factor = 5.0;       ///< kernel half-width = factor * sqrt(dt)
  std::vector<double> mesh;          ///< partition meshes for the driving-motion convergence table
  std::vector<double> drift_mesh;    ///< partition meshes for the drift cross-route table
  double identity_mesh = 0.05;       ///< partition mesh of the polygonal identity table
  std::int64_t identity_replicas = 50;
  std::vector<double> windows;       ///< window lengths (moments)
  std::int64_t chain_specs = 200;
  std::int64_t chain_cross_specs = 50;
  double quad_tol = 1e-6;
  double bias_dt = 1e-5;             ///< moments: finer step of the information-only kernel-bias rows; 0 disables
  std::vector<double> k_list;        ///< Matsumoto-Yor horizons
  std::vector<double> probes;        ///< independence probe points
  double threshold = 0.05;           ///< calibrated threshold of the study's main criterion
  double pass_fraction = 0.8;
  std::int64_t path_stride = 100;    ///< simulate: stride of the emitted sample path
  std::string out_dir = "out";
};

Config default_config(Study s);
/// Defaults of the study overridden by the keys of `j`; unknown keys raise ConfigError.
Config config_from_json(Study s, const nlohmann::json& j);
nlohmann::json config_to_json(const Config& c);
void validate(const Config& c);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Criterion {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct StudyResult {
  Config config;
  std::vector<Table> tables;
  std::vector<Criterion> criteria;
  nlohmann::json summary = nlohmann::json::object();
  double wall_seconds = 0.0;

  bool all_passed() const;
  const Table& table(const std::string& name) const;
};

double median(std::vector<double> v);
double mean(const std::vector<double>& v);
double std_error(const std::vector<double>& v);
double correlation(const std::vector<double>& a, const std::vector<double>& b);

StudyResult run_simulate(const Config& c);
StudyResult run_convergence_study(const Config& c);
StudyResult run_moment_validation(const Config& c);
StudyResult run_strong_roundtrip(const Config& c);
StudyResult run_matsumoto_yor(const Config& c);
StudyResult run_independence_check(const Config& c);
StudyResult run_ito_check(const Config& c);
StudyResult run_study(const Config& c);

/// One CSV per table (17 significant digits) and summary.json; IOError-style failures raise
/// std::runtime_error naming the path.
void write_results(const StudyResult& r, const std::string& dir);
void write_csv(const Table& t, const std::string& path);

}  // namespace brox::experiments
