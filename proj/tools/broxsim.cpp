#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "brox/errors.hpp"
#include "brox/experiments.hpp"
#include "json.hpp"

namespace ex = brox::experiments;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::int64_t> replicas;
  std::optional<double> dt;
  std::vector<double> mesh;
};

bool uses_dt(ex::Study s) {
  return s == ex::Study::simulate || s == ex::Study::converge || s == ex::Study::moments ||
         s == ex::Study::independence;
}

ex::Config build_config(ex::Study s, const Overrides& o) {
  ex::Config c = ex::default_config(s);
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw brox::ConfigError("cannot read configuration file '" + o.config_path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      throw brox::ConfigError("configuration file '" + o.config_path + "': " + e.what());
    }
    c = ex::config_from_json(s, j);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.replicas) c.replicas = *o.replicas;
  if (o.dt) {
    if (!uses_dt(s))
      throw brox::ConfigError("--dt has no effect on '" + ex::study_name(s) + "'; set dt_list in the configuration");
    c.dt = *o.dt;
  }
  if (!o.mesh.empty()) {
    if (s != ex::Study::converge) throw brox::ConfigError("--mesh only applies to 'converge'");
    c.mesh = o.mesh;
  }
  ex::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and validation studies for Brownian motion in a Brownian environment"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--replicas", o.replicas, "number of replicas (Monte Carlo paths for 'moments')");
  app.add_option("--dt", o.dt, "time step");
  app.add_option("--mesh", o.mesh, "comma-separated partition meshes")->delimiter(',');

  const std::vector<std::pair<const char*, const char*>> help = {
      {"simulate", "sample Brox paths and check the driving motion's quadratic variation"},
      {"converge", "polygonal identity, driving-motion and drift convergence tables"},
      {"moments", "local-time moments: exact values, Monte Carlo, chain and increment bounds"},
      {"strong-roundtrip", "strong solution against the Ito-McKean construction"},
      {"matsumoto-yor", "large-horizon limit of the inverse scale function"},
      {"independence", "correlation of the driving motion with the environment"},
      {"ito-check", "Ito formula for the scale function along the process"},
  };
  std::vector<std::pair<CLI::App*, ex::Study>> subs;
  for (const auto& [name, text] : help) {
    auto* sub = app.add_subcommand(name, text);
    sub->fallthrough();
    subs.emplace_back(sub, ex::parse_study(name));
  }

  CLI11_PARSE(app, argc, argv);

  try {
    ex::Study study = ex::Study::simulate;
    for (const auto& [sub, s] : subs)
      if (sub->parsed()) study = s;
    const ex::Config cfg = build_config(study, o);
    const ex::StudyResult res = ex::run_study(cfg);
    ex::write_results(res, cfg.out_dir);
    for (const auto& c : res.criteria)
      std::printf("%s criterion %d %s: %s\n", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str(), c.detail.c_str());
    std::printf("wrote %zu tables and summary.json to %s (%.1f s)\n", res.tables.size(), cfg.out_dir.c_str(),
                res.wall_seconds);
    return res.all_passed() ? 0 : 1;
  } catch (const brox::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
