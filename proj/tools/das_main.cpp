#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "das/harness.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw das::ConfigError("config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw das::ConfigError("config", std::string("invalid JSON in ") + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-aided sensing simulations"};
  std::string regime;
  std::string preset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out;
  std::optional<int> workers;
  bool emit_plot_data = false;

  app.add_option("regime", regime, "gaussian | sparse | distributed")->required();
  app.add_option("--preset", preset, "fig1 | fig3 | fig4 | fig5");
  app.add_option("--config", config_path, "JSON experiment description");
  app.add_option("--seed", seed, "root seed");
  app.add_option("--trials", trials, "number of trials");
  app.add_option("--out", out, "trajectory CSV path (stdout when omitted)");
  app.add_option("--workers", workers, "threads used for trials");
  app.add_flag("--emit-plot-data", emit_plot_data, "also write per-round median and quartiles to <out>_plot.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    nlohmann::json j = nlohmann::json::object();
    if (!preset.empty()) j = das::config_to_json(das::preset(preset));
    if (!config_path.empty()) j.merge_patch(load_json(config_path));
    if (!j.contains("regime")) j["regime"] = regime;
    if (j["regime"] != regime)
      throw das::ConfigError("regime", "configuration describes a " + j["regime"].dump() + " experiment, not " + regime);
    if (seed) j["seed"] = *seed;
    if (trials) j["trials"] = *trials;
    if (out) j["out"] = *out;
    if (workers) j["workers"] = *workers;
    if (emit_plot_data) j["emit_plot_data"] = true;

    const das::ExperimentConfig cfg = das::config_from_json(j);
    const das::ExperimentReport rep = das::run_experiment(cfg);
    if (cfg.out.empty()) std::cout << rep.csv;

    for (const auto& p : rep.policies) {
      std::fprintf(stderr, "%s", p.policy.c_str());
      if (cfg.regime == das::Regime::Sparse) std::fprintf(stderr, " error_prob=%g", p.error_prob);
      const auto& last = p.aggregate.back();
      std::fprintf(stderr, " final median=%.6g iqr=%.6g", last.median, last.iqr());
      if (!p.rounds_to_threshold.empty()) {
        std::vector<double> r(p.rounds_to_threshold.begin(), p.rounds_to_threshold.end());
        std::fprintf(stderr, " median rounds-to-threshold=%g", das::median(r));
      }
      std::fprintf(stderr, "\n");
    }
    std::fprintf(stderr, "%d trial(s) in %.2f s\n", cfg.trials, rep.duration_seconds);
    return 0;
  } catch (const das::ConfigError& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
