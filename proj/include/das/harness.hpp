#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "das/stats.hpp"

namespace das {

enum class Regime { Gaussian, Sparse, Distributed };
std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

// Validation failure tied to one configuration field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  Regime regime = Regime::Gaussian;
  int K = 0;
  int L = 0;
  int M = 0;
  int S = 0;
  int m = 10;
  int rounds = 0;  // "T" for the distributed regime
  double p_s = 0.25;
  std::vector<double> error_probs{0.0};
  double mu = 0.1;
  double psi0 = 0.0;
  std::vector<std::string> policies;  // selector name for the gaussian regime
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out;  // empty: no files are written
  int workers = 1;
  bool emit_plot_data = false;

  bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError naming the first offending field.
void validate(const ExperimentConfig& cfg);

// Missing optional fields take the defaults above; the default policy list
// depends on the regime. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);

// fig1, fig3, fig4, fig5.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

struct PolicyReport {
  Regime regime = Regime::Gaussian;
  std::string policy;
  double error_prob = 0.0;
  // metric[trial][round]: squared error for gaussian and sparse runs,
  // ||y - y(t)|| for distributed runs; rounds are 1-based in the CSVs.
  std::vector<std::vector<double>> metric;
  std::vector<Summary> aggregate;  // per round across trials
  std::vector<int> rounds_to_threshold;  // sparse only, per trial

  std::vector<double> final_metric() const;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<PolicyReport> policies;
  double duration_seconds = 0.0;
  std::string csv;        // per-trial trajectories in the regime's schema
  std::string plot_csv;   // per-round aggregates; empty unless requested
  std::string path_csv;   // gaussian only: upload order of trial 0

  const PolicyReport& find(const std::string& policy, double error_prob = 0.0) const;
};

inline constexpr double kRoundsThreshold = 1e-3;

// Seed of trial i; scenes and runner streams are derived from it.
std::uint64_t trial_seed(std::uint64_t root, int trial);

// Output files derived from cfg.out.
std::filesystem::path plot_path(const std::string& out);
std::filesystem::path path_csv_path(const std::string& out);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

struct PolicyComparison {
  std::vector<double> median_difference;  // median(A) - median(B) per round
  double fraction_a_not_worse = 0.0;      // final metric of A <= B, per trial
};

PolicyComparison compare_policies(const PolicyReport& a, const PolicyReport& b);

}  // namespace das
