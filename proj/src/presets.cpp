#include "das/harness.hpp"

namespace das {

std::vector<std::string> preset_names() { return {"fig1", "fig3", "fig4", "fig5"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "fig1") {
    c.regime = Regime::Gaussian;
    c.K = 20;
    c.L = 1;
    c.rounds = 20;
    c.policies = {"entropy"};
    c.trials = 1;
  } else if (name == "fig3") {
    c.regime = Regime::Sparse;
    c.K = 64;
    c.M = 25;
    c.S = 3;
    c.L = 5;
    c.rounds = 4;
    c.policies = {"DAS", "RRS"};
    c.trials = 100;
  } else if (name == "fig4") {
    c.regime = Regime::Sparse;
    c.K = 300;
    c.M = 100;
    c.S = 10;
    c.L = 10;
    c.rounds = 30;
    c.error_probs = {0.0, 0.1};
    c.policies = {"DAS", "RRS"};
    c.trials = 50;
  } else if (name == "fig5") {
    c.regime = Regime::Distributed;
    c.K = 400;
    c.L = 10;
    c.m = 10;
    c.p_s = 0.25;
    c.mu = 0.1;
    c.psi0 = 0.0;
    c.rounds = 50;
    c.policies = {"RA1", "RA2"};
    c.trials = 50;
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  c.seed = 1;
  return c;
}

}  // namespace das
