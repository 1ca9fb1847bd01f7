#include "das/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <set>

#include "das/csv.hpp"
#include "das/gaussian_das.hpp"
#include "das/ra_das.hpp"
#include "das/rng.hpp"
#include "das/scenario.hpp"
#include "das/sparse_das.hpp"

namespace das {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Gaussian: return "gaussian";
    case Regime::Sparse: return "sparse";
    case Regime::Distributed: return "distributed";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  if (s == "gaussian") return Regime::Gaussian;
  if (s == "sparse") return Regime::Sparse;
  if (s == "distributed") return Regime::Distributed;
  throw ConfigError("regime", "unknown regime '" + s + "'");
}

namespace {

std::vector<std::string> default_policies(Regime r) {
  switch (r) {
    case Regime::Gaussian: return {"entropy"};
    case Regime::Sparse: return {"DAS", "RRS"};
    case Regime::Distributed: return {"RA1", "RA2"};
  }
  return {};
}

const char* rounds_key(Regime r) { return r == Regime::Distributed ? "T" : "rounds"; }

}  // namespace

void validate(const ExperimentConfig& c) {
  if (c.K < 1) throw ConfigError("K", "must be >= 1");
  if (c.L < 1) throw ConfigError("L", "must be >= 1");
  if (c.rounds < 1) throw ConfigError(rounds_key(c.regime), "must be >= 1");
  if (c.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (c.workers < 1) throw ConfigError("workers", "must be >= 1");
  if (c.policies.empty()) throw ConfigError("policy", "at least one policy is required");
  if (c.emit_plot_data && c.out.empty()) throw ConfigError("out", "plot data needs an output path");
  if (std::set<std::string>(c.policies.begin(), c.policies.end()).size() != c.policies.size())
    throw ConfigError("policy", "duplicate policy");

  switch (c.regime) {
    case Regime::Gaussian:
      if (static_cast<long>(c.rounds) * c.L > c.K) throw ConfigError("rounds", "rounds * L exceeds K");
      if (c.policies.size() != 1) throw ConfigError("selector", "exactly one selector per gaussian experiment");
      try {
        selector_from_string(c.policies.front());
      } catch (const std::invalid_argument& e) {
        throw ConfigError("selector", e.what());
      }
      break;
    case Regime::Sparse:
      if (c.M < 1) throw ConfigError("M", "must be >= 1");
      if (c.M > c.K) throw ConfigError("M", "must not exceed K");
      if (c.S < 1 || c.S > c.M) throw ConfigError("S", "must lie in [1, M]");
      if (c.rounds > (c.K + c.L - 1) / c.L) throw ConfigError("rounds", "rounds * L exceeds K");
      if (c.error_probs.empty()) throw ConfigError("error_prob", "at least one value is required");
      for (double e : c.error_probs)
        if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("error_prob", "must lie in [0, 1]");
      for (const auto& p : c.policies) {
        try {
          sparse_policy_from_string(p);
        } catch (const std::invalid_argument& e) {
          throw ConfigError("policy", e.what());
        }
      }
      break;
    case Regime::Distributed:
      if (c.m < 1) throw ConfigError("m", "must be >= 1");
      if (!(c.p_s >= 0.0 && c.p_s <= 1.0)) throw ConfigError("p_s", "must lie in [0, 1]");
      if (!(c.mu > 0.0)) throw ConfigError("mu", "must be > 0");
      if (!std::isfinite(c.psi0)) throw ConfigError("psi0", "must be finite");
      for (const auto& p : c.policies) {
        try {
          access_policy_from_string(p);
        } catch (const std::invalid_argument& e) {
          throw ConfigError("policy", e.what());
        }
      }
      break;
  }
}

namespace {

using nlohmann::json;

template <class T>
T read_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, j.contains(key) ? "wrong type" : "missing");
  }
}

int read_int(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(key, "must be an integer");
  const auto i = v.get<long long>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
    throw ConfigError(key, "out of range");
  return static_cast<int>(i);
}

double read_double(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(key, "must be a number");
  return v.get<double>();
}

std::vector<std::string> read_names(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw ConfigError(key, "must be a string or a list of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError(key, "must be a string or a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<double> read_doubles(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError(key, "must be a number or a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(key, "must be a number or a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "must be a JSON object");
  static const std::set<std::string> known{"regime", "K",      "L",     "M",    "S",      "m",
                                           "rounds", "T",      "p_s",   "error_prob", "mu", "psi0",
                                           "policy", "selector", "trials", "seed", "out", "workers",
                                           "emit_plot_data"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError(key, "unknown field");

  ExperimentConfig c;
  if (!j.contains("regime")) throw ConfigError("regime", "missing");
  c.regime = regime_from_string(read_field<std::string>(j, "regime"));
  if (!j.contains("K")) throw ConfigError("K", "missing");
  c.K = read_int(j, "K");
  if (!j.contains("L")) throw ConfigError("L", "missing");
  c.L = read_int(j, "L");

  const char* rk = rounds_key(c.regime);
  const char* other = c.regime == Regime::Distributed ? "rounds" : "T";
  if (j.contains(other)) throw ConfigError(other, std::string("use \"") + rk + "\" for the " + to_string(c.regime) + " regime");
  if (!j.contains(rk)) throw ConfigError(rk, "missing");
  c.rounds = read_int(j, rk);

  if (c.regime == Regime::Sparse) {
    if (!j.contains("M")) throw ConfigError("M", "missing");
    if (!j.contains("S")) throw ConfigError("S", "missing");
  }
  if (j.contains("M")) c.M = read_int(j, "M");
  if (j.contains("S")) c.S = read_int(j, "S");
  if (j.contains("m")) c.m = read_int(j, "m");
  if (j.contains("p_s")) c.p_s = read_double(j, "p_s");
  if (j.contains("error_prob")) c.error_probs = read_doubles(j, "error_prob");
  if (j.contains("mu")) c.mu = read_double(j, "mu");
  if (j.contains("psi0")) c.psi0 = read_double(j, "psi0");

  if (j.contains("policy") && j.contains("selector")) throw ConfigError("selector", "give either policy or selector");
  if (j.contains("policy"))
    c.policies = read_names(j, "policy");
  else if (j.contains("selector"))
    c.policies = read_names(j, "selector");
  else
    c.policies = default_policies(c.regime);

  if (j.contains("trials")) c.trials = read_int(j, "trials");
  if (!j.contains("seed")) throw ConfigError("seed", "missing");
  const json& seed = j.at("seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    throw ConfigError("seed", "must be a nonnegative integer");
  c.seed = seed.get<std::uint64_t>();
  if (j.contains("out")) c.out = read_field<std::string>(j, "out");
  if (j.contains("workers")) c.workers = read_int(j, "workers");
  if (j.contains("emit_plot_data")) c.emit_plot_data = read_field<bool>(j, "emit_plot_data");
  validate(c);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["regime"] = to_string(c.regime);
  j["K"] = c.K;
  j["L"] = c.L;
  j["M"] = c.M;
  j["S"] = c.S;
  j["m"] = c.m;
  j[rounds_key(c.regime)] = c.rounds;
  j["p_s"] = c.p_s;
  j["error_prob"] = c.error_probs;
  j["mu"] = c.mu;
  j["psi0"] = c.psi0;
  j["policy"] = c.policies;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["workers"] = c.workers;
  j["emit_plot_data"] = c.emit_plot_data;
  return j;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string serialize_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

std::vector<double> PolicyReport::final_metric() const {
  std::vector<double> out;
  for (const auto& traj : metric) out.push_back(traj.empty() ? 0.0 : traj.back());
  return out;
}

const PolicyReport& ExperimentReport::find(const std::string& policy, double error_prob) const {
  for (const auto& p : policies)
    if (p.policy == policy && p.error_prob == error_prob) return p;
  throw std::out_of_range("no report for policy " + policy);
}

std::uint64_t trial_seed(std::uint64_t root, int trial) {
  return derive_seed(root, Stream::Trial, static_cast<std::uint64_t>(trial));
}

namespace {

std::filesystem::path with_suffix(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  const auto ext = p.extension().string();
  p.replace_filename(p.stem().string() + suffix + (ext.empty() ? ".csv" : ext));
  return p;
}

struct TrialResult {
  // One trajectory per (error_prob, policy) cell, in report order.
  std::vector<std::vector<double>> metric;
  std::vector<int> rounds_to_threshold;
  std::vector<CsvTable> rows;  // per cell
  std::string path_csv;
};

struct Cell {
  std::string policy;
  double error_prob = 0.0;
};

std::vector<Cell> cells_of(const ExperimentConfig& c) {
  std::vector<Cell> cells;
  if (c.regime == Regime::Sparse) {
    for (double e : c.error_probs)
      for (const auto& p : c.policies) cells.push_back({p, e});
  } else {
    for (const auto& p : c.policies) cells.push_back({p, 0.0});
  }
  return cells;
}

CsvTable empty_table(const ExperimentConfig& c) {
  switch (c.regime) {
    case Regime::Gaussian: return trace_table(true);
    case Regime::Sparse: return sparse_table();
    case Regime::Distributed: return access_table();
  }
  return CsvTable({});
}

void pad_to(std::vector<double>& v, int n) {
  const double last = v.empty() ? 0.0 : v.back();
  v.resize(static_cast<std::size_t>(n), last);
}

TrialResult run_trial(const ExperimentConfig& c, const std::vector<Cell>& cells, int trial) {
  const std::uint64_t seed = trial_seed(c.seed, trial);
  TrialResult r;
  switch (c.regime) {
    case Regime::Gaussian: {
      const GaussianField field = gen_gaussian_field(c.K, seed);
      const SelectionTrace trace = run_centralized_das(field, selector_from_string(cells[0].policy), c.rounds, c.L);
      r.rows.push_back(empty_table(c));
      append_trace_rows(r.rows.back(), trace, trial);
      std::vector<double> mse;
      for (const auto& rt : trace.rounds) mse.push_back(rt.mse);
      r.metric.push_back(std::move(mse));
      if (trial == 0) r.path_csv = path_table(field, trace.order()).str();
      break;
    }
    case Regime::Sparse: {
      const SparseScene scene = gen_sparse_scene(c.K, c.M, c.S, seed);
      for (const auto& cell : cells) {
        const SparseTrajectory traj =
            run_sparse_das(scene, c.L, c.rounds, sparse_policy_from_string(cell.policy), cell.error_prob, seed);
        r.rows.push_back(empty_table(c));
        append_sparse_rows(r.rows.back(), traj, trial);
        std::vector<double> mse;
        for (const auto& round : traj.rounds) mse.push_back(round.mse);
        pad_to(mse, c.rounds);
        r.metric.push_back(std::move(mse));
        r.rounds_to_threshold.push_back(rounds_to_threshold(traj, kRoundsThreshold));
      }
      break;
    }
    case Regime::Distributed: {
      const QueryScene scene = gen_query_scene(c.K, c.m, c.p_s, seed);
      for (const auto& cell : cells) {
        const DistributedTrajectory traj =
            run_distributed_das(scene, c.L, c.rounds, access_policy_from_string(cell.policy), c.mu, c.psi0, seed);
        r.rows.push_back(empty_table(c));
        append_access_rows(r.rows.back(), traj, trial);
        std::vector<double> err;
        for (std::size_t t = 1; t < traj.steps.size(); ++t) err.push_back(traj.steps[t].error_norm);
        r.metric.push_back(std::move(err));
      }
      break;
    }
  }
  return r;
}

// Rows grouped cell-major so each policy's trials are contiguous.
std::string merge_rows(const ExperimentConfig& c, std::size_t cell_count, const std::vector<TrialResult>& results) {
  CsvTable all = empty_table(c);
  for (std::size_t ci = 0; ci < cell_count; ++ci)
    for (const auto& r : results)
      for (const auto& row : r.rows[ci].data()) all.add_row(row);
  return all.str();
}

std::string plot_table(const std::vector<PolicyReport>& reports) {
  CsvTable t({"policy", "error_prob", "round", "median", "q25", "q75"});
  for (const auto& p : reports)
    for (std::size_t i = 0; i < p.aggregate.size(); ++i)
      t.add_row({p.policy, format_double(p.error_prob), std::to_string(i + 1), format_double(p.aggregate[i].median),
                 format_double(p.aggregate[i].q25), format_double(p.aggregate[i].q75)});
  return t.str();
}

}  // namespace

std::filesystem::path plot_path(const std::string& out) { return with_suffix(out, "_plot"); }
std::filesystem::path path_csv_path(const std::string& out) { return with_suffix(out, "_path"); }

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  if (!cfg.out.empty()) {
    check_writable(cfg.out);
    if (cfg.emit_plot_data) check_writable(plot_path(cfg.out));
    if (cfg.regime == Regime::Gaussian) check_writable(path_csv_path(cfg.out));
  }

  const auto cells = cells_of(cfg);
  std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
  std::exception_ptr failure;
#pragma omp parallel for num_threads(cfg.workers) schedule(dynamic, 1)
  for (int i = 0; i < cfg.trials; ++i) {
    try {
      results[static_cast<std::size_t>(i)] = run_trial(cfg, cells, i);
    } catch (...) {
#pragma omp critical(das_trial_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentReport rep;
  rep.config = cfg;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    PolicyReport p;
    p.regime = cfg.regime;
    p.policy = cells[ci].policy;
    p.error_prob = cells[ci].error_prob;
    for (const auto& r : results) {
      p.metric.push_back(r.metric[ci]);
      if (!r.rounds_to_threshold.empty()) p.rounds_to_threshold.push_back(r.rounds_to_threshold[ci]);
    }
    for (int t = 0; t < cfg.rounds; ++t) {
      std::vector<double> column;
      for (const auto& traj : p.metric) column.push_back(traj[static_cast<std::size_t>(t)]);
      p.aggregate.push_back(summarize(column));
    }
    rep.policies.push_back(std::move(p));
  }
  rep.csv = merge_rows(cfg, cells.size(), results);
  if (cfg.emit_plot_data) rep.plot_csv = plot_table(rep.policies);
  if (cfg.regime == Regime::Gaussian) rep.path_csv = results.front().path_csv;

  if (!cfg.out.empty()) {
    write_file_atomic(cfg.out, rep.csv);
    if (cfg.emit_plot_data) write_file_atomic(plot_path(cfg.out), rep.plot_csv);
    if (cfg.regime == Regime::Gaussian) write_file_atomic(path_csv_path(cfg.out), rep.path_csv);
  }
  rep.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

PolicyComparison compare_policies(const PolicyReport& a, const PolicyReport& b) {
  if (a.regime != b.regime) throw std::invalid_argument("reports come from different regimes");
  if (a.aggregate.size() != b.aggregate.size()) throw std::invalid_argument("reports differ in round count");
  if (a.metric.size() != b.metric.size()) throw std::invalid_argument("reports differ in trial count");
  PolicyComparison out;
  for (std::size_t t = 0; t < a.aggregate.size(); ++t)
    out.median_difference.push_back(a.aggregate[t].median - b.aggregate[t].median);
  const auto fa = a.final_metric();
  const auto fb = b.final_metric();
  std::size_t wins = 0;
  for (std::size_t i = 0; i < fa.size(); ++i)
    if (fa[i] <= fb[i]) ++wins;
  out.fraction_a_not_worse = fa.empty() ? 1.0 : static_cast<double>(wins) / static_cast<double>(fa.size());
  return out;
}

}  // namespace das
