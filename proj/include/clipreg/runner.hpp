#pragma once

// Run configuration and the experiment drivers behind the command line.

#include <cstdint>
#include <string>
#include <vector>

#include "clipreg/adversary.hpp"
#include "clipreg/decomposer.hpp"
#include "clipreg/zoo.hpp"

namespace clipreg {

struct QuadratureConfig {
  Scheme scheme = Scheme::LowDiscrepancy;
  std::size_t size = 1 << 14;
  std::uint64_t seed = 0;
};

struct SolverConfig {
  AscentBudget budget;
  std::uint64_t seed = 0;
};

struct AuditConfig {
  std::size_t restarts = 64;
  std::uint64_t seed = 0;
  double slack = 0.05;
};

struct OutputConfig {
  std::string report = "report.json";
  std::string trace = "trace.csv";
  std::string witness = "witness.json";
};

/// Mirrors the JSON config file field for field. Unknown fields are rejected.
///
/// {
///   "domain": {"n": 2, "q": 1.0},
///   "dict": {"d": 1, "r": 0},
///   "epsilon": 0.3,
///   "quadrature": {"scheme": "low-discrepancy", "size": 16384, "seed": 7},
///   "solver": {"restarts": 64, "iterations": 400, "step0": 0.5, "decay": 0.97, "seed": 1},
///   "audit": {"restarts": 64, "seed": 2, "slack": 0.05},
///   "target": {"name": "planted-net", "params": {"d": 1, "r": 0, "seed": 3}},
///   "stage_dict": "fixed",
///   "output": {"report": "report.json", "trace": "trace.csv", "witness": "witness.json"}
/// }
///
/// "audit", "stage_dict" and "output" are optional; every seed elsewhere is required.
struct RunConfig {
  DomainSpec domain;
  std::size_t d = 1;
  std::size_t r = 0;
  double epsilon = 0.5;
  QuadratureConfig quadrature;
  SolverConfig solver;
  AuditConfig audit;
  std::string target_name = "linear";
  nlohmann::json target_params = nlohmann::json::object();
  StageDict stage_dict = StageDict::Fixed;
  OutputConfig output;

  DictSpec dict() const { return DictSpec{d, r, domain}; }
  DecomposeOptions decompose_options(unsigned threads) const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
/// Canonical JSON form; config_from_json(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

Quadrature quadrature_for(const RunConfig& c);
ZooTarget target_for(const RunConfig& c);

/// decompose() on the configured target; the config is echoed into the report.
DecompositionReport run_decompose(const RunConfig& c, unsigned threads = 1);

/// Ascent against the configured target itself.
AdversaryResult run_adversary(const RunConfig& c, unsigned threads = 1);

/// Rebuilds quadrature and target from the report's config echo and re-verifies it.
CertifyResult verify_report(const DecompositionReport& report);

struct SweepRow {
  std::size_t n = 0;
  std::size_t m_prime = 0;
  double residual_l2_sq = 0.0;
  double audit_value = 0.0;
};

/// Repeats run_decompose with domain.n replaced by each entry of `dims`.
std::vector<SweepRow> run_sweep(const RunConfig& c, const std::vector<std::size_t>& dims, unsigned threads = 1);
/// `n,m_prime,residual_l2_sq,audit_value` rows.
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double x);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace clipreg
