#pragma once

// Energy-increment decomposition f = g + h.
//
// Stages greedily add lambda_k * f_k with f_k a dictionary network and
// lambda_k in [-q,q] while the squared-residual decrease exceeds eps^2.
// That caps the stage count at ceil(1/eps^2). The partial sum is then
// clipped into g = beta(sum_k lambda_k f_k), a single network, and the
// residual f - g is audited against the dictionary.

#include <cstdint>
#include <string>
#include <vector>

#include "clipreg/adversary.hpp"
#include "clipreg/measure.hpp"
#include "clipreg/netcore.hpp"

namespace clipreg {

/// ceil(1/eps^2), exact at eps = 1/k for integer k. Requires 0 < eps <= 1.
std::size_t stage_budget(double epsilon);

enum class StageDict { Fixed, Growing };
std::string to_string(StageDict s);
StageDict stage_dict_from_string(const std::string& s);

/// Dictionary searched at stage k (1-based): (d|r) for Fixed,
/// (2^(k-1) d | r + k - 1) for Growing.
DictSpec stage_spec(const DictSpec& base, StageDict mode, std::size_t k);

struct StagePick {
  std::size_t k = 0;
  RepNet element = make_constant_net(1, 1.0, 0.0);
  double lambda = 0.0;
  double gain = 0.0;     ///< t_before - t_after
  double t_after = 0.0;  ///< squared residual norm once the pick is accepted
};

struct EnergyTrace {
  double t0 = 0.0;  ///< ||f||^2
  std::vector<StagePick> picks;
};

struct StageResult {
  RepNet element = make_constant_net(1, 1.0, 0.0);
  double lambda = 0.0;
  double gain = 0.0;
  double inner_with_residual = 0.0;
  double element_norm_sq = 0.0;
};

/// Coefficient minimizing ||res - lambda h||^2 over [-q,q]; 0 when ||h||^2 < 1e-14.
double optimal_lambda(double inner_h_res, double norm_sq_h, double q);
/// Decrease 2 lambda <h,res> - lambda^2 ||h||^2 of the squared residual.
double quadratic_gain(double lambda, double inner_h_res, double norm_sq_h);

/// One greedy stage: the dictionary element whose best scaled copy removes
/// the most energy from the residual, its clamped coefficient, and the
/// exact decrease of the quadratic objective.
StageResult stage_solve(const Quadrature& quad, const DictSpec& spec, std::span<const double> residual,
                        const AscentBudget& budget, std::uint64_t seed);
StageResult stage_solve(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& residual,
                        const AscentBudget& budget, std::uint64_t seed);

struct DecomposeOptions {
  double epsilon = 0.5;
  AscentBudget budget;
  std::uint64_t seed = 0;
  StageDict stage_dict = StageDict::Fixed;
  /// Audit budget; defaults to the stage budget when restarts == 0.
  AscentBudget audit_budget{0};
  std::uint64_t audit_seed = 0;
  /// Tolerance on the audit value used by certify_split.
  double audit_slack = 0.05;
};

struct DecompositionReport {
  RepNet g = make_constant_net(1, 1.0, 0.0);
  std::size_t m_prime = 0;
  std::size_t m_budget = 0;
  /// Constructive certificate produced by compose_parallel.
  RepCert g_cert;
  /// (2^m' d | r + m'), which must dominate g_cert.
  RepCert paper_cert;
  EnergyTrace trace;
  double residual_l2_sq = 0.0;
  double residual_l1 = 0.0;
  /// ||f - g'||^2 for the unclipped partial sum g'.
  double unclipped_residual_l2_sq = 0.0;
  bool budget_exhausted = false;
  AuditResult audit;
  DictSpec spec;
  DecomposeOptions options;
  /// Pass-through configuration echo (the CLI stores its RunConfig here).
  nlohmann::json config = nlohmann::json::object();
};

/// Runs the stages, assembles g and audits f - g.
DecompositionReport decompose(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& f,
                              const DecomposeOptions& options);

struct CertifyResult {
  bool ok = true;
  std::vector<std::string> details;
};

/// Re-verifies a report against f on the quadrature: split identity,
/// recomputed residual norms, trace monotonicity and gains, stage bound,
/// certificate arithmetic, g = beta(sum lambda_k f_k), and the audit value
/// (<= eps + slack, reproducible from its witness).
CertifyResult certify_split(const DecompositionReport& report, const Quadrature& quad, const FunctionOracle& f);

inline constexpr const char* kReportSchema = "clipreg.report/1";

nlohmann::json to_json(const DecompositionReport& r);
DecompositionReport report_from_json(const nlohmann::json& j);

/// `k,t_after,lambda,gain` rows.
std::string trace_csv(const EnergyTrace& trace);

}  // namespace clipreg
