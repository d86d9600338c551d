#pragma once

// Lower-bound estimates of the observer metric
//
//   sigma_(d|r)(f, g) = sup_h |<h, f - g>|,  h ranging over (d|r) networks,
//
// by multi-start projected subgradient ascent over network parameters.
// Every estimate comes with the witness network that achieves it.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "clipreg/measure.hpp"
#include "clipreg/netcore.hpp"

namespace clipreg {

/// The dictionary F(d, r) over a domain.
struct DictSpec {
  std::size_t d = 1;
  std::size_t r = 0;
  DomainSpec domain;

  RepCert cert() const { return {d, r}; }
  void validate() const;
};

/// step_t = step0 * decay^t for t = 0 .. iterations-1.
struct AscentBudget {
  std::size_t restarts = 64;
  std::size_t iterations = 400;
  double step0 = 0.5;
  double decay = 0.97;
  /// Worker cap; results are independent of it.
  unsigned threads = 1;

  void validate() const;
};

nlohmann::json to_json(const AscentBudget& b);
AscentBudget budget_from_json(const nlohmann::json& j);

struct AdversaryResult {
  double value = 0.0;        ///< |<witness, target>|, recomputed from the witness
  double correlation = 0.0;  ///< signed <witness, target>
  RepNet witness = make_constant_net(1, 1.0, 0.0);
  std::size_t restarts_run = 0;
  std::vector<double> per_restart_values;
  std::uint64_t seed = 0;
  AscentBudget budget;
};

/// Always true: values are lower bounds of the supremum.
inline constexpr bool kAdversaryValuesAreLowerBounds = true;

nlohmann::json to_json(const AdversaryResult& r);
AdversaryResult adversary_result_from_json(const nlohmann::json& j);

/// <h, target> under the quadrature.
double correlation(const Quadrature& quad, const RepNet& h, const FunctionOracle& target, unsigned threads = 1);
double correlation(const Quadrature& quad, const RepNet& h, std::span<const double> target_values);

/// Maximizes |<h_theta, target>| over networks of uniform type (d,...,d).
///
/// Both signs of the objective are covered: each step ascends the sign of
/// the current correlation, and F(d,r) is closed under negation. Restart i
/// draws its start from a stream keyed by seed ^ i; restarts with index
/// below warm_starts.size() start from the given nets instead.
AdversaryResult ascend(const Quadrature& quad, const DictSpec& spec, std::span<const double> target_values,
                       const AscentBudget& budget, std::uint64_t seed,
                       std::span<const RepNet> warm_starts = {});
AdversaryResult ascend(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& target,
                       const AscentBudget& budget, std::uint64_t seed, std::span<const RepNet> warm_starts = {});

enum class Objective {
  Correlation,  ///< |<h, t>|
  EnergyGain,   ///< max over lambda in [-q,q] of 2 lambda <h, t> - lambda^2 ||h||^2
};

struct GainSearchResult {
  RepNet element;
  std::vector<double> per_restart_values;
};

/// Same search as ascend() on the EnergyGain objective: the element whose
/// best scaled copy removes the most energy from `residual`.
GainSearchResult ascend_energy_gain(const Quadrature& quad, const DictSpec& spec, std::span<const double> residual,
                                    const AscentBudget& budget, std::uint64_t seed,
                                    std::span<const RepNet> warm_starts = {});

/// Ascent against f - g; a lower bound on sigma_(d|r)(f, g) under the quadrature.
AdversaryResult sigma_dr(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& f,
                         const FunctionOracle& g, const AscentBudget& budget, std::uint64_t seed);

struct AuditResult {
  /// No witness above epsilon was found at this budget. Not a proof of invisibility.
  bool invisible_up_to_budget = false;
  double epsilon = 0.0;
  AdversaryResult result;
};

nlohmann::json to_json(const AuditResult& a);
AuditResult audit_from_json(const nlohmann::json& j);

AuditResult invisibility_audit(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& h, double epsilon,
                               const AscentBudget& budget, std::uint64_t seed);
AuditResult invisibility_audit(const Quadrature& quad, const DictSpec& spec, std::span<const double> h_values,
                               double epsilon, const AscentBudget& budget, std::uint64_t seed);

}  // namespace clipreg
