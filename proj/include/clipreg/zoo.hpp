#pragma once

// Built-in target functions W_n -> [-1,1].

#include <string>
#include <vector>

#include "clipreg/measure.hpp"
#include "clipreg/netcore.hpp"

namespace clipreg {

struct ZooEntry {
  std::string name;
  std::string params;  ///< human-readable parameter list
  std::string summary;
};

const std::vector<ZooEntry>& zoo_entries();

struct ZooTarget {
  std::string name;
  nlohmann::json params;
  FunctionOracle oracle;
};

/// Builds a target by name. Throws std::invalid_argument for unknown names,
/// unknown parameters, or parameters out of range.
///
///   linear        weights, bias | seed   planted unit beta(<w,a> + c)
///   step          theta                  sign(w_1 - theta), sign(0) = 1
///   ball          rho                    1 inside the Euclidean ball of radius rho, -1 outside
///   sign-product  -                      prod_i sign(w_i)
///   random-grid   k, seed                constant on a 2^k per-axis grid, seeded cell values
///   planted-net   d, r, seed             seeded random (d,...,d) network of depth r
///   sine          kappa                  sin(pi kappa w_1)
ZooTarget zoo(const std::string& name, const nlohmann::json& params, const DomainSpec& domain);

/// Seeded network of uniform type (d,...,d) with r hidden layers: weights
/// uniform in [-q,q], biases uniform in [-1,1].
RepNet random_net(const DomainSpec& domain, const RepCert& arch, std::uint64_t seed);

}  // namespace clipreg
