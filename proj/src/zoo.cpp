#include "clipreg/zoo.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

namespace clipreg {

const std::vector<ZooEntry>& zoo_entries() {
  static const std::vector<ZooEntry> entries = {
      {"linear", "weights:[n], bias | seed", "planted rectified affine unit"},
      {"step", "theta in [-1,1]", "sign(w_1 - theta)"},
      {"ball", "rho > 0", "2 * indicator(|w|_2 <= rho) - 1"},
      {"sign-product", "", "product of coordinate signs"},
      {"random-grid", "k >= 1, seed", "piecewise constant on a 2^k per-axis grid"},
      {"planted-net", "d >= 1, r >= 0, seed", "seeded random (d|r) network"},
      {"sine", "kappa", "sin(pi * kappa * w_1)"},
  };
  return entries;
}

namespace {

double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

void allow_only(const std::string& name, const nlohmann::json& params, std::set<std::string> allowed) {
  if (!params.is_object()) throw std::invalid_argument("target.params must be an object");
  for (const auto& [key, _] : params.items()) {
    if (!allowed.contains(key)) throw std::invalid_argument("target '" + name + "' has no parameter '" + key + "'");
  }
}

template <class T>
T require(const std::string& name, const nlohmann::json& params, const char* key) {
  if (!params.contains(key)) throw std::invalid_argument("target '" + name + "' requires parameter '" + key + "'");
  try {
    return params.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("target '" + name + "': parameter '" + key + "' has the wrong type");
  }
}

template <class T>
T optional(const std::string& name, const nlohmann::json& params, const char* key, T fallback) {
  return params.contains(key) ? require<T>(name, params, key) : fallback;
}

}  // namespace

RepNet random_net(const DomainSpec& domain, const RepCert& arch, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed));
  std::vector<double> params;
  std::size_t width = domain.n;
  for (std::size_t l = 0; l <= arch.r; ++l) {
    const std::size_t units = (l == arch.r) ? 1 : arch.d;
    for (std::size_t u = 0; u < units; ++u) {
      for (std::size_t j = 0; j < width; ++j) params.push_back(domain.q * (2.0 * unit_interval(rng()) - 1.0));
      params.push_back(2.0 * unit_interval(rng()) - 1.0);
    }
    width = units;
  }
  return net_from_parameters(domain.n, domain.q, arch, params);
}

ZooTarget zoo(const std::string& name, const nlohmann::json& params, const DomainSpec& domain) {
  domain.validate();
  const std::size_t n = domain.n;
  const std::string descriptor = name + params.dump();

  if (name == "linear") {
    allow_only(name, params, {"weights", "bias", "seed"});
    RepNet unit = [&] {
      if (params.contains("weights")) {
        auto w = require<std::vector<double>>(name, params, "weights");
        if (w.size() != n) throw std::invalid_argument("target 'linear': weights must have length n");
        for (double x : w) {
          if (std::abs(x) > domain.q) throw std::invalid_argument("target 'linear': weight outside [-q,q]");
        }
        return make_unit_net(n, domain.q, std::move(w), optional<double>(name, params, "bias", 0.0));
      }
      return random_net(domain, RepCert{1, 0}, require<std::uint64_t>(name, params, "seed"));
    }();
    return {name, params, oracle_of(unit, descriptor)};
  }
  if (name == "step") {
    allow_only(name, params, {"theta"});
    const double theta = optional<double>(name, params, "theta", 0.0);
    if (!(theta >= -1.0 && theta <= 1.0)) throw std::invalid_argument("target 'step': theta must lie in [-1,1]");
    return {name, params, FunctionOracle(n, [theta](std::span<const double> w) { return sign_of(w[0] - theta); }, descriptor)};
  }
  if (name == "ball") {
    allow_only(name, params, {"rho"});
    const double rho = optional<double>(name, params, "rho", 1.0);
    if (!(rho > 0.0)) throw std::invalid_argument("target 'ball': rho must be positive");
    return {name, params, FunctionOracle(n, [rho](std::span<const double> w) {
              double s = 0.0;
              for (double x : w) s += x * x;
              return s <= rho * rho ? 1.0 : -1.0;
            }, descriptor)};
  }
  if (name == "sign-product") {
    allow_only(name, params, {});
    return {name, params, FunctionOracle(n, [](std::span<const double> w) {
              double p = 1.0;
              for (double x : w) p *= sign_of(x);
              return p;
            }, descriptor)};
  }
  if (name == "random-grid") {
    allow_only(name, params, {"k", "seed"});
    const auto k = optional<std::size_t>(name, params, "k", 1);
    const auto seed = require<std::uint64_t>(name, params, "seed");
    if (k < 1 || k > 20) throw std::invalid_argument("target 'random-grid': k must lie in [1,20]");
    const std::size_t cells = std::size_t{1} << k;
    return {name, params, FunctionOracle(n, [cells, seed](std::span<const double> w) {
              std::uint64_t h = mix_seed(seed);
              for (double x : w) {
                auto c = static_cast<std::size_t>((x + 1.0) * 0.5 * static_cast<double>(cells));
                if (c >= cells) c = cells - 1;
                h = mix_seed(h ^ c);
              }
              return 2.0 * unit_interval(h) - 1.0;
            }, descriptor)};
  }
  if (name == "planted-net") {
    allow_only(name, params, {"d", "r", "seed"});
    const RepCert arch{optional<std::size_t>(name, params, "d", 1), optional<std::size_t>(name, params, "r", 0)};
    if (arch.d < 1) throw std::invalid_argument("target 'planted-net': d must be >= 1");
    if (arch.r > 8) throw std::invalid_argument("target 'planted-net': r must be <= 8");
    RepNet net = random_net(domain, arch, require<std::uint64_t>(name, params, "seed"));
    return {name, params, oracle_of(net, descriptor)};
  }
  if (name == "sine") {
    allow_only(name, params, {"kappa"});
    const double kappa = optional<double>(name, params, "kappa", 1.0);
    if (!std::isfinite(kappa)) throw std::invalid_argument("target 'sine': kappa must be finite");
    return {name, params, FunctionOracle(n, [kappa](std::span<const double> w) {
              return std::sin(std::numbers::pi * kappa * w[0]);
            }, descriptor)};
  }
  throw std::invalid_argument("unknown target '" + name + "'");
}

}  // namespace clipreg
