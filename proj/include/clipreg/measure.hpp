#pragma once

// Quadrature realizations of the normalized Lebesgue measure on W_n, and
// the inner product, L2 norm and L1 distance computed against them.
//
// Every quantity in one experiment is computed on the same Quadrature, so
// the energy inequalities of the decomposition hold exactly on the nodes.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clipreg/netcore.hpp"

namespace clipreg {

enum class Scheme { TensorGrid, LowDiscrepancy, SeededUniform };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

class Quadrature {
 public:
  Quadrature(std::size_t dim, Scheme scheme, std::uint64_t seed, std::vector<double> nodes,
             std::vector<double> weights);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  Scheme scheme() const { return scheme_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> node(std::size_t i) const { return {nodes_.data() + i * dim_, dim_}; }
  /// Row-major node coordinates, size() * dim() entries.
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

 private:
  std::size_t dim_;
  Scheme scheme_;
  std::uint64_t seed_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Deterministic in (scheme, size, seed).
///
/// tensor-grid: `size` Gauss-Legendre nodes per axis, size^n nodes total
/// (rejected for n > 4). low-discrepancy: first `size` points of a digitally
/// shifted base-2 Sobol sequence, shift drawn from `seed`. seeded-uniform:
/// pseudo-random points. The last two use weights 1/size.
Quadrature build_quadrature(const DomainSpec& domain, Scheme scheme, std::size_t size, std::uint64_t seed);

/// Gauss-Legendre nodes and weights on [-1,1] (weights sum to 2).
void gauss_legendre(std::size_t count, std::vector<double>& nodes, std::vector<double>& weights);

/// Writes `x_1,...,x_n,weight` rows with a header line.
void write_nodes_csv(const Quadrature& quad, const std::string& path);

/// A bounded function on W_n. Values outside [-bound, bound] are clamped
/// and counted; the count is shared between copies.
class FunctionOracle {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  FunctionOracle(std::size_t dim, Fn fn, std::string descriptor, double bound = 1.0);

  double operator()(std::span<const double> w) const;

  std::size_t dim() const { return dim_; }
  double bound() const { return bound_; }
  const std::string& descriptor() const { return descriptor_; }
  std::size_t clamp_count() const { return clamps_->load(); }

 private:
  std::size_t dim_;
  Fn fn_;
  std::string descriptor_;
  double bound_;
  std::shared_ptr<std::atomic<std::size_t>> clamps_;
};

FunctionOracle oracle_of(const RepNet& net, std::string descriptor = "net");
FunctionOracle constant_oracle(std::size_t dim, double c);
/// Pointwise a - b, bounded by a.bound() + b.bound().
FunctionOracle difference(const FunctionOracle& a, const FunctionOracle& b);

/// Oracle values at every node, in node order. Evaluation may be split
/// across `threads` workers; the result does not depend on it.
std::vector<double> sample(const Quadrature& quad, const FunctionOracle& f, unsigned threads = 1);
std::vector<double> sample(const Quadrature& quad, const RepNet& net, unsigned threads = 1);

/// Pairwise sum with a fixed reduction tree (independent of threading).
double pairwise_sum(std::span<const double> values);

/// sum_i weight_i * (a_i * b_i) on sampled values.
double inner(const Quadrature& quad, std::span<const double> a, std::span<const double> b);
double inner(const Quadrature& quad, const FunctionOracle& a, const FunctionOracle& b, unsigned threads = 1);

double l2_norm_sq(const Quadrature& quad, std::span<const double> f);
double l2_norm_sq(const Quadrature& quad, const FunctionOracle& f, unsigned threads = 1);

/// Quadrature estimate of the normalized L1 distance, in [0,2] for bounded inputs.
double sigma_l1(const Quadrature& quad, std::span<const double> f, std::span<const double> g);
double sigma_l1(const Quadrature& quad, const FunctionOracle& f, const FunctionOracle& g, unsigned threads = 1);

/// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// splitmix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Uniform double in [0,1) from the top 53 bits of a 64-bit draw.
inline double unit_interval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace clipreg
