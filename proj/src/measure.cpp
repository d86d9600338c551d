#include "clipreg/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include <boost/random/sobol.hpp>

namespace clipreg {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::TensorGrid: return "tensor-grid";
    case Scheme::LowDiscrepancy: return "low-discrepancy";
    case Scheme::SeededUniform: return "seeded-uniform";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "tensor-grid") return Scheme::TensorGrid;
  if (s == "low-discrepancy") return Scheme::LowDiscrepancy;
  if (s == "seeded-uniform") return Scheme::SeededUniform;
  throw std::invalid_argument("unknown quadrature scheme '" + s + "'");
}

Quadrature::Quadrature(std::size_t dim, Scheme scheme, std::uint64_t seed, std::vector<double> nodes,
                       std::vector<double> weights)
    : dim_(dim), scheme_(scheme), seed_(seed), nodes_(std::move(nodes)), weights_(std::move(weights)) {
  if (dim_ == 0 || weights_.empty()) throw std::invalid_argument("Quadrature: empty");
  if (nodes_.size() != weights_.size() * dim_) throw std::invalid_argument("Quadrature: node/weight count mismatch");
  for (double x : nodes_) {
    if (!(x >= -1.0 && x <= 1.0)) throw std::invalid_argument("Quadrature: node outside the hypercube");
  }
  for (double w : weights_) {
    if (!(w > 0.0)) throw std::invalid_argument("Quadrature: non-positive weight");
  }
  if (std::abs(pairwise_sum(weights_) - 1.0) > 1e-12) throw std::invalid_argument("Quadrature: weights do not sum to 1");
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void gauss_legendre(std::size_t count, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(count, 0.0);
  weights.assign(count, 0.0);
  const std::size_t half = (count + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_count.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(count) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(count) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = p2;
    }
    dp = static_cast<double>(count) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[count - 1 - i] = x;
    weights[i] = w;
    weights[count - 1 - i] = w;
  }
  if (count % 2 == 1) nodes[count / 2] = 0.0;
}

namespace {

Quadrature tensor_grid(std::size_t n, std::size_t per_axis, std::uint64_t seed) {
  if (n > 4) throw std::invalid_argument("tensor-grid quadrature is limited to n <= 4");
  std::vector<double> x1, w1;
  gauss_legendre(per_axis, x1, w1);
  std::size_t total = 1;
  for (std::size_t k = 0; k < n; ++k) total *= per_axis;
  std::vector<double> nodes(total * n);
  std::vector<double> weights(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    double w = 1.0;
    for (std::size_t k = n; k-- > 0;) {  // last axis varies fastest
      const std::size_t a = rest % per_axis;
      rest /= per_axis;
      nodes[idx * n + k] = x1[a];
      w *= w1[a] * 0.5;
    }
    weights[idx] = w;
  }
  // Rescale so the weights sum to one after rounding.
  const double s = pairwise_sum(weights);
  for (double& w : weights) w /= s;
  return Quadrature(n, Scheme::TensorGrid, seed, std::move(nodes), std::move(weights));
}

Quadrature sobol_points(std::size_t n, std::size_t size, std::uint64_t seed) {
  boost::random::sobol engine(static_cast<unsigned>(n));
  std::vector<std::uint64_t> shift(n);
  for (std::size_t k = 0; k < n; ++k) shift[k] = mix_seed(seed * 0x100000001b3ULL + k);
  std::vector<double> nodes(size * n);
  // The engine skips the origin; include it so the first 2^k points form a net.
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint64_t raw = (i == 0) ? 0 : static_cast<std::uint64_t>(engine());
      const std::uint64_t bits = raw ^ shift[k];
      const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
      nodes[i * n + k] = 2.0 * u - 1.0;
    }
  }
  return Quadrature(n, Scheme::LowDiscrepancy, seed, std::move(nodes),
                    std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Quadrature uniform_points(std::size_t n, std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed));
  std::vector<double> nodes(size * n);
  for (double& x : nodes) x = 2.0 * unit_interval(rng()) - 1.0;
  return Quadrature(n, Scheme::SeededUniform, seed, std::move(nodes),
                    std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

}  // namespace

Quadrature build_quadrature(const DomainSpec& domain, Scheme scheme, std::size_t size, std::uint64_t seed) {
  domain.validate();
  if (size < 1) throw std::invalid_argument("quadrature size must be >= 1");
  switch (scheme) {
    case Scheme::TensorGrid: return tensor_grid(domain.n, size, seed);
    case Scheme::LowDiscrepancy: return sobol_points(domain.n, size, seed);
    case Scheme::SeededUniform: return uniform_points(domain.n, size, seed);
  }
  throw std::invalid_argument("unknown quadrature scheme");
}

void write_nodes_csv(const Quadrature& quad, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (std::size_t k = 0; k < quad.dim(); ++k) out << "x" << (k + 1) << ",";
  out << "weight\n" << std::setprecision(17);
  for (std::size_t i = 0; i < quad.size(); ++i) {
    for (double x : quad.node(i)) out << x << ",";
    out << quad.weights()[i] << "\n";
  }
}

FunctionOracle::FunctionOracle(std::size_t dim, Fn fn, std::string descriptor, double bound)
    : dim_(dim),
      fn_(std::move(fn)),
      descriptor_(std::move(descriptor)),
      bound_(bound),
      clamps_(std::make_shared<std::atomic<std::size_t>>(0)) {}

double FunctionOracle::operator()(std::span<const double> w) const {
  if (w.size() != dim_) throw std::invalid_argument("oracle '" + descriptor_ + "': dimension mismatch");
  const double v = fn_(w);
  if (!std::isfinite(v)) throw std::runtime_error("oracle '" + descriptor_ + "' returned a non-finite value");
  if (std::abs(v) > bound_) {
    clamps_->fetch_add(1);
    return std::clamp(v, -bound_, bound_);
  }
  return v;
}

FunctionOracle oracle_of(const RepNet& net, std::string descriptor) {
  return FunctionOracle(net.input_dim(), [net](std::span<const double> w) { return eval_net(net, w); },
                        std::move(descriptor));
}

FunctionOracle constant_oracle(std::size_t dim, double c) {
  return FunctionOracle(dim, [c](std::span<const double>) { return c; }, "constant", std::max(1.0, std::abs(c)));
}

FunctionOracle difference(const FunctionOracle& a, const FunctionOracle& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("difference: dimension mismatch");
  return FunctionOracle(a.dim(), [a, b](std::span<const double> w) { return a(w) - b(w); },
                        "(" + a.descriptor() + ")-(" + b.descriptor() + ")", a.bound() + b.bound());
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

template <class Eval>
std::vector<double> sample_with(const Quadrature& quad, unsigned threads, const Eval& eval) {
  std::vector<double> out(quad.size());
  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (quad.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(quad.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) out[i] = eval(quad.node(i));
  });
  return out;
}

void check_dims(const Quadrature& quad, std::size_t dim) {
  if (dim != quad.dim()) throw std::invalid_argument("function dimension does not match the quadrature");
}

}  // namespace

std::vector<double> sample(const Quadrature& quad, const FunctionOracle& f, unsigned threads) {
  check_dims(quad, f.dim());
  return sample_with(quad, threads, [&](std::span<const double> w) { return f(w); });
}

std::vector<double> sample(const Quadrature& quad, const RepNet& net, unsigned threads) {
  check_dims(quad, net.input_dim());
  return sample_with(quad, threads, [&](std::span<const double> w) { return eval_net(net, w); });
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double inner(const Quadrature& quad, std::span<const double> a, std::span<const double> b) {
  if (a.size() != quad.size() || b.size() != quad.size()) throw std::invalid_argument("inner: sample size mismatch");
  std::vector<double> terms(quad.size());
  const auto w = quad.weights();
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = w[i] * (a[i] * b[i]);
  return pairwise_sum(terms);
}

double inner(const Quadrature& quad, const FunctionOracle& a, const FunctionOracle& b, unsigned threads) {
  return inner(quad, sample(quad, a, threads), sample(quad, b, threads));
}

double l2_norm_sq(const Quadrature& quad, std::span<const double> f) { return inner(quad, f, f); }

double l2_norm_sq(const Quadrature& quad, const FunctionOracle& f, unsigned threads) {
  return l2_norm_sq(quad, sample(quad, f, threads));
}

double sigma_l1(const Quadrature& quad, std::span<const double> f, std::span<const double> g) {
  if (f.size() != quad.size() || g.size() != quad.size()) throw std::invalid_argument("sigma_l1: sample size mismatch");
  std::vector<double> terms(quad.size());
  const auto w = quad.weights();
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = w[i] * std::abs(f[i] - g[i]);
  return pairwise_sum(terms);
}

double sigma_l1(const Quadrature& quad, const FunctionOracle& f, const FunctionOracle& g, unsigned threads) {
  return sigma_l1(quad, sample(quad, f, threads), sample(quad, g, threads));
}

}  // namespace clipreg
