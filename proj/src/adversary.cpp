#include "clipreg/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace clipreg {

void DictSpec::validate() const {
  domain.validate();
  if (d < 1) throw std::invalid_argument("dict.d must be >= 1");
}

void AscentBudget::validate() const {
  if (restarts < 1) throw std::invalid_argument("solver.restarts must be >= 1");
  if (iterations < 1) throw std::invalid_argument("solver.iterations must be >= 1");
  if (!std::isfinite(step0) || step0 < 0.0) throw std::invalid_argument("solver.step0 must be >= 0");
  if (!std::isfinite(decay) || decay <= 0.0 || decay > 1.0) throw std::invalid_argument("solver.decay must lie in (0,1]");
}

nlohmann::json to_json(const AscentBudget& b) {
  return {{"restarts", b.restarts}, {"iterations", b.iterations}, {"step0", b.step0}, {"decay", b.decay}};
}

AscentBudget budget_from_json(const nlohmann::json& j) {
  AscentBudget b;
  b.restarts = j.at("restarts").get<std::size_t>();
  b.iterations = j.at("iterations").get<std::size_t>();
  b.step0 = j.at("step0").get<double>();
  b.decay = j.at("decay").get<double>();
  return b;
}

namespace {

// Forward/backward over all quadrature nodes for the uniform architecture
// (d, ..., d) with r hidden layers. Parameters follow net_from_parameters.
class AscentEngine {
 public:
  AscentEngine(const Quadrature& quad, const DictSpec& spec, std::span<const double> target)
      : quad_(quad), n_(spec.domain.n), d_(spec.d), r_(spec.r), q_(spec.domain.q) {
    weighted_target_.resize(quad.size());
    for (std::size_t i = 0; i < quad.size(); ++i) weighted_target_[i] = quad.weights()[i] * target[i];
    std::size_t in = n_;
    std::size_t offset = 0;
    for (std::size_t l = 0; l <= r_; ++l) {
      const std::size_t out = (l == r_) ? 1 : d_;
      layers_.push_back({in, out, offset});
      offset += out * (in + 1);
      in = out;
    }
    num_params_ = offset;
  }

  std::size_t num_params() const { return num_params_; }

  void random_init(std::mt19937_64& rng, std::vector<double>& theta) const {
    theta.resize(num_params_);
    for (const auto& L : layers_) {
      for (std::size_t u = 0; u < L.out; ++u) {
        double* p = theta.data() + L.offset + u * (L.in + 1);
        for (std::size_t j = 0; j < L.in; ++j) p[j] = q_ * (2.0 * unit_interval(rng()) - 1.0);
        p[L.in] = 2.0 * unit_interval(rng()) - 1.0;
      }
    }
  }

  void project(std::vector<double>& theta) const {
    for (const auto& L : layers_) {
      const double bb = bias_bound(L.in, q_);
      for (std::size_t u = 0; u < L.out; ++u) {
        double* p = theta.data() + L.offset + u * (L.in + 1);
        for (std::size_t j = 0; j < L.in; ++j) p[j] = std::clamp(p[j], -q_, q_);
        p[L.in] = std::clamp(p[L.in], -bb, bb);
      }
    }
  }

  struct Moments {
    double c = 0.0;  ///< sum_i w_i t_i h(x_i)
    double N = 0.0;  ///< sum_i w_i h(x_i)^2
  };

  /// Moments at theta with subgradients of c (into gc) and, when gN is
  /// non-null, of N.
  Moments evaluate(const std::vector<double>& theta, std::vector<double>& gc, std::vector<double>* gN) {
    gc.assign(num_params_, 0.0);
    if (gN) gN->assign(num_params_, 0.0);
    if (r_ == 0) return evaluate_single(theta, gc, gN);
    const std::size_t width = std::max(n_, d_);
    act_.assign((r_ + 2) * width, 0.0);
    slope_.assign((r_ + 1) * width, 0.0);
    delta_.assign(2 * width, 0.0);
    const double* nodes = quad_.nodes().data();
    const auto weights = quad_.weights();
    Moments m;
    for (std::size_t i = 0; i < quad_.size(); ++i) {
      std::copy(nodes + i * n_, nodes + (i + 1) * n_, act_.begin());
      for (std::size_t l = 0; l <= r_; ++l) {
        const auto& L = layers_[l];
        const double* in = act_.data() + l * width;
        double* out = act_.data() + (l + 1) * width;
        for (std::size_t u = 0; u < L.out; ++u) {
          const double* p = theta.data() + L.offset + u * (L.in + 1);
          double z = 0.0;
          for (std::size_t j = 0; j < L.in; ++j) z += p[j] * in[j];
          z += p[L.in];
          slope_[l * width + u] = beta_slope(z);
          out[u] = std::clamp(z, -1.0, 1.0);
        }
      }
      const double h = act_[(r_ + 1) * width];
      const double wt = weighted_target_[i];
      m.c += wt * h;
      backward(theta, wt, gc, width);
      if (gN) {
        const double wh = weights[i] * h;
        m.N += wh * h;
        backward(theta, 2.0 * wh, *gN, width);
      }
    }
    return m;
  }

 private:
  struct LayerShape {
    std::size_t in, out, offset;
  };

  // Accumulates seed * d h / d theta for the activations left by the forward pass.
  void backward(const std::vector<double>& theta, double seed, std::vector<double>& grad, std::size_t width) {
    if (seed == 0.0) return;
    double* cur = delta_.data();
    double* prev = delta_.data() + width;
    cur[0] = seed;
    for (std::size_t l = r_ + 1; l-- > 0;) {
      const auto& L = layers_[l];
      const double* in = act_.data() + l * width;
      std::fill(prev, prev + L.in, 0.0);
      for (std::size_t u = 0; u < L.out; ++u) {
        const double g = cur[u] * slope_[l * width + u];
        if (g == 0.0) continue;
        const double* p = theta.data() + L.offset + u * (L.in + 1);
        double* gp = grad.data() + L.offset + u * (L.in + 1);
        for (std::size_t j = 0; j < L.in; ++j) {
          gp[j] += g * in[j];
          prev[j] += g * p[j];
        }
        gp[L.in] += g;
      }
      std::swap(cur, prev);
    }
  }

  Moments evaluate_single(const std::vector<double>& theta, std::vector<double>& gc, std::vector<double>* gN) const {
    const double* nodes = quad_.nodes().data();
    const auto weights = quad_.weights();
    const double* a = theta.data();
    const double b = theta[n_];
    double* ga = gc.data();
    double* gn = gN ? gN->data() : nullptr;
    Moments m;
    for (std::size_t i = 0; i < quad_.size(); ++i) {
      const double* x = nodes + i * n_;
      double z = 0.0;
      for (std::size_t j = 0; j < n_; ++j) z += a[j] * x[j];
      z += b;
      const double wt = weighted_target_[i];
      const double h = std::clamp(z, -1.0, 1.0);
      m.c += wt * h;
      if (gn) m.N += weights[i] * h * h;
      if (z > 1.0 || z < -1.0) continue;
      for (std::size_t j = 0; j < n_; ++j) ga[j] += wt * x[j];
      ga[n_] += wt;
      if (gn) {
        const double s = 2.0 * weights[i] * h;
        for (std::size_t j = 0; j < n_; ++j) gn[j] += s * x[j];
        gn[n_] += s;
      }
    }
    return m;
  }

  const Quadrature& quad_;
  std::size_t n_, d_, r_;
  double q_;
  std::vector<LayerShape> layers_;
  std::size_t num_params_ = 0;
  std::vector<double> weighted_target_;
  std::vector<double> act_, slope_, delta_;
};

struct RestartOutcome {
  double value = -1.0;
  std::vector<double> theta;
};

struct SearchOutcome {
  std::vector<double> theta;
  std::vector<double> per_restart_values;
};

// Multi-start projected subgradient ascent. Restart k is seeded from
// seed ^ k; the winner is the highest value, ties to the lower index.
SearchOutcome search(const Quadrature& quad, const DictSpec& spec, std::span<const double> target,
                     const AscentBudget& budget, std::uint64_t seed, std::span<const RepNet> warm_starts,
                     Objective objective) {
  spec.validate();
  budget.validate();
  if (quad.dim() != spec.domain.n) throw std::invalid_argument("ascend: quadrature dimension differs from domain.n");
  if (target.size() != quad.size()) throw std::invalid_argument("ascend: target sample size mismatch");
  const double q = spec.domain.q;

  std::vector<RestartOutcome> outcomes(budget.restarts);
  parallel_for(budget.restarts, budget.threads, [&](std::size_t k) {
    AscentEngine engine(quad, spec, target);
    std::vector<double> theta;
    if (k < warm_starts.size()) {
      theta = parameters_of(embed_uniform(warm_starts[k], spec.cert()));
    } else {
      std::mt19937_64 rng(mix_seed(seed ^ static_cast<std::uint64_t>(k)));
      engine.random_init(rng, theta);
    }
    std::vector<double> gc, gN;
    RestartOutcome best;
    double step = budget.step0;
    for (std::size_t t = 0; t <= budget.iterations; ++t) {
      double value = 0.0;
      if (objective == Objective::Correlation) {
        const auto m = engine.evaluate(theta, gc, nullptr);
        value = std::abs(m.c);
        if (m.c < 0.0) {
          for (double& g : gc) g = -g;
        }
      } else {
        const auto m = engine.evaluate(theta, gc, &gN);
        const double lambda = (m.N < 1e-14) ? 0.0 : std::clamp(m.c / m.N, -q, q);
        value = 2.0 * lambda * m.c - lambda * lambda * m.N;
        // Envelope theorem: d/dtheta of max_lambda equals the partial at the maximizer.
        for (std::size_t p = 0; p < gc.size(); ++p) gc[p] = 2.0 * lambda * gc[p] - lambda * lambda * gN[p];
      }
      if (value > best.value) {
        best.value = value;
        best.theta = theta;
      }
      if (t == budget.iterations) break;
      for (std::size_t p = 0; p < theta.size(); ++p) theta[p] += step * gc[p];
      engine.project(theta);
      step *= budget.decay;
    }
    outcomes[k] = std::move(best);
  });

  std::size_t winner = 0;
  for (std::size_t k = 1; k < outcomes.size(); ++k) {
    if (outcomes[k].value > outcomes[winner].value) winner = k;
  }
  SearchOutcome out;
  out.theta = outcomes[winner].theta;
  for (const auto& o : outcomes) out.per_restart_values.push_back(o.value);
  return out;
}

}  // namespace

double correlation(const Quadrature& quad, const RepNet& h, std::span<const double> target_values) {
  return inner(quad, sample(quad, h), target_values);
}

double correlation(const Quadrature& quad, const RepNet& h, const FunctionOracle& target, unsigned threads) {
  return inner(quad, sample(quad, h, threads), sample(quad, target, threads));
}

AdversaryResult ascend(const Quadrature& quad, const DictSpec& spec, std::span<const double> target_values,
                       const AscentBudget& budget, std::uint64_t seed, std::span<const RepNet> warm_starts) {
  SearchOutcome found = search(quad, spec, target_values, budget, seed, warm_starts, Objective::Correlation);
  AdversaryResult result;
  result.witness = net_from_parameters(spec.domain.n, spec.domain.q, spec.cert(), found.theta);
  result.correlation = correlation(quad, result.witness, target_values);
  result.value = std::abs(result.correlation);
  result.restarts_run = budget.restarts;
  result.per_restart_values = std::move(found.per_restart_values);
  result.seed = seed;
  result.budget = budget;
  return result;
}

GainSearchResult ascend_energy_gain(const Quadrature& quad, const DictSpec& spec, std::span<const double> residual,
                                    const AscentBudget& budget, std::uint64_t seed,
                                    std::span<const RepNet> warm_starts) {
  SearchOutcome found = search(quad, spec, residual, budget, seed, warm_starts, Objective::EnergyGain);
  GainSearchResult result{net_from_parameters(spec.domain.n, spec.domain.q, spec.cert(), found.theta),
                          std::move(found.per_restart_values)};
  return result;
}

AdversaryResult ascend(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& target,
                       const AscentBudget& budget, std::uint64_t seed, std::span<const RepNet> warm_starts) {
  return ascend(quad, spec, sample(quad, target, budget.threads), budget, seed, warm_starts);
}

AdversaryResult sigma_dr(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& f,
                         const FunctionOracle& g, const AscentBudget& budget, std::uint64_t seed) {
  return ascend(quad, spec, difference(f, g), budget, seed);
}

AuditResult invisibility_audit(const Quadrature& quad, const DictSpec& spec, std::span<const double> h_values,
                               double epsilon, const AscentBudget& budget, std::uint64_t seed) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("invisibility_audit: epsilon must be >= 0");
  AuditResult audit;
  audit.epsilon = epsilon;
  audit.result = ascend(quad, spec, h_values, budget, seed);
  audit.invisible_up_to_budget = audit.result.value <= epsilon;
  return audit;
}

AuditResult invisibility_audit(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& h, double epsilon,
                               const AscentBudget& budget, std::uint64_t seed) {
  return invisibility_audit(quad, spec, sample(quad, h, budget.threads), epsilon, budget, seed);
}

nlohmann::json to_json(const AdversaryResult& r) {
  return {{"value", r.value},
          {"value_is_lower_bound", kAdversaryValuesAreLowerBounds},
          {"correlation", r.correlation},
          {"witness", to_json(r.witness)},
          {"restarts_run", r.restarts_run},
          {"per_restart_values", r.per_restart_values},
          {"seed", r.seed},
          {"budget", to_json(r.budget)}};
}

AdversaryResult adversary_result_from_json(const nlohmann::json& j) {
  AdversaryResult r;
  r.value = j.at("value").get<double>();
  r.correlation = j.at("correlation").get<double>();
  r.witness = net_from_json(j.at("witness"));
  r.restarts_run = j.at("restarts_run").get<std::size_t>();
  r.per_restart_values = j.at("per_restart_values").get<std::vector<double>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.budget = budget_from_json(j.at("budget"));
  return r;
}

nlohmann::json to_json(const AuditResult& a) {
  return {{"invisible_up_to_budget", a.invisible_up_to_budget},
          {"semantics", a.invisible_up_to_budget ? "no witness above epsilon found at this budget"
                                                 : "witness above epsilon found"},
          {"epsilon", a.epsilon},
          {"result", to_json(a.result)}};
}

AuditResult audit_from_json(const nlohmann::json& j) {
  AuditResult a;
  a.invisible_up_to_budget = j.at("invisible_up_to_budget").get<bool>();
  a.epsilon = j.at("epsilon").get<double>();
  a.result = adversary_result_from_json(j.at("result"));
  return a;
}

}  // namespace clipreg
