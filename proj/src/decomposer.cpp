#include "clipreg/decomposer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace clipreg {

std::size_t stage_budget(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1]");
  const double x = 1.0 / (epsilon * epsilon);
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * x) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(x));
}

std::string to_string(StageDict s) { return s == StageDict::Fixed ? "fixed" : "growing"; }

StageDict stage_dict_from_string(const std::string& s) {
  if (s == "fixed") return StageDict::Fixed;
  if (s == "growing") return StageDict::Growing;
  throw std::invalid_argument("stage_dict must be 'fixed' or 'growing', got '" + s + "'");
}

DictSpec stage_spec(const DictSpec& base, StageDict mode, std::size_t k) {
  if (mode == StageDict::Fixed || k <= 1) return base;
  DictSpec s = base;
  s.d = base.d << (k - 1);
  s.r = base.r + k - 1;
  return s;
}

double optimal_lambda(double inner_h_res, double norm_sq_h, double q) {
  if (norm_sq_h < 1e-14) return 0.0;
  return std::clamp(inner_h_res / norm_sq_h, -q, q);
}

double quadratic_gain(double lambda, double inner_h_res, double norm_sq_h) {
  return 2.0 * lambda * inner_h_res - lambda * lambda * norm_sq_h;
}

StageResult stage_solve(const Quadrature& quad, const DictSpec& spec, std::span<const double> residual,
                        const AscentBudget& budget, std::uint64_t seed) {
  const GainSearchResult found = ascend_energy_gain(quad, spec, residual, budget, seed);
  const std::vector<double> h = sample(quad, found.element, budget.threads);
  StageResult out;
  out.element = found.element;
  out.inner_with_residual = inner(quad, h, residual);
  out.element_norm_sq = l2_norm_sq(quad, h);
  out.lambda = optimal_lambda(out.inner_with_residual, out.element_norm_sq, spec.domain.q);
  out.gain = std::max(0.0, quadratic_gain(out.lambda, out.inner_with_residual, out.element_norm_sq));
  return out;
}

StageResult stage_solve(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& residual,
                        const AscentBudget& budget, std::uint64_t seed) {
  return stage_solve(quad, spec, sample(quad, residual, budget.threads), budget, seed);
}

namespace {

std::uint64_t stage_seed(std::uint64_t seed, std::size_t k) { return mix_seed(seed + 0x51ed27ULL * k); }

RepCert paper_certificate(const DictSpec& spec, std::size_t m_prime) {
  return RepCert{spec.d << m_prime, spec.r + m_prime};
}

RepNet assemble(const DictSpec& spec, const std::vector<StagePick>& picks) {
  if (picks.empty()) return make_constant_net(spec.domain.n, spec.domain.q, 0.0);
  std::vector<RepNet> nets;
  std::vector<double> lambdas;
  for (const StagePick& p : picks) {
    nets.push_back(p.element);
    lambdas.push_back(p.lambda);
  }
  return compose_parallel(nets, lambdas);
}

}  // namespace

DecompositionReport decompose(const Quadrature& quad, const DictSpec& spec, const FunctionOracle& f,
                              const DecomposeOptions& options) {
  spec.validate();
  options.budget.validate();
  if (quad.dim() != spec.domain.n) throw std::invalid_argument("decompose: quadrature dimension differs from domain.n");
  if (f.dim() != spec.domain.n) throw std::invalid_argument("decompose: target dimension differs from domain.n");
  const double eps = options.epsilon;
  const std::size_t m_budget = stage_budget(eps);
  const double threshold = eps * eps;
  const unsigned threads = options.budget.threads;

  DecompositionReport report;
  report.spec = spec;
  report.options = options;
  report.m_budget = m_budget;

  const std::vector<double> f_values = sample(quad, f, threads);
  std::vector<double> residual = f_values;
  report.trace.t0 = l2_norm_sq(quad, residual);

  double t = report.trace.t0;
  bool rejected = false;
  for (std::size_t k = 1; k <= m_budget; ++k) {
    const DictSpec sk = stage_spec(spec, options.stage_dict, k);
    const StageResult stage = stage_solve(quad, sk, residual, options.budget, stage_seed(options.seed, k));
    if (!(stage.gain > threshold)) {
      rejected = true;
      break;
    }
    const std::vector<double> h = sample(quad, stage.element, threads);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= stage.lambda * h[i];
    StagePick pick;
    pick.k = k;
    pick.element = stage.element;
    pick.lambda = stage.lambda;
    pick.gain = stage.gain;
    pick.t_after = t - stage.gain;
    t = pick.t_after;
    report.trace.picks.push_back(std::move(pick));
  }
  report.m_prime = report.trace.picks.size();
  report.budget_exhausted = !rejected;
  report.unclipped_residual_l2_sq = l2_norm_sq(quad, residual);

  report.g = assemble(spec, report.trace.picks);
  report.g_cert = report.g.cert();
  report.paper_cert = paper_certificate(spec, report.m_prime);

  const std::vector<double> g_values = sample(quad, report.g, threads);
  std::vector<double> h_values(f_values.size());
  for (std::size_t i = 0; i < h_values.size(); ++i) h_values[i] = f_values[i] - g_values[i];
  report.residual_l2_sq = l2_norm_sq(quad, h_values);
  report.residual_l1 = sigma_l1(quad, f_values, g_values);

  AscentBudget audit_budget = options.audit_budget.restarts == 0 ? options.budget : options.audit_budget;
  audit_budget.threads = threads;
  report.audit = invisibility_audit(quad, spec, h_values, eps, audit_budget, options.audit_seed);
  return report;
}

CertifyResult certify_split(const DecompositionReport& report, const Quadrature& quad, const FunctionOracle& f) {
  CertifyResult out;
  auto fail = [&](std::string msg) {
    out.ok = false;
    out.details.push_back(std::move(msg));
  };
  auto num = [](double x) {
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
  };

  const DictSpec& spec = report.spec;
  const double eps = report.options.epsilon;
  if (quad.dim() != spec.domain.n || f.dim() != spec.domain.n || report.g.input_dim() != spec.domain.n) {
    fail("dimension mismatch between report, quadrature and target");
    return out;
  }

  std::size_t expected_budget = 0;
  try {
    expected_budget = stage_budget(eps);
  } catch (const std::exception& e) {
    fail(std::string("invalid epsilon: ") + e.what());
    return out;
  }
  if (report.m_budget != expected_budget) {
    fail("m_budget " + std::to_string(report.m_budget) + " != ceil(1/eps^2) = " + std::to_string(expected_budget));
  }
  if (report.m_prime > expected_budget) {
    fail("m_prime " + std::to_string(report.m_prime) + " exceeds the stage budget " + std::to_string(expected_budget));
  }
  if (report.trace.picks.size() != report.m_prime) {
    fail("trace has " + std::to_string(report.trace.picks.size()) + " picks but m_prime is " +
         std::to_string(report.m_prime));
  }

  // Energy trace.
  const std::vector<double> f_values = sample(quad, f);
  const double t0 = l2_norm_sq(quad, f_values);
  if (std::abs(t0 - report.trace.t0) > 1e-10) fail("t0 " + num(report.trace.t0) + " != ||f||^2 " + num(t0));
  if (report.trace.t0 > 1.0 + 1e-9) fail("t0 exceeds 1");
  double t_before = report.trace.t0;
  std::vector<double> residual = f_values;
  for (std::size_t i = 0; i < report.trace.picks.size(); ++i) {
    const StagePick& p = report.trace.picks[i];
    const std::string tag = "stage " + std::to_string(p.k) + ": ";
    if (p.k != i + 1) fail(tag + "stage index out of sequence");
    if (!(p.gain > eps * eps)) fail(tag + "accepted gain " + num(p.gain) + " not above eps^2");
    if (!(p.t_after < t_before)) fail(tag + "energy did not strictly decrease");
    if (p.t_after < 0.0) fail(tag + "negative energy");
    if (std::abs((t_before - p.t_after) - p.gain) > 1e-12) fail(tag + "gain != t_before - t_after");
    if (std::abs(p.lambda) > spec.domain.q) fail(tag + "lambda outside [-q,q]");
    if (!p.element.satisfies(stage_spec(spec, report.options.stage_dict, p.k).cert())) {
      fail(tag + "element is not in the stage dictionary");
    }
    const std::vector<double> h = sample(quad, p.element);
    for (std::size_t j = 0; j < residual.size(); ++j) residual[j] -= p.lambda * h[j];
    t_before = p.t_after;
  }
  const double unclipped = l2_norm_sq(quad, residual);
  if (std::abs(unclipped - t_before) > 1e-9) {
    fail("final trace energy " + num(t_before) + " != recomputed ||f - g'||^2 " + num(unclipped));
  }

  // Assembled network and certificates.
  if (report.m_prime == report.trace.picks.size()) {
    const std::vector<double> g_values = sample(quad, report.g);
    const RepNet rebuilt = assemble(spec, report.trace.picks);
    const std::vector<double> rebuilt_values = sample(quad, rebuilt);
    double worst = 0.0;
    for (std::size_t i = 0; i < g_values.size(); ++i) worst = std::max(worst, std::abs(g_values[i] - rebuilt_values[i]));
    if (worst > 1e-12) fail("g differs from beta(sum lambda_k f_k) by " + num(worst));
    if (!(rebuilt.cert() == report.g_cert)) fail("g certificate does not match the composition bookkeeping");
  }
  if (!(report.g.cert() == report.g_cert)) fail("certificate carried by g differs from the reported one");
  if (!report.g.satisfies(report.g_cert)) fail("g structure exceeds its certificate");
  if (!(report.paper_cert == RepCert{spec.d << report.m_prime, spec.r + report.m_prime})) {
    fail("paper certificate is not (2^m' d | r + m')");
  }
  if (!report.g_cert.within(report.paper_cert)) fail("constructive certificate is not dominated by (2^m' d | r + m')");

  // Split f = g + (f - g) and residual norms.
  const std::vector<double> g_values = sample(quad, report.g);
  std::vector<double> h_values(f_values.size());
  double split_gap = 0.0;
  for (std::size_t i = 0; i < f_values.size(); ++i) {
    h_values[i] = f_values[i] - g_values[i];
    split_gap = std::max(split_gap, std::abs(f_values[i] - (g_values[i] + h_values[i])));
  }
  if (split_gap > 1e-15) fail("f != g + (f - g) at some node (gap " + num(split_gap) + ")");
  const double l2 = l2_norm_sq(quad, h_values);
  if (std::abs(l2 - report.residual_l2_sq) > 1e-10) {
    fail("residual_l2_sq " + num(report.residual_l2_sq) + " != recomputed " + num(l2));
  }
  const double l1 = sigma_l1(quad, f_values, g_values);
  if (std::abs(l1 - report.residual_l1) > 1e-10) fail("residual_l1 " + num(report.residual_l1) + " != recomputed " + num(l1));
  if (l2 > unclipped + 1e-12) fail("clipping increased the residual");

  // Audit.
  const AdversaryResult& a = report.audit.result;
  const double redo = std::abs(correlation(quad, a.witness, h_values));
  if (std::abs(redo - a.value) > 1e-10) {
    fail("audit value " + num(a.value) + " not reproducible from its witness (got " + num(redo) + ")");
  }
  if (!a.witness.satisfies(spec.cert())) fail("audit witness is not a (d|r) network");
  if (a.value > eps + report.options.audit_slack) {
    fail("audit witness " + to_json(a.witness).dump() + " correlates " + num(a.value) + " with f - g, above eps + slack = " +
         num(eps + report.options.audit_slack));
  }
  return out;
}

nlohmann::json to_json(const DecompositionReport& r) {
  nlohmann::json picks = nlohmann::json::array();
  for (const StagePick& p : r.trace.picks) {
    picks.push_back({{"k", p.k}, {"element", to_json(p.element)}, {"lambda", p.lambda}, {"gain", p.gain},
                     {"t_after", p.t_after}});
  }
  const DecomposeOptions& o = r.options;
  return {{"schema", kReportSchema},
          {"dict", {{"d", r.spec.d}, {"r", r.spec.r}, {"n", r.spec.domain.n}, {"q", r.spec.domain.q}}},
          {"options",
           {{"epsilon", o.epsilon},
            {"budget", to_json(o.budget)},
            {"seed", o.seed},
            {"stage_dict", to_string(o.stage_dict)},
            {"audit_budget", to_json(o.audit_budget.restarts == 0 ? o.budget : o.audit_budget)},
            {"audit_seed", o.audit_seed},
            {"audit_slack", o.audit_slack}}},
          {"m_prime", r.m_prime},
          {"m_budget", r.m_budget},
          {"budget_exhausted", r.budget_exhausted},
          {"g", to_json(r.g)},
          {"g_cert", to_json(r.g_cert)},
          {"paper_cert", to_json(r.paper_cert)},
          {"trace", {{"t0", r.trace.t0}, {"picks", std::move(picks)}}},
          {"residual_l2_sq", r.residual_l2_sq},
          {"residual_l1", r.residual_l1},
          {"unclipped_residual_l2_sq", r.unclipped_residual_l2_sq},
          {"audit", to_json(r.audit)},
          {"config", r.config}};
}

DecompositionReport report_from_json(const nlohmann::json& j) {
  if (j.at("schema").get<std::string>() != kReportSchema) {
    throw std::invalid_argument("unsupported report schema '" + j.at("schema").get<std::string>() + "'");
  }
  DecompositionReport r;
  const auto& d = j.at("dict");
  r.spec.d = d.at("d").get<std::size_t>();
  r.spec.r = d.at("r").get<std::size_t>();
  r.spec.domain.n = d.at("n").get<std::size_t>();
  r.spec.domain.q = d.at("q").get<double>();
  const auto& o = j.at("options");
  r.options.epsilon = o.at("epsilon").get<double>();
  r.options.budget = budget_from_json(o.at("budget"));
  r.options.seed = o.at("seed").get<std::uint64_t>();
  r.options.stage_dict = stage_dict_from_string(o.at("stage_dict").get<std::string>());
  r.options.audit_budget = budget_from_json(o.at("audit_budget"));
  r.options.audit_seed = o.at("audit_seed").get<std::uint64_t>();
  r.options.audit_slack = o.at("audit_slack").get<double>();
  r.m_prime = j.at("m_prime").get<std::size_t>();
  r.m_budget = j.at("m_budget").get<std::size_t>();
  r.budget_exhausted = j.at("budget_exhausted").get<bool>();
  r.g = net_from_json(j.at("g"));
  r.g_cert = cert_from_json(j.at("g_cert"));
  r.paper_cert = cert_from_json(j.at("paper_cert"));
  r.trace.t0 = j.at("trace").at("t0").get<double>();
  for (const auto& jp : j.at("trace").at("picks")) {
    StagePick p;
    p.k = jp.at("k").get<std::size_t>();
    p.element = net_from_json(jp.at("element"));
    p.lambda = jp.at("lambda").get<double>();
    p.gain = jp.at("gain").get<double>();
    p.t_after = jp.at("t_after").get<double>();
    r.trace.picks.push_back(std::move(p));
  }
  r.residual_l2_sq = j.at("residual_l2_sq").get<double>();
  r.residual_l1 = j.at("residual_l1").get<double>();
  r.unclipped_residual_l2_sq = j.at("unclipped_residual_l2_sq").get<double>();
  r.audit = audit_from_json(j.at("audit"));
  r.config = j.at("config");
  return r;
}

std::string trace_csv(const EnergyTrace& trace) {
  auto fmt = [](double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  };
  std::string out = "k,t_after,lambda,gain\n";
  out += "0," + fmt(trace.t0) + ",0,0\n";
  for (const StagePick& p : trace.picks) {
    out += std::to_string(p.k) + "," + fmt(p.t_after) + "," + fmt(p.lambda) + "," + fmt(p.gain) + "\n";
  }
  return out;
}

}  // namespace clipreg
