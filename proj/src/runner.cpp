#include "clipreg/runner.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace clipreg {

namespace {

using json = nlohmann::json;

void only_fields(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw std::invalid_argument("config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) {
      throw std::invalid_argument("config: unknown field '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <class T>
T field(const json& j, const std::string& where, const char* key) {
  const std::string path = where.empty() ? key : where + "." + key;
  if (!j.contains(key)) throw std::invalid_argument("config: missing field '" + path + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: field '" + path + "' has the wrong type");
  }
}

}  // namespace

DecomposeOptions RunConfig::decompose_options(unsigned threads) const {
  DecomposeOptions o;
  o.epsilon = epsilon;
  o.budget = solver.budget;
  o.budget.threads = threads;
  o.seed = solver.seed;
  o.stage_dict = stage_dict;
  o.audit_budget = solver.budget;
  o.audit_budget.restarts = audit.restarts;
  o.audit_budget.threads = threads;
  o.audit_seed = audit.seed;
  o.audit_slack = audit.slack;
  return o;
}

void RunConfig::validate() const {
  if (domain.n < 1) throw std::invalid_argument("config: domain.n must be >= 1");
  // q >= 1 is what lets t = +-eps/||h|| stay inside [-q,q] in the stopping argument.
  if (!(domain.q >= 1.0) || !std::isfinite(domain.q)) throw std::invalid_argument("config: domain.q must be >= 1");
  if (d < 1) throw std::invalid_argument("config: dict.d must be >= 1");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("config: epsilon must lie in (0, 1]");
  if (quadrature.size < 1) throw std::invalid_argument("config: quadrature.size must be >= 1");
  if (quadrature.scheme == Scheme::TensorGrid && domain.n > 4) {
    throw std::invalid_argument("config: quadrature.scheme tensor-grid requires domain.n <= 4");
  }
  if (solver.budget.restarts < 1) throw std::invalid_argument("config: solver.restarts must be >= 1");
  if (solver.budget.iterations < 1) throw std::invalid_argument("config: solver.iterations must be >= 1");
  if (!(solver.budget.step0 >= 0.0)) throw std::invalid_argument("config: solver.step0 must be >= 0");
  if (!(solver.budget.decay > 0.0 && solver.budget.decay <= 1.0)) {
    throw std::invalid_argument("config: solver.decay must lie in (0, 1]");
  }
  if (audit.restarts < 1) throw std::invalid_argument("config: audit.restarts must be >= 1");
  if (!(audit.slack >= 0.0)) throw std::invalid_argument("config: audit.slack must be >= 0");
  if (output.report.empty()) throw std::invalid_argument("config: output.report must not be empty");
  // Builds the target once to surface unknown names and bad parameters.
  try {
    (void)zoo(target_name, target_params, domain);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: target: ") + e.what());
  }
}

RunConfig config_from_json(const json& j) {
  only_fields(j, "", {"domain", "dict", "epsilon", "quadrature", "solver", "audit", "target", "stage_dict", "output"});
  RunConfig c;
  if (!j.contains("domain")) throw std::invalid_argument("config: missing field 'domain'");
  const json& dom = j.at("domain");
  only_fields(dom, "domain", {"n", "q"});
  c.domain.n = field<std::size_t>(dom, "domain", "n");
  c.domain.q = field<double>(dom, "domain", "q");

  if (!j.contains("dict")) throw std::invalid_argument("config: missing field 'dict'");
  const json& dict = j.at("dict");
  only_fields(dict, "dict", {"d", "r"});
  c.d = field<std::size_t>(dict, "dict", "d");
  c.r = field<std::size_t>(dict, "dict", "r");

  c.epsilon = field<double>(j, "", "epsilon");

  if (!j.contains("quadrature")) throw std::invalid_argument("config: missing field 'quadrature'");
  const json& quad = j.at("quadrature");
  only_fields(quad, "quadrature", {"scheme", "size", "seed"});
  try {
    c.quadrature.scheme = scheme_from_string(field<std::string>(quad, "quadrature", "scheme"));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: quadrature.scheme: ") + e.what());
  }
  c.quadrature.size = field<std::size_t>(quad, "quadrature", "size");
  c.quadrature.seed = field<std::uint64_t>(quad, "quadrature", "seed");

  if (!j.contains("solver")) throw std::invalid_argument("config: missing field 'solver'");
  const json& solver = j.at("solver");
  only_fields(solver, "solver", {"restarts", "iterations", "step0", "decay", "seed"});
  c.solver.budget.restarts = field<std::size_t>(solver, "solver", "restarts");
  c.solver.budget.iterations = field<std::size_t>(solver, "solver", "iterations");
  c.solver.budget.step0 = field<double>(solver, "solver", "step0");
  c.solver.budget.decay = field<double>(solver, "solver", "decay");
  c.solver.seed = field<std::uint64_t>(solver, "solver", "seed");

  if (j.contains("audit")) {
    const json& audit = j.at("audit");
    only_fields(audit, "audit", {"restarts", "seed", "slack"});
    c.audit.restarts = field<std::size_t>(audit, "audit", "restarts");
    c.audit.seed = field<std::uint64_t>(audit, "audit", "seed");
    c.audit.slack = field<double>(audit, "audit", "slack");
  } else {
    c.audit.restarts = c.solver.budget.restarts;
    c.audit.seed = mix_seed(c.solver.seed);
  }

  if (!j.contains("target")) throw std::invalid_argument("config: missing field 'target'");
  const json& target = j.at("target");
  only_fields(target, "target", {"name", "params"});
  c.target_name = field<std::string>(target, "target", "name");
  c.target_params = target.contains("params") ? target.at("params") : json::object();

  if (j.contains("stage_dict")) c.stage_dict = stage_dict_from_string(field<std::string>(j, "", "stage_dict"));

  if (j.contains("output")) {
    const json& out = j.at("output");
    only_fields(out, "output", {"report", "trace", "witness"});
    if (out.contains("report")) c.output.report = field<std::string>(out, "output", "report");
    if (out.contains("trace")) c.output.trace = field<std::string>(out, "output", "trace");
    if (out.contains("witness")) c.output.witness = field<std::string>(out, "output", "witness");
  }
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  return {{"domain", {{"n", c.domain.n}, {"q", c.domain.q}}},
          {"dict", {{"d", c.d}, {"r", c.r}}},
          {"epsilon", c.epsilon},
          {"quadrature", {{"scheme", to_string(c.quadrature.scheme)}, {"size", c.quadrature.size}, {"seed", c.quadrature.seed}}},
          {"solver",
           {{"restarts", c.solver.budget.restarts},
            {"iterations", c.solver.budget.iterations},
            {"step0", c.solver.budget.step0},
            {"decay", c.solver.budget.decay},
            {"seed", c.solver.seed}}},
          {"audit", {{"restarts", c.audit.restarts}, {"seed", c.audit.seed}, {"slack", c.audit.slack}}},
          {"target", {{"name", c.target_name}, {"params", c.target_params}}},
          {"stage_dict", to_string(c.stage_dict)},
          {"output", {{"report", c.output.report}, {"trace", c.output.trace}, {"witness", c.output.witness}}}};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

Quadrature quadrature_for(const RunConfig& c) {
  return build_quadrature(c.domain, c.quadrature.scheme, c.quadrature.size, c.quadrature.seed);
}

ZooTarget target_for(const RunConfig& c) { return zoo(c.target_name, c.target_params, c.domain); }

DecompositionReport run_decompose(const RunConfig& c, unsigned threads) {
  c.validate();
  const Quadrature quad = quadrature_for(c);
  const ZooTarget target = target_for(c);
  DecompositionReport report = decompose(quad, c.dict(), target.oracle, c.decompose_options(threads));
  report.config = to_json(c);
  return report;
}

AdversaryResult run_adversary(const RunConfig& c, unsigned threads) {
  c.validate();
  const Quadrature quad = quadrature_for(c);
  const ZooTarget target = target_for(c);
  AscentBudget budget = c.solver.budget;
  budget.threads = threads;
  return ascend(quad, c.dict(), target.oracle, budget, c.solver.seed);
}

CertifyResult verify_report(const DecompositionReport& report) {
  const RunConfig c = config_from_json(report.config);
  const Quadrature quad = quadrature_for(c);
  const ZooTarget target = target_for(c);
  return certify_split(report, quad, target.oracle);
}

std::vector<SweepRow> run_sweep(const RunConfig& c, const std::vector<std::size_t>& dims, unsigned threads) {
  std::vector<SweepRow> rows;
  for (std::size_t n : dims) {
    RunConfig cn = c;
    cn.domain.n = n;
    const DecompositionReport r = run_decompose(cn, threads);
    rows.push_back({n, r.m_prime, r.residual_l2_sq, r.audit.result.value});
  }
  return rows;
}

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "n,m_prime,residual_l2_sq,audit_value\n";
  for (const SweepRow& row : rows) {
    out += std::to_string(row.n) + "," + std::to_string(row.m_prime) + "," + format_double(row.residual_l2_sq) + "," +
           format_double(row.audit_value) + "\n";
  }
  return out;
}

}  // namespace clipreg
