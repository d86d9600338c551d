#include <doctest.h>

#include <cmath>
#include <numbers>

#include "clipreg/adversary.hpp"
#include "clipreg/zoo.hpp"
#include "oracles.hpp"

using namespace clipreg;

namespace {

// Brute-force (a, c) grid maxima at resolution 0.005 on 256 Gauss-Legendre
// nodes, computed by tests/oracles/sine_grid_oracle.py.
constexpr double kSine8GridMax = 0.03978873577297343;
constexpr double kStepDiffGridMax = 0.5026515922124589;

AscentBudget small_budget(std::size_t restarts = 16, std::size_t iterations = 150) {
  AscentBudget b;
  b.restarts = restarts;
  b.iterations = iterations;
  return b;
}

FunctionOracle sine8() {
  return FunctionOracle(1, [](std::span<const double> w) { return std::sin(8.0 * std::numbers::pi * w[0]); }, "sin8");
}

}  // namespace

TEST_CASE("correlation") {
  const Quadrature q = build_quadrature({1, 1.0}, Scheme::TensorGrid, 32, 0);
  const RepNet proj = make_unit_net(1, 1.0, {1.0}, 0.0);
  CHECK(correlation(q, proj, constant_oracle(1, 0.0)) == 0.0);
  CHECK(std::abs(correlation(q, proj, oracle_of(proj)) - 1.0 / 3.0) <= 1e-12);
  const FunctionOracle odd(1, [](std::span<const double> w) { return w[0] * w[0] * w[0]; }, "w^3");
  CHECK(std::abs(correlation(q, make_constant_net(1, 1.0, 1.0), odd)) <= 1e-15);
}

TEST_CASE("ascend: zero target") {
  const Quadrature q = build_quadrature({2, 1.0}, Scheme::LowDiscrepancy, 1024, 1);
  const DictSpec spec{1, 0, {2, 1.0}};
  const auto res = ascend(q, spec, constant_oracle(2, 0.0), small_budget(4, 20), 3);
  CHECK(res.value == 0.0);
  CHECK(res.restarts_run == 4);
}

TEST_CASE("ascend: planted unit is matched or beaten") {
  const DomainSpec dom{2, 1.0};
  const Quadrature q = build_quadrature(dom, Scheme::LowDiscrepancy, 4096, 5);
  const DictSpec spec{1, 0, dom};
  for (std::uint64_t seed : {1, 2, 3}) {
    const RepNet planted = random_net(dom, {1, 0}, seed);
    const auto planted_values = sample(q, planted);
    const double self = l2_norm_sq(q, planted_values);
    const auto res = ascend(q, spec, planted_values, small_budget(64, 200), seed + 100);
    CHECK(res.value >= self - 0.01);
    CHECK(std::abs(res.value - std::abs(correlation(q, res.witness, planted_values))) <= 1e-10);
    CHECK(res.witness.satisfies(spec.cert()));
    CHECK(res.per_restart_values.size() == 64);
  }
}

TEST_CASE("ascend: sine target matches the brute-force grid maximum") {
  const Quadrature q = build_quadrature({1, 1.0}, Scheme::TensorGrid, 256, 0);
  const auto t = sample(q, sine8());
  // The in-test grid oracle reproduces the frozen value on these nodes.
  std::vector<double> x(q.nodes().begin(), q.nodes().end());
  std::vector<double> w(q.weights().begin(), q.weights().end());
  CHECK(std::abs(oracle::unit_grid_max(x, w, t, 1.0, 0.005) - kSine8GridMax) <= 1e-12);

  const auto res = ascend(q, DictSpec{1, 0, {1, 1.0}}, t, small_budget(64, 400), 9);
  CHECK(std::abs(res.value - kSine8GridMax) <= 0.01);
}

TEST_CASE("sigma_dr") {
  const DomainSpec dom{1, 1.0};
  const Quadrature q = build_quadrature(dom, Scheme::TensorGrid, 256, 0);
  const DictSpec spec{1, 0, dom};
  const auto f = zoo("step", {{"theta", 0.0}}, dom).oracle;
  const auto g = zoo("step", {{"theta", 0.5}}, dom).oracle;

  CHECK(sigma_dr(q, spec, f, f, small_budget(), 1).value == 0.0);

  // Lemma 2 probe: distinct piecewise-constant functions are told apart.
  std::vector<double> x(q.nodes().begin(), q.nodes().end());
  std::vector<double> w(q.weights().begin(), q.weights().end());
  const auto diff = sample(q, difference(f, g));
  CHECK(std::abs(oracle::unit_grid_max(x, w, diff, 1.0, 0.005) - kStepDiffGridMax) <= 1e-12);
  const auto fg = sigma_dr(q, spec, f, g, small_budget(32, 300), 2);
  CHECK(fg.value > 0.0);
  CHECK(fg.value >= kStepDiffGridMax - 0.01);
  CHECK(fg.value <= 2.0 * sigma_l1(q, f, g) + 1e-9);

  // Sign-symmetric search: swapping arguments changes nothing.
  const auto gf = sigma_dr(q, spec, g, f, small_budget(32, 300), 2);
  CHECK(gf.value == fg.value);
}

TEST_CASE("ascend is deterministic and thread-count invariant") {
  const DomainSpec dom{3, 1.0};
  const Quadrature q = build_quadrature(dom, Scheme::LowDiscrepancy, 2048, 4);
  const auto t = sample(q, zoo("ball", {{"rho", 1.0}}, dom).oracle);
  const DictSpec spec{2, 1, dom};
  AscentBudget one = small_budget(8, 60);
  AscentBudget many = one;
  many.threads = 4;
  const auto a = ascend(q, spec, t, one, 77);
  const auto b = ascend(q, spec, t, many, 77);
  const auto c = ascend(q, spec, t, one, 77);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(to_json(a).dump() == to_json(c).dump());
  CHECK(to_json(ascend(q, spec, t, one, 78)).dump() != to_json(a).dump());
}

TEST_CASE("multi-layer ascent finds correlating deep witnesses") {
  const DomainSpec dom{2, 1.0};
  const Quadrature q = build_quadrature(dom, Scheme::LowDiscrepancy, 2048, 6);
  const RepNet planted = random_net(dom, {2, 1}, 12);
  const auto t = sample(q, planted);
  const double self = l2_norm_sq(q, t);
  for (std::size_t r : {1, 2}) {
    const auto res = ascend(q, DictSpec{2, r, dom}, t, small_budget(32, 200), 5);
    CHECK(res.witness.depth() == r);
    CHECK(res.value >= 0.9 * self);
    CHECK(std::abs(res.value - std::abs(correlation(q, res.witness, t))) <= 1e-10);
  }
}

TEST_CASE("warm starts make larger dictionaries at least as good") {
  const DomainSpec dom{2, 1.0};
  const Quadrature q = build_quadrature(dom, Scheme::LowDiscrepancy, 2048, 8);
  const auto t = sample(q, zoo("sign-product", nlohmann::json::object(), dom).oracle);
  const AscentBudget b = small_budget(8, 100);
  const auto base = ascend(q, DictSpec{1, 1, dom}, t, b, 21);
  const std::vector<RepNet> warm{base.witness};
  const auto wider = ascend(q, DictSpec{2, 1, dom}, t, b, 21, warm);
  const auto deeper = ascend(q, DictSpec{1, 2, dom}, t, b, 21, warm);
  CHECK(wider.value >= base.value - 1e-12);
  CHECK(deeper.value >= base.value - 1e-12);
}

TEST_CASE("soft triangle inequality on sampled functions") {
  const DomainSpec dom{2, 1.0};
  const Quadrature q = build_quadrature(dom, Scheme::LowDiscrepancy, 2048, 9);
  const DictSpec spec{1, 0, dom};
  const auto f = zoo("random-grid", {{"k", 1}, {"seed", 1}}, dom).oracle;
  const auto g = zoo("ball", {{"rho", 0.8}}, dom).oracle;
  const auto h = zoo("step", {{"theta", 0.2}}, dom).oracle;
  const AscentBudget b = small_budget(16, 150);
  const double fh = sigma_dr(q, spec, f, h, b, 1).value;
  const double fg = sigma_dr(q, spec, f, g, b, 1).value;
  const double gh = sigma_dr(q, spec, g, h, b, 1).value;
  CHECK(fh <= fg + gh + 0.02);
}

TEST_CASE("invisibility audit") {
  const DomainSpec dom{1, 1.0};
  const Quadrature q = build_quadrature(dom, Scheme::TensorGrid, 64, 0);
  const DictSpec spec{1, 0, dom};
  const auto zero = invisibility_audit(q, spec, constant_oracle(1, 0.0), 0.0, small_budget(4, 20), 1);
  CHECK(zero.invisible_up_to_budget);

  const RepNet proj = make_unit_net(1, 1.0, {1.0}, 0.0);
  CHECK(std::abs(l2_norm_sq(q, oracle_of(proj)) - 1.0 / 3.0) <= 1e-12);
  const auto planted = invisibility_audit(q, spec, oracle_of(proj), 0.1, small_budget(16, 100), 2);
  CHECK_FALSE(planted.invisible_up_to_budget);
  CHECK(planted.result.value >= 1.0 / 3.0 - 1e-9);

  const auto round = audit_from_json(nlohmann::json::parse(to_json(planted).dump()));
  CHECK(round.result.witness == planted.result.witness);
  CHECK(round.result.value == planted.result.value);
  CHECK(to_json(round).dump() == to_json(planted).dump());
}

TEST_CASE("energy-gain search recovers a planted unit") {
  const DomainSpec dom{2, 1.0};
  const Quadrature q = build_quadrature(dom, Scheme::LowDiscrepancy, 4096, 10);
  const RepNet planted = random_net(dom, {1, 0}, 4);
  const auto t = sample(q, planted);
  const auto res = ascend_energy_gain(q, DictSpec{1, 0, dom}, t, small_budget(32, 300), 3);
  const auto h = sample(q, res.element);
  const double c = inner(q, h, t);
  const double nn = l2_norm_sq(q, h);
  CHECK(c * c / nn >= 0.999 * l2_norm_sq(q, t));
}

TEST_CASE("budget validation") {
  const Quadrature q = build_quadrature({1, 1.0}, Scheme::TensorGrid, 8, 0);
  const DictSpec spec{1, 0, {1, 1.0}};
  AscentBudget b;
  b.restarts = 0;
  CHECK_THROWS_AS(ascend(q, spec, constant_oracle(1, 0.5), b, 0), std::invalid_argument);
  b.restarts = 1;
  b.decay = 1.5;
  CHECK_THROWS_AS(ascend(q, spec, constant_oracle(1, 0.5), b, 0), std::invalid_argument);
  CHECK_THROWS_AS(ascend(q, DictSpec{1, 0, {2, 1.0}}, constant_oracle(2, 0.5), AscentBudget{}, 0),
                  std::invalid_argument);
}
