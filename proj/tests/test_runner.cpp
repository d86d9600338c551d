#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "clipreg/runner.hpp"
#include "clipreg/zoo.hpp"

using namespace clipreg;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "domain": {"n": 2, "q": 1.0},
    "dict": {"d": 1, "r": 0},
    "epsilon": 0.5,
    "quadrature": {"scheme": "low-discrepancy", "size": 1024, "seed": 7},
    "solver": {"restarts": 4, "iterations": 40, "step0": 0.5, "decay": 0.97, "seed": 1},
    "audit": {"restarts": 4, "seed": 2, "slack": 0.05},
    "target": {"name": "ball", "params": {"rho": 0.8}}
  })");
}

std::string error_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CLIPREG_CLI_PATH) + " " + args + " > cli_out.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const RunConfig c = config_from_json(base_config());
  CHECK(c.domain.n == 2);
  CHECK(c.epsilon == 0.5);
  CHECK(c.quadrature.scheme == Scheme::LowDiscrepancy);
  CHECK(c.target_name == "ball");
  CHECK(to_json(config_from_json(to_json(c))) == to_json(c));

  json j = base_config();
  j["solver"]["restart"] = 3;
  CHECK(error_of(j).find("solver.restart") != std::string::npos);

  j = base_config();
  j["epsilom"] = 0.2;
  CHECK(error_of(j).find("epsilom") != std::string::npos);

  j = base_config();
  j["quadrature"].erase("seed");
  CHECK(error_of(j).find("quadrature.seed") != std::string::npos);

  j = base_config();
  j["solver"].erase("seed");
  CHECK(error_of(j).find("solver.seed") != std::string::npos);

  j = base_config();
  j["domain"]["q"] = 0.5;
  CHECK(error_of(j).find("domain.q") != std::string::npos);

  j = base_config();
  j["epsilon"] = 1.5;
  CHECK(error_of(j).find("epsilon") != std::string::npos);

  j = base_config();
  j["target"]["params"]["radius"] = 1.0;
  CHECK(error_of(j).find("radius") != std::string::npos);

  j = base_config();
  j["domain"]["n"] = "two";
  CHECK(error_of(j).find("domain.n") != std::string::npos);

  j = base_config();
  j["domain"]["n"] = 6;
  j["quadrature"]["scheme"] = "tensor-grid";
  CHECK(error_of(j).find("tensor-grid") != std::string::npos);
}

TEST_CASE("zoo targets") {
  const DomainSpec dom{2, 1.0};
  CHECK(zoo_entries().size() == 7);
  const auto step = zoo("step", {{"theta", 0.0}}, dom).oracle;
  CHECK(step(std::vector<double>{0.3, -0.9}) == 1.0);
  CHECK(step(std::vector<double>{-0.3, 0.9}) == -1.0);
  CHECK(step(std::vector<double>{0.0, 0.0}) == 1.0);

  const auto sp = zoo("sign-product", json::object(), dom).oracle;
  CHECK(sp(std::vector<double>{-0.5, -0.5}) == 1.0);
  CHECK(sp(std::vector<double>{-0.5, 0.5}) == -1.0);

  const auto ball = zoo("ball", {{"rho", 1.0}}, dom).oracle;
  CHECK(ball(std::vector<double>{0.6, 0.6}) == 1.0);
  CHECK(ball(std::vector<double>{0.9, 0.9}) == -1.0);

  const auto grid = zoo("random-grid", {{"k", 2}, {"seed", 4}}, dom).oracle;
  // Constant on cells of side 1/2.
  CHECK(grid(std::vector<double>{0.05, 0.6}) == grid(std::vector<double>{0.45, 0.9}));
  const auto planted = zoo("planted-net", {{"d", 2}, {"r", 1}, {"seed", 3}}, dom);
  CHECK(planted.oracle(std::vector<double>{0.1, 0.2}) == eval_net(random_net(dom, {2, 1}, 3), std::vector<double>{0.1, 0.2}));

  CHECK_THROWS_AS(zoo("mystery", json::object(), dom), std::invalid_argument);
  CHECK_THROWS_AS(zoo("ball", {{"rho", -1.0}}, dom), std::invalid_argument);
  CHECK_THROWS_AS(zoo("random-grid", {{"k", 2}}, dom), std::invalid_argument);
  CHECK_THROWS_AS(zoo("random-grid", {{"k", 0}, {"seed", 1}}, dom), std::invalid_argument);
}

TEST_CASE("run_decompose echoes the config and verifies") {
  const RunConfig c = config_from_json(base_config());
  const auto rep = run_decompose(c);
  CHECK(rep.config == to_json(c));
  const auto res = verify_report(report_from_json(json::parse(to_json(rep).dump())));
  for (const auto& d : res.details) MESSAGE(d);
  CHECK(res.ok);
  CHECK(to_json(run_decompose(c, 4)).dump() == to_json(rep).dump());
}

TEST_CASE("sweep CSV") {
  RunConfig c = config_from_json(base_config());
  const auto rows = run_sweep(c, {2, 3});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n == 2);
  CHECK(rows[1].n == 3);
  const std::string csv = sweep_csv(rows);
  CHECK(csv.rfind("n,m_prime,residual_l2_sq,audit_value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("format_double round trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("command line end to end") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "clipreg_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  json cfg = base_config();
  cfg["output"] = {{"report", (dir / "a.json").string()},
                   {"trace", (dir / "a.csv").string()},
                   {"witness", (dir / "a_w.json").string()}};
  write_text((dir / "a.cfg").string(), cfg.dump());
  CHECK(run_cli("--threads 1 decompose --config " + (dir / "a.cfg").string() + " --verify") == 0);
  const std::string report1 = read_text((dir / "a.json").string());
  const std::string trace1 = read_text((dir / "a.csv").string());
  const std::string witness1 = read_text((dir / "a_w.json").string());
  CHECK(run_cli("--threads 8 decompose --config " + (dir / "a.cfg").string()) == 0);
  CHECK(read_text((dir / "a.json").string()) == report1);
  CHECK(read_text((dir / "a.csv").string()) == trace1);
  CHECK(read_text((dir / "a_w.json").string()) == witness1);
  CHECK(trace1.rfind("k,t_after,lambda,gain\n", 0) == 0);

  CHECK(run_cli("verify --report " + (dir / "a.json").string()) == 0);
  json tampered = json::parse(read_text((dir / "a.json").string()));
  tampered["residual_l2_sq"] = tampered["residual_l2_sq"].get<double>() + 0.5;
  write_text((dir / "t.json").string(), tampered.dump());
  CHECK(run_cli("verify --report " + (dir / "t.json").string()) == 1);

  CHECK(run_cli("adversary --config " + (dir / "a.cfg").string() + " --out " + (dir / "adv.json").string()) == 0);
  CHECK(json::parse(read_text((dir / "adv.json").string())).contains("witness"));

  CHECK(run_cli("sweep --config " + (dir / "a.cfg").string() + " --n 2,3 --out " + (dir / "s.csv").string()) == 0);
  CHECK(read_text((dir / "s.csv").string()).rfind("n,m_prime,residual_l2_sq,audit_value\n", 0) == 0);

  CHECK(run_cli("zoo list") == 0);
  CHECK(read_text("cli_out.txt").find("planted-net") != std::string::npos);

  json bad = base_config();
  bad["solver"]["restartz"] = 1;
  write_text((dir / "bad.cfg").string(), bad.dump());
  CHECK(run_cli("decompose --config " + (dir / "bad.cfg").string()) == 2);
  CHECK(read_text("cli_out.txt").find("solver.restartz") != std::string::npos);

  std::remove("cli_out.txt");
  fs::remove_all(dir);
}
