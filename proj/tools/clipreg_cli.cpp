// clipreg: decompose a target into a clipped-network part plus a residual
// that no small network correlates with, and audit the result.

#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clipreg/runner.hpp"

using namespace clipreg;

namespace {

std::vector<std::size_t> parse_dims(const std::string& list) {
  std::vector<std::size_t> dims;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const unsigned long v = std::stoul(item, &pos);
    if (pos != item.size() || v == 0) throw std::invalid_argument("--n: bad dimension '" + item + "'");
    dims.push_back(v);
  }
  if (dims.empty()) throw std::invalid_argument("--n: no dimensions given");
  return dims;
}

int print_certify(const CertifyResult& res) {
  std::cout << (res.ok ? "verify: ok" : "verify: FAILED") << "\n";
  for (const auto& line : res.details) std::cout << "  " << line << "\n";
  return res.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clipreg: clipped-network decomposition with adversarial residual audits"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker cap; results do not depend on it")->check(CLI::PositiveNumber);

  std::string config_path;
  std::string out_override;
  bool verify_after = false;

  auto* decompose_cmd = app.add_subcommand("decompose", "Run the decomposition and write report, trace and witness");
  decompose_cmd->add_option("--config", config_path, "Run config (JSON)")->required();
  decompose_cmd->add_flag("--verify", verify_after, "Re-verify the emitted report");

  auto* adversary_cmd = app.add_subcommand("adversary", "Search for the network best correlated with the target");
  adversary_cmd->add_option("--config", config_path, "Run config (JSON)")->required();
  adversary_cmd->add_option("--out", out_override, "Output path (default: output.witness from the config)");

  std::string dims_arg;
  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat the decomposition over several input dimensions");
  sweep_cmd->add_option("--config", config_path, "Run config (JSON)")->required();
  sweep_cmd->add_option("--n", dims_arg, "Comma-separated dimensions, e.g. 2,4,8,16")->required();
  sweep_cmd->add_option("--out", out_override, "CSV path (default sweep.csv)");

  std::string report_path;
  auto* verify_cmd = app.add_subcommand("verify", "Re-verify a report against its embedded config");
  verify_cmd->add_option("--report", report_path, "report.json")->required();

  auto* zoo_cmd = app.add_subcommand("zoo", "Built-in targets");
  zoo_cmd->require_subcommand(1);
  auto* zoo_list = zoo_cmd->add_subcommand("list", "List built-in targets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*decompose_cmd) {
      const RunConfig config = load_config(config_path);
      const DecompositionReport report = run_decompose(config, threads);
      write_text(config.output.report, to_json(report).dump(2) + "\n");
      write_text(config.output.trace, trace_csv(report.trace));
      write_text(config.output.witness, to_json(report.audit.result).dump(2) + "\n");
      std::cout << "m_prime " << report.m_prime << " / m_budget " << report.m_budget << "\n"
                << "residual_l2_sq " << format_double(report.residual_l2_sq) << "\n"
                << "audit value " << format_double(report.audit.result.value) << " (lower bound; "
                << (report.audit.invisible_up_to_budget ? "no witness above epsilon found at this budget"
                                                        : "witness above epsilon found")
                << ")\n";
      if (verify_after) return print_certify(verify_report(report_from_json(nlohmann::json::parse(read_text(config.output.report)))));
      return 0;
    }
    if (*adversary_cmd) {
      const RunConfig config = load_config(config_path);
      const AdversaryResult result = run_adversary(config, threads);
      const std::string path = out_override.empty() ? config.output.witness : out_override;
      write_text(path, to_json(result).dump(2) + "\n");
      std::cout << "value " << format_double(result.value) << " (lower bound)\n";
      return 0;
    }
    if (*sweep_cmd) {
      const RunConfig config = load_config(config_path);
      const auto rows = run_sweep(config, parse_dims(dims_arg), threads);
      const std::string csv = sweep_csv(rows);
      write_text(out_override.empty() ? "sweep.csv" : out_override, csv);
      std::cout << csv;
      return 0;
    }
    if (*verify_cmd) {
      return print_certify(verify_report(report_from_json(nlohmann::json::parse(read_text(report_path)))));
    }
    if (*zoo_list) {
      for (const ZooEntry& e : zoo_entries()) {
        std::cout << e.name << "\t" << (e.params.empty() ? "-" : e.params) << "\t" << e.summary << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
