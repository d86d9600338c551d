#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "clipreg/runner.hpp"

namespace py = pybind11;
using namespace clipreg;

namespace {

FunctionOracle oracle_from_python(std::size_t dim, py::function fn) {
  return FunctionOracle(dim, [fn](std::span<const double> w) {
    py::gil_scoped_acquire gil;
    return fn(std::vector<double>(w.begin(), w.end())).cast<double>();
  }, "python");
}

}  // namespace

PYBIND11_MODULE(_clipreg, m) {
  m.doc() = "Clipped affine networks, quadrature metrics, adversarial audits and the energy-increment decomposition";

  m.def("beta", &beta, py::arg("z"));
  m.def("stage_budget", &stage_budget, py::arg("epsilon"));

  py::class_<RepCert>(m, "RepCert")
      .def(py::init<std::size_t, std::size_t>(), py::arg("d"), py::arg("r"))
      .def_readonly("d", &RepCert::d)
      .def_readonly("r", &RepCert::r)
      .def("within", &RepCert::within)
      .def("__eq__", [](const RepCert& a, const RepCert& b) { return a == b; })
      .def("__repr__", [](const RepCert& c) { return "RepCert(" + std::to_string(c.d) + "|" + std::to_string(c.r) + ")"; });

  py::class_<RepNet>(m, "RepNet")
      .def_static("from_json", [](const std::string& s) { return net_from_json(nlohmann::json::parse(s)); })
      .def_static("unit", &make_unit_net, py::arg("n"), py::arg("q"), py::arg("weights"), py::arg("bias"))
      .def_static("constant", &make_constant_net, py::arg("n"), py::arg("q"), py::arg("c"))
      .def_static("random", [](std::size_t n, double q, std::size_t d, std::size_t r, std::uint64_t seed) {
        return random_net(DomainSpec{n, q}, RepCert{d, r}, seed);
      }, py::arg("n"), py::arg("q"), py::arg("d"), py::arg("r"), py::arg("seed"))
      .def("__call__", [](const RepNet& net, const std::vector<double>& w) { return eval_net(net, w); })
      .def("to_json", [](const RepNet& net) { return to_json(net).dump(); })
      .def_property_readonly("n", &RepNet::input_dim)
      .def_property_readonly("q", &RepNet::q)
      .def_property_readonly("cert", &RepNet::cert)
      .def_property_readonly("signature", &RepNet::signature)
      .def("satisfies", &RepNet::satisfies)
      .def("__eq__", [](const RepNet& a, const RepNet& b) { return a == b; });

  m.def("pad_depth", &pad_depth, py::arg("net"), py::arg("extra"));
  m.def("compose_parallel", [](const std::vector<RepNet>& nets, const std::vector<double>& lambdas) {
    return compose_parallel(nets, lambdas);
  }, py::arg("nets"), py::arg("lambdas"));

  py::class_<Quadrature>(m, "Quadrature")
      .def_property_readonly("dim", &Quadrature::dim)
      .def_property_readonly("size", &Quadrature::size)
      .def("node", [](const Quadrature& q, std::size_t i) {
        auto s = q.node(i);
        return std::vector<double>(s.begin(), s.end());
      })
      .def_property_readonly("weights", [](const Quadrature& q) {
        return std::vector<double>(q.weights().begin(), q.weights().end());
      });

  m.def("build_quadrature", [](std::size_t n, const std::string& scheme, std::size_t size, std::uint64_t seed) {
    return build_quadrature(DomainSpec{n, 1.0}, scheme_from_string(scheme), size, seed);
  }, py::arg("n"), py::arg("scheme"), py::arg("size"), py::arg("seed"));

  m.def("sample_net", [](const Quadrature& q, const RepNet& net) { return sample(q, net); });
  m.def("sample_function", [](const Quadrature& q, py::function fn) {
    return sample(q, oracle_from_python(q.dim(), std::move(fn)));
  });
  m.def("sample_zoo", [](const Quadrature& q, const std::string& name, const std::string& params_json, double qbound) {
    return sample(q, zoo(name, nlohmann::json::parse(params_json), DomainSpec{q.dim(), qbound}).oracle);
  }, py::arg("quad"), py::arg("name"), py::arg("params_json") = "{}", py::arg("q") = 1.0);
  m.def("zoo_names", [] {
    std::vector<std::string> names;
    for (const auto& e : zoo_entries()) names.push_back(e.name);
    return names;
  });

  m.def("inner", [](const Quadrature& q, const std::vector<double>& a, const std::vector<double>& b) {
    return inner(q, a, b);
  });
  m.def("l2_norm_sq", [](const Quadrature& q, const std::vector<double>& f) { return l2_norm_sq(q, f); });
  m.def("sigma_l1", [](const Quadrature& q, const std::vector<double>& f, const std::vector<double>& g) {
    return sigma_l1(q, f, g);
  });
  m.def("correlation", [](const Quadrature& q, const RepNet& h, const std::vector<double>& t) {
    return correlation(q, h, t);
  });

  // Adversary and decomposition results cross the boundary as JSON text.
  m.def("ascend", [](const Quadrature& q, std::size_t d, std::size_t r, double qbound, const std::vector<double>& target,
                     std::size_t restarts, std::size_t iterations, double step0, double decay, std::uint64_t seed) {
    AscentBudget b{restarts, iterations, step0, decay, 1};
    return to_json(ascend(q, DictSpec{d, r, DomainSpec{q.dim(), qbound}}, target, b, seed)).dump();
  }, py::arg("quad"), py::arg("d"), py::arg("r"), py::arg("q"), py::arg("target"), py::arg("restarts") = 64,
     py::arg("iterations") = 400, py::arg("step0") = 0.5, py::arg("decay") = 0.97, py::arg("seed") = 0);

  m.def("decompose", [](const std::string& config_json, unsigned threads) {
    py::gil_scoped_release release;
    return to_json(run_decompose(config_from_json(nlohmann::json::parse(config_json)), threads)).dump();
  }, py::arg("config_json"), py::arg("threads") = 1);

  m.def("verify", [](const std::string& report_json) {
    const CertifyResult r = verify_report(report_from_json(nlohmann::json::parse(report_json)));
    return py::make_tuple(r.ok, r.details);
  }, py::arg("report_json"));

  m.def("trace_csv", [](const std::string& report_json) {
    return trace_csv(report_from_json(nlohmann::json::parse(report_json)).trace);
  });

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });
}
