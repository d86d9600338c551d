#include "clipreg/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace clipreg {

namespace {

std::string where(std::size_t layer, std::size_t unit) {
  return "layer " + std::to_string(layer) + ", unit " + std::to_string(unit);
}

ClipUnit identity_unit() { return ClipUnit{{1.0}, 0.0}; }

ClipUnit zero_unit(std::size_t width) { return ClipUnit{std::vector<double>(width, 0.0), 0.0}; }

}  // namespace

void DomainSpec::validate() const {
  if (n < 1) throw std::invalid_argument("domain.n must be >= 1");
  if (!std::isfinite(q) || q < 1.0) throw std::invalid_argument("domain.q must be >= 1");
}

double beta(double z) {
  if (!std::isfinite(z)) throw std::invalid_argument("beta: non-finite argument");
  if (z >= 1.0) return 1.0;
  if (z <= -1.0) return -1.0;
  return z;
}

double eval_unit(const ClipUnit& unit, std::span<const double> w) {
  if (w.size() != unit.weights.size()) {
    throw std::invalid_argument("eval_unit: point has dimension " + std::to_string(w.size()) +
                                ", unit expects " + std::to_string(unit.weights.size()));
  }
  double z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) z += unit.weights[i] * w[i];
  return beta(z + unit.bias);
}

RepNet::RepNet(std::size_t n, double q, std::vector<Layer> layers, RepCert cert)
    : n_(n), q_(q), layers_(std::move(layers)), cert_(cert) {
  DomainSpec{n_, q_}.validate();
  if (layers_.empty()) throw std::invalid_argument("RepNet: at least the output layer is required");
  if (layers_.back().size() != 1) throw std::invalid_argument("RepNet: output layer must have width 1");
  std::size_t width = n_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].empty()) throw std::invalid_argument("RepNet: empty layer " + std::to_string(l));
    for (std::size_t u = 0; u < layers_[l].size(); ++u) {
      ClipUnit& unit = layers_[l][u];
      if (unit.weights.size() != width) {
        throw std::invalid_argument("RepNet: " + where(l, u) + " reads " +
                                    std::to_string(unit.weights.size()) + " inputs, previous width is " +
                                    std::to_string(width));
      }
      for (double x : unit.weights) {
        if (!std::isfinite(x) || std::abs(x) > q_) {
          throw std::invalid_argument("RepNet: " + where(l, u) + " has a weight outside [-q,q]");
        }
      }
      if (!std::isfinite(unit.bias)) throw std::invalid_argument("RepNet: " + where(l, u) + " has a non-finite bias");
      const double bound = bias_bound(width, q_);
      unit.bias = std::clamp(unit.bias, -bound, bound);
    }
    width = layers_[l].size();
  }
  if (!structural_cert().within(cert_)) {
    throw std::invalid_argument("RepNet: structure does not satisfy the attached certificate");
  }
}

RepNet::RepNet(std::size_t n, double q, std::vector<Layer> layers)
    : RepNet(n, q, layers, [&] {
        RepCert c{1, layers.empty() ? 0 : layers.size() - 1};
        for (std::size_t l = 0; l + 1 < layers.size(); ++l) c.d = std::max(c.d, layers[l].size());
        return c;
      }()) {}

std::vector<std::size_t> RepNet::signature() const {
  std::vector<std::size_t> s;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) s.push_back(layers_[l].size());
  return s;
}

RepCert RepNet::structural_cert() const {
  RepCert c{1, depth()};
  for (std::size_t w : signature()) c.d = std::max(c.d, w);
  return c;
}

std::size_t RepNet::num_parameters() const {
  std::size_t count = 0;
  for (const Layer& layer : layers_)
    for (const ClipUnit& u : layer) count += u.weights.size() + 1;
  return count;
}

bool RepNet::operator==(const RepNet& other) const {
  if (n_ != other.n_ || q_ != other.q_ || !(cert_ == other.cert_)) return false;
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].size() != other.layers_[l].size()) return false;
    for (std::size_t u = 0; u < layers_[l].size(); ++u) {
      if (layers_[l][u].weights != other.layers_[l][u].weights) return false;
      if (layers_[l][u].bias != other.layers_[l][u].bias) return false;
    }
  }
  return true;
}

double eval_net(const RepNet& net, std::span<const double> w) {
  if (w.size() != net.input_dim()) {
    throw std::invalid_argument("eval_net: point has dimension " + std::to_string(w.size()) +
                                ", net expects " + std::to_string(net.input_dim()));
  }
  std::vector<double> current(w.begin(), w.end());
  std::vector<double> next;
  for (const Layer& layer : net.layers()) {
    next.resize(layer.size());
    for (std::size_t u = 0; u < layer.size(); ++u) next[u] = eval_unit(layer[u], current);
    current.swap(next);
  }
  return current[0];
}

RepNet make_unit_net(std::size_t n, double q, std::vector<double> weights, double bias) {
  return RepNet(n, q, {Layer{ClipUnit{std::move(weights), bias}}});
}

RepNet make_constant_net(std::size_t n, double q, double c) {
  return make_unit_net(n, q, std::vector<double>(n, 0.0), c);
}

RepNet pad_depth(const RepNet& net, std::size_t extra) {
  std::vector<Layer> layers = net.layers();
  for (std::size_t i = 0; i < extra; ++i) layers.push_back(Layer{identity_unit()});
  return RepNet(net.input_dim(), net.q(), std::move(layers), RepCert{net.cert().d, net.cert().r + extra});
}

RepNet compose_parallel(std::span<const RepNet> nets, std::span<const double> lambdas) {
  if (nets.empty()) throw std::invalid_argument("compose_parallel: no nets given");
  if (nets.size() != lambdas.size()) {
    throw std::invalid_argument("compose_parallel: " + std::to_string(nets.size()) + " nets but " +
                                std::to_string(lambdas.size()) + " coefficients");
  }
  const std::size_t n = nets[0].input_dim();
  const double q = nets[0].q();
  std::size_t depth = 0;
  std::size_t d_sum = 0;
  for (std::size_t i = 0; i < nets.size(); ++i) {
    if (nets[i].input_dim() != n) throw std::invalid_argument("compose_parallel: input dimension mismatch");
    if (nets[i].q() != q) throw std::invalid_argument("compose_parallel: nets disagree on q");
    if (!std::isfinite(lambdas[i]) || std::abs(lambdas[i]) > q) {
      throw std::invalid_argument("compose_parallel: coefficient " + std::to_string(i) + " outside [-q,q]");
    }
    depth = std::max(depth, nets[i].cert().r);
    d_sum += nets[i].cert().d;
  }

  std::vector<RepNet> padded;
  padded.reserve(nets.size());
  for (const RepNet& net : nets) padded.push_back(pad_depth(net, depth - net.depth()));

  // Layers 0..depth of every padded net, stacked block-diagonally.
  std::vector<Layer> layers(depth + 1);
  std::vector<std::size_t> offset(padded.size(), 0);  // block start in the previous stacked layer
  std::size_t prev_total = n;
  for (std::size_t l = 0; l <= depth; ++l) {
    std::size_t total = 0;
    for (const RepNet& p : padded) total += p.layers()[l].size();
    std::size_t out_start = 0;
    for (std::size_t i = 0; i < padded.size(); ++i) {
      for (const ClipUnit& unit : padded[i].layers()[l]) {
        if (l == 0) {
          layers[l].push_back(unit);
        } else {
          ClipUnit wide = zero_unit(prev_total);
          std::copy(unit.weights.begin(), unit.weights.end(), wide.weights.begin() + offset[i]);
          wide.bias = unit.bias;
          layers[l].push_back(std::move(wide));
        }
      }
      offset[i] = out_start;
      out_start += padded[i].layers()[l].size();
    }
    prev_total = total;
  }
  layers.push_back(Layer{ClipUnit{std::vector<double>(lambdas.begin(), lambdas.end()), 0.0}});
  return RepNet(n, q, std::move(layers), RepCert{d_sum, depth + 1});
}

RepNet embed_uniform(const RepNet& net, const RepCert& target) {
  if (!net.satisfies(target)) throw std::invalid_argument("embed_uniform: net does not fit the target class");
  const RepNet padded = pad_depth(net, target.r - net.depth());
  std::vector<Layer> layers = padded.layers();
  std::size_t prev_width = net.input_dim();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (ClipUnit& unit : layers[l]) unit.weights.resize(prev_width, 0.0);
    if (l + 1 < layers.size()) {
      while (layers[l].size() < target.d) layers[l].push_back(zero_unit(prev_width));
    }
    prev_width = layers[l].size();
  }
  return RepNet(net.input_dim(), net.q(), std::move(layers), target);
}

RepNet net_from_parameters(std::size_t n, double q, const RepCert& arch, std::span<const double> params) {
  std::vector<Layer> layers(arch.r + 1);
  std::size_t pos = 0;
  std::size_t width = n;
  for (std::size_t l = 0; l <= arch.r; ++l) {
    const std::size_t units = (l == arch.r) ? 1 : arch.d;
    for (std::size_t u = 0; u < units; ++u) {
      if (pos + width + 1 > params.size()) throw std::invalid_argument("net_from_parameters: too few parameters");
      ClipUnit unit{std::vector<double>(params.begin() + pos, params.begin() + pos + width), params[pos + width]};
      pos += width + 1;
      layers[l].push_back(std::move(unit));
    }
    width = units;
  }
  if (pos != params.size()) throw std::invalid_argument("net_from_parameters: too many parameters");
  return RepNet(n, q, std::move(layers), arch);
}

std::vector<double> parameters_of(const RepNet& net) {
  std::vector<double> params;
  params.reserve(net.num_parameters());
  for (const Layer& layer : net.layers()) {
    for (const ClipUnit& unit : layer) {
      params.insert(params.end(), unit.weights.begin(), unit.weights.end());
      params.push_back(unit.bias);
    }
  }
  return params;
}

nlohmann::json to_json(const RepCert& c) { return {{"d", c.d}, {"r", c.r}}; }

RepCert cert_from_json(const nlohmann::json& j) {
  return RepCert{j.at("d").get<std::size_t>(), j.at("r").get<std::size_t>()};
}

nlohmann::json to_json(const RepNet& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : net.layers()) {
    nlohmann::json units = nlohmann::json::array();
    for (const ClipUnit& unit : layer) units.push_back({{"w", unit.weights}, {"b", unit.bias}});
    layers.push_back(std::move(units));
  }
  return {{"n", net.input_dim()}, {"q", net.q()}, {"layers", std::move(layers)}, {"cert", to_json(net.cert())}};
}

RepNet net_from_json(const nlohmann::json& j) {
  std::vector<Layer> layers;
  for (const auto& jl : j.at("layers")) {
    Layer layer;
    for (const auto& ju : jl) layer.push_back(ClipUnit{ju.at("w").get<std::vector<double>>(), ju.at("b").get<double>()});
    layers.push_back(std::move(layer));
  }
  const auto n = j.at("n").get<std::size_t>();
  const auto q = j.at("q").get<double>();
  if (j.contains("cert")) return RepNet(n, q, std::move(layers), cert_from_json(j.at("cert")));
  return RepNet(n, q, std::move(layers));
}

}  // namespace clipreg
