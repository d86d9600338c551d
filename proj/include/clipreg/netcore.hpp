#pragma once

// Clipped affine networks on the hypercube W_n = [-1,1]^n.
//
// A unit computes beta(<w, weights> + bias) where beta clips to [-1,1].
// A network of type (d_1, ..., d_r) chains r hidden layers of clipped units
// and a single output unit; it is (d|r)-representable when its depth is at
// most r and every hidden width is at most d.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace clipreg {

/// Input dimension n and weight box bound q (q >= 1).
struct DomainSpec {
  std::size_t n = 1;
  double q = 1.0;

  void validate() const;
};

/// Representability class (d|r): hidden widths <= d, hidden depth <= r.
struct RepCert {
  std::size_t d = 1;
  std::size_t r = 0;

  /// True when every (d|r) function is also (other.d|other.r).
  bool within(const RepCert& other) const { return d <= other.d && r <= other.r; }
  bool operator==(const RepCert&) const = default;
};

/// The clip function: -1 below -1, identity on [-1,1], 1 above 1.
/// Throws std::invalid_argument on non-finite input.
double beta(double z);

/// Subgradient of beta used by the ascent: 1 on the closed interval [-1,1], 0 outside.
inline double beta_slope(double z) { return (z >= -1.0 && z <= 1.0) ? 1.0 : 0.0; }

struct ClipUnit {
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t input_width() const { return weights.size(); }
};

/// Largest useful bias magnitude for a unit reading `input_width` coordinates
/// with weights in [-q,q]: beyond it the unit is constant.
inline double bias_bound(std::size_t input_width, double q) {
  return static_cast<double>(input_width) * q + 1.0;
}

/// beta(<w, weights> + bias), dot product accumulated in index order.
double eval_unit(const ClipUnit& unit, std::span<const double> w);

using Layer = std::vector<ClipUnit>;

/// Layered clipped network W_n -> W_{d_1} -> ... -> W_{d_r} -> [-1,1].
///
/// `layers` holds r+1 layers; the last one has exactly one unit. Values are
/// immutable after construction, which validates the width chain, clamps
/// biases to [-(d_in q + 1), d_in q + 1] and checks weights lie in [-q,q].
class RepNet {
 public:
  RepNet(std::size_t n, double q, std::vector<Layer> layers, RepCert cert);
  /// Certificate defaults to the tightest one the structure supports.
  RepNet(std::size_t n, double q, std::vector<Layer> layers);

  std::size_t input_dim() const { return n_; }
  double q() const { return q_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const RepCert& cert() const { return cert_; }

  /// Hidden widths (d_1, ..., d_r).
  std::vector<std::size_t> signature() const;
  std::size_t depth() const { return layers_.size() - 1; }
  /// (max hidden width | depth); width 1 for depth-0 nets.
  RepCert structural_cert() const;
  /// Whether the structure is (c.d | c.r)-representable.
  bool satisfies(const RepCert& c) const { return structural_cert().within(c); }

  std::size_t num_parameters() const;

  bool operator==(const RepNet& other) const;

 private:
  std::size_t n_;
  double q_;
  std::vector<Layer> layers_;
  RepCert cert_;
};

double eval_net(const RepNet& net, std::span<const double> w);

/// Single rectified affine function on W_n (depth-0 network).
RepNet make_unit_net(std::size_t n, double q, std::vector<double> weights, double bias);

/// Constant network w -> beta(c).
RepNet make_constant_net(std::size_t n, double q, double c);

/// Appends `extra` width-1 identity stages after the output unit. The old
/// output becomes a width-1 hidden layer, so the certificate moves from
/// (d|r) to (d|r+extra) and values are unchanged bit for bit.
RepNet pad_depth(const RepNet& net, std::size_t extra);

/// Network computing w -> beta(sum_i lambdas[i] * nets[i](w)).
///
/// Nets are padded to a common depth, stacked side by side with zero
/// cross-block weights, and closed by a unit with weights `lambdas` and
/// bias 0. Certificate: (sum_i d_i | 1 + max_i r_i).
RepNet compose_parallel(std::span<const RepNet> nets, std::span<const double> lambdas);

/// Re-expresses `net` with exactly `target.r` hidden layers, each of width
/// exactly `target.d`, padding with zero units. Requires net.satisfies(target).
RepNet embed_uniform(const RepNet& net, const RepCert& target);

/// Uniform architecture (d, ..., d) with r hidden layers. `params` lists,
/// layer by layer and unit by unit, each unit's weights followed by its bias.
RepNet net_from_parameters(std::size_t n, double q, const RepCert& arch,
                           std::span<const double> params);
std::vector<double> parameters_of(const RepNet& net);

// JSON form {n, q, layers: [[{w: [...], b: ...}, ...], ...], cert: {d, r}}.
nlohmann::json to_json(const RepNet& net);
RepNet net_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RepCert& c);
RepCert cert_from_json(const nlohmann::json& j);

}  // namespace clipreg
