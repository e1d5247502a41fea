#pragma once

// Single PAL-Transformer layer with fixed weights:
//   z0 = x + PE;  z1 = LN1(z0 + MPAL(x));  z2 = LN2(z1 + MLP(z1))
// The heads read the raw tokens so that their output stays rate independent;
// position encoding reaches only the residual and MLP path.

#include <iosfwd>
#include <string>
#include <vector>

#include "pal/pal.hpp"

namespace pal {

using Vector = std::vector<double>;
using Matrix = std::vector<Vector>;  // row major

struct Mlp {
  Matrix w1;  // hidden x d
  Vector b1;
  Matrix w2;  // d x hidden
  Vector b2;

  Vector operator()(const Vector& z) const;
};

struct LayerNormParams {
  Vector gain;
  Vector bias;
};

struct PositionEncoding {
  bool enabled = true;
  double base = 10000.0;

  Vector operator()(std::size_t n, std::size_t d) const;
};

struct PalTransformerLayer {
  std::size_t d = 0;
  std::vector<HeadConfig<double>> heads;
  Mlp mlp;
  LayerNormParams ln1;
  LayerNormParams ln2;
  PositionEncoding pe;

  /// Identity-style layer: no heads, zero MLP, unit gains, zero biases.
  static PalTransformerLayer zeros(std::size_t d, std::size_t hidden = 1);
  void validate() const;
};

/// Zero-variance inputs normalise to the bias (variance floor 1e-12).
Vector layer_norm(const Vector& z, const LayerNormParams& p);

struct TransformerTrace {
  Matrix z0;    // x + PE
  Matrix mpal;  // MPAL(x_{0:t})
  Matrix z1;
  Matrix mlp;
  Matrix z2;
  Matrix head_values;  // per position, per head PAL value
};

Matrix pal_transformer_forward(const PalTransformerLayer& layer, const Matrix& x,
                               TransformerTrace* trace = nullptr);

/// JSON layer config, `"version": 1`.
PalTransformerLayer load_layer_json(std::istream& in);
PalTransformerLayer load_layer_json_file(const std::string& path);
std::string layer_to_json(const PalTransformerLayer& layer);

/// One head whose PAL value equals max(u) - u_0 for histories that start at
/// their minimum u_0 and take values on the lattice u_0 + k*delta, k < L - 1.
/// The head reads coordinate `in` and writes coordinate `out`.
HeadConfig<double> range_head(std::size_t d, std::size_t in, std::size_t out, double u0,
                              double delta, int L);

}  // namespace pal
