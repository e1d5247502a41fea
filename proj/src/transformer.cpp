#include "pal/transformer.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include <json.hpp>

namespace pal {

using nlohmann::json;

Vector Mlp::operator()(const Vector& z) const {
  Vector h(w1.size(), 0.0);
  for (std::size_t r = 0; r < w1.size(); ++r) {
    double s = b1.empty() ? 0.0 : b1[r];
    for (std::size_t c = 0; c < z.size(); ++c) s += w1[r][c] * z[c];
    h[r] = s > 0.0 ? s : 0.0;
  }
  Vector out(w2.size(), 0.0);
  for (std::size_t r = 0; r < w2.size(); ++r) {
    double s = b2.empty() ? 0.0 : b2[r];
    for (std::size_t c = 0; c < h.size(); ++c) s += w2[r][c] * h[c];
    out[r] = s;
  }
  return out;
}

Vector PositionEncoding::operator()(std::size_t n, std::size_t d) const {
  Vector pe(d, 0.0);
  if (!enabled) return pe;
  for (std::size_t k = 0; k < d; ++k) {
    const double freq = std::pow(base, -static_cast<double>(2 * (k / 2)) / static_cast<double>(d));
    const double a = static_cast<double>(n) * freq;
    pe[k] = (k % 2 == 0) ? std::sin(a) : std::cos(a);
  }
  return pe;
}

Vector layer_norm(const Vector& z, const LayerNormParams& p) {
  const double n = static_cast<double>(z.size());
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(std::max(var, 1e-12));
  Vector out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = p.gain[k] * (z[k] - mean) * inv + p.bias[k];
  return out;
}

PalTransformerLayer PalTransformerLayer::zeros(std::size_t d, std::size_t hidden) {
  PalTransformerLayer l;
  l.d = d;
  l.mlp.w1.assign(hidden, Vector(d, 0.0));
  l.mlp.b1.assign(hidden, 0.0);
  l.mlp.w2.assign(d, Vector(hidden, 0.0));
  l.mlp.b2.assign(d, 0.0);
  l.ln1 = {Vector(d, 1.0), Vector(d, 0.0)};
  l.ln2 = l.ln1;
  return l;
}

void PalTransformerLayer::validate() const {
  if (d == 0) throw DomainError("model dimension must be positive");
  for (const auto& h : heads) {
    if (h.in_proj.size() != d || h.out_proj.size() != d) {
      throw DomainError("head projection dimensions do not match d");
    }
  }
  for (const auto& row : mlp.w1)
    if (row.size() != d) throw DomainError("mlp.w1 rows must have d columns");
  if (!mlp.b1.empty() && mlp.b1.size() != mlp.w1.size()) throw DomainError("mlp.b1 size mismatch");
  if (mlp.w2.size() != d) throw DomainError("mlp.w2 must have d rows");
  for (const auto& row : mlp.w2)
    if (row.size() != mlp.w1.size()) throw DomainError("mlp.w2 columns must match the hidden width");
  if (!mlp.b2.empty() && mlp.b2.size() != d) throw DomainError("mlp.b2 size mismatch");
  for (const auto* p : {&ln1, &ln2}) {
    if (p->gain.size() != d || p->bias.size() != d) throw DomainError("layer norm size mismatch");
  }
}

Matrix pal_transformer_forward(const PalTransformerLayer& layer, const Matrix& x,
                               TransformerTrace* trace) {
  layer.validate();
  for (const auto& v : x)
    if (v.size() != layer.d) throw DomainError("input token dimension mismatch");
  Matrix head_values;
  const Matrix mpal = mpal_sequence(layer.heads, x, &head_values);
  Matrix out;
  out.reserve(x.size());
  if (trace) *trace = TransformerTrace{};
  for (std::size_t t = 0; t < x.size(); ++t) {
    Vector z0 = layer.pe(t, layer.d);
    for (std::size_t k = 0; k < layer.d; ++k) z0[k] += x[t][k];
    Vector pre1(layer.d);
    for (std::size_t k = 0; k < layer.d; ++k) pre1[k] = z0[k] + (layer.heads.empty() ? 0.0 : mpal[t][k]);
    const Vector z1 = layer_norm(pre1, layer.ln1);
    const Vector m = layer.mlp(z1);
    Vector pre2(layer.d);
    for (std::size_t k = 0; k < layer.d; ++k) pre2[k] = z1[k] + m[k];
    Vector z2 = layer_norm(pre2, layer.ln2);
    if (trace) {
      trace->z0.push_back(z0);
      trace->mpal.push_back(layer.heads.empty() ? Vector(layer.d, 0.0) : mpal[t]);
      trace->z1.push_back(z1);
      trace->mlp.push_back(m);
      trace->z2.push_back(z2);
      trace->head_values.push_back(head_values[t]);
    }
    out.push_back(std::move(z2));
  }
  return out;
}

namespace {

Vector vec_or(const json& j, const char* key, std::size_t n, double fill) {
  if (!j.contains(key)) return Vector(n, fill);
  return j.at(key).get<Vector>();
}

TriangularMeasure<double> measure_from_json(const json& j) {
  const HalfPlaneGrid<double> g(j.at("L").get<int>(), j.at("delta").get<double>(),
                                j.value("origin", 0.0));
  TriangularMeasure<double> m(g);
  for (const auto& cell : j.value("cells", json::array())) {
    if (!cell.is_array() || cell.size() != 3) throw ParseError("measure cells are [i, j, mu] triples");
    m.add(cell[0].get<int>(), cell[1].get<int>(), cell[2].get<double>());
  }
  return m;
}

json measure_to_json(const TriangularMeasure<double>& m) {
  json cells = json::array();
  for (int i = 1; i <= m.L(); ++i)
    for (int j = 1; j <= i; ++j)
      if (m.at(i, j) != 0.0) cells.push_back({i, j, m.at(i, j)});
  return {{"L", m.L()}, {"delta", m.grid().delta}, {"origin", m.grid().origin}, {"cells", cells}};
}

}  // namespace

PalTransformerLayer load_layer_json(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("layer config: ") + e.what());
  }
  try {
    if (j.value("version", 0) != 1) throw ParseError("layer config: unsupported version (expected 1)");
    PalTransformerLayer l;
    l.d = j.at("d").get<std::size_t>();
    for (const auto& h : j.value("heads", json::array())) {
      l.heads.push_back({h.at("in_proj").get<Vector>(), h.at("out_proj").get<Vector>(),
                         measure_from_json(h.at("measure"))});
    }
    const json mlp = j.value("mlp", json::object());
    if (mlp.contains("w1")) {
      l.mlp.w1 = mlp.at("w1").get<Matrix>();
      l.mlp.b1 = vec_or(mlp, "b1", l.mlp.w1.size(), 0.0);
      l.mlp.w2 = mlp.at("w2").get<Matrix>();
      l.mlp.b2 = vec_or(mlp, "b2", l.d, 0.0);
    } else {
      l.mlp = PalTransformerLayer::zeros(l.d).mlp;
    }
    const json ln = j.value("ln", json::object());
    l.ln1 = {vec_or(ln, "gain1", l.d, 1.0), vec_or(ln, "bias1", l.d, 0.0)};
    l.ln2 = {vec_or(ln, "gain2", l.d, 1.0), vec_or(ln, "bias2", l.d, 0.0)};
    const json pe = j.value("pe", json::object());
    l.pe.enabled = pe.value("enabled", true);
    l.pe.base = pe.value("base", 10000.0);
    l.validate();
    return l;
  } catch (const json::exception& e) {
    throw ParseError(std::string("layer config: ") + e.what());
  }
}

PalTransformerLayer load_layer_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return load_layer_json(in);
}

std::string layer_to_json(const PalTransformerLayer& l) {
  json heads = json::array();
  for (const auto& h : l.heads) {
    heads.push_back({{"in_proj", h.in_proj}, {"out_proj", h.out_proj}, {"measure", measure_to_json(h.measure)}});
  }
  json j = {{"version", 1},
            {"d", l.d},
            {"heads", heads},
            {"mlp", {{"w1", l.mlp.w1}, {"b1", l.mlp.b1}, {"w2", l.mlp.w2}, {"b2", l.mlp.b2}}},
            {"ln", {{"gain1", l.ln1.gain}, {"bias1", l.ln1.bias}, {"gain2", l.ln2.gain}, {"bias2", l.ln2.bias}}},
            {"pe", {{"enabled", l.pe.enabled}, {"base", l.pe.base}}}};
  return j.dump(2);
}

HeadConfig<double> range_head(std::size_t d, std::size_t in, std::size_t out, double u0,
                              double delta, int L) {
  if (in >= d || out >= d) throw DomainError("range head coordinate out of range");
  // beta_1 = u0 - delta sits below the whole history, so column 1 relays only
  // ever switch on: relay (alpha_i, beta_1) reports max(u) >= u0 + (i-2)delta.
  TriangularMeasure<double> m(HalfPlaneGrid<double>(L, delta, u0 - 2.0 * delta));
  for (int i = 3; i <= L; ++i) m.set(i, 1, delta);
  HeadConfig<double> h{Vector(d, 0.0), Vector(d, 0.0), std::move(m)};
  h.in_proj[in] = 1.0;
  h.out_proj[out] = 1.0;
  return h;
}

}  // namespace pal
