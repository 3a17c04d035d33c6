#include "cnode/mlp.hpp"

#include <charconv>
#include <cmath>

namespace cnode {

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("network has no layers");
  if (layers_.front().kind != LayerKind::kLinear || layers_.back().kind != LayerKind::kLinear) {
    throw ShapeError("network must begin and end with a linear layer");
  }
  std::size_t width = 0;
  for (const Layer& layer : layers_) {
    if (layer.kind != LayerKind::kLinear) continue;
    if (layer.in == 0 || layer.out == 0) throw ShapeError("linear layer with zero dimension");
    if (width != 0 && layer.in != width) {
      throw ShapeError("linear layer expects " + std::to_string(layer.in) +
                       " inputs but previous layer produces " + std::to_string(width));
    }
    width = layer.out;
    param_count_ += layer.in * layer.out + layer.out;
  }
}

Mlp Mlp::parse(std::string_view hidden, std::size_t in_dim, std::size_t out_dim) {
  if (hidden == "wpg" || hidden == "cr" || hidden == "dho") {
    Mlp net = preset(hidden);
    if (net.input_dim() != in_dim || net.output_dim() != out_dim) {
      throw ConfigError("preset architecture '" + std::string(hidden) +
                        "' does not match a system of dimension " + std::to_string(in_dim));
    }
    return net;
  }
  std::vector<Layer> layers;
  std::size_t width = in_dim;
  std::size_t pos = 0;
  while (pos <= hidden.size()) {
    std::size_t comma = hidden.find(',', pos);
    if (comma == std::string_view::npos) comma = hidden.size();
    std::string_view token = hidden.substr(pos, comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token == "tanh") {
      layers.push_back(Layer::tanh());
    } else if (token == "elu") {
      layers.push_back(Layer::elu());
    } else if (!token.empty()) {
      std::size_t n = 0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), n);
      if (ec != std::errc{} || ptr != token.data() + token.size() || n == 0) {
        throw ConfigError("bad architecture token '" + std::string(token) + "'");
      }
      layers.push_back(Layer::linear(width, n));
      width = n;
    }
    pos = comma + 1;
  }
  layers.push_back(Layer::linear(width, out_dim));
  if (layers.front().kind != LayerKind::kLinear) {
    throw ConfigError("architecture must start with a linear layer width");
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::preset(std::string_view system) {
  if (system == "wpg") return parse("50,tanh,50,elu", 1, 1);
  if (system == "cr") return parse("50,tanh,64,elu,50,tanh", 4, 4);
  if (system == "dho") return parse("50,tanh,50,elu", 2, 2);
  throw ConfigError("unknown architecture preset '" + std::string(system) +
                    "' (valid: wpg, cr, dho)");
}

std::string Mlp::describe() const {
  std::string out;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    if (!out.empty()) out += ',';
    switch (layers_[i].kind) {
      case LayerKind::kLinear:
        out += std::to_string(layers_[i].out);
        break;
      case LayerKind::kTanh:
        out += "tanh";
        break;
      case LayerKind::kElu:
        out += "elu";
        break;
    }
  }
  return out;
}

std::vector<double> init_params(const Mlp& net, Prng& rng) {
  std::vector<double> params;
  params.reserve(net.param_count());
  for (const Layer& layer : net.layers()) {
    if (layer.kind != LayerKind::kLinear) continue;
    const double a = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (std::size_t k = 0; k < layer.in * layer.out; ++k) params.push_back(rng.uniform(-a, a));
    params.insert(params.end(), layer.out, 0.0);
  }
  return params;
}

std::vector<double> init_params(const Mlp& net, std::uint64_t seed) {
  Prng rng(seed);
  return init_params(net, rng);
}

}  // namespace cnode
