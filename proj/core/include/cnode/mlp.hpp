#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cnode/diff.hpp"
#include "cnode/errors.hpp"
#include "cnode/rng.hpp"

namespace cnode {

enum class LayerKind { kLinear, kTanh, kElu };

struct Layer {
  LayerKind kind = LayerKind::kLinear;
  std::size_t in = 0;
  std::size_t out = 0;

  static Layer linear(std::size_t in, std::size_t out) { return {LayerKind::kLinear, in, out}; }
  static Layer tanh() { return {LayerKind::kTanh, 0, 0}; }
  static Layer elu() { return {LayerKind::kElu, 0, 0}; }

  bool operator==(const Layer&) const = default;
};

/// A multilayer perceptron: a chain of linear maps and elementwise activations.
///
/// Parameters live in one flat vector. Each linear layer contributes its
/// row-major weight matrix (out x in) followed by its bias (out), in layer
/// order. forward() is a template over the scalar type, so the same code runs
/// on plain doubles (evaluation, finite differences) and on graph nodes
/// (training).
class Mlp {
 public:
  /// Throws ShapeError if the layers are empty, do not start and end with a
  /// linear layer, or have incompatible consecutive dimensions.
  explicit Mlp(std::vector<Layer> layers);

  /// `hidden` is a comma list such as "50,tanh,50,elu": integers are linear
  /// layers of that width, names are activations. An output linear layer to
  /// `out_dim` is appended. The names "wpg", "cr" and "dho" select the
  /// preset architectures.
  static Mlp parse(std::string_view hidden, std::size_t in_dim, std::size_t out_dim);
  static Mlp preset(std::string_view system);

  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t output_dim() const { return layers_.back().out; }
  std::size_t param_count() const { return param_count_; }

  /// Canonical hidden-layer description, e.g. "50,tanh,50,elu".
  std::string describe() const;

  template <class Scalar>
  std::vector<Scalar> forward(std::span<const Scalar> params, std::span<const Scalar> input) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<Layer> layers_;
  std::size_t param_count_ = 0;
};

/// Glorot-uniform weights, a = sqrt(6 / (in + out)) per linear layer, zero biases.
std::vector<double> init_params(const Mlp& net, Prng& rng);
std::vector<double> init_params(const Mlp& net, std::uint64_t seed);

template <class Scalar>
std::vector<Scalar> Mlp::forward(std::span<const Scalar> params,
                                 std::span<const Scalar> input) const {
  if (params.size() != param_count_) {
    throw ShapeError("parameter count " + std::to_string(params.size()) + " != expected " +
                     std::to_string(param_count_));
  }
  if (input.size() != input_dim()) {
    throw ShapeError("network input has " + std::to_string(input.size()) +
                     " entries, expected " + std::to_string(input_dim()));
  }
  std::vector<Scalar> current(input.begin(), input.end());
  std::vector<Scalar> next;
  std::size_t offset = 0;
  for (const Layer& layer : layers_) {
    switch (layer.kind) {
      case LayerKind::kLinear: {
        const auto weights = params.subspan(offset, layer.in * layer.out);
        const auto bias = params.subspan(offset + layer.in * layer.out, layer.out);
        next.clear();
        next.reserve(layer.out);
        const std::span<const Scalar> x(current);
        for (std::size_t j = 0; j < layer.out; ++j) {
          next.push_back(affine(weights.subspan(j * layer.in, layer.in), x, bias[j]));
        }
        current.swap(next);
        offset += layer.in * layer.out + layer.out;
        break;
      }
      case LayerKind::kTanh:
        for (auto& v : current) v = tanh(v);
        break;
      case LayerKind::kElu:
        for (auto& v : current) v = elu(v);
        break;
    }
  }
  return current;
}

}  // namespace cnode
