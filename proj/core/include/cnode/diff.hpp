#pragma once

// Reverse-mode differentiation over scalar computation graphs.
//
// A Graph is an append-only tape. Every forward operation appends one node
// whose parents were created earlier, so insertion order is a topological
// order and backward() is a single reverse sweep. DiffValue is a cheap handle
// (graph pointer + node index) that can be passed around by value.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cnode/errors.hpp"

namespace cnode {

class Graph;

class DiffValue {
 public:
  DiffValue() = default;

  double value() const;
  /// Zero before backward(), d(root)/d(this) after it.
  double grad() const;

  Graph* graph() const { return graph_; }
  std::uint32_t id() const { return id_; }

 private:
  friend class Graph;
  DiffValue(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = delete;
  Graph& operator=(Graph&&) = delete;

  void reserve(std::size_t nodes) {
    nodes_.reserve(nodes);
    values_.reserve(nodes);
  }

  /// Leaf node. Throws NumericalError for non-finite input.
  DiffValue variable(double value);
  /// Consecutive leaves, one per entry.
  std::vector<DiffValue> variables(std::span<const double> values);

  DiffValue add(DiffValue a, DiffValue b);
  DiffValue sub(DiffValue a, DiffValue b);
  DiffValue mul(DiffValue a, DiffValue b);
  DiffValue div(DiffValue a, DiffValue b);
  DiffValue neg(DiffValue a);
  /// scale * a + offset, a single node.
  DiffValue scale(DiffValue a, double scale, double offset = 0.0);
  DiffValue pow_int(DiffValue a, int exponent);
  DiffValue exp(DiffValue a);
  DiffValue tanh(DiffValue a);
  /// ELU with alpha = 1.
  DiffValue elu(DiffValue a);
  /// max(a, 0); the subgradient at exactly 0 is 0.
  DiffValue max_zero(DiffValue a);
  DiffValue reciprocal(DiffValue a);
  DiffValue square(DiffValue a);

  /// bias + sum_k weights[k] * inputs[k], recorded as one n-ary node.
  DiffValue affine(std::span<const DiffValue> weights, std::span<const DiffValue> inputs,
                   DiffValue bias);
  DiffValue sum(std::span<const DiffValue> terms);

  /// Seeds d(root)/d(root) = 1 and accumulates gradients into every node at or
  /// before `root`. A second call without reset_gradients() throws StaleGradientError.
  void backward(DiffValue root);
  void reset_gradients();

  double value(std::uint32_t id) const { return values_[id]; }
  double grad(std::uint32_t id) const { return id < grads_.size() ? grads_[id] : 0.0; }
  std::size_t size() const { return nodes_.size(); }
  bool has_gradients() const { return backward_done_; }

  std::vector<double> gradients(std::span<const DiffValue> nodes) const;

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kNeg,
    kScale,
    kPowInt,
    kExp,
    kTanh,
    kElu,
    kMaxZero,
    kReciprocal,
    kSquare,
    kAffine,
    kSum,
  };

  // For kAffine/kSum, `a` and `b` are either the first node of a contiguous run
  // of ids (flag set) or an offset into operands_.
  struct Node {
    Op op = Op::kLeaf;
    bool a_contiguous = false;
    bool b_contiguous = false;
    std::int32_t exponent = 0;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t c = 0;
    std::uint32_t n = 0;
    double k0 = 0.0;
  };

  void check_owner(DiffValue v) const;
  DiffValue push(const Node& node, double value, const char* op);
  /// Stores ids of `values` as either a contiguous run or an operand list.
  std::pair<std::uint32_t, bool> record_ids(std::span<const DiffValue> values);
  std::uint32_t id_at(std::uint32_t start, bool contiguous, std::uint32_t k) const {
    return contiguous ? start + k : operands_[start + k];
  }

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> grads_;
  std::vector<std::uint32_t> operands_;
  bool backward_done_ = false;
};

inline double DiffValue::value() const {
  if (graph_ == nullptr) throw GraphMismatchError("DiffValue is not attached to a graph");
  return graph_->value(id_);
}

inline double DiffValue::grad() const {
  if (graph_ == nullptr) throw GraphMismatchError("DiffValue is not attached to a graph");
  return graph_->grad(id_);
}

namespace detail {
inline Graph& owner(DiffValue a) {
  if (a.graph() == nullptr) throw GraphMismatchError("DiffValue is not attached to a graph");
  return *a.graph();
}
}  // namespace detail

// Operators and elementwise functions. The double overloads below let the
// network, solver and penalty code be written once as templates over the scalar.

inline DiffValue operator+(DiffValue a, DiffValue b) { return detail::owner(a).add(a, b); }
inline DiffValue operator-(DiffValue a, DiffValue b) { return detail::owner(a).sub(a, b); }
inline DiffValue operator*(DiffValue a, DiffValue b) { return detail::owner(a).mul(a, b); }
inline DiffValue operator/(DiffValue a, DiffValue b) { return detail::owner(a).div(a, b); }
inline DiffValue operator-(DiffValue a) { return detail::owner(a).neg(a); }

inline DiffValue operator+(DiffValue a, double b) { return detail::owner(a).scale(a, 1.0, b); }
inline DiffValue operator+(double a, DiffValue b) { return detail::owner(b).scale(b, 1.0, a); }
inline DiffValue operator-(DiffValue a, double b) { return detail::owner(a).scale(a, 1.0, -b); }
inline DiffValue operator-(double a, DiffValue b) { return detail::owner(b).scale(b, -1.0, a); }
inline DiffValue operator*(DiffValue a, double b) { return detail::owner(a).scale(a, b); }
inline DiffValue operator*(double a, DiffValue b) { return detail::owner(b).scale(b, a); }
inline DiffValue operator/(DiffValue a, double b) {
  if (b == 0.0) throw NumericalError("division by zero");
  return detail::owner(a).scale(a, 1.0 / b);
}
inline DiffValue operator/(double a, DiffValue b) {
  Graph& g = detail::owner(b);
  return g.scale(g.reciprocal(b), a);
}

inline DiffValue exp(DiffValue a) { return detail::owner(a).exp(a); }
inline DiffValue tanh(DiffValue a) { return detail::owner(a).tanh(a); }
inline DiffValue elu(DiffValue a) { return detail::owner(a).elu(a); }
inline DiffValue max_zero(DiffValue a) { return detail::owner(a).max_zero(a); }
inline DiffValue reciprocal(DiffValue a) { return detail::owner(a).reciprocal(a); }
inline DiffValue square(DiffValue a) { return detail::owner(a).square(a); }
inline DiffValue pow_int(DiffValue a, int n) { return detail::owner(a).pow_int(a, n); }

inline double value_of(DiffValue a) { return a.value(); }

inline double exp(double a) { return std::exp(a); }
inline double tanh(double a) { return std::tanh(a); }
inline double elu(double a) { return a > 0.0 ? a : std::expm1(a); }
inline double max_zero(double a) { return a > 0.0 ? a : 0.0; }
inline double reciprocal(double a) { return 1.0 / a; }
inline double square(double a) { return a * a; }
inline double pow_int(double a, int n) { return std::pow(a, n); }
inline double value_of(double a) { return a; }

/// bias + <weights, inputs>; n-ary node for DiffValue, plain loop for double.
inline DiffValue affine(std::span<const DiffValue> weights, std::span<const DiffValue> inputs,
                        DiffValue bias) {
  return detail::owner(bias).affine(weights, inputs, bias);
}

inline double affine(std::span<const double> weights, std::span<const double> inputs,
                     double bias) {
  if (weights.size() != inputs.size()) throw ShapeError("affine: length mismatch");
  double acc = bias;
  for (std::size_t k = 0; k < weights.size(); ++k) acc += weights[k] * inputs[k];
  return acc;
}

}  // namespace cnode
