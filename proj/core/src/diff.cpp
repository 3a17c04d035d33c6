#include "cnode/diff.hpp"

#include <string>

namespace cnode {

void Graph::check_owner(DiffValue v) const {
  if (v.graph() != this) {
    throw GraphMismatchError("operand belongs to a different graph");
  }
}

DiffValue Graph::push(const Node& node, double value, const char* op) {
  if (!std::isfinite(value)) {
    throw NumericalError(std::string("non-finite result in ") + op);
  }
  nodes_.push_back(node);
  values_.push_back(value);
  return DiffValue(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

DiffValue Graph::variable(double value) {
  return push(Node{}, value, "variable");
}

std::vector<DiffValue> Graph::variables(std::span<const double> values) {
  std::vector<DiffValue> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(variable(v));
  return out;
}

DiffValue Graph::add(DiffValue a, DiffValue b) {
  check_owner(a);
  check_owner(b);
  return push({.op = Op::kAdd, .a = a.id(), .b = b.id()}, values_[a.id()] + values_[b.id()],
              "add");
}

DiffValue Graph::sub(DiffValue a, DiffValue b) {
  check_owner(a);
  check_owner(b);
  return push({.op = Op::kSub, .a = a.id(), .b = b.id()}, values_[a.id()] - values_[b.id()],
              "sub");
}

DiffValue Graph::mul(DiffValue a, DiffValue b) {
  check_owner(a);
  check_owner(b);
  return push({.op = Op::kMul, .a = a.id(), .b = b.id()}, values_[a.id()] * values_[b.id()],
              "mul");
}

DiffValue Graph::div(DiffValue a, DiffValue b) {
  check_owner(a);
  check_owner(b);
  const double denom = values_[b.id()];
  if (denom == 0.0) throw NumericalError("division by zero");
  return push({.op = Op::kDiv, .a = a.id(), .b = b.id()}, values_[a.id()] / denom, "div");
}

DiffValue Graph::neg(DiffValue a) {
  check_owner(a);
  return push({.op = Op::kNeg, .a = a.id()}, -values_[a.id()], "neg");
}

DiffValue Graph::scale(DiffValue a, double scale, double offset) {
  check_owner(a);
  return push({.op = Op::kScale, .a = a.id(), .k0 = scale}, scale * values_[a.id()] + offset,
              "scale");
}

DiffValue Graph::pow_int(DiffValue a, int exponent) {
  check_owner(a);
  return push({.op = Op::kPowInt, .exponent = exponent, .a = a.id()},
              std::pow(values_[a.id()], exponent), "pow_int");
}

DiffValue Graph::exp(DiffValue a) {
  check_owner(a);
  return push({.op = Op::kExp, .a = a.id()}, std::exp(values_[a.id()]), "exp");
}

DiffValue Graph::tanh(DiffValue a) {
  check_owner(a);
  return push({.op = Op::kTanh, .a = a.id()}, std::tanh(values_[a.id()]), "tanh");
}

DiffValue Graph::elu(DiffValue a) {
  check_owner(a);
  const double x = values_[a.id()];
  return push({.op = Op::kElu, .a = a.id()}, x > 0.0 ? x : std::expm1(x), "elu");
}

DiffValue Graph::max_zero(DiffValue a) {
  check_owner(a);
  const double x = values_[a.id()];
  return push({.op = Op::kMaxZero, .a = a.id()}, x > 0.0 ? x : 0.0, "max_zero");
}

DiffValue Graph::reciprocal(DiffValue a) {
  check_owner(a);
  const double x = values_[a.id()];
  if (x == 0.0) throw NumericalError("reciprocal of zero");
  return push({.op = Op::kReciprocal, .a = a.id()}, 1.0 / x, "reciprocal");
}

DiffValue Graph::square(DiffValue a) {
  check_owner(a);
  const double x = values_[a.id()];
  return push({.op = Op::kSquare, .a = a.id()}, x * x, "square");
}

std::pair<std::uint32_t, bool> Graph::record_ids(std::span<const DiffValue> values) {
  bool contiguous = true;
  for (std::size_t k = 0; k < values.size(); ++k) {
    check_owner(values[k]);
    if (values[k].id() != values[0].id() + k) contiguous = false;
  }
  if (values.empty()) return {0, true};
  if (contiguous) return {values[0].id(), true};
  const auto offset = static_cast<std::uint32_t>(operands_.size());
  for (const DiffValue& v : values) operands_.push_back(v.id());
  return {offset, false};
}

DiffValue Graph::affine(std::span<const DiffValue> weights, std::span<const DiffValue> inputs,
                        DiffValue bias) {
  if (weights.size() != inputs.size()) throw ShapeError("affine: length mismatch");
  check_owner(bias);
  const auto [wa, wc] = record_ids(weights);
  const auto [xb, xc] = record_ids(inputs);
  const auto n = static_cast<std::uint32_t>(weights.size());
  double acc = values_[bias.id()];
  for (std::uint32_t k = 0; k < n; ++k) {
    acc += values_[id_at(wa, wc, k)] * values_[id_at(xb, xc, k)];
  }
  return push({.op = Op::kAffine,
               .a_contiguous = wc,
               .b_contiguous = xc,
               .a = wa,
               .b = xb,
               .c = bias.id(),
               .n = n},
              acc, "affine");
}

DiffValue Graph::sum(std::span<const DiffValue> terms) {
  if (terms.empty()) throw ShapeError("sum of no terms");
  const auto [start, contiguous] = record_ids(terms);
  const auto n = static_cast<std::uint32_t>(terms.size());
  double acc = 0.0;
  for (std::uint32_t k = 0; k < n; ++k) acc += values_[id_at(start, contiguous, k)];
  return push({.op = Op::kSum, .a_contiguous = contiguous, .a = start, .n = n}, acc, "sum");
}

void Graph::backward(DiffValue root) {
  check_owner(root);
  if (backward_done_) {
    throw StaleGradientError("backward() called twice without reset_gradients()");
  }
  grads_.assign(nodes_.size(), 0.0);
  grads_[root.id()] = 1.0;

  for (std::int64_t i = root.id(); i >= 0; --i) {
    const Node& node = nodes_[static_cast<std::size_t>(i)];
    const double g = grads_[static_cast<std::size_t>(i)];
    if (g == 0.0 || node.op == Op::kLeaf) continue;
    const double out = values_[static_cast<std::size_t>(i)];
    switch (node.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        grads_[node.a] += g;
        grads_[node.b] += g;
        break;
      case Op::kSub:
        grads_[node.a] += g;
        grads_[node.b] -= g;
        break;
      case Op::kMul:
        grads_[node.a] += g * values_[node.b];
        grads_[node.b] += g * values_[node.a];
        break;
      case Op::kDiv: {
        const double denom = values_[node.b];
        grads_[node.a] += g / denom;
        grads_[node.b] -= g * out / denom;
        break;
      }
      case Op::kNeg:
        grads_[node.a] -= g;
        break;
      case Op::kScale:
        grads_[node.a] += g * node.k0;
        break;
      case Op::kPowInt:
        grads_[node.a] +=
            g * node.exponent * std::pow(values_[node.a], node.exponent - 1);
        break;
      case Op::kExp:
        grads_[node.a] += g * out;
        break;
      case Op::kTanh:
        grads_[node.a] += g * (1.0 - out * out);
        break;
      case Op::kElu:
        grads_[node.a] += g * (values_[node.a] > 0.0 ? 1.0 : out + 1.0);
        break;
      case Op::kMaxZero:
        if (values_[node.a] > 0.0) grads_[node.a] += g;
        break;
      case Op::kReciprocal:
        grads_[node.a] -= g * out * out;
        break;
      case Op::kSquare:
        grads_[node.a] += 2.0 * g * values_[node.a];
        break;
      case Op::kAffine:
        grads_[node.c] += g;
        if (node.a_contiguous && node.b_contiguous) {
          for (std::uint32_t k = 0; k < node.n; ++k) {
            const double w = values_[node.a + k];
            const double x = values_[node.b + k];
            grads_[node.a + k] += g * x;
            grads_[node.b + k] += g * w;
          }
        } else {
          for (std::uint32_t k = 0; k < node.n; ++k) {
            const std::uint32_t wi = id_at(node.a, node.a_contiguous, k);
            const std::uint32_t xi = id_at(node.b, node.b_contiguous, k);
            const double w = values_[wi];
            const double x = values_[xi];
            grads_[wi] += g * x;
            grads_[xi] += g * w;
          }
        }
        break;
      case Op::kSum:
        for (std::uint32_t k = 0; k < node.n; ++k) {
          grads_[id_at(node.a, node.a_contiguous, k)] += g;
        }
        break;
    }
  }
  backward_done_ = true;
}

void Graph::reset_gradients() {
  grads_.clear();
  backward_done_ = false;
}

std::vector<double> Graph::gradients(std::span<const DiffValue> nodes) const {
  std::vector<double> out;
  out.reserve(nodes.size());
  for (const DiffValue& v : nodes) {
    check_owner(v);
    out.push_back(grad(v.id()));
  }
  return out;
}

}  // namespace cnode
