#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "cnode/diff.hpp"
#include "cnode/mlp.hpp"
#include "cnode/psi.hpp"
#include "cnode/rng.hpp"
#include "support/fd.hpp"

namespace cnode {
namespace {

TEST(Diff, MulRecordsProductRule) {
  Graph g;
  const DiffValue a = g.variable(2.0);
  const DiffValue b = g.variable(3.0);
  const DiffValue c = a * b;
  EXPECT_EQ(c.value(), 6.0);
  g.backward(c);
  EXPECT_EQ(a.grad(), 3.0);
  EXPECT_EQ(b.grad(), 2.0);
}

TEST(Diff, MaxZeroInactiveHinge) {
  Graph g;
  const DiffValue x = g.variable(-1.5);
  const DiffValue y = max_zero(x);
  EXPECT_EQ(y.value(), 0.0);
  g.backward(y);
  EXPECT_EQ(x.grad(), 0.0);
}

TEST(Diff, MaxZeroSubgradientAtZeroIsZero) {
  Graph g;
  const DiffValue x = g.variable(0.0);
  g.backward(max_zero(x));
  EXPECT_EQ(x.grad(), 0.0);
}

TEST(Diff, TanhAtZero) {
  Graph g;
  const DiffValue x = g.variable(0.0);
  const DiffValue y = tanh(x);
  EXPECT_EQ(y.value(), 0.0);
  g.backward(y);
  EXPECT_EQ(x.grad(), 1.0);
}

TEST(Diff, SquareOfVariable) {
  Graph g;
  const DiffValue x = g.variable(3.0);
  g.backward(x * x);
  EXPECT_EQ(x.grad(), 6.0);
}

TEST(Diff, PsiDerivativeAtOne) {
  Graph g;
  const DiffValue x = g.variable(1.0);
  g.backward(psi(x));
  EXPECT_DOUBLE_EQ(x.grad(), 0.25);
}

TEST(Diff, SharedSubexpressionsAccumulate) {
  Graph g;
  const DiffValue x = g.variable(2.0);
  g.backward(x * x + x);
  EXPECT_EQ(x.grad(), 5.0);
}

TEST(Diff, GradIsZeroBeforeBackward) {
  Graph g;
  const DiffValue x = g.variable(2.0);
  const DiffValue y = exp(x);
  EXPECT_EQ(x.grad(), 0.0);
  EXPECT_EQ(y.grad(), 0.0);
}

TEST(Diff, SecondBackwardWithoutResetIsStale) {
  Graph g;
  const DiffValue x = g.variable(2.0);
  const DiffValue y = x * x;
  g.backward(y);
  EXPECT_THROW(g.backward(y), StaleGradientError);
  g.reset_gradients();
  EXPECT_NO_THROW(g.backward(y));
  EXPECT_EQ(x.grad(), 4.0);
}

TEST(Diff, CrossGraphOperandsRejected) {
  Graph g1;
  Graph g2;
  const DiffValue a = g1.variable(1.0);
  const DiffValue b = g2.variable(1.0);
  EXPECT_THROW(a + b, GraphMismatchError);
  EXPECT_THROW(g1.mul(b, a), GraphMismatchError);
}

TEST(Diff, DetachedValueRejected) {
  const DiffValue detached;
  EXPECT_THROW((void)detached.value(), GraphMismatchError);
}

TEST(Diff, NonFiniteResultsFailFast) {
  Graph g;
  const DiffValue zero = g.variable(0.0);
  const DiffValue one = g.variable(1.0);
  EXPECT_THROW(one / zero, NumericalError);
  EXPECT_THROW(reciprocal(zero), NumericalError);
  EXPECT_THROW(exp(g.variable(1000.0)), NumericalError);
  EXPECT_THROW(g.variable(std::numeric_limits<double>::quiet_NaN()), NumericalError);
  EXPECT_THROW(one / 0.0, NumericalError);
}

TEST(Diff, EluBranches) {
  Graph g;
  const DiffValue neg = g.variable(-1.0);
  const DiffValue pos = g.variable(2.0);
  const DiffValue root = elu(neg) + elu(pos);
  EXPECT_DOUBLE_EQ(root.value(), std::expm1(-1.0) + 2.0);
  g.backward(root);
  EXPECT_DOUBLE_EQ(neg.grad(), std::exp(-1.0));
  EXPECT_EQ(pos.grad(), 1.0);
}

// Every primitive against central differences at random points in [-5, 5].
struct Primitive {
  const char* name;
  std::function<DiffValue(DiffValue, DiffValue)> diff;
  std::function<double(double, double)> real;
  bool positive_b = false;  // keep the second operand away from zero
};

std::vector<Primitive> primitives() {
  return {
      {"add", [](DiffValue a, DiffValue b) { return a + b; }, [](double a, double b) { return a + b; }},
      {"sub", [](DiffValue a, DiffValue b) { return a - b; }, [](double a, double b) { return a - b; }},
      {"mul", [](DiffValue a, DiffValue b) { return a * b; }, [](double a, double b) { return a * b; }},
      {"div", [](DiffValue a, DiffValue b) { return a / b; }, [](double a, double b) { return a / b; },
       true},
      {"neg", [](DiffValue a, DiffValue) { return -a; }, [](double a, double) { return -a; }},
      {"scale", [](DiffValue a, DiffValue) { return 2.5 * a - 1.0; },
       [](double a, double) { return 2.5 * a - 1.0; }},
      {"pow3", [](DiffValue a, DiffValue) { return pow_int(a, 3); },
       [](double a, double) { return a * a * a; }},
      {"exp", [](DiffValue a, DiffValue) { return exp(a); }, [](double a, double) { return std::exp(a); }},
      {"tanh", [](DiffValue a, DiffValue) { return tanh(a); },
       [](double a, double) { return std::tanh(a); }},
      {"elu", [](DiffValue a, DiffValue) { return elu(a); }, [](double a, double) { return elu(a); }},
      {"max_zero", [](DiffValue a, DiffValue) { return max_zero(a); },
       [](double a, double) { return a > 0 ? a : 0.0; }},
      {"reciprocal", [](DiffValue, DiffValue b) { return reciprocal(b); },
       [](double, double b) { return 1.0 / b; }, true},
      {"square", [](DiffValue a, DiffValue) { return square(a); }, [](double a, double) { return a * a; }},
  };
}

TEST(Diff, PrimitivesMatchFiniteDifferences) {
  Prng rng(7);
  for (const Primitive& p : primitives()) {
    for (int trial = 0; trial < 200; ++trial) {
      double a = rng.uniform(-5.0, 5.0);
      double b = rng.uniform(-5.0, 5.0);
      if (p.positive_b && std::abs(b) < 0.5) b = b < 0 ? -0.5 : 0.5;
      if (std::string(p.name) == "max_zero" && std::abs(a) < 1e-4) a = 1.0;

      Graph g;
      const DiffValue va = g.variable(a);
      const DiffValue vb = g.variable(b);
      const DiffValue out = p.diff(va, vb);
      EXPECT_DOUBLE_EQ(out.value(), p.real(a, b)) << p.name;
      g.backward(out);

      const auto fd = testing::central_difference(
          [&](std::span<const double> x) { return p.real(x[0], x[1]); }, {a, b});
      EXPECT_TRUE(testing::gradients_agree(va.grad(), fd[0], 1e-5, 1e-7))
          << p.name << " d/da at a=" << a << " b=" << b << ": " << va.grad() << " vs " << fd[0];
      EXPECT_TRUE(testing::gradients_agree(vb.grad(), fd[1], 1e-5, 1e-7))
          << p.name << " d/db at a=" << a << " b=" << b << ": " << vb.grad() << " vs " << fd[1];
    }
  }
}

TEST(Diff, AffineAndSumMatchExpandedForm) {
  Prng rng(3);
  std::vector<double> w(6), x(6);
  for (auto& v : w) v = rng.uniform(-2, 2);
  for (auto& v : x) v = rng.uniform(-2, 2);
  const double bias = 0.3;

  Graph g;
  const auto vw = g.variables(w);
  const auto vx = g.variables(x);
  const DiffValue vb = g.variable(bias);
  const DiffValue a = g.affine(vw, vx, vb);
  std::vector<DiffValue> terms = {a, square(a), vx[0]};
  const DiffValue root = g.sum(terms);
  g.backward(root);

  double expect_a = bias;
  for (std::size_t i = 0; i < w.size(); ++i) expect_a += w[i] * x[i];
  EXPECT_NEAR(a.value(), expect_a, 1e-14);
  const double dr_da = 1.0 + 2.0 * expect_a;
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_NEAR(vw[i].grad(), dr_da * x[i], 1e-12);
    EXPECT_NEAR(vx[i].grad(), dr_da * w[i] + (i == 0 ? 1.0 : 0.0), 1e-12);
  }
  EXPECT_NEAR(vb.grad(), dr_da, 1e-12);
}

TEST(Diff, AffineLengthMismatchIsShapeError) {
  Graph g;
  const std::vector<double> two = {1.0, 2.0};
  const std::vector<double> three = {1.0, 2.0, 3.0};
  const auto w = g.variables(two);
  const auto x = g.variables(three);
  EXPECT_THROW(g.affine(w, x, g.variable(0.0)), ShapeError);
}

TEST(Diff, TwentyParameterMlpMatchesFiniteDifferences) {
  // 2 -> 4 -> tanh -> 2: 2*4+4 + 4*2+2 = 22 parameters; take the first 20 as
  // free and keep the rest fixed.
  const Mlp net({Layer::linear(2, 4), Layer::tanh(), Layer::linear(4, 2)});
  ASSERT_EQ(net.param_count(), 22U);
  const std::vector<double> theta = init_params(net, 11);
  const std::vector<double> input = {0.4, -0.7};

  auto scalar_output = [&](std::span<const double> p) {
    const auto y = net.forward<double>(p, input);
    return y[0] * y[0] + 0.5 * y[1];
  };

  Graph g;
  const auto params = g.variables(theta);
  const auto in = g.variables(input);
  const auto y = net.forward<DiffValue>(params, in);
  const DiffValue root = y[0] * y[0] + 0.5 * y[1];
  EXPECT_NEAR(root.value(), scalar_output(theta), 1e-14);
  g.backward(root);

  const auto fd = testing::central_difference(scalar_output, theta);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_TRUE(testing::gradients_agree(params[i].grad(), fd[i], 1e-4, 1e-7))
        << "param " << i << ": " << params[i].grad() << " vs " << fd[i];
  }
}

TEST(Diff, EvaluationIsBitDeterministic) {
  auto run = [] {
    Graph g;
    DiffValue x = g.variable(0.7);
    for (int i = 0; i < 50; ++i) x = tanh(x * 1.3 + 0.1) + elu(x - 0.5) * 0.2;
    g.backward(x);
    return std::pair{x.value(), g.grad(0)};
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace cnode
