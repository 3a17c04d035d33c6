#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "cnode/adam.hpp"
#include "cnode/diff.hpp"
#include "cnode/mlp.hpp"
#include "cnode/param_io.hpp"
#include "cnode/rng.hpp"
#include "support/fd.hpp"

namespace cnode {
namespace {

TEST(Mlp, IdentityLinearLayer) {
  const Mlp net({Layer::linear(2, 2)});
  const std::vector<double> params = {1, 0, 0, 1, 0, 0};
  const std::vector<double> x = {1.0, 2.0};
  EXPECT_EQ(net.forward<double>(params, x), x);
}

TEST(Mlp, ZeroWeightsGiveZeroThroughActivations) {
  const Mlp net = Mlp::parse("8,tanh,8,elu", 3, 2);
  const std::vector<double> params(net.param_count(), 0.0);
  const std::vector<double> x = {5.0, -3.0, 0.25};
  for (double y : net.forward<double>(params, x)) EXPECT_EQ(y, 0.0);
}

TEST(Mlp, PresetParameterCounts) {
  EXPECT_EQ(Mlp::preset("wpg").param_count(), 1U * 50 + 50 + 50 * 50 + 50 + 50 * 1 + 1);
  EXPECT_EQ(Mlp::preset("wpg").param_count(), 2701U);
  EXPECT_EQ(Mlp::preset("cr").param_count(), 4U * 50 + 50 + 50 * 64 + 64 + 64 * 50 + 50 + 50 * 4 + 4);
  EXPECT_EQ(Mlp::preset("dho").param_count(), 2U * 50 + 50 + 50 * 50 + 50 + 50 * 2 + 2);
  EXPECT_EQ(Mlp::preset("wpg").describe(), "50,tanh,50,elu");
  EXPECT_EQ(Mlp::preset("cr").describe(), "50,tanh,64,elu,50,tanh");
}

TEST(Mlp, ParamCountIsSumOverLinearLayers) {
  const Mlp net = Mlp::parse("7,elu,3", 5, 2);
  EXPECT_EQ(net.param_count(), 5U * 7 + 7 + 7 * 3 + 3 + 3 * 2 + 2);
  EXPECT_EQ(net.input_dim(), 5U);
  EXPECT_EQ(net.output_dim(), 2U);
}

TEST(Mlp, ParseRejectsBadInput) {
  EXPECT_THROW(Mlp::parse("tanh,5", 1, 1), ConfigError);
  EXPECT_THROW(Mlp::parse("5,relu", 1, 1), ConfigError);
  EXPECT_THROW(Mlp::parse("cr", 1, 1), ConfigError);
  EXPECT_THROW(Mlp::preset("nope"), ConfigError);
}

TEST(Mlp, ConstructorValidatesShapes) {
  EXPECT_THROW(Mlp({}), ShapeError);
  EXPECT_THROW(Mlp({Layer::tanh(), Layer::linear(1, 1)}), ShapeError);
  EXPECT_THROW(Mlp({Layer::linear(2, 3), Layer::linear(4, 1)}), ShapeError);
}

TEST(Mlp, ForwardShapeErrors) {
  const Mlp net = Mlp::preset("dho");
  const std::vector<double> params(net.param_count(), 0.1);
  const std::vector<double> wrong_input = {1.0};
  EXPECT_THROW(net.forward<double>(params, wrong_input), ShapeError);
  const std::vector<double> short_params(10, 0.1);
  const std::vector<double> x = {1.0, 2.0};
  EXPECT_THROW(net.forward<double>(short_params, x), ShapeError);
}

// Mean-squared output against finite differences, for each preset.
class PresetGradient : public ::testing::TestWithParam<const char*> {};

TEST_P(PresetGradient, MeanSquaredOutputMatchesFiniteDifferences) {
  const Mlp net = Mlp::preset(GetParam());
  const std::vector<double> theta = init_params(net, 5);
  std::vector<double> input(net.input_dim());
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = 0.3 * static_cast<double>(i) - 0.4;

  auto mso = [&](std::span<const double> p) {
    const auto y = net.forward<double>(p, input);
    double s = 0.0;
    for (double v : y) s += v * v;
    return s / static_cast<double>(y.size());
  };

  Graph g;
  const auto params = g.variables(theta);
  const auto x = g.variables(input);
  const auto y = net.forward<DiffValue>(params, x);
  std::vector<DiffValue> squares;
  for (const auto& v : y) squares.push_back(square(v));
  const DiffValue root = g.sum(squares) * (1.0 / static_cast<double>(y.size()));
  g.backward(root);

  const auto fd = testing::central_difference(mso, theta);
  int bad = 0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!testing::gradients_agree(params[i].grad(), fd[i], 1e-4, 1e-7)) {
      ++bad;
      ADD_FAILURE() << GetParam() << " param " << i << ": " << params[i].grad() << " vs " << fd[i];
      if (bad > 5) break;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Presets, PresetGradient, ::testing::Values("wpg", "cr", "dho"));

TEST(Init, DeterministicPerSeed) {
  const Mlp net = Mlp::preset("wpg");
  EXPECT_EQ(init_params(net, 42), init_params(net, 42));
  EXPECT_NE(init_params(net, 42), init_params(net, 43));
}

TEST(Init, GlorotBoundsAndZeroBias) {
  const Mlp net = Mlp::preset("wpg");
  const auto theta = init_params(net, 9);
  std::size_t offset = 0;
  for (const Layer& layer : net.layers()) {
    if (layer.kind != LayerKind::kLinear) continue;
    const double a = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    if (layer.in == 50 && layer.out == 50) EXPECT_NEAR(a, 0.2449, 1e-4);
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) {
      EXPECT_GT(theta[offset + i], -a);
      EXPECT_LT(theta[offset + i], a);
    }
    offset += layer.in * layer.out;
    for (std::size_t i = 0; i < layer.out; ++i) EXPECT_EQ(theta[offset + i], 0.0);
    offset += layer.out;
  }
  EXPECT_EQ(offset, theta.size());
}

TEST(Prng, UniformIsOpenUnitInterval) {
  Prng rng(0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / 100000.0, 0.5, 5e-3);
}

TEST(Prng, KnownXoshiroStream) {
  // Reference values of splitmix64 from seed 0 and the first xoshiro256** output.
  SplitMix64 sm(0);
  EXPECT_EQ(sm.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(sm.next(), 0x6e789e6aa1b965f4ULL);
  Prng a(123), b(123);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Prng, NormalMoments) {
  Prng rng(5);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  AdamOptions opts;
  opts.learning_rate = 1e-3;
  AdamState state(3, opts);
  std::vector<double> p = {1.0, -2.0, 0.5};
  const std::vector<double> g = {0.3, -4.0, 1e-3};
  const std::vector<double> before = p;
  adam_step(state, p, g);
  EXPECT_EQ(state.step_count, 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    // m_hat = g and v_hat = g^2 after one step, so the move is lr * g / (|g| + eps).
    const double expected = -opts.learning_rate * g[i] / (std::abs(g[i]) + opts.epsilon);
    EXPECT_NEAR(p[i] - before[i], expected, 1e-15);
    EXPECT_NEAR(std::abs(p[i] - before[i]), opts.learning_rate, 1e-8);
  }
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  AdamState state(2, AdamOptions{});
  std::vector<double> p = {0.25, -7.0};
  adam_step(state, p, std::vector<double>{0.0, 0.0});
  EXPECT_EQ(p, (std::vector<double>{0.25, -7.0}));
}

TEST(Adam, QuadraticBowlConverges) {
  // l = theta^2 from theta = 1 at lr 0.1. Adam's momentum carries the iterate
  // past 0 at step 12, so |theta| shrinks strictly only on the approach; after
  // that it oscillates with decaying amplitude.
  AdamOptions opts;
  opts.learning_rate = 0.1;
  AdamState state(1, opts);
  std::vector<double> theta = {1.0};
  double previous = 1.0;
  for (int k = 1; k <= 100; ++k) {
    adam_step(state, theta, std::vector<double>{2.0 * theta[0]});
    if (k <= 11) {
      EXPECT_GT(theta[0], 0.0) << "step " << k;
      EXPECT_LT(std::abs(theta[0]), previous) << "step " << k;
    }
    if (k == 12) EXPECT_LT(theta[0], 0.0);
    previous = std::abs(theta[0]);
  }
  EXPECT_LT(std::abs(theta[0]), 0.01);
}

TEST(Adam, Errors) {
  AdamState state(2, AdamOptions{});
  std::vector<double> p = {0.0, 0.0};
  EXPECT_THROW(adam_step(state, p, std::vector<double>{1.0}), ShapeError);
  EXPECT_THROW(adam_step(state, p, std::vector<double>{1.0, std::nan("")}), NumericalError);
  EXPECT_THROW(adam_step(state, p, std::vector<double>{1.0, std::numeric_limits<double>::infinity()}),
               NumericalError);
}

TEST(Adam, Deterministic) {
  auto run = [] {
    AdamState s(2, AdamOptions{});
    std::vector<double> p = {0.1, 0.2};
    for (int i = 0; i < 20; ++i) adam_step(s, p, std::vector<double>{std::sin(i * 1.0), 0.5});
    return p;
  };
  EXPECT_EQ(run(), run());
}

class ParamFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("cnode-params-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(ParamFile, RoundTripIsBitExact) {
  const auto theta = init_params(Mlp::preset("cr"), 3);
  std::vector<double> special = theta;
  special.push_back(-0.0);
  special.push_back(5e-324);
  special.push_back(1.7976931348623157e308);
  write_params(dir_ / "p.bin", special);
  const auto back = read_params(dir_ / "p.bin");
  ASSERT_EQ(back.size(), special.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(special[i]));
  }
}

TEST_F(ParamFile, HeaderAndLittleEndianLayout) {
  write_params(dir_ / "p.bin", std::vector<double>{1.0});
  std::ifstream in(dir_ / "p.bin", std::ios::binary);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "cnode-params v1 1");
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  ASSERT_EQ(in.gcount(), 8);
  // 1.0 = 0x3FF0000000000000, least significant byte first.
  const unsigned char expected[8] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  for (int i = 0; i < 8; ++i) EXPECT_EQ(bytes[i], expected[i]) << i;
}

TEST_F(ParamFile, Errors) {
  EXPECT_THROW(read_params(dir_ / "missing.bin"), MissingArtifactError);
  {
    std::ofstream out(dir_ / "bad.bin", std::ios::binary);
    out << "not a header\n";
  }
  EXPECT_THROW(read_params(dir_ / "bad.bin"), ConfigError);
  {
    std::ofstream out(dir_ / "short.bin", std::ios::binary);
    out << "cnode-params v1 3\n" << std::string(8, '\0');
  }
  EXPECT_THROW(read_params(dir_ / "short.bin"), ConfigError);
}

}  // namespace
}  // namespace cnode
