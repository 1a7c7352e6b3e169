#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "../oracles.hpp"
#include "../support.hpp"
#include "semcs/error.hpp"
#include "semcs/optimizer.hpp"
#include "semcs/style_network.hpp"

namespace {

constexpr float kPinnedFirstWeight = 0.23517929f;

// (in, out, kernel) of every convolution, written out independently of the library table.
struct Conv {
  int64_t in;
  int64_t out;
  int64_t k;
};

int64_t count_parameters(const std::vector<Conv>& convs) {
  int64_t total = 0;
  for (const auto& c : convs) total += c.in * c.out * c.k * c.k + c.out;
  return total;
}

TEST(StyleNet, ParameterCountFromArchitecture) {
  const std::vector<Conv> convs = {
      {3, 16, 3},    {16, 16, 3},                                               // full resolution
      {16, 32, 3},   {32, 32, 3},   {32, 64, 3}, {64, 64, 3},                    // 1/2, 1/4
      {64, 128, 3},  {128, 128, 3},                                             // 1/8
      {128, 128, 3}, {128, 128, 3}, {128, 128, 3}, {128, 128, 3},               // two residual blocks
      {128, 64, 3},  {128, 64, 3},  {64, 32, 3}, {64, 32, 3}, {32, 16, 3}, {32, 16, 3},  // decoder, skips concat
      {16, 3, 1}};
  const auto params = semcs::init_stylenet(7);
  EXPECT_EQ(params.parameter_count(), count_parameters(convs));
  EXPECT_EQ(params.parameter_count(), 1077667);
  EXPECT_EQ(params.architecture_id, semcs::kStyleNetArchitecture);
  EXPECT_EQ(params.tensors.size(), 2 * convs.size());
}

TEST(StyleNet, SeededInitialization) {
  const auto a = semcs::init_stylenet(7);
  const auto b = semcs::init_stylenet(7);
  const auto c = semcs::init_stylenet(8);
  bool any_differs = false;
  for (size_t i = 0; i < a.tensors.size(); ++i) {
    EXPECT_TRUE(torch::equal(a.tensors[i].second, b.tensors[i].second)) << a.tensors[i].first;
    any_differs = any_differs || !torch::equal(a.tensors[i].second, c.tensors[i].second);
  }
  EXPECT_TRUE(any_differs);
  // Platform-stable generator: pin one weight.
  EXPECT_FLOAT_EQ(a.get("enc0a.weight").flatten()[0].item<float>(), kPinnedFirstWeight);
}

TEST(StyleNet, ShapeRangeAndDeterminism) {
  const auto params = semcs::init_stylenet(3);
  for (auto [h, w] : std::vector<std::pair<int64_t, int64_t>>{{256, 256}, {64, 64}, {70, 101}, {9, 13}}) {
    const auto x = testing_support::random_image(h * 1000 + w, h, w, torch::kFloat32);
    const auto y = semcs::stylize(params, x);
    ASSERT_EQ(y.sizes(), x.sizes());
    EXPECT_GE(y.min().item<float>(), 0.0f);
    EXPECT_LE(y.max().item<float>(), 1.0f);
    EXPECT_TRUE(torch::equal(y, semcs::stylize(params, x)));
  }
}

TEST(StyleNet, NonFiniteParametersRejected) {
  auto params = semcs::init_stylenet(1);
  params.tensors[4].second.view(-1)[0] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(semcs::stylize(params, torch::rand({3, 16, 16})), semcs::NumericError);
}

TEST(StyleNet, ParameterGradientMatchesFiniteDifferences) {
  const auto params = semcs::init_stylenet(5, torch::kFloat64);
  const auto x = testing_support::random_image(17, 16, 16);
  auto trainable = params.trainable();
  for (auto& t : trainable) t.requires_grad_(true);
  auto probe = semcs::stylize(params, x).mean();
  const auto grads = torch::autograd::grad({probe}, trainable);

  // Three entries from each of a few tensors spread through the network.
  std::mt19937_64 rng(99);
  std::vector<double> analytic;
  std::vector<double> numeric;
  for (size_t t : {0u, 5u, 14u, 21u, 30u, 37u}) {
    auto flat = trainable[t].detach().view(-1);
    std::uniform_int_distribution<int64_t> pick(0, flat.numel() - 1);
    for (int j = 0; j < 3; ++j) {
      const auto idx = pick(rng);
      const double original = flat[idx].item<double>();
      auto f = [&](double shift) {
        flat[idx] = original + shift;
        const double v = semcs::stylize(params, x).mean().item<double>();
        flat[idx] = original;
        return v;
      };
      numeric.push_back(oracle::central_difference(f, 1e-5));
      analytic.push_back(grads[t].view(-1)[idx].item<double>());
    }
  }
  EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-3);
}

TEST(Checkpoint, RoundTripAndValidation) {
  const auto dir = std::filesystem::temp_directory_path() / "semcs_ckpt_test";
  const auto params = semcs::init_stylenet(42);
  semcs::save_checkpoint(dir / "net.ckpt", params);
  const auto loaded = semcs::load_checkpoint(dir / "net.ckpt");
  EXPECT_EQ(loaded.seed, 42u);
  EXPECT_EQ(loaded.architecture_id, params.architecture_id);
  ASSERT_EQ(loaded.tensors.size(), params.tensors.size());
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    EXPECT_EQ(loaded.tensors[i].first, params.tensors[i].first);
    EXPECT_TRUE(torch::equal(loaded.tensors[i].second, params.tensors[i].second));
  }
  {
    std::ofstream garbage(dir / "bad.ckpt", std::ios::binary);
    garbage << "not a checkpoint";
  }
  EXPECT_THROW(semcs::load_checkpoint(dir / "bad.ckpt"), semcs::ConfigurationError);
  EXPECT_THROW(semcs::load_checkpoint(dir / "missing.ckpt"), semcs::ConfigurationError);
}

TEST(Adam, FirstTwoStepsMatchHandRecurrence) {
  auto theta = torch::tensor({0.5, -1.25, 2.0}, torch::kFloat64);
  semcs::AdamState state({theta});
  const semcs::AdamSettings settings{.learning_rate = 0.1};
  std::vector<double> expected{0.5, -1.25, 2.0};
  std::vector<double> m(3, 0.0);
  std::vector<double> v(3, 0.0);
  const std::vector<std::vector<double>> gradients{{0.2, -3.0, 0.0}, {-0.1, 1.0, 4.0}};
  for (int step = 0; step < 2; ++step) {
    const auto& g = gradients[static_cast<size_t>(step)];
    semcs::optimization_step({theta}, {torch::tensor(g, torch::kFloat64)}, state, settings);
    expected = oracle::adam_step(expected, g, 0.1, 0.9, 0.999, 1e-8, step + 1, m, v);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(theta[i].item<double>(), expected[static_cast<size_t>(i)], 1e-15);
    if (step == 0) {
      // Bias correction makes the first step lr * sign(g); a zero gradient stays put.
      EXPECT_NEAR(theta[0].item<double>(), 0.4, 1e-7);
      EXPECT_NEAR(theta[1].item<double>(), -1.15, 1e-7);
      EXPECT_EQ(theta[2].item<double>(), 2.0);
    }
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto theta = torch::tensor({1.0, 2.0}, torch::kFloat64);
  const auto before = theta.clone();
  semcs::AdamState state({theta});
  semcs::optimization_step({theta}, {torch::zeros({2}, torch::kFloat64)}, state, {});
  EXPECT_TRUE(torch::equal(theta, before));
}

TEST(Adam, DescendsConvexQuadratic) {
  auto theta = torch::tensor({3.0, -2.0}, torch::kFloat64);
  semcs::AdamState state({theta});
  auto loss = [&] { return theta.square().sum().item<double>(); };
  double previous = loss();
  for (int i = 0; i < 20; ++i) {
    semcs::optimization_step({theta}, {2.0 * theta}, state, {.learning_rate = 0.05});
    const double now = loss();
    EXPECT_LT(now, previous);
    previous = now;
  }
}

TEST(Adam, NonFiniteGradientLeavesEverythingUntouched) {
  auto a = torch::tensor({1.0}, torch::kFloat64);
  auto b = torch::tensor({2.0}, torch::kFloat64);
  semcs::AdamState state({a, b});
  EXPECT_THROW(semcs::optimization_step({a, b}, {torch::tensor({0.5}, torch::kFloat64),
                                                 torch::tensor({std::nan("")}, torch::kFloat64)},
                                        state, {}),
               semcs::NumericError);
  EXPECT_EQ(a.item<double>(), 1.0);
  EXPECT_EQ(state.steps, 0);
  EXPECT_EQ(state.first_moment[0].item<double>(), 0.0);
}

}  // namespace
