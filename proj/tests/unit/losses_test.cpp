#include <gtest/gtest.h>

#include <random>

#include "../oracles.hpp"
#include "../support.hpp"
#include "semcs/error.hpp"
#include "semcs/losses.hpp"

namespace {

using testing_support::builtin_encoders;
using testing_support::random_image;

constexpr double kPinnedBlurContentLoss = 1.128800940932706e-4;

torch::Tensor vec(std::initializer_list<double> values) { return torch::tensor(std::vector<double>(values), torch::kFloat64); }

torch::Tensor box_blur(const torch::Tensor& chw) {
  namespace F = torch::nn::functional;
  auto padded = F::pad(chw.unsqueeze(0), F::PadFuncOptions({2, 2, 2, 2}).mode(torch::kReplicate));
  return F::avg_pool2d(padded, F::AvgPool2dFuncOptions(5).stride(1)).squeeze(0);
}

semcs::SaliencyMask random_mask(std::mt19937_64& rng, int64_t h, int64_t w) {
  std::bernoulli_distribution coin(0.4);
  std::vector<uint8_t> values(static_cast<size_t>(h * w));
  for (auto& v : values) v = coin(rng) ? 1 : 0;
  values[0] = 1;
  values[1] = 0;
  return {h, w, std::move(values)};
}

TEST(DirectionalLoss, ParallelOrthogonalAntiparallel) {
  const auto d = vec({0.3, -1.2, 0.5});
  EXPECT_NEAR(semcs::directional_loss(d, d).item<double>(), 0.0, 1e-12);
  EXPECT_NEAR(semcs::directional_loss(-d, d).item<double>(), 2.0, 1e-12);
  EXPECT_NEAR(semcs::directional_loss(vec({1, 0, 0}), vec({0, 2, 0})).item<double>(), 1.0, 1e-12);
}

TEST(DirectionalLoss, PositiveScalingInvariance) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    auto a = torch::empty({8}, torch::kFloat64);
    auto b = torch::empty({8}, torch::kFloat64);
    for (int i = 0; i < 8; ++i) {
      a[i] = n(rng);
      b[i] = n(rng);
    }
    const double base = semcs::directional_loss(a, b).item<double>();
    for (double s : {1e-3, 0.5, 7.0, 1e4}) {
      EXPECT_NEAR(semcs::directional_loss(a * s, b).item<double>(), base, 1e-12);
      EXPECT_NEAR(semcs::directional_loss(a, b * s).item<double>(), base, 1e-12);
    }
  }
}

TEST(DirectionalLoss, VanishingDirectionIsOrthogonal) {
  EXPECT_EQ(semcs::directional_loss(torch::zeros({4}, torch::kFloat64), vec({1, 2, 3, 4})).item<double>(), 1.0);
  EXPECT_EQ(semcs::directional_loss(vec({1, 2, 3, 4}), vec({1e-9, 0, 0, 0})).item<double>(), 1.0);
  auto z = torch::zeros({4}, torch::kFloat64).requires_grad_(true);
  auto loss = semcs::directional_loss(z, vec({1, 2, 3, 4}));
  const auto g = torch::autograd::grad({loss}, {z})[0];
  EXPECT_TRUE(torch::equal(g, torch::zeros_like(g)));
}

TEST(DirectionalLoss, Errors) {
  EXPECT_THROW(semcs::directional_loss(vec({1, std::nan("")}), vec({1, 0})), semcs::NumericError);
  EXPECT_THROW(semcs::directional_loss(vec({1, 0}), vec({1, 0, 0})), semcs::InvalidInput);
}

TEST(TextDirection, Basics) {
  const auto& text = *builtin_encoders().text;
  EXPECT_EQ(semcs::text_direction(text, "Photo").norm(), 0.0);
  const double n = semcs::text_direction(text, "Snowy", "Photo").norm();
  EXPECT_GT(n, 0.0);
  EXPECT_LE(n, 2.0);
  EXPECT_THROW(semcs::text_direction(text, ""), semcs::InvalidInput);
}

TEST(ImageDirection, Basics) {
  const auto& image = *builtin_encoders().image;
  const semcs::ContentImage content(random_image(3, 48, 48));
  EXPECT_EQ(semcs::image_direction(image, content.tensor(), content).norm(), 0.0);
  const auto black = semcs::image_direction(image, torch::zeros({3, 48, 48}, torch::kFloat64), content);
  EXPECT_TRUE(torch::isfinite(black.values).all().item<bool>());
  EXPECT_LE(black.norm(), 2.0 + 1e-12);
  EXPECT_THROW(semcs::image_direction(image, torch::zeros({3, 40, 48}, torch::kFloat64), content),
               semcs::InvalidInput);
}

TEST(TotalVariation, HandExamples) {
  EXPECT_EQ(semcs::tv_loss(torch::full({3, 9, 7}, 0.3)).item<double>(), 0.0);
  EXPECT_EQ(semcs::tv_loss(torch::tensor({0.0, 1.0}, torch::kFloat64).view({1, 1, 2})).item<double>(), 1.0);

  const double board[2][2] = {{0, 1}, {1, 0}};
  // Neighbour pairs: two horizontal, two vertical; every pair differs by 1.
  double horizontal = 0.0;
  double vertical = 0.0;
  for (int r = 0; r < 2; ++r) horizontal += std::pow(board[r][1] - board[r][0], 2);
  for (int c = 0; c < 2; ++c) vertical += std::pow(board[1][c] - board[0][c], 2);
  const double expected = horizontal / 2.0 + vertical / 2.0;
  const auto t = torch::tensor({0.0, 1.0, 1.0, 0.0}, torch::kFloat64).view({1, 2, 2});
  EXPECT_NEAR(semcs::tv_loss(t).item<double>(), expected, 1e-12);
  EXPECT_EQ(expected, 2.0);
}

TEST(ContentLoss, IdentityPositivityAndPin) {
  const auto photo = testing_support::coffee();
  const auto& content = *builtin_encoders().content;
  EXPECT_EQ(semcs::content_loss(content, photo.tensor(), photo).item<double>(), 0.0);
  const double blurred = semcs::content_loss(content, box_blur(photo.tensor()), photo).item<double>();
  EXPECT_GT(blurred, 0.0);
  // Regression value for coffee_256.png vs its 5x5 box blur.
  EXPECT_NEAR(blurred, kPinnedBlurContentLoss, 1e-6 * std::abs(kPinnedBlurContentLoss));
  EXPECT_THROW(semcs::content_loss(content, torch::zeros({3, 128, 256}), photo), semcs::InvalidInput);
}

TEST(Composition, WeightArithmetic) {
  const semcs::LossWeights unit{1.0, 1.0, 1.0};
  EXPECT_NEAR(semcs::compose_total(0.5, 0.25, 0.1, 0.05, unit).total, 0.9, 1e-15);
  EXPECT_EQ(semcs::compose_total(0.7, 0.3, 4.0, 9.0, {0.0, 0.0, 0.0}).total, 0.7);
  EXPECT_THROW(semcs::compose_total(0.1, 0.1, 0.1, 0.1, {-1.0, 1.0, 1.0}), semcs::InvalidInput);
  EXPECT_THROW(semcs::LossWeights({1.0, std::nan(""), 1.0}).validate(), semcs::InvalidInput);
}

TEST(GlobalLosses, RangeSymmetryAndMaskLocality) {
  const auto& suite = builtin_encoders();
  std::mt19937_64 rng(12);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const semcs::ContentImage content(random_image(100 + seed, 40, 56));
    const auto output = random_image(200 + seed, 40, 56);
    const auto mask = random_mask(rng, 40, 56);

    const double fg = semcs::global_foreground_loss(suite, output, content, mask, "Snowy").item<double>();
    const double bg = semcs::global_background_loss(suite, output, content, mask, "Desert Sand").item<double>();
    EXPECT_GE(fg, 0.0);
    EXPECT_LE(fg, 2.0);
    EXPECT_GE(bg, 0.0);
    EXPECT_LE(bg, 2.0);
    EXPECT_EQ(bg, semcs::global_foreground_loss(suite, output, content, mask.complement(), "Desert Sand").item<double>());

    const auto m = mask.as_tensor(torch::kFloat64).unsqueeze(0);
    const auto noise = random_image(300 + seed, 40, 56);
    const auto bg_perturbed = output * m + noise * (1 - m);
    const auto fg_perturbed = output * (1 - m) + noise * m;
    EXPECT_EQ(semcs::global_foreground_loss(suite, bg_perturbed, content, mask, "Snowy").item<double>(), fg);
    EXPECT_EQ(semcs::global_background_loss(suite, fg_perturbed, content, mask, "Desert Sand").item<double>(), bg);
  }
}

TEST(GlobalLosses, DegenerateMaskRejected) {
  const semcs::ContentImage content(random_image(1, 32, 32));
  EXPECT_THROW(semcs::global_foreground_loss(builtin_encoders(), content.tensor(), content,
                                             semcs::SaliencyMask::full(32, 32), "Snowy"),
               semcs::InvalidInput);
}

TEST(SemanticObjective, MatchesStandaloneTerms) {
  const auto& suite = builtin_encoders();
  const semcs::ContentImage content(random_image(7, 64, 64));
  const auto mask = testing_support::left_half(64, 64);
  const auto output = random_image(8, 64, 64);
  const semcs::LossWeights weights{0.7, 150.0, 2e-3};
  const semcs::SemanticObjective objective(suite, content, mask, "Red Rocks", "Snowy", weights);
  const auto terms = objective.evaluate(output).breakdown();
  EXPECT_NEAR(terms.fglob, semcs::global_foreground_loss(suite, output, content, mask, "Red Rocks").item<double>(), 1e-12);
  EXPECT_NEAR(terms.bglob, semcs::global_background_loss(suite, output, content, mask, "Snowy").item<double>(), 1e-12);
  EXPECT_NEAR(terms.content, semcs::content_loss(*suite.content, output, content).item<double>(), 1e-12);
  EXPECT_NEAR(terms.tv, semcs::tv_loss(output).item<double>(), 1e-15);
  EXPECT_NEAR(terms.total, terms.fglob + 0.7 * terms.bglob + 150.0 * terms.content + 2e-3 * terms.tv, 1e-12);
}

TEST(SemanticObjective, ImageGradientMatchesFiniteDifferences) {
  const auto& suite = builtin_encoders();
  const semcs::ContentImage content(random_image(21, 16, 16));
  const semcs::SemanticObjective objective(suite, content, testing_support::left_half(16, 16), "Red Rocks", "Snowy",
                                           {});
  auto output = random_image(22, 16, 16).requires_grad_(true);
  const auto grad = torch::autograd::grad({objective.evaluate(output).total}, {output})[0];

  auto probe = output.detach().clone();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int64_t> pick(0, probe.numel() - 1);
  std::vector<double> analytic;
  std::vector<double> numeric;
  for (int i = 0; i < 24; ++i) {
    const auto idx = pick(rng);
    auto flat = probe.view(-1);
    const double original = flat[idx].item<double>();
    auto f = [&](double shift) {
      flat[idx] = original + shift;
      const double v = objective.evaluate(probe).total.item<double>();
      flat[idx] = original;
      return v;
    };
    numeric.push_back(oracle::central_difference(f, 1e-6));
    analytic.push_back(grad.view(-1)[idx].item<double>());
  }
  EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-3);
}

}  // namespace
