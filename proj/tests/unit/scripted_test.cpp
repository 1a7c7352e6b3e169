#include <gtest/gtest.h>

#include "../support.hpp"
#include "semcs/error.hpp"
#include "semcs/losses.hpp"
#include "semcs/metrics.hpp"

// Tiny random TorchScript modules written by make_scripted_fixtures.py; they
// follow the export contracts but carry no semantics.
namespace {

std::filesystem::path fixtures() { return SEMCS_FIXTURE_DIR; }

class Scripted : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!std::filesystem::exists(fixtures() / "dino_vits8_keys.pt")) GTEST_SKIP() << "fixtures not generated";
  }
};

TEST_F(Scripted, DenseDropsClassTokenAndKeepsGrid) {
  const auto dense = semcs::make_dense_extractor("dino-vits8", fixtures());
  const auto f = dense->extract_dense_features(testing_support::coffee().tensor());
  EXPECT_EQ(f.grid_h, 28);
  EXPECT_EQ(f.grid_w, 28);
  EXPECT_EQ(f.rows(), 784);
  EXPECT_EQ(f.features.size(1), 6);
  EXPECT_TRUE(torch::isfinite(f.features).all().item<bool>());
}

TEST_F(Scripted, ImageAndTextShareDimension) {
  const auto image = semcs::make_image_encoder("clip-rn50-softmax3d", fixtures());
  const auto text = semcs::make_text_encoder("clip-text", fixtures());
  EXPECT_EQ(image->dim(), 8);
  EXPECT_EQ(text->dim(), 8);
  const auto e = image->encode_image(testing_support::random_image(3, 50, 70));
  EXPECT_NEAR(e.values.norm().item<double>(), 1.0, 1e-5);
  const auto a = text->encode_text("Snowy");
  EXPECT_TRUE(torch::equal(a.values, text->encode_text("Snowy").values));
  EXPECT_NEAR(a.values.norm().item<double>(), 1.0, 1e-5);
}

TEST_F(Scripted, ContentTupleMapsToNamedLayers) {
  const auto content = semcs::make_content_extractor("vgg19", fixtures());
  const auto set = content->extract_content_features(testing_support::coffee().tensor());
  ASSERT_EQ(set.layers.size(), 2u);
  EXPECT_EQ(set.layers[0].second.size(-1), 32);
  EXPECT_EQ(set.layers[1].second.size(-1), 16);
}

TEST_F(Scripted, GradientsFlowThroughScriptedEncoders) {
  semcs::EncoderConfig config = semcs::EncoderConfig::pretrained();
  config.weights_dir = fixtures();
  const auto suite = semcs::load_encoders(config);
  const semcs::ContentImage content(testing_support::random_image(4, 64, 64));
  const semcs::SemanticObjective objective(suite, content, testing_support::left_half(64, 64), "Red Rocks", "Snowy",
                                           {});
  auto output = testing_support::random_image(5, 64, 64).requires_grad_(true);
  const auto total = objective.evaluate(output).total;
  EXPECT_TRUE(std::isfinite(total.item<double>()));
  const auto g = torch::autograd::grad({total}, {output})[0];
  EXPECT_GT(g.abs().sum().item<double>(), 0.0);
}

TEST_F(Scripted, MetricsLoadAndScore) {
  semcs::MetricConfig config;
  config.weights_dir = fixtures();
  const auto suite = semcs::load_metrics(config);
  EXPECT_EQ(suite.dists->id(), "dists-vgg16");
  const auto x = testing_support::random_image(6, 48, 48);
  const auto y = testing_support::random_image(7, 48, 48);
  EXPECT_LE(suite.dists->score(x, x), 1e-4);
  const double d = suite.dists->score(x, y);
  EXPECT_GE(d, 0.0);
  EXPECT_LE(d, 1.0);
  const double s = suite.nima->score(x);
  EXPECT_GE(s, 1.0);
  EXPECT_LE(s, 10.0);
}

}  // namespace
