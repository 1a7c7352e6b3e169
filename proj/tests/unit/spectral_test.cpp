#include <gtest/gtest.h>

#include <random>

#include "../oracles.hpp"
#include "../support.hpp"
#include "semcs/error.hpp"
#include "semcs/spectral.hpp"

namespace {

using semcs::AffinityMatrix;
using semcs::GridShape;

oracle::Matrix to_rows(const Eigen::MatrixXd& m) {
  oracle::Matrix out(static_cast<size_t>(m.rows()), std::vector<double>(static_cast<size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<size_t>(i)][static_cast<size_t>(j)] = m(i, j);
  }
  return out;
}

AffinityMatrix random_affinity(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) w(i, j) = w(j, i) = u(rng);
  }
  return {w};
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

TEST(JacobiOracle, ReconstructsItsInput) {
  std::mt19937_64 rng(11);
  const auto w = random_affinity(rng, 9);
  const auto a = to_rows(w.weights);
  const auto spectrum = oracle::jacobi(a);
  for (size_t k = 0; k < spectrum.values.size(); ++k) {
    for (size_t i = 0; i < a.size(); ++i) {
      double av = 0.0;
      for (size_t j = 0; j < a.size(); ++j) av += a[i][j] * spectrum.vectors[k][j];
      EXPECT_NEAR(av, spectrum.values[k] * spectrum.vectors[k][i], 1e-10);
    }
  }
}

TEST(Affinity, ToyThreeRows) {
  Eigen::MatrixXd rows(3, 2);
  rows << 1, 0, 1, 0, 0, 1;
  const auto w = semcs::cosine_affinity(rows).weights;
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 1, 0, 1, 1, 0, 0, 0, 1;
  EXPECT_LE((w - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Affinity, IdenticalAndOrthogonalRows) {
  Eigen::MatrixXd rows(4, 3);
  rows << 0.3, 0.4, 0.0, 0.6, 0.8, 0.0, 0.0, 0.0, 2.0, -0.3, -0.4, 0.0;
  const auto w = semcs::cosine_affinity(rows).weights;
  EXPECT_NEAR(w(0, 1), 1.0, 1e-6);
  EXPECT_EQ(w(0, 2), 0.0);
  EXPECT_EQ(w(0, 3), 0.0);  // cosine -1 clamped
  EXPECT_EQ(w, w.transpose());
  EXPECT_GE(w.minCoeff(), 0.0);
}

TEST(Affinity, FeatureMapNeedsFourPatches) {
  semcs::DenseFeatureMap map;
  map.grid_h = 1;
  map.grid_w = 3;
  map.features = torch::rand({3, 5}, torch::kFloat64);
  EXPECT_THROW(semcs::build_affinity(map), semcs::InvalidInput);
  map.grid_w = 4;
  map.features = torch::rand({4, 5}, torch::kFloat64);
  EXPECT_EQ(semcs::build_affinity(map).size(), 4);
}

TEST(Laplacian, MatchesHandBuiltMatrix) {
  std::mt19937_64 rng(3);
  auto w = random_affinity(rng, 7);
  w.weights.row(2).setZero();
  w.weights.col(2).setZero();  // isolated vertex exercises the degree floor
  const auto l = semcs::normalized_laplacian(w);
  const auto ref = oracle::normalized_laplacian(to_rows(w.weights));
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) EXPECT_NEAR(l(i, j), ref[static_cast<size_t>(i)][static_cast<size_t>(j)], 1e-14);
  }
}

TEST(Eigendecomposition, MatchesJacobiOnRandomEightByEight) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto w = random_affinity(rng, 8);
    const auto sys = semcs::laplacian_eigendecomposition(w, 8);
    const auto ref = oracle::jacobi(oracle::normalized_laplacian(to_rows(w.weights)));
    for (int k = 0; k < 8; ++k) {
      EXPECT_NEAR(sys.eigenvalues(k), ref.values[static_cast<size_t>(k)], 1e-6);
      double dot = 0.0;
      for (int i = 0; i < 8; ++i) dot += sys.eigenvectors(i, k) * ref.vectors[static_cast<size_t>(k)][static_cast<size_t>(i)];
      EXPECT_NEAR(std::abs(dot), 1.0, 1e-6) << "eigenvector " << k;
    }
  }
}

TEST(Eigendecomposition, NullSpaceIsSqrtDegree) {
  std::mt19937_64 rng(5);
  const auto w = random_affinity(rng, 10);
  const auto sys = semcs::laplacian_eigendecomposition(w, 3);
  EXPECT_NEAR(sys.eigenvalues(0), 0.0, 1e-6);
  // y0 proportional to D^1/2 1, so y0 / sqrt(d) is constant.
  Eigen::VectorXd rescaled = sys.eigenvectors.col(0).array() / sys.degrees.array().sqrt();
  EXPECT_LE(rescaled.maxCoeff() - rescaled.minCoeff(), 1e-8);
}

TEST(Eigendecomposition, TwoCliquesSplitBySecondVector) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(6, 6);
  w.topLeftCorner(3, 3).setConstant(1.0);
  w.bottomRightCorner(3, 3).setConstant(0.5);
  const auto sys = semcs::laplacian_eigendecomposition({w}, 2);
  EXPECT_NEAR(sys.eigenvalues(1), 0.0, 1e-6);
  const auto y1 = sys.eigenvectors.col(1);
  for (int i = 1; i < 3; ++i) EXPECT_EQ(y1(i) > 0, y1(0) > 0);
  for (int i = 3; i < 6; ++i) EXPECT_NE(y1(i) > 0, y1(0) > 0);
}

TEST(Eigendecomposition, OutputInvariants) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + trial;
    const auto sys = semcs::laplacian_eigendecomposition(random_affinity(rng, n), std::min(n, 5));
    for (int k = 0; k < sys.k(); ++k) {
      if (k > 0) EXPECT_LE(sys.eigenvalues(k - 1), sys.eigenvalues(k));
      EXPECT_GE(sys.eigenvalues(k), -1e-6);
      EXPECT_LE(sys.eigenvalues(k), 2.0 + 1e-6);
      EXPECT_NEAR(sys.eigenvectors.col(k).norm(), 1.0, 1e-10);
      for (int j = 0; j < k; ++j) EXPECT_NEAR(sys.eigenvectors.col(k).dot(sys.eigenvectors.col(j)), 0.0, 1e-5);
    }
  }
}

TEST(Eigendecomposition, RejectsBadInput) {
  std::mt19937_64 rng(1);
  auto w = random_affinity(rng, 5);
  EXPECT_THROW(semcs::laplacian_eigendecomposition(w, 1), semcs::InvalidInput);
  EXPECT_THROW(semcs::laplacian_eigendecomposition(w, 6), semcs::InvalidInput);
  auto asym = w;
  asym.weights(0, 1) += 1e-6;
  EXPECT_THROW(semcs::laplacian_eigendecomposition(asym, 2), semcs::InvalidInput);
  auto negative = w;
  negative.weights(0, 1) = negative.weights(1, 0) = -0.1;
  EXPECT_THROW(semcs::laplacian_eigendecomposition(negative, 2), semcs::InvalidInput);
  auto nan = w;
  nan.weights(2, 2) = std::nan("");
  EXPECT_THROW(semcs::laplacian_eigendecomposition(nan, 2), semcs::InvalidInput);
}

TEST(SalientMask, TwoByTwoSelectsOneColumn) {
  const double a = 0.5;
  const auto mask = semcs::extract_salient_mask(vec({a, -a, a, -a}), GridShape{2, 2}, 2, 2);
  // Both regions touch the border equally and have equal area: the side above the mean wins.
  EXPECT_EQ(mask.values(), (std::vector<uint8_t>{1, 0, 1, 0}));
}

TEST(SalientMask, CentralBlockIsForeground) {
  Eigen::VectorXd y = Eigen::VectorXd::Constant(64, -1.0);
  for (int r = 3; r < 5; ++r) {
    for (int c = 3; c < 5; ++c) y(r * 8 + c) = 1.0;
  }
  const auto mask = semcs::extract_salient_mask(y, GridShape{8, 8}, 8, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) EXPECT_EQ(mask.at(r, c), (r >= 3 && r < 5 && c >= 3 && c < 5) ? 1 : 0);
  }
  // Flipping the sign of y1 must not flip the answer.
  EXPECT_EQ(semcs::extract_salient_mask(-y, GridShape{8, 8}, 8, 8), mask);
}

TEST(SalientMask, CornerPatchOnSixBySix) {
  std::vector<int> patch(36, 0);
  patch[0] = patch[1] = patch[6] = 1;
  std::vector<int> rest(36);
  for (size_t i = 0; i < 36; ++i) rest[i] = 1 - patch[i];
  // Hand enumeration: the patch has 3 border cells, the rest 17.
  ASSERT_EQ(oracle::border_cells(patch, 6, 6), 3);
  ASSERT_EQ(oracle::border_cells(rest, 6, 6), 17);

  Eigen::VectorXd y(36);
  for (int i = 0; i < 36; ++i) y(i) = patch[static_cast<size_t>(i)] ? 1.0 : -0.2;
  const auto mask = semcs::extract_salient_mask(y, GridShape{6, 6}, 6, 6);
  for (int i = 0; i < 36; ++i) EXPECT_EQ(mask.values()[static_cast<size_t>(i)], patch[static_cast<size_t>(i)]);
}

TEST(SalientMask, UpsampledMaskStaysBinary) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd y(49);
  for (int i = 0; i < 49; ++i) y(i) = n(rng);
  const auto mask = semcs::extract_salient_mask(y, GridShape{7, 7}, 61, 90);
  EXPECT_EQ(mask.height(), 61);
  EXPECT_EQ(mask.width(), 90);
  for (auto v : mask.values()) EXPECT_TRUE(v == 0 || v == 1);
}

TEST(SalientMask, ConstantShiftKeepsMask) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd y(100);
    for (int i = 0; i < 100; ++i) y(i) = n(rng);
    const auto base = semcs::extract_salient_mask(y, GridShape{10, 10}, 40, 40);
    const auto shifted = semcs::extract_salient_mask((y.array() + 3.25).matrix(), GridShape{10, 10}, 40, 40);
    EXPECT_EQ(base, shifted);
  }
}

TEST(SalientMask, ConstantVectorIsDegenerate) {
  EXPECT_THROW(semcs::extract_salient_mask(Eigen::VectorXd::Constant(16, 0.25), GridShape{4, 4}, 8, 8),
               semcs::DegenerateMask);
  EXPECT_THROW(semcs::extract_salient_mask(Eigen::VectorXd::Constant(15, 0.25), GridShape{4, 4}, 8, 8),
               semcs::InvalidInput);
}

TEST(MaskAlgebra, PartitionIdentityIsExact) {
  const auto x = testing_support::random_image(2, 32, 48, torch::kFloat32);
  const auto mask = testing_support::left_half(32, 48).as_tensor(torch::kFloat32);
  const auto fg = mask * x;
  const auto bg = (1 - mask) * x;
  EXPECT_TRUE(torch::equal(fg + bg, x));
}

TEST(SaliencyMaskType, RejectsNonBinaryAndWrongSize) {
  EXPECT_THROW(semcs::SaliencyMask(2, 2, {0, 1, 2, 0}), semcs::InvalidInput);
  EXPECT_THROW(semcs::SaliencyMask(2, 2, {0, 1, 1}), semcs::InvalidInput);
  const semcs::SaliencyMask m(2, 2, {0, 1, 1, 1});
  EXPECT_DOUBLE_EQ(m.coverage(), 0.75);
  EXPECT_DOUBLE_EQ(m.complement().coverage(), 0.25);
}

TEST(ComputeMask, ConstantImageIsDegenerate) {
  const auto gray = torch::full({3, 128, 128}, 0.4);
  EXPECT_THROW(semcs::compute_mask(gray, *testing_support::builtin_encoders().dense), semcs::DegenerateMask);
}

TEST(ComputeMask, DeterministicAndScaleInvariant) {
  const auto image = testing_support::coffee();
  const auto& dense = *testing_support::builtin_encoders().dense;
  const auto a = semcs::compute_mask(image.tensor(), dense);
  const auto b = semcs::compute_mask(image.tensor(), dense);
  EXPECT_EQ(a.mask, b.mask);

  auto features = dense.extract_dense_features(image.tensor());
  const auto base_vector = semcs::laplacian_eigendecomposition(semcs::build_affinity(features), 2).eigenvectors.col(1);
  const auto base = semcs::extract_salient_mask(base_vector, {features.grid_h, features.grid_w}, 256, 256);
  for (double scale : {0.01, 3.7, 250.0}) {
    auto scaled = features;
    scaled.features = features.features * scale;
    const auto y = semcs::laplacian_eigendecomposition(semcs::build_affinity(scaled), 2).eigenvectors.col(1);
    EXPECT_EQ(semcs::extract_salient_mask(y, {features.grid_h, features.grid_w}, 256, 256), base) << scale;
  }
}

}  // namespace
