#include "semcs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "semcs/error.hpp"

namespace semcs {

namespace F = torch::nn::functional;

namespace {

constexpr double kSymmetryTolerance = 1e-8;
constexpr double kDegreeFloor = 1e-12;
constexpr double kConstantTolerance = 1e-9;

void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0.0) v = -v;
}

}  // namespace

SaliencyMask::SaliencyMask(int64_t height, int64_t width, std::vector<uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height_ < 1 || width_ < 1 || static_cast<int64_t>(values_.size()) != height_ * width_) {
    throw InvalidInput("mask dimensions do not match its value count");
  }
  for (uint8_t v : values_) {
    if (v > 1) throw InvalidInput("mask values must be 0 or 1");
  }
}

SaliencyMask SaliencyMask::full(int64_t height, int64_t width) {
  return {height, width, std::vector<uint8_t>(static_cast<size_t>(height * width), 1)};
}

double SaliencyMask::coverage() const noexcept {
  if (values_.empty()) return 0.0;
  const auto ones = std::count(values_.begin(), values_.end(), uint8_t{1});
  return static_cast<double>(ones) / static_cast<double>(values_.size());
}

SaliencyMask SaliencyMask::complement() const {
  auto flipped = values_;
  for (auto& v : flipped) v = static_cast<uint8_t>(1 - v);
  return {height_, width_, std::move(flipped)};
}

torch::Tensor SaliencyMask::as_tensor(torch::ScalarType dtype) const {
  auto bytes = torch::from_blob(const_cast<uint8_t*>(values_.data()), {height_, width_}, torch::kUInt8);
  return bytes.to(dtype);
}

Eigen::MatrixXd to_eigen(const torch::Tensor& rows) {
  auto t = rows.detach().to(torch::kFloat64).contiguous();
  if (t.dim() != 2) throw InvalidInput("expected a 2-D feature matrix");
  Eigen::MatrixXd out(t.size(0), t.size(1));
  auto acc = t.accessor<double, 2>();
  for (int64_t i = 0; i < t.size(0); ++i) {
    for (int64_t j = 0; j < t.size(1); ++j) out(i, j) = acc[i][j];
  }
  return out;
}

AffinityMatrix cosine_affinity(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 1 || rows.cols() < 1) throw InvalidInput("affinity needs a nonempty feature matrix");
  if (!rows.allFinite()) throw InvalidInput("feature rows must be finite");
  Eigen::VectorXd norms = rows.rowwise().norm().cwiseMax(1e-12);
  Eigen::MatrixXd unit = norms.cwiseInverse().asDiagonal() * rows;
  Eigen::MatrixXd gram = unit * unit.transpose();
  AffinityMatrix out;
  out.weights = (0.5 * (gram + gram.transpose())).cwiseMax(0.0);
  return out;
}

AffinityMatrix build_affinity(const DenseFeatureMap& features) {
  if (features.rows() < 4) throw InvalidInput("affinity needs at least 4 patches, got " + std::to_string(features.rows()));
  if (features.features.size(0) != features.rows()) throw InvalidInput("feature row count does not match the grid");
  return cosine_affinity(to_eigen(features.features));
}

Eigen::MatrixXd normalized_laplacian(const AffinityMatrix& affinity) {
  const auto& w = affinity.weights;
  Eigen::VectorXd inv_sqrt = w.rowwise().sum().cwiseMax(kDegreeFloor).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd scaled = inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Identity(w.rows(), w.cols()) - scaled;
  return 0.5 * (laplacian + laplacian.transpose());
}

EigenSystem laplacian_eigendecomposition(const AffinityMatrix& affinity, int64_t k) {
  const auto& w = affinity.weights;
  const int64_t n = w.rows();
  if (w.rows() != w.cols() || n < 2) throw InvalidInput("affinity matrix must be square with n >= 2");
  if (k < 2 || k > n) {
    throw InvalidInput("eigenpair count must satisfy 2 <= k <= n (k=" + std::to_string(k) + ", n=" + std::to_string(n) +
                       ")");
  }
  if (!w.allFinite()) throw InvalidInput("affinity matrix has non-finite entries");
  if (w.minCoeff() < 0.0) throw InvalidInput("affinity matrix has negative entries");
  const double asymmetry = (w - w.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > kSymmetryTolerance) {
    throw InvalidInput("affinity matrix is not symmetric (max |W - W^T| = " + std::to_string(asymmetry) + ")");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(normalized_laplacian(affinity));
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "Laplacian eigensolver did not converge (n=" << n << ", status=" << static_cast<int>(solver.info())
        << ", degree range [" << w.rowwise().sum().minCoeff() << ", " << w.rowwise().sum().maxCoeff() << "])";
    throw NumericError(msg.str());
  }

  EigenSystem out;
  out.eigenvalues = solver.eigenvalues().head(k);
  out.eigenvectors = solver.eigenvectors().leftCols(k);
  for (int64_t j = 0; j < k; ++j) canonicalize_sign(out.eigenvectors.col(j));
  out.degrees = w.rowwise().sum().cwiseMax(kDegreeFloor);
  return out;
}

SaliencyMask extract_salient_mask(const Eigen::VectorXd& fiedler, GridShape grid, int64_t height, int64_t width) {
  const int64_t n = grid.height * grid.width;
  if (grid.height < 1 || grid.width < 1 || fiedler.size() != n) {
    throw InvalidInput("Fiedler vector length " + std::to_string(fiedler.size()) + " does not match a " +
                       std::to_string(grid.height) + "x" + std::to_string(grid.width) + " grid");
  }
  if (height < 1 || width < 1) throw InvalidInput("mask target size must be positive");
  if (!fiedler.allFinite()) throw NumericError("Fiedler vector has non-finite entries");
  if (fiedler.maxCoeff() - fiedler.minCoeff() < kConstantTolerance) {
    throw DegenerateMask("Fiedler vector is constant; the patch graph has no partition");
  }

  const double mean = fiedler.mean();
  int64_t above_area = 0;
  int64_t above_border = 0;
  int64_t below_border = 0;
  for (int64_t r = 0; r < grid.height; ++r) {
    for (int64_t c = 0; c < grid.width; ++c) {
      const bool above = fiedler[r * grid.width + c] > mean;
      const bool border = r == 0 || c == 0 || r == grid.height - 1 || c == grid.width - 1;
      above_area += above ? 1 : 0;
      if (border) (above ? above_border : below_border) += 1;
    }
  }
  const int64_t below_area = n - above_area;
  bool foreground_is_above = true;
  if (above_border != below_border) {
    foreground_is_above = above_border < below_border;
  } else if (above_area != below_area) {
    foreground_is_above = above_area < below_area;
  }

  auto coarse = torch::empty({1, 1, grid.height, grid.width}, torch::kFloat64);
  auto* data = coarse.data_ptr<double>();
  for (int64_t i = 0; i < n; ++i) {
    const bool above = fiedler[i] > mean;
    data[i] = above == foreground_is_above ? 1.0 : 0.0;
  }
  auto fine = F::interpolate(coarse, F::InterpolateFuncOptions()
                                         .size(std::vector<int64_t>{height, width})
                                         .mode(torch::kBilinear)
                                         .align_corners(false))
                  .reshape({-1})
                  .contiguous();
  const auto* up = fine.data_ptr<double>();
  std::vector<uint8_t> values(static_cast<size_t>(height * width));
  for (int64_t i = 0; i < height * width; ++i) values[static_cast<size_t>(i)] = up[i] >= 0.5 ? 1 : 0;
  return {height, width, std::move(values)};
}

MaskResult compute_mask(const torch::Tensor& image, const DenseFeatureExtractor& extractor,
                        const SaliencyParams& params) {
  const auto features = extractor.extract_dense_features(image);
  const auto affinity = build_affinity(features);
  if (affinity.weights.minCoeff() >= params.uniform_affinity) {
    throw DegenerateMask("patch features are uniform (min affinity " + std::to_string(affinity.weights.minCoeff()) +
                         "); no salient object to separate");
  }
  const int64_t k = std::min<int64_t>(std::max<int64_t>(params.eigenpairs, 2), affinity.size());

  MaskResult result;
  result.eigensystem = laplacian_eigendecomposition(affinity, k);
  result.grid = {features.grid_h, features.grid_w};
  result.fiedler_vector = result.eigensystem.eigenvectors.col(1);
  result.fiedler_value = result.eigensystem.eigenvalues[1];
  result.mask = extract_salient_mask(result.fiedler_vector, result.grid, image.size(1), image.size(2));
  result.coverage = result.mask.coverage();
  if (result.coverage < params.min_coverage || result.coverage > params.max_coverage) {
    throw DegenerateMask("salient mask coverage " + std::to_string(result.coverage) + " outside [" +
                         std::to_string(params.min_coverage) + ", " + std::to_string(params.max_coverage) + "]");
  }
  return result;
}

}  // namespace semcs
