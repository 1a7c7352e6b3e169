#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <torch/torch.h>

#include "semcs/encoders.hpp"

namespace semcs {

/// Symmetric nonnegative patch-affinity matrix.
struct AffinityMatrix {
  Eigen::MatrixXd weights;

  [[nodiscard]] int64_t size() const noexcept { return weights.rows(); }
};

/// Smallest-k eigenpairs of the symmetric normalized Laplacian, ascending.
/// Column j of `eigenvectors` pairs with eigenvalues[j]; each column's
/// largest-magnitude entry is positive.
struct EigenSystem {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // n x k
  Eigen::VectorXd degrees;       // after the zero-degree floor

  [[nodiscard]] int64_t k() const noexcept { return eigenvalues.size(); }
};

struct GridShape {
  int64_t height = 0;
  int64_t width = 0;
};

/// Binary foreground map at image resolution, 1 = salient object.
class SaliencyMask {
 public:
  SaliencyMask() = default;
  SaliencyMask(int64_t height, int64_t width, std::vector<uint8_t> values);

  /// All-foreground mask (whole-image styling).
  static SaliencyMask full(int64_t height, int64_t width);

  [[nodiscard]] int64_t height() const noexcept { return height_; }
  [[nodiscard]] int64_t width() const noexcept { return width_; }
  [[nodiscard]] const std::vector<uint8_t>& values() const noexcept { return values_; }
  [[nodiscard]] uint8_t at(int64_t row, int64_t col) const { return values_[static_cast<size_t>(row * width_ + col)]; }
  [[nodiscard]] double coverage() const noexcept;
  [[nodiscard]] SaliencyMask complement() const;

  /// [H, W] tensor of 0/1 in `dtype`.
  [[nodiscard]] torch::Tensor as_tensor(torch::ScalarType dtype = torch::kFloat32) const;

  friend bool operator==(const SaliencyMask&, const SaliencyMask&) = default;

 private:
  int64_t height_ = 0;
  int64_t width_ = 0;
  std::vector<uint8_t> values_;
};

struct SaliencyParams {
  int64_t eigenpairs = 5;
  double min_coverage = 0.02;
  double max_coverage = 0.98;
  /// Feature maps whose smallest pairwise affinity reaches this have no partition.
  double uniform_affinity = 0.99;
};

struct MaskResult {
  SaliencyMask mask;
  double coverage = 0.0;
  double fiedler_value = 0.0;
  GridShape grid;
  Eigen::VectorXd fiedler_vector;
  EigenSystem eigensystem;
};

/// max(0, cosine) between all row pairs; any row count.
AffinityMatrix cosine_affinity(const Eigen::MatrixXd& rows);

/// Affinity of a dense feature map. Requires at least 4 patches.
AffinityMatrix build_affinity(const DenseFeatureMap& features);

/// I - D^-1/2 W D^-1/2 with zero degrees floored at 1e-12.
Eigen::MatrixXd normalized_laplacian(const AffinityMatrix& affinity);

/// Smallest-k eigenpairs of the normalized Laplacian. Requires 2 <= k <= n and
/// W symmetric within 1e-8, nonnegative, finite.
EigenSystem laplacian_eigendecomposition(const AffinityMatrix& affinity, int64_t k);

/// Thresholds the Fiedler vector at its mean over the patch grid, picks the side
/// with fewer border cells as foreground (ties: smaller area, then the side above
/// the mean), upsamples bilinearly to (height, width) and re-thresholds at 0.5.
SaliencyMask extract_salient_mask(const Eigen::VectorXd& fiedler, GridShape grid, int64_t height, int64_t width);

/// Full salient-object pipeline on one image.
/// Throws DegenerateMask for uniform features, a constant Fiedler vector, or
/// coverage outside [min_coverage, max_coverage].
MaskResult compute_mask(const torch::Tensor& image, const DenseFeatureExtractor& extractor,
                        const SaliencyParams& params = {});

/// Converts a [n, d] float tensor to an Eigen matrix.
Eigen::MatrixXd to_eigen(const torch::Tensor& rows);

}  // namespace semcs
