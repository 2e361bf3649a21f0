#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msvm2 {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// One training or query point per row; rows are contiguous.
using PointMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class KernelFamily { kLinear, kGaussian, kPolynomial };

/// Base positive semidefinite kernel plus an optional index-based diagonal
/// offset. The offset is added to the training Gram matrix only: entry
/// (i, i) becomes k(x_i, x_i) + diagonal_offset. With diagonal_offset =
/// 1/(2C) the hard-margin machine on the modified kernel is the quadratic
/// loss machine with soft-margin parameter C.
class KernelSpec {
 public:
  static KernelSpec linear(double diagonal_offset = 0.0);
  /// exp(-gamma * |x - x'|^2), gamma > 0.
  static KernelSpec gaussian(double gamma, double diagonal_offset = 0.0);
  /// (scale * <x, x'> + offset)^degree, degree >= 1, scale > 0, offset >= 0.
  static KernelSpec polynomial(int degree, double scale, double offset,
                               double diagonal_offset = 0.0);

  /// Parses the command-line syntax: `linear`, `rbf,gamma=G`,
  /// `poly,degree=D,scale=A,offset=B` (scale and offset default to 1).
  static KernelSpec parse(std::string_view text);

  /// Builds a kernel of `family` from a parameter tuple: () for linear,
  /// (gamma) for gaussian, (degree, scale, offset) for polynomial.
  static KernelSpec from_params(KernelFamily family,
                                std::span<const double> params,
                                double diagonal_offset = 0.0);

  KernelSpec with_diagonal_offset(double diagonal_offset) const;

  KernelFamily family() const noexcept { return family_; }
  double gamma() const noexcept { return gamma_; }
  int degree() const noexcept { return degree_; }
  double scale() const noexcept { return scale_; }
  double poly_offset() const noexcept { return poly_offset_; }
  double diagonal_offset() const noexcept { return diagonal_offset_; }

  /// Family parameters as a tuple, in the order accepted by from_params.
  std::vector<double> params() const;
  /// Command-line form, e.g. `rbf,gamma=0.5`. Does not mention the offset.
  std::string describe() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

 private:
  KernelSpec() = default;

  KernelFamily family_ = KernelFamily::kLinear;
  double gamma_ = 0.0;
  int degree_ = 1;
  double scale_ = 1.0;
  double poly_offset_ = 0.0;
  double diagonal_offset_ = 0.0;
};

std::string_view family_name(KernelFamily family);
KernelFamily parse_family(std::string_view name);

/// Base kernel value k(x, x'); never includes the diagonal offset.
double eval_kernel(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y);

/// Symmetric training Gram matrix, diagonal offset included.
class GramMatrix {
 public:
  GramMatrix(Matrix entries, double offset);

  Eigen::Index order() const noexcept { return entries_.rows(); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const {
    return entries_(i, j);
  }
  double offset() const noexcept { return offset_; }
  bool offset_applied() const noexcept { return offset_ != 0.0; }

  /// Same matrix with every entry multiplied by `factor` > 0.
  GramMatrix scaled(double factor) const;
  /// Principal submatrix on the given indices.
  GramMatrix subset(std::span<const Eigen::Index> indices) const;

 private:
  Matrix entries_;
  double offset_;
};

/// Relative tolerance for PSD validation of Gram matrices.
inline constexpr double kPsdTolerance = 1e-8;

GramMatrix build_gram(const KernelSpec& spec, const PointMatrix& points);

/// Rectangular matrix of base kernel values, entry (i, q) = k(x_i, z_q).
/// Query points never share a training index, so no offset is applied.
Matrix cross_gram(const KernelSpec& spec, const PointMatrix& train,
                  const PointMatrix& query);

/// Smallest eigenvalue >= -kPsdTolerance * largest eigenvalue.
bool is_psd(const Matrix& symmetric, double relative_tolerance = kPsdTolerance);

}  // namespace msvm2
