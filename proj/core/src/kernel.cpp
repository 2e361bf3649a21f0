#include "msvm2/kernel.hpp"

#include "msvm2/error.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <sstream>

namespace msvm2 {
namespace {

void require_offset(double diagonal_offset) {
  if (!(diagonal_offset >= 0.0) || !std::isfinite(diagonal_offset)) {
    throw InvalidArgument("kernel diagonal offset must be finite and >= 0");
  }
}

double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw InvalidArgument("invalid value for kernel parameter '" +
                          std::string(what) + "': '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

KernelSpec KernelSpec::linear(double diagonal_offset) {
  require_offset(diagonal_offset);
  KernelSpec spec;
  spec.family_ = KernelFamily::kLinear;
  spec.diagonal_offset_ = diagonal_offset;
  return spec;
}

KernelSpec KernelSpec::gaussian(double gamma, double diagonal_offset) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("gaussian kernel requires gamma > 0");
  }
  require_offset(diagonal_offset);
  KernelSpec spec;
  spec.family_ = KernelFamily::kGaussian;
  spec.gamma_ = gamma;
  spec.diagonal_offset_ = diagonal_offset;
  return spec;
}

KernelSpec KernelSpec::polynomial(int degree, double scale, double offset,
                                  double diagonal_offset) {
  if (degree < 1) throw InvalidArgument("polynomial kernel requires degree >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("polynomial kernel requires scale > 0");
  }
  if (!(offset >= 0.0) || !std::isfinite(offset)) {
    throw InvalidArgument("polynomial kernel requires offset >= 0");
  }
  require_offset(diagonal_offset);
  KernelSpec spec;
  spec.family_ = KernelFamily::kPolynomial;
  spec.degree_ = degree;
  spec.scale_ = scale;
  spec.poly_offset_ = offset;
  spec.diagonal_offset_ = diagonal_offset;
  return spec;
}

KernelSpec KernelSpec::parse(std::string_view text) {
  auto parts = split(text, ',');
  const KernelFamily family = parse_family(parts.front());
  double gamma = -1.0;
  double degree = -1.0;
  double scale = 1.0;
  double offset = 1.0;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto eq = parts[i].find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("kernel parameter must look like name=value: '" +
                            std::string(parts[i]) + "'");
    }
    auto name = parts[i].substr(0, eq);
    auto value = parse_number(parts[i].substr(eq + 1), name);
    if (family == KernelFamily::kGaussian && name == "gamma") {
      gamma = value;
    } else if (family == KernelFamily::kPolynomial && name == "degree") {
      degree = value;
    } else if (family == KernelFamily::kPolynomial && name == "scale") {
      scale = value;
    } else if (family == KernelFamily::kPolynomial && name == "offset") {
      offset = value;
    } else {
      throw InvalidArgument("unknown parameter '" + std::string(name) +
                            "' for kernel '" + std::string(parts.front()) + "'");
    }
  }
  switch (family) {
    case KernelFamily::kLinear:
      return linear();
    case KernelFamily::kGaussian:
      if (gamma < 0.0) throw InvalidArgument("rbf kernel needs gamma=G");
      return gaussian(gamma);
    case KernelFamily::kPolynomial:
      if (degree < 1.0 || degree != std::floor(degree)) {
        throw InvalidArgument("poly kernel needs an integer degree=D >= 1");
      }
      return polynomial(static_cast<int>(degree), scale, offset);
  }
  throw InvalidArgument("unreachable kernel family");
}

KernelSpec KernelSpec::from_params(KernelFamily family,
                                   std::span<const double> params,
                                   double diagonal_offset) {
  switch (family) {
    case KernelFamily::kLinear:
      if (!params.empty()) throw InvalidArgument("linear kernel takes no parameters");
      return linear(diagonal_offset);
    case KernelFamily::kGaussian:
      if (params.size() != 1) throw InvalidArgument("rbf kernel takes (gamma)");
      return gaussian(params[0], diagonal_offset);
    case KernelFamily::kPolynomial: {
      if (params.size() != 3) {
        throw InvalidArgument("poly kernel takes (degree, scale, offset)");
      }
      if (params[0] != std::floor(params[0])) {
        throw InvalidArgument("poly kernel degree must be an integer");
      }
      return polynomial(static_cast<int>(params[0]), params[1], params[2],
                        diagonal_offset);
    }
  }
  throw InvalidArgument("unreachable kernel family");
}

KernelSpec KernelSpec::with_diagonal_offset(double diagonal_offset) const {
  require_offset(diagonal_offset);
  KernelSpec copy = *this;
  copy.diagonal_offset_ = diagonal_offset;
  return copy;
}

std::vector<double> KernelSpec::params() const {
  switch (family_) {
    case KernelFamily::kLinear:
      return {};
    case KernelFamily::kGaussian:
      return {gamma_};
    case KernelFamily::kPolynomial:
      return {static_cast<double>(degree_), scale_, poly_offset_};
  }
  return {};
}

std::string KernelSpec::describe() const {
  std::ostringstream out;
  out << family_name(family_);
  switch (family_) {
    case KernelFamily::kLinear:
      break;
    case KernelFamily::kGaussian:
      out << ",gamma=" << format_number(gamma_);
      break;
    case KernelFamily::kPolynomial:
      out << ",degree=" << degree_ << ",scale=" << format_number(scale_)
          << ",offset=" << format_number(poly_offset_);
      break;
  }
  return out.str();
}

std::string_view family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::kLinear:
      return "linear";
    case KernelFamily::kGaussian:
      return "rbf";
    case KernelFamily::kPolynomial:
      return "poly";
  }
  return "?";
}

KernelFamily parse_family(std::string_view name) {
  if (name == "linear") return KernelFamily::kLinear;
  if (name == "rbf" || name == "gaussian") return KernelFamily::kGaussian;
  if (name == "poly" || name == "polynomial") return KernelFamily::kPolynomial;
  throw InvalidArgument("unknown kernel family '" + std::string(name) +
                        "' (expected linear, rbf or poly)");
}

double eval_kernel(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InvalidArgument("kernel arguments differ in dimension (" +
                          std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  switch (spec.family()) {
    case KernelFamily::kLinear: {
      double dot = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
      return dot;
    }
    case KernelFamily::kGaussian: {
      double sq = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        sq += diff * diff;
      }
      return std::exp(-spec.gamma() * sq);
    }
    case KernelFamily::kPolynomial: {
      double dot = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
      const double base = spec.scale() * dot + spec.poly_offset();
      double result = 1.0;
      for (int d = 0; d < spec.degree(); ++d) result *= base;
      return result;
    }
  }
  return 0.0;
}

GramMatrix::GramMatrix(Matrix entries, double offset)
    : entries_(std::move(entries)), offset_(offset) {
  if (entries_.rows() != entries_.cols()) {
    throw InvalidArgument("Gram matrix must be square");
  }
}

GramMatrix GramMatrix::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidArgument("Gram scale factor must be > 0");
  return GramMatrix(entries_ * factor, offset_ * factor);
}

GramMatrix GramMatrix::subset(std::span<const Eigen::Index> indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Matrix sub(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      sub(a, b) = entries_(indices[a], indices[b]);
    }
  }
  return GramMatrix(std::move(sub), offset_);
}

GramMatrix build_gram(const KernelSpec& spec, const PointMatrix& points) {
  const Eigen::Index m = points.rows();
  if (m == 0) throw InvalidArgument("cannot build a Gram matrix of zero points");
  const auto n = static_cast<std::size_t>(points.cols());
  Matrix gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::span<const double> xi(points.row(i).data(), n);
    for (Eigen::Index j = i; j < m; ++j) {
      const double v = eval_kernel(spec, xi, {points.row(j).data(), n});
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  gram.diagonal().array() += spec.diagonal_offset();
  return GramMatrix(std::move(gram), spec.diagonal_offset());
}

Matrix cross_gram(const KernelSpec& spec, const PointMatrix& train,
                  const PointMatrix& query) {
  if (train.cols() != query.cols()) {
    throw InvalidArgument("query dimension " + std::to_string(query.cols()) +
                          " does not match training dimension " +
                          std::to_string(train.cols()));
  }
  const auto n = static_cast<std::size_t>(train.cols());
  Matrix out(train.rows(), query.rows());
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    std::span<const double> z(query.row(q).data(), n);
    for (Eigen::Index i = 0; i < train.rows(); ++i) {
      out(i, q) = eval_kernel(spec, {train.row(i).data(), n}, z);
    }
  }
  return out;
}

bool is_psd(const Matrix& symmetric, double relative_tolerance) {
  if (symmetric.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  const auto& values = eig.eigenvalues();
  const double largest = std::max(values.maxCoeff(), 0.0);
  return values.minCoeff() >= -relative_tolerance * std::max(largest, 1e-300);
}

}  // namespace msvm2
