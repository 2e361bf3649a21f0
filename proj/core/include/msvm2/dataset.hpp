#pragma once

#include "msvm2/kernel.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace msvm2 {

/// A labelled sample. Labels are 0-based indices into `categories`, which
/// holds the external label strings in first-appearance order.
struct Dataset {
  PointMatrix points;
  std::vector<int> labels;
  std::vector<std::string> categories;
  /// Content digest of (categories, labels, points); see dataset_digest.
  std::string source_hash;

  Eigen::Index size() const noexcept { return points.rows(); }
  Eigen::Index dimension() const noexcept { return points.cols(); }
  int num_classes() const noexcept { return static_cast<int>(categories.size()); }
  /// Number of categories that actually occur in `labels`.
  int present_classes() const;
};

enum class DataFormat { kCsv, kSparse };

DataFormat parse_format(std::string_view name);

/// Builds a dataset from already-indexed data and fills source_hash.
Dataset make_dataset(PointMatrix points, std::vector<int> labels,
                     std::vector<std::string> categories);

/// Hex SHA-256 over a canonical text rendering of categories, labels and
/// points (shortest round-trip decimal for every coordinate).
std::string dataset_digest(const PointMatrix& points,
                           const std::vector<int>& labels,
                           const std::vector<std::string>& categories);

/// Grammar:
///   csv     `label,v1,v2,...` one point per line, all lines the same width;
///   sparse  `label idx:val idx:val ...` whitespace separated, 1-based
///           indices, no duplicates on a line, optional `# comment` tail.
/// Numbers use '.' and an optional exponent. Blank lines are skipped.
/// Categories are numbered in order of first appearance.
Dataset parse_dataset_text(std::string_view text, DataFormat format);
Dataset parse_dataset(const std::filesystem::path& path, DataFormat format);

/// Inverse of parse_dataset_text. Sparse output lists nonzero entries only.
std::string write_dataset(const Dataset& data, DataFormat format);

/// Re-indexes the labels of `data` against an existing category list. Labels
/// not present in `categories` map to -1.
std::vector<int> map_labels(const Dataset& data,
                            const std::vector<std::string>& categories);

/// Copy of `data` without the row `index`; categories are kept.
Dataset without_point(const Dataset& data, Eigen::Index index);

/// Shortest round-trip decimal form of `value`.
std::string format_double(double value);

}  // namespace msvm2
