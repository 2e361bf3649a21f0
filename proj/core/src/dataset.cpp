#include "msvm2/dataset.hpp"

#include "msvm2/error.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>

namespace msvm2 {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw FormatError("line " + std::to_string(line) + ": " + what,
                    "line " + std::to_string(line));
}

double parse_value(std::string_view token, std::size_t line) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value,
                                   std::chars_format::general);
  if (token.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    fail(line, "malformed number '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    pos = s.find_first_not_of(" \t\r", pos);
    if (pos == std::string_view::npos) break;
    auto end = s.find_first_of(" \t\r", pos);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

struct RawRow {
  std::string label;
  std::vector<std::pair<Eigen::Index, double>> entries;  // 0-based column
};

Dataset assemble(std::vector<RawRow>& rows, Eigen::Index dimension) {
  if (rows.empty()) throw FormatError("dataset is empty");
  if (dimension < 1) throw FormatError("dataset has no features");
  std::vector<std::string> categories;
  std::unordered_map<std::string, int> index;
  std::vector<int> labels;
  labels.reserve(rows.size());
  PointMatrix points = PointMatrix::Zero(static_cast<Eigen::Index>(rows.size()), dimension);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto [it, inserted] =
        index.try_emplace(rows[r].label, static_cast<int>(categories.size()));
    if (inserted) categories.push_back(rows[r].label);
    labels.push_back(it->second);
    for (auto [col, value] : rows[r].entries) {
      points(static_cast<Eigen::Index>(r), col) = value;
    }
  }
  return make_dataset(std::move(points), std::move(labels), std::move(categories));
}

Dataset parse_csv(std::string_view text) {
  std::vector<RawRow> rows;
  Eigen::Index width = -1;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;

    RawRow row;
    std::size_t field_start = 0;
    Eigen::Index column = -1;
    while (true) {
      auto comma = line.find(',', field_start);
      auto field = trim(line.substr(field_start, comma - field_start));
      if (column < 0) {
        if (field.empty()) fail(line_no, "missing label");
        row.label = std::string(field);
      } else {
        row.entries.emplace_back(column, parse_value(field, line_no));
      }
      ++column;
      if (comma == std::string_view::npos) break;
      field_start = comma + 1;
    }
    // `column` now counts the values after the label.
    if (column < 1) fail(line_no, "expected a label followed by at least one value");
    if (width < 0) {
      width = column;
    } else if (column != width) {
      fail(line_no, "expected " + std::to_string(width) + " values, found " +
                        std::to_string(column));
    }
    rows.push_back(std::move(row));
  }
  return assemble(rows, width);
}

Dataset parse_sparse(std::string_view text) {
  std::vector<RawRow> rows;
  Eigen::Index dimension = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    auto parts = tokens(line);
    if (parts.empty()) continue;

    RawRow row;
    row.label = std::string(parts.front());
    std::set<Eigen::Index> seen;
    for (std::size_t t = 1; t < parts.size(); ++t) {
      auto colon = parts[t].find(':');
      if (colon == std::string_view::npos) {
        fail(line_no, "expected index:value, found '" + std::string(parts[t]) + "'");
      }
      auto idx_text = parts[t].substr(0, colon);
      long long idx = 0;
      auto [ptr, ec] =
          std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() || idx < 1) {
        fail(line_no, "invalid feature index '" + std::string(idx_text) + "'");
      }
      const auto col = static_cast<Eigen::Index>(idx - 1);
      if (!seen.insert(col).second) {
        fail(line_no, "duplicate feature index " + std::to_string(idx));
      }
      row.entries.emplace_back(col, parse_value(parts[t].substr(colon + 1), line_no));
      dimension = std::max(dimension, col + 1);
    }
    rows.push_back(std::move(row));
  }
  return assemble(rows, dimension);
}

}  // namespace

int Dataset::present_classes() const {
  std::set<int> seen(labels.begin(), labels.end());
  return static_cast<int>(seen.size());
}

DataFormat parse_format(std::string_view name) {
  if (name == "csv") return DataFormat::kCsv;
  if (name == "sparse" || name == "svmlight" || name == "libsvm") return DataFormat::kSparse;
  throw InvalidArgument("unknown data format '" + std::string(name) +
                        "' (expected csv or sparse)");
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

Dataset make_dataset(PointMatrix points, std::vector<int> labels,
                     std::vector<std::string> categories) {
  if (static_cast<Eigen::Index>(labels.size()) != points.rows()) {
    throw InvalidArgument("label count does not match point count");
  }
  for (int y : labels) {
    if (y < 0 || y >= static_cast<int>(categories.size())) {
      throw InvalidArgument("label index outside the category list");
    }
  }
  Dataset data;
  data.source_hash = dataset_digest(points, labels, categories);
  data.points = std::move(points);
  data.labels = std::move(labels);
  data.categories = std::move(categories);
  return data;
}

std::string dataset_digest(const PointMatrix& points,
                           const std::vector<int>& labels,
                           const std::vector<std::string>& categories) {
  std::string canonical;
  canonical.reserve(static_cast<std::size_t>(points.size()) * 20 + 64);
  canonical += "categories";
  for (const auto& c : categories) {
    canonical += ' ';
    canonical += std::to_string(c.size());
    canonical += ':';
    canonical += c;
  }
  canonical += "\nshape " + std::to_string(points.rows()) + ' ' +
                std::to_string(points.cols()) + '\n';
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    canonical += std::to_string(i < static_cast<Eigen::Index>(labels.size())
                                    ? labels[static_cast<std::size_t>(i)]
                                    : -1);
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      canonical += ' ';
      canonical += format_double(points(i, j));
    }
    canonical += '\n';
  }

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), canonical.data(), canonical.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw Error("SHA-256 digest computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

Dataset parse_dataset_text(std::string_view text, DataFormat format) {
  return format == DataFormat::kCsv ? parse_csv(text) : parse_sparse(text);
}

Dataset parse_dataset(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_text(buffer.str(), format);
}

std::string write_dataset(const Dataset& data, DataFormat format) {
  std::string out;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out += data.categories[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])];
    for (Eigen::Index j = 0; j < data.dimension(); ++j) {
      const double v = data.points(i, j);
      if (format == DataFormat::kCsv) {
        out += ',';
        out += format_double(v);
      } else if (v != 0.0) {
        out += ' ';
        out += std::to_string(j + 1);
        out += ':';
        out += format_double(v);
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<int> map_labels(const Dataset& data,
                            const std::vector<std::string>& categories) {
  std::unordered_map<std::string, int> index;
  for (std::size_t k = 0; k < categories.size(); ++k) {
    index.emplace(categories[k], static_cast<int>(k));
  }
  std::vector<int> out;
  out.reserve(data.labels.size());
  for (int y : data.labels) {
    auto it = index.find(data.categories[static_cast<std::size_t>(y)]);
    out.push_back(it == index.end() ? -1 : it->second);
  }
  return out;
}

Dataset without_point(const Dataset& data, Eigen::Index index) {
  const Eigen::Index m = data.size();
  if (index < 0 || index >= m) throw InvalidArgument("point index out of range");
  PointMatrix points(m - 1, data.dimension());
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(m - 1));
  for (Eigen::Index i = 0, r = 0; i < m; ++i) {
    if (i == index) continue;
    points.row(r++) = data.points.row(i);
    labels.push_back(data.labels[static_cast<std::size_t>(i)]);
  }
  return make_dataset(std::move(points), std::move(labels), data.categories);
}

}  // namespace msvm2
