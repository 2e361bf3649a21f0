#include "msvm2/model_io.hpp"

#include "msvm2/error.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace msvm2 {
namespace {

using nlohmann::json;

const json& field(const json& doc, const char* name, const std::string& path) {
  if (!doc.is_object() || !doc.contains(name)) {
    throw FormatError("model file: missing field '" + path + "'", path);
  }
  return doc.at(name);
}

double number(const json& value, const std::string& path) {
  if (!value.is_number()) throw FormatError("model file: '" + path + "' is not a number", path);
  const double x = value.get<double>();
  if (!std::isfinite(x)) throw FormatError("model file: '" + path + "' is not finite", path);
  return x;
}

long integer(const json& value, const std::string& path) {
  if (!value.is_number_integer()) {
    throw FormatError("model file: '" + path + "' is not an integer", path);
  }
  return value.get<long>();
}

const json& array(const json& value, const std::string& path, std::size_t expected) {
  if (!value.is_array()) throw FormatError("model file: '" + path + "' is not an array", path);
  if (value.size() != expected) {
    throw FormatError("model file: '" + path + "' has " + std::to_string(value.size()) +
                          " entries, expected " + std::to_string(expected),
                      path);
  }
  return value;
}

json kernel_to_json(const KernelSpec& kernel) {
  return {{"family", std::string(family_name(kernel.family()))},
          {"params", kernel.params()},
          {"diagonal_offset", kernel.diagonal_offset()}};
}

KernelSpec kernel_from_json(const json& doc) {
  const json& fam = field(doc, "family", "kernel.family");
  if (!fam.is_string()) throw FormatError("model file: 'kernel.family' is not a string", "kernel.family");
  KernelFamily family;
  try {
    family = parse_family(fam.get<std::string>());
  } catch (const Error& e) {
    throw FormatError(std::string("model file: 'kernel.family': ") + e.what(), "kernel.family");
  }
  const json& raw = field(doc, "params", "kernel.params");
  if (!raw.is_array()) throw FormatError("model file: 'kernel.params' is not an array", "kernel.params");
  std::vector<double> params;
  for (std::size_t i = 0; i < raw.size(); ++i) params.push_back(number(raw[i], "kernel.params"));
  const double offset = number(field(doc, "diagonal_offset", "kernel.diagonal_offset"),
                               "kernel.diagonal_offset");
  try {
    return KernelSpec::from_params(family, params, offset);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("model file: 'kernel': ") + e.what(), "kernel.params");
  }
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  const Eigen::Index m = model.size();
  const int q = model.num_classes();
  json points = json::array();
  json alpha = json::array();
  json labels = json::array();
  for (Eigen::Index i = 0; i < m; ++i) {
    json point = json::array();
    for (Eigen::Index j = 0; j < model.points.cols(); ++j) point.push_back(model.points(i, j));
    points.push_back(std::move(point));
    json row = json::array();
    for (int k = 0; k < q; ++k) row.push_back(model.alpha(i, k));
    alpha.push_back(std::move(row));
    labels.push_back(model.labels[static_cast<std::size_t>(i)] + 1);
  }
  json bias = json::array();
  for (int k = 0; k < q; ++k) bias.push_back(model.bias[k]);

  json doc;
  doc["format"] = std::string(kModelFormat);
  doc["kernel"] = kernel_to_json(model.kernel);
  doc["C"] = model.C ? json(*model.C) : json(nullptr);
  doc["categories"] = model.categories;
  doc["dimension"] = model.points.cols();
  doc["points"] = std::move(points);
  doc["labels"] = std::move(labels);
  doc["alpha"] = std::move(alpha);
  doc["bias"] = std::move(bias);
  doc["solver"] = {{"tol", model.solver.tol},
                   {"max_iter", model.solver.max_iter},
                   {"iterations", model.solver.iterations},
                   {"converged", model.solver.converged},
                   {"objective", model.solver.objective},
                   {"kkt_residual", model.solver.kkt_residual},
                   {"unsupported_bias", model.solver.unsupported_bias}};
  doc["training_digest"] = model.training_digest;
  return doc.dump(1) + "\n";
}

TrainedModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("model file is truncated or not valid JSON: ") + e.what(),
                      "document");
  }
  if (!doc.is_object()) throw FormatError("model file: top level is not an object", "document");

  const json& format = field(doc, "format", "format");
  if (!format.is_string()) throw FormatError("model file: 'format' is not a string", "format");
  const auto version = format.get<std::string>();
  if (version != kModelFormat) {
    if (version.starts_with("msvm2/")) {
      throw FormatError("model file version '" + version + "' is not supported by this build (" +
                            std::string(kModelFormat) +
                            "); upgrade msvm2 or retrain the model",
                        "format");
    }
    throw FormatError("model file: unknown format '" + version + "'", "format");
  }

  TrainedModel model;
  model.kernel = kernel_from_json(field(doc, "kernel", "kernel"));

  const json& c = field(doc, "C", "C");
  if (!c.is_null()) {
    const double value = number(c, "C");
    if (!(value > 0.0)) throw FormatError("model file: 'C' must be > 0", "C");
    model.C = value;
    if (model.kernel.diagonal_offset() != 1.0 / (2.0 * value)) {
      throw FormatError("model file: 'kernel.diagonal_offset' does not equal 1/(2C)",
                        "kernel.diagonal_offset");
    }
  } else if (model.kernel.diagonal_offset() != 0.0) {
    throw FormatError("model file: hard-margin model with a nonzero diagonal offset",
                      "kernel.diagonal_offset");
  }

  const json& cats = field(doc, "categories", "categories");
  if (!cats.is_array() || cats.size() < 2) {
    throw FormatError("model file: 'categories' must list at least two labels", "categories");
  }
  for (const auto& cat : cats) {
    if (!cat.is_string()) throw FormatError("model file: 'categories' entry is not a string", "categories");
    model.categories.push_back(cat.get<std::string>());
  }
  const int q = model.num_classes();

  const long dim = integer(field(doc, "dimension", "dimension"), "dimension");
  if (dim < 1) throw FormatError("model file: 'dimension' must be >= 1", "dimension");

  const json& pts = field(doc, "points", "points");
  if (!pts.is_array() || pts.empty()) throw FormatError("model file: 'points' is empty", "points");
  const auto m = static_cast<Eigen::Index>(pts.size());
  model.points.resize(m, dim);
  for (Eigen::Index i = 0; i < m; ++i) {
    const json& row = array(pts[static_cast<std::size_t>(i)], "points", static_cast<std::size_t>(dim));
    for (Eigen::Index j = 0; j < dim; ++j) model.points(i, j) = number(row[static_cast<std::size_t>(j)], "points");
  }

  const json& labels = array(field(doc, "labels", "labels"), "labels", static_cast<std::size_t>(m));
  for (const auto& label : labels) {
    const long y = integer(label, "labels");
    if (y < 1 || y > q) throw FormatError("model file: 'labels' entry out of range", "labels");
    model.labels.push_back(static_cast<int>(y - 1));
  }

  const json& alpha = array(field(doc, "alpha", "alpha"), "alpha", static_cast<std::size_t>(m));
  model.alpha.resize(m, q);
  for (Eigen::Index i = 0; i < m; ++i) {
    const json& row = array(alpha[static_cast<std::size_t>(i)], "alpha", static_cast<std::size_t>(q));
    for (int k = 0; k < q; ++k) {
      const double a = number(row[static_cast<std::size_t>(k)], "alpha");
      if (a < 0.0) throw FormatError("model file: negative 'alpha' entry", "alpha");
      if (k == model.labels[static_cast<std::size_t>(i)] && a != 0.0) {
        throw FormatError("model file: nonzero 'alpha' entry on a point's own class", "alpha");
      }
      model.alpha(i, k) = a;
    }
  }

  const json& bias = array(field(doc, "bias", "bias"), "bias", static_cast<std::size_t>(q));
  model.bias.resize(q);
  for (int k = 0; k < q; ++k) model.bias[k] = number(bias[static_cast<std::size_t>(k)], "bias");

  const json& solver = field(doc, "solver", "solver");
  model.solver.tol = number(field(solver, "tol", "solver.tol"), "solver.tol");
  model.solver.max_iter = integer(field(solver, "max_iter", "solver.max_iter"), "solver.max_iter");
  model.solver.iterations = integer(field(solver, "iterations", "solver.iterations"), "solver.iterations");
  const json& converged = field(solver, "converged", "solver.converged");
  if (!converged.is_boolean()) throw FormatError("model file: 'solver.converged' is not a boolean", "solver.converged");
  model.solver.converged = converged.get<bool>();
  model.solver.objective = number(field(solver, "objective", "solver.objective"), "solver.objective");
  model.solver.kkt_residual =
      number(field(solver, "kkt_residual", "solver.kkt_residual"), "solver.kkt_residual");
  if (solver.contains("unsupported_bias")) {
    for (const auto& k : solver.at("unsupported_bias")) {
      model.solver.unsupported_bias.push_back(static_cast<int>(integer(k, "solver.unsupported_bias")));
    }
  }

  const json& digest = field(doc, "training_digest", "training_digest");
  if (!digest.is_string()) throw FormatError("model file: 'training_digest' is not a string", "training_digest");
  model.training_digest = digest.get<std::string>();
  if (model.training_digest != dataset_digest(model.points, model.labels, model.categories)) {
    throw FormatError("model file: 'training_digest' does not match the stored training data",
                      "training_digest");
  }
  return model;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file(path, model_to_json(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_file(path));
}

}  // namespace msvm2
