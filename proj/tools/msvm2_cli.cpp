// msvm2: train, apply and select quadratic-loss multi-class SVMs.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include "msvm2/error.hpp"
#include "msvm2/model_io.hpp"
#include "msvm2/report.hpp"
#include "msvm2/selection.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace msvm2;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

double parse_number(std::string_view token, const std::string& what) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument(what + ": '" + std::string(token) + "' is not a number");
  }
  return value;
}

// Splits on any character of `separators`; blanks are dropped from tokens
// and empty tokens are skipped.
std::vector<std::string> split(std::string_view text, std::string_view separators) {
  std::vector<std::string> parts(1);
  for (char c : text) {
    if (separators.find(c) != std::string_view::npos) {
      parts.emplace_back();
    } else if (c != ' ' && c != '\t') {
      parts.back() += c;
    }
  }
  std::erase_if(parts, [](const std::string& part) { return part.empty(); });
  return parts;
}

std::vector<double> parse_c_grid(const std::string& text) {
  std::vector<double> grid;
  for (const auto& token : split(text, ", \t")) grid.push_back(parse_number(token, "--c-grid"));
  if (grid.empty()) throw InvalidArgument("--c-grid is empty");
  return grid;
}

// Tuples are separated by ';' and their values by ','. A one-parameter
// family also accepts a flat list such as "0.1,1,10".
std::vector<std::vector<double>> parse_param_grid(const std::string& text, KernelFamily family) {
  std::vector<std::vector<double>> grid;
  const std::size_t arity = family == KernelFamily::kLinear     ? 0
                            : family == KernelFamily::kGaussian ? 1
                                                                : 3;
  if (arity == 0) {
    if (!split(text, ",; \t").empty()) {
      throw InvalidArgument("--param-grid must be empty for the linear kernel");
    }
    return {};
  }
  if (arity == 1) {
    for (const auto& token : split(text, ",; \t")) {
      grid.push_back({parse_number(token, "--param-grid")});
    }
  } else {
    for (const auto& tuple : split(text, ";")) {
      std::vector<double> values;
      for (const auto& token : split(tuple, ", \t")) {
        values.push_back(parse_number(token, "--param-grid"));
      }
      if (values.size() != arity) {
        throw InvalidArgument("--param-grid tuple '" + tuple + "' needs " +
                              std::to_string(arity) + " values (degree,scale,offset)");
      }
      grid.push_back(std::move(values));
    }
  }
  if (grid.empty()) throw InvalidArgument("--param-grid is empty");
  return grid;
}

struct SolverFlags {
  std::optional<double> c;
  bool hard = false;
  double tol = 1e-8;
  long max_iter = 0;

  void add_to(CLI::App* cmd, bool with_c) {
    if (with_c) {
      auto* c_opt = cmd->add_option("--c", c, "Soft-margin parameter C > 0");
      auto* hard_opt = cmd->add_flag("--hard", hard, "Train the hard-margin machine (no C)");
      c_opt->excludes(hard_opt);
    }
    cmd->add_option("--tol", tol, "KKT tolerance relative to 1/(Q-1)")->capture_default_str();
    cmd->add_option("--max-iter", max_iter, "Solver iteration cap (0: 100*Q*m)")
        ->capture_default_str();
  }

  TrainOptions train_options() const {
    if (!c && !hard) throw InvalidArgument("one of --c or --hard is required");
    TrainOptions options;
    options.C = c;
    options.solver.tol = tol;
    options.solver.max_iter = max_iter;
    return options;
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

Dataset load_data(const std::string& path, const std::string& format) {
  return parse_dataset(path, parse_format(format));
}

// Labels of `data` against the model's categories; unseen labels stay -1
// and always count as errors.
std::vector<int> labels_for_model(const Dataset& data, const TrainedModel& model) {
  return map_labels(data, model.categories);
}

int run(int argc, char** argv) {
  CLI::App app{"Quadratic-loss multi-class SVM: training, radius-margin bound, model selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "msvm2 0.1.0");

  std::string data_path;
  std::string format = "csv";
  std::string model_path;
  std::string out_path;
  std::string kernel_text;
  std::string json_path;
  unsigned threads = 0;
  SolverFlags solver;

  const auto add_data = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_path, "Dataset file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--format", format, "Dataset format: csv or sparse")
        ->capture_default_str()
        ->check(CLI::IsMember({"csv", "sparse", "svmlight", "libsvm"}));
  };

  auto* train_cmd = app.add_subcommand("train", "Train a model and write it as JSON");
  add_data(train_cmd);
  train_cmd->add_option("--kernel", kernel_text,
                        "linear | rbf,gamma=G | poly,degree=D,scale=A,offset=B")
      ->required();
  solver.add_to(train_cmd, true);
  train_cmd->add_option("--out", out_path, "Model file")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Predict one label per data line");
  predict_cmd->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  add_data(predict_cmd);
  predict_cmd->add_option("--out", out_path, "Prediction file (default: stdout)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Error rate of a model on labelled data");
  evaluate_cmd->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  add_data(evaluate_cmd);

  auto* loo_cmd = app.add_subcommand("loo", "Exact leave-one-out error count");
  add_data(loo_cmd);
  loo_cmd->add_option("--kernel", kernel_text, "Kernel specification")->required();
  solver.add_to(loo_cmd, true);
  loo_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
  loo_cmd->add_option("--json", json_path, "Also write a JSON report");

  bool with_loo = false;
  bool support_ball = false;
  auto* bound_cmd = app.add_subcommand("bound", "Radius-margin bound of a trained model");
  bound_cmd->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  bound_cmd->add_flag("--with-loo", with_loo, "Also run exact leave-one-out on the training data");
  bound_cmd->add_flag("--support-ball", support_ball,
                      "Enclose only points with a nonzero alpha row (default: all points)");
  bound_cmd->add_option("--threads", threads, "Worker threads for leave-one-out");
  bound_cmd->add_option("--json", json_path, "Also write a JSON report");

  std::string family_text;
  std::string c_grid_text;
  std::string param_grid_text;
  std::string report_path;
  auto* select_cmd = app.add_subcommand("select", "Grid search driven by the radius-margin bound");
  add_data(select_cmd);
  select_cmd->add_option("--kernel-family", family_text, "linear, rbf or poly")->required();
  select_cmd->add_option("--c-grid", c_grid_text, "C values, comma or space separated")
      ->required();
  select_cmd->add_option("--param-grid", param_grid_text,
                         "Kernel parameter tuples: 'g1,g2' for rbf, 'd,a,c;d,a,c' for poly");
  select_cmd->add_flag("--with-loo", with_loo, "Also run exact leave-one-out per grid point");
  solver.add_to(select_cmd, false);
  select_cmd->add_option("--threads", threads, "Worker threads for leave-one-out");
  select_cmd->add_option("--report", report_path,
                         "Text report; a JSON mirror is written to <report>.json")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (*train_cmd) {
    const Dataset data = load_data(data_path, format);
    const TrainedModel model = train(data, KernelSpec::parse(kernel_text), solver.train_options());
    save_model(model, out_path);
    std::cout << "trained " << model.size() << " points, " << model.num_classes()
              << " classes, " << model.solver.iterations << " iterations, objective "
              << format_double(model.solver.objective) << '\n';
    return kExitOk;
  }

  if (*predict_cmd) {
    const TrainedModel model = load_model(model_path);
    const Dataset data = load_data(data_path, format);
    const std::vector<int> labels = predict_labels(model, data.points);
    std::string text;
    for (int label : labels) {
      text += label == kDummy ? "DUMMY" : model.categories[static_cast<std::size_t>(label)];
      text += '\n';
    }
    write_output(out_path, text);
    return kExitOk;
  }

  if (*evaluate_cmd) {
    const TrainedModel model = load_model(model_path);
    const Dataset data = load_data(data_path, format);
    const std::vector<int> truth = labels_for_model(data, model);
    const std::vector<int> predicted = predict_labels(model, data.points);
    long errors = 0;
    long dummies = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (predicted[i] == kDummy) ++dummies;
      if (predicted[i] != truth[i]) ++errors;
    }
    const double rate = truth.empty() ? 0.0 : static_cast<double>(errors) / truth.size();
    std::cout << "points " << truth.size() << '\n'
              << "errors " << errors << '\n'
              << "error_rate " << format_double(rate) << '\n'
              << "dummy " << dummies << '\n';
    return kExitOk;
  }

  if (*loo_cmd) {
    const Dataset data = load_data(data_path, format);
    LooOptions options;
    options.threads = threads;
    const LooResult loo =
        exact_loo(data, KernelSpec::parse(kernel_text), solver.train_options(), options);
    std::cout << loo_report_text(loo, data.categories);
    if (!json_path.empty()) write_file(json_path, loo_report_json(loo, data.categories));
    return kExitOk;
  }

  if (*bound_cmd) {
    const TrainedModel model = load_model(model_path);
    BoundOptions options;
    options.scope = support_ball ? BallScope::kSupportPoints : BallScope::kAllPoints;
    BoundReport report = radius_margin_bound(model, options);
    if (with_loo) {
      const Dataset data = make_dataset(model.points, model.labels, model.categories);
      TrainOptions train_options;
      train_options.C = model.C;
      train_options.solver.tol = model.solver.tol;
      train_options.solver.max_iter = model.solver.max_iter;
      LooOptions loo_options;
      loo_options.threads = threads;
      const LooResult loo =
          exact_loo(data, model.kernel.with_diagonal_offset(0.0), train_options, loo_options);
      attach_loo(report, model, loo);
    }
    std::cout << bound_report_text(report);
    if (!json_path.empty()) write_file(json_path, bound_report_json(report));
    return kExitOk;
  }

  if (*select_cmd) {
    const Dataset data = load_data(data_path, format);
    const KernelFamily family = parse_family(family_text);
    SelectOptions options;
    options.with_exact_loo = with_loo;
    options.solver.tol = solver.tol;
    options.solver.max_iter = solver.max_iter;
    options.loo.threads = threads;
    const SelectionResult result = grid_select(data, family, parse_c_grid(c_grid_text),
                                               parse_param_grid(param_grid_text, family), options);
    const std::string table = selection_report_text(result);
    write_file(report_path, selection_header(result, "msvm2 select") + table);
    write_file(report_path + ".json", selection_report_json(result));
    std::cout << table;
    return kExitOk;
  }
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const msvm2::NumericalError& e) {
    std::cerr << "msvm2: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const msvm2::Error& e) {
    std::cerr << "msvm2: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "msvm2: " << e.what() << '\n';
    return kExitInput;
  }
}
