#include "msvm2/report.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

namespace msvm2 {
namespace {

using nlohmann::json;

json num(double value) {
  return std::isfinite(value) ? json(value) : json(nullptr);
}

template <typename... Args>
std::string printf_string(const char* pattern, Args... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, pattern, args...);
  return buffer;
}

std::string fmt(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return format_double(value);
}

std::string params_text(const std::vector<double>& params) {
  std::string out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i > 0) out += ',';
    out += fmt(params[i]);
  }
  return out.empty() ? "-" : out;
}

std::string label_text(int label, const std::vector<std::string>& categories) {
  if (label < 0 || label >= static_cast<int>(categories.size())) return "DUMMY";
  return categories[static_cast<std::size_t>(label)];
}

json margins_json(const MarginReport& margins) {
  json pairs = json::array();
  for (const auto& p : margins.pairs) {
    pairs.push_back({{"k", p.k + 1},
                     {"l", p.l + 1},
                     {"min_gap", num(p.min_gap)},
                     {"d_kl", num(p.d_kl)},
                     {"w_diff_norm", num(p.w_diff_norm)},
                     {"gamma", num(p.gamma)}});
  }
  return {{"d", num(margins.d)},
          {"d_reference", num(margins.d_reference)},
          {"margin_sum", num(margins.margin_sum)},
          {"pairs", std::move(pairs)},
          {"chain",
           {{"margin_form", num(margins.chain.lhs_margin_sum)},
            {"sum_wk_sq", num(margins.chain.sum_wk_sq)},
            {"alpha_H_alpha", num(margins.chain.alpha_H_alpha)},
            {"alpha_sum_term", num(margins.chain.alpha_sum_term)}}}};
}

}  // namespace

std::string bound_report_text(const BoundReport& r) {
  std::ostringstream out;
  out << "dataset_digest  " << r.dataset_digest << '\n'
      << "classes         " << r.num_classes << '\n'
      << "points          " << r.num_points << '\n'
      << "radius          " << fmt(r.radius) << '\n'
      << "D^2             " << fmt(r.D_sq) << '\n'
      << "margin_sum      " << fmt(r.margin_sum) << '\n'
      << "bound           " << fmt(r.bound_value) << '\n'
      << "bound_clamped   " << fmt(r.bound_clamped) << '\n'
      << "bound/Q^2       " << fmt(r.bound_over_q2) << '\n'
      << "alpha_sum       " << fmt(r.alpha_sum) << '\n'
      << "bound_via_alpha " << fmt(r.bound_via_alpha) << '\n'
      << "ball_gap        " << fmt(r.ball.certificate_gap) << '\n';
  if (r.loo_errors) {
    out << "loo_errors      " << *r.loo_errors << '\n'
        << "loo<=bound      " << (*r.loo_errors <= r.bound_value + 1e-6 ? "yes" : "NO") << '\n'
        << "lemma_checked   " << r.key_lemma.size() << '\n'
        << "lemma_violated  " << r.key_lemma_violations.size() << '\n';
    for (const auto& v : r.key_lemma_violations) {
      out << "  point " << v.point + 1 << " max_alpha " << fmt(v.max_alpha) << " < "
          << fmt(v.threshold) << '\n';
    }
  }
  if (!r.margins.pairs.empty()) {
    out << "\n pair        min_gap           d_kl          gamma\n";
    for (const auto& p : r.margins.pairs) {
      out << printf_string("%2d %2d %14s %14s %14s\n", p.k + 1, p.l + 1, fmt(p.min_gap).c_str(),
                           fmt(p.d_kl).c_str(), fmt(p.gamma).c_str());
    }
  }
  return out.str();
}

std::string bound_report_json(const BoundReport& r) {
  json doc = {{"dataset_digest", r.dataset_digest},
              {"classes", r.num_classes},
              {"points", r.num_points},
              {"radius", num(r.radius)},
              {"D_sq", num(r.D_sq)},
              {"margin_sum", num(r.margin_sum)},
              {"bound", num(r.bound_value)},
              {"bound_clamped", num(r.bound_clamped)},
              {"bound_over_q2", num(r.bound_over_q2)},
              {"alpha_sum", num(r.alpha_sum)},
              {"bound_via_alpha", num(r.bound_via_alpha)},
              {"ball",
               {{"weights", std::vector<double>(r.ball.weights.begin(), r.ball.weights.end())},
                {"certificate_gap", num(r.ball.certificate_gap)},
                {"iterations", r.ball.iterations}}},
              {"margins", margins_json(r.margins)}};
  if (r.loo_errors) {
    doc["loo_errors"] = *r.loo_errors;
    json lemma = json::array();
    for (const auto& e : r.key_lemma) {
      lemma.push_back({{"point", e.point + 1},
                       {"max_alpha", num(e.max_alpha)},
                       {"threshold", num(e.threshold)},
                       {"satisfied", e.satisfied}});
    }
    doc["key_lemma"] = std::move(lemma);
  } else {
    doc["loo_errors"] = nullptr;
  }
  return doc.dump(1) + "\n";
}

std::string loo_report_text(const LooResult& loo, const std::vector<std::string>& categories) {
  std::ostringstream out;
  out << "dataset_digest " << loo.dataset_digest << '\n'
      << "points         " << loo.outcomes.size() << '\n'
      << "loo_errors     " << loo.error_count << '\n';
  for (const auto& o : loo.outcomes) {
    if (!o.error) continue;
    out << "  point " << o.point + 1 << " predicted " << label_text(o.predicted, categories);
    if (o.training_failed) out << " (training failed: " << o.diagnostic << ')';
    out << '\n';
  }
  return out.str();
}

std::string loo_report_json(const LooResult& loo, const std::vector<std::string>& categories) {
  json outcomes = json::array();
  for (const auto& o : loo.outcomes) {
    json entry = {{"point", o.point + 1},
                  {"predicted", label_text(o.predicted, categories)},
                  {"error", o.error}};
    if (o.training_failed) entry["diagnostic"] = o.diagnostic;
    outcomes.push_back(std::move(entry));
  }
  json doc = {{"dataset_digest", loo.dataset_digest},
              {"loo_errors", loo.error_count},
              {"outcomes", std::move(outcomes)}};
  return doc.dump(1) + "\n";
}

std::string selection_report_text(const SelectionResult& result) {
  std::ostringstream out;
  out << "dataset_digest " << result.dataset_digest << '\n';
  out << printf_string("%14s %24s %14s %14s %6s  %s\n", "C", "params", "bound", "bound/Q^2",
                       "loo", "status");
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    const GridPoint& p = result.grid[i];
    const std::string loo = p.loo_errors ? std::to_string(*p.loo_errors) : "-";
    std::string status = p.failed ? "failed: " + p.diagnostic : "ok";
    if (i == result.best) status += " *best*";
    out << printf_string("%14s %24s %14s %14s %6s  ", fmt(p.C).c_str(),
                         params_text(p.params).c_str(), fmt(p.bound).c_str(),
                         fmt(p.bound_over_q2).c_str(), loo.c_str())
        << status << '\n';
  }
  const GridPoint& best = result.grid[result.best];
  out << "best C=" << fmt(best.C) << " kernel=" << best.kernel.describe()
      << " bound=" << fmt(best.bound) << '\n';
  return out.str();
}

std::string selection_report_json(const SelectionResult& result) {
  json grid = json::array();
  for (const auto& p : result.grid) {
    json entry = {{"C", p.C},
                  {"params", p.params},
                  {"kernel", p.kernel.describe()},
                  {"bound", num(p.bound)},
                  {"bound_over_q2", num(p.bound_over_q2)},
                  {"loo_errors", p.loo_errors ? json(*p.loo_errors) : json(nullptr)},
                  {"failed", p.failed}};
    if (p.failed) entry["diagnostic"] = p.diagnostic;
    grid.push_back(std::move(entry));
  }
  json doc = {{"dataset_digest", result.dataset_digest},
              {"best", result.best},
              {"grid", std::move(grid)}};
  return doc.dump(1) + "\n";
}

std::string selection_header(const SelectionResult& result, std::string_view label) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  std::string line = "# " + std::string(label) + " " + stamp + " wall_ms=";
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    if (i > 0) line += ',';
    line += printf_string("%.3f", result.grid[i].wall_ms);
  }
  return line + '\n';
}

}  // namespace msvm2
