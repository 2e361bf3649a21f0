#pragma once

#include "msvm2/selection.hpp"

#include <string>
#include <string_view>

namespace msvm2 {

// Reports come in pairs: a human table and a JSON mirror with the same
// numbers. Neither contains timestamps or wall times; callers that want them
// prepend a `# ...` header line to the text form.

std::string bound_report_text(const BoundReport& report);
std::string bound_report_json(const BoundReport& report);

std::string loo_report_text(const LooResult& loo, const std::vector<std::string>& categories);
std::string loo_report_json(const LooResult& loo, const std::vector<std::string>& categories);

std::string selection_report_text(const SelectionResult& result);
std::string selection_report_json(const SelectionResult& result);

/// `# <label> <UTC time> wall_ms=<t1>,<t2>,...`: the only line of a
/// selection report that varies between identical runs.
std::string selection_header(const SelectionResult& result, std::string_view label);

}  // namespace msvm2
