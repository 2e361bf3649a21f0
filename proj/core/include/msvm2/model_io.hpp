#pragma once

#include "msvm2/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace msvm2 {

/// Version tag written into every model file.
inline constexpr std::string_view kModelFormat = "msvm2/1";

/// Serializes a model as a JSON document. Doubles are written in shortest
/// round-trip form, so loading reproduces every value bitwise.
std::string model_to_json(const TrainedModel& model);

/// Parses a model document. Throws FormatError naming the offending field on
/// a version mismatch, a missing or malformed field, a truncated document or
/// a training-data digest that does not match the stored points.
TrainedModel model_from_json(std::string_view text);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// Reads a whole file; throws Error when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Writes `text` to `path`, replacing any existing file.
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace msvm2
