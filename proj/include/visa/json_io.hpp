#pragma once

// JSON and JSONL plumbing shared by every module.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "visa/values.hpp"

namespace visa {

using json = nlohmann::ordered_json;

/// Named-object form, canonical key order.
json to_json(const ValueVector& v);
json to_json(const ValueDelta& d);

/// Accepts the named-object form (missing keys read as 0, unknown keys are an
/// error) or a 10-element array in canonical order.
ValueVector value_vector_from_json(const json& j);
ValueDelta value_delta_from_json(const json& j);
ValueCoeffs<double> coeffs_from_json(const json& j);

/// Throws IoError when the file cannot be opened, ValidationError on a
/// malformed line (the message carries the 1-based line number).
std::vector<json> read_jsonl(const std::filesystem::path& path);
json read_json_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string to_jsonl(const std::vector<json>& records);

// Typed field access with validation errors naming the field.
std::string require_string(const json& j, const char* key);
double require_number(const json& j, const char* key);
std::string optional_string(const json& j, const char* key, const std::string& fallback = {});

}  // namespace visa
