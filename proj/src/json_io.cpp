#include "visa/json_io.hpp"

#include <fstream>
#include <sstream>

namespace visa {

namespace {

template <typename V>
json named_object(const V& v) {
  json j = json::object();
  for (ValueDimension d : kAllDimensions) j[std::string(dimension_name(d))] = v[d];
  return j;
}

}  // namespace

json to_json(const ValueVector& v) { return named_object(v); }
json to_json(const ValueDelta& d) { return named_object(d); }

ValueCoeffs<double> coeffs_from_json(const json& j) {
  ValueCoeffs<double> c = ValueCoeffs<double>::Zero();
  if (j.is_array()) {
    if (j.size() != kNumDimensions)
      throw ValidationError("value array must have 10 elements, got " + std::to_string(j.size()));
    for (int i = 0; i < kNumDimensions; ++i) {
      if (!j[static_cast<std::size_t>(i)].is_number()) throw ValidationError("value array element is not a number");
      c(i) = j[static_cast<std::size_t>(i)].get<double>();
    }
    return c;
  }
  if (!j.is_object()) throw ValidationError("value vector must be a JSON object or array");
  for (const auto& [key, val] : j.items()) {
    auto d = parse_dimension(key);
    if (!d) throw ValidationError("unknown value dimension '" + key + "'");
    if (!val.is_number()) throw ValidationError("value for '" + key + "' is not a number");
    c(index_of(*d)) = val.get<double>();
  }
  return c;
}

ValueVector value_vector_from_json(const json& j) { return ValueVector::from(coeffs_from_json(j)); }
ValueDelta value_delta_from_json(const json& j) { return ValueDelta::from(coeffs_from_json(j)); }

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string to_jsonl(const std::vector<json>& records) {
  std::string s;
  for (const auto& r : records) {
    s += r.dump();
    s += '\n';
  }
  return s;
}

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw ValidationError(std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

double require_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw ValidationError(std::string("missing numeric field '") + key + "'");
  return it->get<double>();
}

std::string optional_string(const json& j, const char* key, const std::string& fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace visa
