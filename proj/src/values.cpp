#include "visa/values.hpp"

#include <cctype>

namespace visa {

namespace {

constexpr std::array<std::string_view, kNumDimensions> kNames = {
    "SelfDirection", "Stimulation", "Hedonism",  "Achievement", "Power",
    "Security",      "Conformity",  "Tradition", "Benevolence", "Universalism",
};

std::string fold(std::string_view s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace

std::string_view dimension_name(ValueDimension d) { return kNames[static_cast<std::size_t>(index_of(d))]; }

// "Self-Direction", "self_direction" and "SelfDirection" all resolve.
std::optional<ValueDimension> parse_dimension(std::string_view name) {
  const std::string key = fold(name);
  for (ValueDimension d : kAllDimensions)
    if (fold(dimension_name(d)) == key) return d;
  return std::nullopt;
}

}  // namespace visa
