#include <cmath>
#include <numbers>

#include "visa/avs.hpp"

namespace visa {

double Landscape::operator()(const ValueCoeffs<double>& v) const {
  switch (kind) {
    case LandscapeKind::Quadratic:
      return -(v - optimum).squaredNorm();
    case LandscapeKind::Rastrigin: {
      const ValueCoeffs<double> z = v - optimum;
      double s = 0.0;
      for (int i = 0; i < kNumDimensions; ++i) s += z(i) * z(i) + (1.0 - std::cos(2.0 * std::numbers::pi * z(i))) / 4.0;
      return -s;
    }
    case LandscapeKind::Constant:
      return constant;
  }
  return 0.0;
}

std::string_view landscape_name(LandscapeKind k) {
  switch (k) {
    case LandscapeKind::Quadratic: return "quadratic";
    case LandscapeKind::Rastrigin: return "rastrigin";
    case LandscapeKind::Constant: return "constant";
  }
  return "quadratic";
}

LandscapeKind parse_landscape(std::string_view s) {
  if (s == "quadratic") return LandscapeKind::Quadratic;
  if (s == "rastrigin") return LandscapeKind::Rastrigin;
  if (s == "constant") return LandscapeKind::Constant;
  throw ConfigError("unknown landscape '" + std::string(s) + "' (quadratic|rastrigin|constant)");
}

ValueCoeffs<double> default_landscape_optimum() {
  ValueCoeffs<double> c = ValueCoeffs<double>::Zero();
  c(index_of(ValueDimension::Security)) = 0.5;
  c(index_of(ValueDimension::Conformity)) = 0.5;
  return c;
}

}  // namespace visa
