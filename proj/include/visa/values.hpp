#pragma once

// The ten-dimensional Schwartz value space.
//
// Vectors are fixed-size Eigen column vectors wrapped in a thin bounded type
// so that the range invariant ([-1, 1] for value vectors, [-2, 2] for shifts)
// is checked once at construction. All metrics are free functions templated
// on Eigen expressions, so they also accept raw coefficient vectors.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "visa/errors.hpp"

namespace visa {

inline constexpr int kNumDimensions = 10;

enum class ValueDimension : int {
  SelfDirection = 0,
  Stimulation,
  Hedonism,
  Achievement,
  Power,
  Security,
  Conformity,
  Tradition,
  Benevolence,
  Universalism,
};

/// Canonical (serialization) order.
inline constexpr std::array<ValueDimension, kNumDimensions> kAllDimensions = {
    ValueDimension::SelfDirection, ValueDimension::Stimulation, ValueDimension::Hedonism,
    ValueDimension::Achievement,   ValueDimension::Power,       ValueDimension::Security,
    ValueDimension::Conformity,    ValueDimension::Tradition,   ValueDimension::Benevolence,
    ValueDimension::Universalism,
};

std::string_view dimension_name(ValueDimension d);
std::optional<ValueDimension> parse_dimension(std::string_view name);

inline constexpr int index_of(ValueDimension d) { return static_cast<int>(d); }

template <typename Scalar>
using ValueCoeffs = Eigen::Matrix<Scalar, kNumDimensions, 1>;

struct UnitBound {
  static constexpr double value = 1.0;
  static constexpr const char* name = "value vector";
};
struct ShiftBound {
  static constexpr double value = 2.0;
  static constexpr const char* name = "value delta";
};

/// Ten coefficients, each finite and inside [-Bound::value, Bound::value].
template <typename Scalar, typename Bound>
class BoundedVector {
 public:
  using Coeffs = ValueCoeffs<Scalar>;

  static constexpr Scalar bound() { return static_cast<Scalar>(Bound::value); }

  BoundedVector() : c_(Coeffs::Zero()) {}

  /// Throws ValidationError when any coefficient is non-finite or out of range.
  template <typename Derived>
  static BoundedVector from(const Eigen::MatrixBase<Derived>& c) {
    check_finite(c);
    for (int i = 0; i < kNumDimensions; ++i) {
      if (c(i) < -bound() || c(i) > bound()) {
        throw ValidationError(std::string(Bound::name) + " coefficient " +
                              std::string(dimension_name(kAllDimensions[i])) + " = " +
                              std::to_string(static_cast<double>(c(i))) + " outside [-" +
                              std::to_string(Bound::value) + ", " + std::to_string(Bound::value) +
                              "]");
      }
    }
    return BoundedVector(c);
  }

  /// Clamps into range. Non-finite input is still an error.
  template <typename Derived>
  static BoundedVector clamped(const Eigen::MatrixBase<Derived>& c) {
    check_finite(c);
    return BoundedVector(c.cwiseMax(-bound()).cwiseMin(bound()));
  }

  static BoundedVector constant(Scalar s) { return from(Coeffs::Constant(s)); }

  static BoundedVector unit(ValueDimension d, Scalar s = Scalar(1)) {
    Coeffs c = Coeffs::Zero();
    c(index_of(d)) = s;
    return from(c);
  }

  const Coeffs& coeffs() const { return c_; }
  Scalar operator[](ValueDimension d) const { return c_(index_of(d)); }
  Scalar operator()(int i) const { return c_(i); }

  BoundedVector with(ValueDimension d, Scalar s) const {
    Coeffs c = c_;
    c(index_of(d)) = s;
    return from(c);
  }

  friend bool operator==(const BoundedVector& a, const BoundedVector& b) { return a.c_ == b.c_; }
  friend bool operator!=(const BoundedVector& a, const BoundedVector& b) { return !(a == b); }

 private:
  template <typename Derived>
  explicit BoundedVector(const Eigen::MatrixBase<Derived>& c) : c_(c) {}

  template <typename Derived>
  static void check_finite(const Eigen::MatrixBase<Derived>& c) {
    static_assert(Derived::RowsAtCompileTime == kNumDimensions || Derived::RowsAtCompileTime == Eigen::Dynamic);
    if (c.size() != kNumDimensions) {
      throw ValidationError(std::string(Bound::name) + " needs exactly 10 coefficients, got " +
                            std::to_string(c.size()));
    }
    if (!c.allFinite()) throw ValidationError(std::string(Bound::name) + " has a non-finite coefficient");
  }

  Coeffs c_;
};

template <typename Scalar>
using BasicValueVector = BoundedVector<Scalar, UnitBound>;
template <typename Scalar>
using BasicValueDelta = BoundedVector<Scalar, ShiftBound>;

using ValueVector = BasicValueVector<double>;
using ValueDelta = BasicValueDelta<double>;

/// One of {-1, -0.5, 0, 0.5, 1}.
class LikertLevel {
 public:
  static constexpr std::array<double, 5> kLevels = {-1.0, -0.5, 0.0, 0.5, 1.0};

  static bool is_level(double x) {
    for (double l : kLevels)
      if (x == l) return true;
    return false;
  }

  explicit LikertLevel(double x) : v_(x) {
    if (!is_level(x)) throw ValidationError("not a Likert level: " + std::to_string(x));
  }

  double value() const { return v_; }
  friend bool operator==(LikertLevel a, LikertLevel b) { return a.v_ == b.v_; }

 private:
  double v_;
};

// ---------------------------------------------------------------------------
// Metrics

/// Cosine guard used by the value reward. Small enough that identical
/// non-degenerate vectors score 1 to within 1e-9.
inline constexpr double kCosineEps = 1e-12;

/// dot(a, b) / (|a| |b| + eps). Both-zero (or either-zero) input gives 0.
template <typename DA, typename DB>
typename DA::Scalar cosine_similarity(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                                      typename DA::Scalar eps) {
  using Scalar = typename DA::Scalar;
  if (!(eps > Scalar(0))) throw ValidationError("cosine eps must be positive");
  const Scalar denom = a.norm() * b.norm() + eps;
  const Scalar c = a.dot(b) / denom;
  return std::clamp(c, Scalar(-1), Scalar(1));
}

template <typename Scalar, typename B1, typename B2>
Scalar cosine_similarity(const BoundedVector<Scalar, B1>& a, const BoundedVector<Scalar, B2>& b,
                         Scalar eps = static_cast<Scalar>(kCosineEps)) {
  return cosine_similarity(a.coeffs(), b.coeffs(), eps);
}

template <typename DA, typename DB>
typename DA::Scalar l2_distance(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  return (a - b).norm();
}

template <typename Scalar, typename B1, typename B2>
Scalar l2_distance(const BoundedVector<Scalar, B1>& a, const BoundedVector<Scalar, B2>& b) {
  return l2_distance(a.coeffs(), b.coeffs());
}

/// Component-wise clamp(v_orig + delta, -1, 1).
template <typename Scalar>
BasicValueVector<Scalar> clip_compose(const BasicValueVector<Scalar>& v_orig, const BasicValueDelta<Scalar>& delta) {
  return BasicValueVector<Scalar>::clamped(v_orig.coeffs() + delta.coeffs());
}

/// Nearest Likert level; the midpoints +-0.25 and +-0.75 go toward zero.
template <typename Scalar>
Scalar quantize_likert(Scalar x) {
  const Scalar twice = std::abs(Scalar(2) * x);
  const Scalar steps = std::ceil(twice - Scalar(0.5));
  const Scalar snapped = std::min(steps, Scalar(2)) / Scalar(2);
  return (std::signbit(x) ? -snapped : snapped) + Scalar(0);
}

template <typename Scalar>
BasicValueVector<Scalar> quantize_likert(const BasicValueVector<Scalar>& v) {
  return BasicValueVector<Scalar>::from(v.coeffs().unaryExpr([](Scalar x) { return quantize_likert(x); }));
}

template <typename Scalar>
bool is_likert(const BasicValueVector<Scalar>& v) {
  for (int i = 0; i < kNumDimensions; ++i)
    if (!LikertLevel::is_level(static_cast<double>(v(i)))) return false;
  return true;
}

}  // namespace visa
