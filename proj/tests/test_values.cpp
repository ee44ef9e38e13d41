#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"
#include "visa/json_io.hpp"
#include "visa/values.hpp"

using namespace visa;
using testutil::to_vec;

TEST(ValueDimension, CanonicalOrderAndNames) {
  ASSERT_EQ(kAllDimensions.size(), 10u);
  const char* expected[] = {"SelfDirection", "Stimulation", "Hedonism",  "Achievement", "Power",
                            "Security",      "Conformity",  "Tradition", "Benevolence", "Universalism"};
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(index_of(kAllDimensions[static_cast<std::size_t>(i)]), i);
    EXPECT_EQ(dimension_name(kAllDimensions[static_cast<std::size_t>(i)]), expected[i]);
  }
}

TEST(ValueDimension, ParseIsLenientAboutCaseAndSeparators) {
  EXPECT_EQ(parse_dimension("self-direction"), ValueDimension::SelfDirection);
  EXPECT_EQ(parse_dimension("SECURITY"), ValueDimension::Security);
  EXPECT_FALSE(parse_dimension("Freedom").has_value());
}

TEST(ValueVector, RangeEnforcedAtConstruction) {
  ValueCoeffs<double> c = ValueCoeffs<double>::Zero();
  c(3) = 1.0000001;
  EXPECT_THROW(ValueVector::from(c), ValidationError);
  c(3) = std::nan("");
  EXPECT_THROW(ValueVector::from(c), ValidationError);
  c(3) = 1.5;
  EXPECT_NO_THROW(ValueDelta::from(c));
  c(3) = -2.5;
  EXPECT_THROW(ValueDelta::from(c), ValidationError);
}

TEST(LikertLevel, MembershipEnforced) {
  EXPECT_NO_THROW(LikertLevel(-0.5));
  EXPECT_THROW(LikertLevel(0.25), ValidationError);
}

TEST(ClipCompose, IdentityWithZeroDelta) {
  const auto v = ValueVector::constant(0.5);
  EXPECT_EQ(clip_compose(v, ValueDelta{}), v);
}

TEST(ClipCompose, SaturatesAtUpperBound) {
  const auto out = clip_compose(ValueVector::constant(0.8), ValueDelta::constant(0.5));
  for (int i = 0; i < kNumDimensions; ++i) EXPECT_EQ(out(i), 1.0);
}

TEST(ClipCompose, MatchesComponentClampOracle) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 20; ++n) {
    const auto v = testutil::random_vector(rng);
    const auto d = testutil::random_delta(rng);
    const auto expected = oracle::clamp_add(to_vec(v), to_vec(d));
    const auto got = to_vec(clip_compose(v, d));
    for (int i = 0; i < kNumDimensions; ++i) EXPECT_EQ(got[static_cast<std::size_t>(i)], expected[static_cast<std::size_t>(i)]);
  }
}

TEST(ClipCompose, PropertyAlwaysInRange) {
  std::mt19937_64 rng(12);
  for (int n = 0; n < 2000; ++n) {
    const auto out = clip_compose(testutil::random_vector(rng), testutil::random_delta(rng));
    EXPECT_LE(out.coeffs().cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Cosine, IdenticalUnitVectors) {
  const auto a = ValueVector::unit(ValueDimension::Achievement);
  EXPECT_NEAR(cosine_similarity(a, a, 1e-8), 1.0, 1e-7);
}

TEST(Cosine, Orthogonal) {
  EXPECT_EQ(cosine_similarity(ValueVector::unit(ValueDimension::Power), ValueVector::unit(ValueDimension::Security)),
            0.0);
}

TEST(Cosine, HandArithmetic) {
  const auto a = ValueVector::unit(ValueDimension::SelfDirection).with(ValueDimension::Stimulation, 1.0);
  const auto b = ValueVector::unit(ValueDimension::SelfDirection);
  EXPECT_NEAR(cosine_similarity(a, b, 1e-8), 1.0 / std::sqrt(2.0), 1e-4);
  EXPECT_NEAR(cosine_similarity(a, b, 1e-8), oracle::cosine(to_vec(a), to_vec(b), 1e-8), 1e-15);
}

TEST(Cosine, BothZeroGivesZero) { EXPECT_EQ(cosine_similarity(ValueVector{}, ValueVector{}), 0.0); }

TEST(Cosine, RejectsNonPositiveEps) {
  EXPECT_THROW(cosine_similarity(ValueVector{}, ValueVector{}, 0.0), ValidationError);
}

TEST(Cosine, PropertySymmetricBoundedAndScaleStable) {
  std::mt19937_64 rng(13);
  const double eps = 1e-8;
  for (int n = 0; n < 2000; ++n) {
    const auto a = testutil::random_vector(rng);
    const auto b = testutil::random_vector(rng);
    const double ab = cosine_similarity(a, b, eps);
    EXPECT_EQ(ab, cosine_similarity(b, a, eps));
    EXPECT_LE(std::abs(ab), 1.0);
    const double s = 0.5;
    const auto as = ValueVector::from(a.coeffs() * s);
    const auto bs = ValueVector::from(b.coeffs() * s);
    const double bound = eps / (as.coeffs().norm() * bs.coeffs().norm()) + 1e-14;
    EXPECT_LE(std::abs(cosine_similarity(as, bs, eps) - ab), bound);
  }
}

TEST(L2, Cases) {
  EXPECT_EQ(l2_distance(ValueVector::constant(0.3), ValueVector::constant(0.3)), 0.0);
  EXPECT_NEAR(l2_distance(ValueVector::constant(1.0), ValueVector{}), std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(l2_distance(ValueVector::unit(ValueDimension::Power, 0.5), ValueVector{}), 0.5, 1e-15);
}

TEST(L2, PropertyTriangleInequality) {
  std::mt19937_64 rng(14);
  for (int n = 0; n < 2000; ++n) {
    const auto a = testutil::random_vector(rng), b = testutil::random_vector(rng), c = testutil::random_vector(rng);
    EXPECT_LE(l2_distance(a, c), l2_distance(a, b) + l2_distance(b, c) + 1e-12);
    EXPECT_NEAR(l2_distance(a, b), oracle::l2(to_vec(a), to_vec(b)), 1e-12);
  }
}

TEST(Likert, NearestLevel) {
  EXPECT_EQ(quantize_likert(0.6), 0.5);
  EXPECT_EQ(quantize_likert(-0.9), -1.0);
  EXPECT_EQ(quantize_likert(0.25), 0.0);
  EXPECT_EQ(quantize_likert(-0.25), 0.0);
  EXPECT_EQ(quantize_likert(0.75), 0.5);
  EXPECT_EQ(quantize_likert(-0.75), -0.5);
  EXPECT_FALSE(std::signbit(quantize_likert(-0.1)));
}

TEST(Likert, ExhaustiveScanMatchesTieTowardZeroOracle) {
  // every multiple of 1/1024 in [-1, 1], which includes all four midpoints
  for (int k = -1024; k <= 1024; ++k) {
    const double x = k / 1024.0;
    EXPECT_EQ(quantize_likert(x), oracle::nearest_likert(x)) << x;
  }
}

TEST(Likert, PropertyIdempotentAndWithinQuarter) {
  std::mt19937_64 rng(15);
  for (int n = 0; n < 2000; ++n) {
    const auto v = testutil::random_vector(rng);
    const auto q = quantize_likert(v);
    EXPECT_TRUE(is_likert(q));
    EXPECT_EQ(quantize_likert(q), q);
    EXPECT_LE((q.coeffs() - v.coeffs()).cwiseAbs().maxCoeff(), 0.25);
  }
}

TEST(ValueJson, NamedObjectInCanonicalOrder) {
  const auto v = ValueVector::unit(ValueDimension::Security, 0.5);
  const json j = to_json(v);
  std::vector<std::string> keys;
  for (const auto& [k, _] : j.items()) keys.push_back(k);
  ASSERT_EQ(keys.size(), 10u);
  EXPECT_EQ(keys.front(), "SelfDirection");
  EXPECT_EQ(keys.back(), "Universalism");
  EXPECT_EQ(value_vector_from_json(j), v);
}

TEST(ValueJson, ArrayFormAndErrors) {
  const json arr = json::array({0, 0, 0, 0, 0, 0.5, 0, 0, 0, 0});
  EXPECT_EQ(value_vector_from_json(arr), ValueVector::unit(ValueDimension::Security, 0.5));
  EXPECT_THROW(value_vector_from_json(json::array({1, 2})), ValidationError);
  EXPECT_THROW(value_vector_from_json(json{{"Freedom", 1}}), ValidationError);
  EXPECT_THROW(value_vector_from_json(json{{"Security", 1.5}}), ValidationError);
  EXPECT_EQ(value_vector_from_json(json{{"Security", 0.5}}), ValueVector::unit(ValueDimension::Security, 0.5));
}
