#pragma once

// Composite reward, group-relative advantages and the clipped surrogate
// objective. Everything here is a pure function; no parameters are updated.

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "visa/values.hpp"

namespace visa {

/// r_total = r_val + r_cons, with r_val in [0, 2] and r_cons in [0, 1].
struct RewardBreakdown {
  double r_val = 0.0;
  double r_cons = 0.0;
  double r_total = 0.0;

  static RewardBreakdown make(double r_val, double r_cons);
};

struct GrpoConfig {
  double clip_eps = 0.2;
  double kl_beta = 0.04;
  double adv_eps = 1e-8;

  void validate() const;
};

template <typename Scalar>
struct BasicAdvantageSet {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> advantages;
  Scalar group_mean = 0;
  Scalar group_std = 0;  // population
  Scalar eps = 0;
};
using AdvantageSet = BasicAdvantageSet<double>;

/// cos(v_pred, v_target) + 1.
template <typename Scalar>
Scalar value_reward(const BasicValueVector<Scalar>& v_pred, const BasicValueVector<Scalar>& v_target,
                    Scalar eps = static_cast<Scalar>(kCosineEps)) {
  return cosine_similarity(v_pred.coeffs(), v_target.coeffs(), eps) + Scalar(1);
}

/// Pass-through of the fact analyzer score; out-of-range scores are a
/// BackendError naming `backend`.
double consistency_reward(double fact_score, std::string_view backend = "fact analyzer");

/// A_j = (R_j - mean) / (std + adv_eps) with the population std of the group.
/// Groups smaller than two are rejected.
template <typename Derived>
BasicAdvantageSet<typename Derived::Scalar> group_advantages(const Eigen::MatrixBase<Derived>& rewards,
                                                              typename Derived::Scalar adv_eps) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index g = rewards.size();
  if (g < 2) throw ValidationError("group_advantages needs G >= 2, got " + std::to_string(g));
  if (!(adv_eps > Scalar(0))) throw ValidationError("adv_eps must be positive");
  if (!rewards.allFinite()) throw ValidationError("group_advantages: non-finite reward");

  BasicAdvantageSet<Scalar> out;
  out.eps = adv_eps;
  out.group_mean = rewards.mean();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dev = rewards.array() - out.group_mean;
  // second centering pass removes the rounding residue of the first
  dev.array() -= dev.mean();
  out.group_std = std::sqrt(dev.squaredNorm() / static_cast<Scalar>(g));
  if (rewards.maxCoeff() == rewards.minCoeff()) {
    out.group_std = 0;
    out.advantages = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(g);
  } else {
    out.advantages = dev / (out.group_std + adv_eps);
  }
  return out;
}

inline AdvantageSet group_advantages(std::span<const double> rewards, double adv_eps) {
  return group_advantages(Eigen::Map<const Eigen::VectorXd>(rewards.data(), static_cast<Eigen::Index>(rewards.size())),
                          adv_eps);
}

/// Per-token KL estimator exp(ref - new) - (ref - new) - 1, always >= 0.
inline double kl_estimate(double logp_new, double logp_ref) {
  const double d = logp_ref - logp_new;
  return std::expm1(d) - d;
}

/// mean_t[min(r_t A, clip(r_t, 1-eps, 1+eps) A)] - beta * mean_t[KL_t]
/// with r_t = exp(logp_new - logp_old).
double grpo_surrogate(std::span<const double> logp_new, std::span<const double> logp_old,
                      std::span<const double> logp_ref, double advantage, const GrpoConfig& cfg);

}  // namespace visa
