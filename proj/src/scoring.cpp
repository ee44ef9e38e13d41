#include "visa/scoring.hpp"

#include <algorithm>

namespace visa {

RewardBreakdown RewardBreakdown::make(double r_val, double r_cons) {
  if (!(r_val >= 0.0 && r_val <= 2.0)) throw ValidationError("r_val outside [0, 2]: " + std::to_string(r_val));
  if (!(r_cons >= 0.0 && r_cons <= 1.0)) throw ValidationError("r_cons outside [0, 1]: " + std::to_string(r_cons));
  return RewardBreakdown{r_val, r_cons, r_val + r_cons};
}

void GrpoConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ValidationError("clip_eps must lie in (0, 1)");
  if (!(kl_beta >= 0.0)) throw ValidationError("kl_beta must be >= 0");
  if (!(adv_eps > 0.0)) throw ValidationError("adv_eps must be positive");
}

double consistency_reward(double fact_score, std::string_view backend) {
  if (!(fact_score >= 0.0 && fact_score <= 1.0)) {
    throw BackendError(std::string(backend) + " returned fact score " + std::to_string(fact_score) +
                       " outside [0, 1]");
  }
  return fact_score;
}

double grpo_surrogate(std::span<const double> logp_new, std::span<const double> logp_old,
                      std::span<const double> logp_ref, double advantage, const GrpoConfig& cfg) {
  cfg.validate();
  const std::size_t n = logp_new.size();
  if (n == 0) throw ValidationError("grpo_surrogate needs at least one token");
  if (logp_old.size() != n || logp_ref.size() != n) {
    throw ValidationError("grpo_surrogate: log-probability sequences differ in length (" + std::to_string(n) + ", " +
                          std::to_string(logp_old.size()) + ", " + std::to_string(logp_ref.size()) + ")");
  }

  // min(rA, clip(r)A) = A * (A >= 0 ? min(r, clip r) : max(r, clip r)); factoring A out
  // keeps the r == 1 case exact.
  const double lo = 1.0 - cfg.clip_eps;
  const double hi = 1.0 + cfg.clip_eps;
  double ratio_sum = 0.0;
  double kl_sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double r = std::exp(logp_new[t] - logp_old[t]);
    const double rc = std::clamp(r, lo, hi);
    ratio_sum += advantage >= 0.0 ? std::min(r, rc) : std::max(r, rc);
    kl_sum += kl_estimate(logp_new[t], logp_ref[t]);
  }
  const double denom = static_cast<double>(n);
  return advantage * (ratio_sum / denom) - cfg.kl_beta * (kl_sum / denom);
}

}  // namespace visa
