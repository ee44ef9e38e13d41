#pragma once

// Adaptive value search: a Gaussian over value space is sampled, each
// candidate is scored by an evaluator, and (mu, Sigma) contract toward the
// candidates with positive group advantage.
//
// The numeric core is templated on the scalar type; the evaluator is any
// callable mapping a coefficient vector to a reward.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "visa/json_io.hpp"
#include "visa/parallel.hpp"
#include "visa/scoring.hpp"
#include "visa/values.hpp"

namespace visa {

template <typename Scalar>
using ValueMatrix = Eigen::Matrix<Scalar, kNumDimensions, kNumDimensions>;

enum class UpdateMode {
  /// mu' = mu + alpha * mean(S_pos), Sigma' = Sigma + alpha * Cov + eps_I * I
  Literal,
  /// mu' = mu + alpha * (mean(S_pos) - mu), Sigma' = Sigma + alpha * (Cov - Sigma) + eps_I * I
  MeanShift,
};

std::string_view update_mode_name(UpdateMode m);
UpdateMode parse_update_mode(std::string_view s);

struct SearchConfig {
  int K = 16;
  int T = 50;
  double alpha = 0.5;
  double eps_I = 1e-3;
  UpdateMode update_mode = UpdateMode::MeanShift;
  bool clip_samples = true;
  std::uint64_t seed = 0;
  /// Stop once trace(Sigma) falls below this; 0 disables the check.
  double convergence_tol = 0.0;
  /// Initial Sigma = init_sigma * I around init_mu.
  double init_sigma = 0.25;
  ValueCoeffs<double> init_mu = ValueCoeffs<double>::Zero();
  double adv_eps = 1e-8;
  int parallelism = 1;

  void validate() const;
};

template <typename Scalar>
struct BasicSearchDistribution {
  ValueCoeffs<Scalar> mu = ValueCoeffs<Scalar>::Zero();
  ValueMatrix<Scalar> sigma = ValueMatrix<Scalar>::Identity();

  Scalar trace() const { return sigma.trace(); }
  Scalar min_eigenvalue() const {
    return Eigen::SelfAdjointEigenSolver<ValueMatrix<Scalar>>(sigma, Eigen::EigenvaluesOnly).eigenvalues()(0);
  }
  Scalar asymmetry() const { return (sigma - sigma.transpose()).cwiseAbs().maxCoeff(); }
};
using SearchDistribution = BasicSearchDistribution<double>;

template <typename Scalar>
struct BasicCandidateEval {
  ValueCoeffs<Scalar> v;
  Scalar reward = 0;
  Scalar advantage = 0;
};
using CandidateEval = BasicCandidateEval<double>;

/// Symmetrizes and raises every eigenvalue below `floor` to `floor`.
template <typename Scalar>
ValueMatrix<Scalar> floor_covariance(const ValueMatrix<Scalar>& sigma, Scalar floor) {
  const ValueMatrix<Scalar> sym = (sigma + sigma.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<ValueMatrix<Scalar>> es(sym);
  if (es.info() != Eigen::Success) throw ValidationError("covariance eigendecomposition failed");
  if (es.eigenvalues()(0) >= floor) return sym;
  const ValueCoeffs<Scalar> lambda = es.eigenvalues().cwiseMax(floor);
  const ValueMatrix<Scalar> out = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  return (out + out.transpose()) / Scalar(2);
}

/// K independent draws from N(mu, Sigma), clamped to [-1, 1] when `clip`.
/// Throws ValidationError if Sigma is not positive definite.
template <typename Scalar, typename Rng>
std::vector<ValueCoeffs<Scalar>> sample_candidates(const BasicSearchDistribution<Scalar>& dist, int K, bool clip,
                                                   Rng& rng) {
  if (K < 1) throw ValidationError("sample_candidates: K must be >= 1");
  Eigen::LLT<ValueMatrix<Scalar>> llt(dist.sigma);
  if (llt.info() != Eigen::Success) throw ValidationError("search covariance is not positive definite");
  const ValueMatrix<Scalar> L = llt.matrixL();
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  std::vector<ValueCoeffs<Scalar>> out;
  out.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    ValueCoeffs<Scalar> z;
    for (int i = 0; i < kNumDimensions; ++i) z(i) = normal(rng);
    ValueCoeffs<Scalar> v = dist.mu + L * z;
    if (clip) v = v.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
    out.push_back(v);
  }
  return out;
}

/// Fills in advantages over the whole group.
template <typename Scalar>
void assign_advantages(std::vector<BasicCandidateEval<Scalar>>& evals, Scalar adv_eps) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r(static_cast<Eigen::Index>(evals.size()));
  for (std::size_t i = 0; i < evals.size(); ++i) r(static_cast<Eigen::Index>(i)) = evals[i].reward;
  const auto adv = group_advantages(r, adv_eps);
  for (std::size_t i = 0; i < evals.size(); ++i) evals[i].advantage = adv.advantages(static_cast<Eigen::Index>(i));
}

/// Candidates with advantage strictly greater than zero, in input order.
template <typename Scalar>
std::vector<BasicCandidateEval<Scalar>> select_positive(const std::vector<BasicCandidateEval<Scalar>>& evals) {
  std::vector<BasicCandidateEval<Scalar>> out;
  for (const auto& e : evals)
    if (e.advantage > Scalar(0)) out.push_back(e);
  return out;
}

template <typename Scalar>
struct BasicUpdateResult {
  BasicSearchDistribution<Scalar> dist;
  bool clamp_active = false;  // some mu coordinate left [-1, 1] and was clamped
};

/// One distribution step. An empty S_pos leaves mu and Sigma untouched apart
/// from re-applying the eigenvalue floor.
template <typename Scalar>
BasicUpdateResult<Scalar> update_distribution(const BasicSearchDistribution<Scalar>& dist,
                                              const std::vector<ValueCoeffs<Scalar>>& positives, Scalar alpha,
                                              Scalar eps_I, UpdateMode mode) {
  BasicUpdateResult<Scalar> out{dist, false};
  if (positives.empty()) {
    out.dist.sigma = floor_covariance(dist.sigma, eps_I);
    return out;
  }
  const Scalar n = static_cast<Scalar>(positives.size());
  ValueCoeffs<Scalar> mean = ValueCoeffs<Scalar>::Zero();
  for (const auto& v : positives) mean += v;
  mean /= n;

  ValueCoeffs<Scalar> mu = mode == UpdateMode::Literal ? ValueCoeffs<Scalar>(dist.mu + alpha * mean)
                                                       : ValueCoeffs<Scalar>(dist.mu + alpha * (mean - dist.mu));
  const ValueCoeffs<Scalar> clamped = mu.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
  out.clamp_active = clamped != mu;
  mu = clamped;

  ValueMatrix<Scalar> cov = ValueMatrix<Scalar>::Zero();
  for (const auto& v : positives) {
    const ValueCoeffs<Scalar> d = v - mu;
    cov.noalias() += d * d.transpose();
  }
  cov /= n;

  const ValueMatrix<Scalar> I = ValueMatrix<Scalar>::Identity();
  const ValueMatrix<Scalar> sigma = mode == UpdateMode::Literal
                                        ? ValueMatrix<Scalar>(dist.sigma + alpha * cov + eps_I * I)
                                        : ValueMatrix<Scalar>(dist.sigma + alpha * (cov - dist.sigma) + eps_I * I);
  out.dist.mu = mu;
  out.dist.sigma = floor_covariance(sigma, eps_I);
  return out;
}

template <typename Scalar>
struct BasicTraceRecord {
  int iteration = 0;
  ValueCoeffs<Scalar> mu;
  Scalar trace_sigma = 0;
  Scalar min_eigenvalue = 0;
  Scalar asymmetry = 0;
  Scalar iteration_best = 0;
  Scalar mean_reward = 0;
  Scalar best_so_far = 0;
  std::size_t n_positive = 0;
  bool clamp_active = false;
};
using TraceRecord = BasicTraceRecord<double>;

template <typename Scalar>
struct BasicSearchResult {
  ValueCoeffs<Scalar> best_v;
  Scalar best_reward = 0;
  BasicSearchDistribution<Scalar> final_dist;
  std::vector<BasicTraceRecord<Scalar>> trace;
  bool converged = false;
};
using SearchResult = BasicSearchResult<double>;

template <typename Scalar>
BasicSearchDistribution<Scalar> initial_distribution(const SearchConfig& cfg) {
  BasicSearchDistribution<Scalar> d;
  d.mu = cfg.init_mu.cast<Scalar>();
  d.sigma = ValueMatrix<Scalar>::Identity() * static_cast<Scalar>(cfg.init_sigma);
  return d;
}

/// Runs up to cfg.T iterations of sample -> evaluate -> advantage -> select
/// -> update. `evaluate` is called concurrently (up to cfg.parallelism) with
/// a const coefficient vector and must return a finite reward. The result
/// holds the best candidate ever evaluated (first one on ties).
template <typename Scalar, typename Evaluator>
BasicSearchResult<Scalar> run_search(const SearchConfig& cfg, Evaluator&& evaluate) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  BasicSearchResult<Scalar> res;
  auto dist = initial_distribution<Scalar>(cfg);
  bool have_best = false;
  const Scalar alpha = static_cast<Scalar>(cfg.alpha);
  const Scalar eps_I = static_cast<Scalar>(cfg.eps_I);

  for (int t = 0; t < cfg.T; ++t) {
    const auto samples = sample_candidates(dist, cfg.K, cfg.clip_samples, rng);
    std::vector<BasicCandidateEval<Scalar>> evals(samples.size());
    parallel_for(samples.size(), cfg.parallelism, [&](std::size_t i) {
      Scalar r;
      try {
        r = static_cast<Scalar>(evaluate(samples[i]));
      } catch (const Error&) {
        rethrow_with_context("search iteration " + std::to_string(t) + ", candidate " + std::to_string(i));
      }
      if (!std::isfinite(static_cast<double>(r)))
        throw ValidationError("search iteration " + std::to_string(t) + ", candidate " + std::to_string(i) +
                              ": evaluator returned a non-finite reward");
      evals[i] = {samples[i], r, Scalar(0)};
    });
    assign_advantages(evals, static_cast<Scalar>(cfg.adv_eps));

    BasicTraceRecord<Scalar> rec;
    rec.iteration = t;
    rec.iteration_best = evals.front().reward;
    Scalar sum = 0;
    for (const auto& e : evals) {
      sum += e.reward;
      rec.iteration_best = std::max(rec.iteration_best, e.reward);
      if (!have_best || e.reward > res.best_reward) {
        res.best_reward = e.reward;
        res.best_v = e.v;
        have_best = true;
      }
    }
    rec.mean_reward = sum / static_cast<Scalar>(evals.size());

    std::vector<ValueCoeffs<Scalar>> positives;
    for (const auto& e : select_positive(evals)) positives.push_back(e.v);
    const auto upd = update_distribution(dist, positives, alpha, eps_I, cfg.update_mode);
    dist = upd.dist;

    rec.mu = dist.mu;
    rec.trace_sigma = dist.trace();
    rec.min_eigenvalue = dist.min_eigenvalue();
    rec.asymmetry = dist.asymmetry();
    rec.best_so_far = res.best_reward;
    rec.n_positive = positives.size();
    rec.clamp_active = upd.clamp_active;
    res.trace.push_back(rec);

    if (cfg.convergence_tol > 0 && static_cast<double>(rec.trace_sigma) < cfg.convergence_tol) {
      res.converged = true;
      break;
    }
  }
  res.final_dist = dist;
  return res;
}

/// acc + (1 - drift).
inline double composite_reward(double acc, double drift) {
  if (!std::isfinite(acc) || !std::isfinite(drift)) throw ValidationError("composite_reward: non-finite input");
  return acc + (1.0 - drift);
}

json to_json(const TraceRecord& r);
std::string trace_to_jsonl(const std::vector<TraceRecord>& trace);
std::string trace_csv(const std::vector<TraceRecord>& trace);
json to_json(const SearchConfig& cfg);

// ---------------------------------------------------------------------------
// Synthetic landscapes

enum class LandscapeKind { Quadratic, Rastrigin, Constant };

struct Landscape {
  LandscapeKind kind = LandscapeKind::Quadratic;
  ValueCoeffs<double> optimum = ValueCoeffs<double>::Zero();
  double constant = 0.0;

  /// Quadratic: -|v - v*|^2. Rastrigin: -sum(z^2 + (1 - cos(2 pi z)) / 4)
  /// with z = v - v*, multimodal with its global maximum 0 at v*.
  /// Constant: the constant.
  double operator()(const ValueCoeffs<double>& v) const;
};

std::string_view landscape_name(LandscapeKind k);
LandscapeKind parse_landscape(std::string_view s);

/// Security = Conformity = 0.5, all else 0.
ValueCoeffs<double> default_landscape_optimum();

}  // namespace visa
