#include "visa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "visa/mock_backend.hpp"
#include "visa/parallel.hpp"

namespace visa {

void PreferencePair::validate() const {
  if (pair_id.empty()) throw ValidationError("preference pair without pair_id");
  if (y_chosen == y_rejected) throw ValidationError("pair '" + pair_id + "': chosen and rejected texts are identical");
  if (anchor_id.empty()) throw ValidationError("pair '" + pair_id + "': empty anchor_id");
}

AnnotatedPair::AnnotatedPair(PreferencePair pair, ValueVector v_chosen, ValueVector v_rejected)
    : pair_(std::move(pair)), v_chosen_(v_chosen), v_rejected_(v_rejected) {
  pair_.validate();
  if (!is_likert(v_chosen_) || !is_likert(v_rejected_))
    throw ValidationError("pair '" + pair_.pair_id + "': value vectors must be on the 5-level Likert grid");
}

void FilterConfig::validate() const {
  if (!(ambiguity_fraction > 0.0 && ambiguity_fraction < 1.0))
    throw ConfigError("ambiguity_fraction must be in (0, 1)");
  if (!(delta_eps > 0.0)) throw ConfigError("delta_eps must be > 0");
  if (tau_variance && !(*tau_variance >= 0.0)) throw ConfigError("tau_variance must be >= 0");
}

PreferencePair preference_pair_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("preference pair must be a JSON object");
  PreferencePair p;
  p.pair_id = require_string(j, "pair_id");
  p.prompt = optional_string(j, "prompt");
  p.y_chosen = require_string(j, "y_chosen");
  p.y_rejected = require_string(j, "y_rejected");
  p.explanation = optional_string(j, "explanation");
  p.anchor_id = optional_string(j, "anchor_id", p.y_chosen);
  p.validate();
  return p;
}

AnnotatedPair annotated_pair_from_json(const json& j, bool quantize) {
  PreferencePair p = preference_pair_from_json(j);
  if (!j.contains("v_chosen") || !j.contains("v_rejected"))
    throw ValidationError("pair '" + p.pair_id + "' is not annotated (needs v_chosen and v_rejected)");
  ValueVector vc = value_vector_from_json(j["v_chosen"]);
  ValueVector vr = value_vector_from_json(j["v_rejected"]);
  if (quantize) {
    vc = quantize_likert(vc);
    vr = quantize_likert(vr);
  }
  return AnnotatedPair(std::move(p), vc, vr);
}

std::vector<AnnotatedPair> annotate_pairs(const std::vector<PreferencePair>& pairs, Detector& detector,
                                          int parallelism) {
  std::vector<std::optional<AnnotatedPair>> slots(pairs.size());
  parallel_for(pairs.size(), std::min(parallelism, detector.parallelism()), [&](std::size_t i) {
    const auto& p = pairs[i];
    try {
      const ValueVector vc = quantize_likert(detector.detect(p.prompt, p.y_chosen));
      const ValueVector vr = quantize_likert(detector.detect(p.prompt, p.y_rejected));
      slots[i].emplace(p, vc, vr);
    } catch (const Error&) {
      rethrow_with_context("annotate pair '" + p.pair_id + "'");
    }
  });
  std::vector<AnnotatedPair> out;
  out.reserve(pairs.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::map<std::string, double> anchor_ambiguity(const std::vector<AnnotatedPair>& pairs) {
  std::map<std::string, std::vector<const ValueVector*>> groups;
  for (const auto& p : pairs) groups[p.pair().anchor_id].push_back(&p.v_chosen());
  std::map<std::string, double> out;
  for (const auto& [anchor, vs] : groups) {
    const double n = static_cast<double>(vs.size());
    ValueCoeffs<double> mean = ValueCoeffs<double>::Zero();
    for (const auto* v : vs) mean += v->coeffs();
    mean /= n;
    ValueCoeffs<double> var = ValueCoeffs<double>::Zero();
    for (const auto* v : vs) var += (v->coeffs() - mean).cwiseAbs2();
    var /= n;
    out[anchor] = var.mean();
  }
  return out;
}

std::size_t discard_count(double fraction, std::size_t n_anchors) {
  // 0.15 * 100 is 15.000000000000002 in binary floating point
  const double raw = fraction * static_cast<double>(n_anchors);
  return std::min(n_anchors, static_cast<std::size_t>(std::max(0.0, std::ceil(raw - 1e-9))));
}

AmbiguityFilterResult filter_ambiguous(const std::vector<AnnotatedPair>& pairs, const FilterConfig& cfg) {
  cfg.validate();
  const auto amb = anchor_ambiguity(pairs);
  std::vector<std::pair<std::string, double>> ranked(amb.begin(), amb.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first > b.first;
  });

  AmbiguityFilterResult res;
  res.n_anchors = ranked.size();
  std::set<std::string> drop;
  if (cfg.tau_variance) {
    for (const auto& [anchor, v] : ranked)
      if (v > *cfg.tau_variance) {
        drop.insert(anchor);
        res.discarded_anchors.push_back(anchor);
      }
  } else {
    const std::size_t k = discard_count(cfg.ambiguity_fraction, ranked.size());
    for (std::size_t i = 0; i < k; ++i) {
      drop.insert(ranked[i].first);
      res.discarded_anchors.push_back(ranked[i].first);
    }
  }
  for (const auto& p : pairs) (drop.count(p.pair().anchor_id) ? res.discarded : res.kept).push_back(p);
  return res;
}

std::vector<AnnotatedPair> filter_negligible_delta(const std::vector<AnnotatedPair>& pairs, double delta_eps) {
  if (!(delta_eps > 0.0)) throw ConfigError("delta_eps must be > 0");
  std::vector<AnnotatedPair> out;
  for (const auto& p : pairs)
    if (!(l2_distance(p.v_chosen(), p.v_rejected()) < delta_eps)) out.push_back(p);
  return out;
}

std::vector<RewriteTriple> emit_triples(const std::vector<AnnotatedPair>& pairs) {
  std::vector<RewriteTriple> out;
  out.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.pair().pair_id, p.pair().prompt, p.v_chosen(), p.pair().y_chosen, Polarity::Positive});
    out.push_back({p.pair().pair_id, p.pair().prompt, p.v_rejected(), p.pair().y_rejected, Polarity::Negative});
  }
  return out;
}

namespace {

int level_index(double x, double lo) { return static_cast<int>(std::lround((x - lo) / 0.5)); }

}  // namespace

DatasetStats dataset_stats(const std::vector<AnnotatedPair>& pairs) {
  DatasetStats s;
  s.n_pairs = pairs.size();
  s.n_samples = 2 * pairs.size();
  std::set<std::array<int, kNumDimensions>> unique;
  auto key = [](const ValueVector& v) {
    std::array<int, kNumDimensions> k{};
    for (int i = 0; i < kNumDimensions; ++i) k[static_cast<std::size_t>(i)] = level_index(v(i), -1.0);
    return k;
  };
  for (const auto& p : pairs) {
    unique.insert(key(p.v_chosen()));
    unique.insert(key(p.v_rejected()));
    for (int i = 0; i < kNumDimensions; ++i) {
      const auto d = static_cast<std::size_t>(i);
      s.delta_histogram[d][static_cast<std::size_t>(level_index(p.v_chosen()(i) - p.v_rejected()(i), -2.0))]++;
      s.score_distribution[d][static_cast<std::size_t>(level_index(p.v_chosen()(i), -1.0))]++;
      s.score_distribution[d][static_cast<std::size_t>(level_index(p.v_rejected()(i), -1.0))]++;
    }
  }
  s.n_unique_vectors = unique.size();
  for (std::size_t d = 0; d < kNumDimensions; ++d)
    s.zero_delta_fraction[d] =
        pairs.empty() ? 0.0 : static_cast<double>(s.delta_histogram[d][kDeltaLevels / 2]) / static_cast<double>(pairs.size());
  return s;
}

json to_json(const PreferencePair& p) {
  return json{{"pair_id", p.pair_id}, {"prompt", p.prompt},           {"y_chosen", p.y_chosen},
              {"y_rejected", p.y_rejected}, {"explanation", p.explanation}, {"anchor_id", p.anchor_id}};
}

json to_json(const AnnotatedPair& p) {
  json j = to_json(p.pair());
  j["v_chosen"] = to_json(p.v_chosen());
  j["v_rejected"] = to_json(p.v_rejected());
  return j;
}

json to_json(const RewriteTriple& t) {
  return json{{"pair_id", t.pair_id},
              {"prompt", t.prompt},
              {"v_target", to_json(t.v_target)},
              {"y_target", t.y_target},
              {"polarity", t.polarity == Polarity::Positive ? "positive" : "negative"}};
}

namespace {

std::string level_label(int idx, double lo) { return format_real(lo + 0.5 * idx); }

}  // namespace

json to_json(const DatasetStats& s) {
  json hist = json::object(), zero = json::object(), scores = json::object();
  for (ValueDimension dim : kAllDimensions) {
    const auto d = static_cast<std::size_t>(index_of(dim));
    const std::string name(dimension_name(dim));
    json h = json::object(), sc = json::object();
    for (int l = 0; l < kDeltaLevels; ++l) h[level_label(l, -2.0)] = s.delta_histogram[d][static_cast<std::size_t>(l)];
    for (int l = 0; l < kScoreLevels; ++l) sc[level_label(l, -1.0)] = s.score_distribution[d][static_cast<std::size_t>(l)];
    hist[name] = std::move(h);
    scores[name] = std::move(sc);
    zero[name] = s.zero_delta_fraction[d];
  }
  return json{{"n_pairs", s.n_pairs},
              {"n_samples", s.n_samples},
              {"n_unique_vectors", s.n_unique_vectors},
              {"delta_histogram", std::move(hist)},
              {"zero_delta_fraction", std::move(zero)},
              {"score_distribution", std::move(scores)}};
}

json to_json(const FilterConfig& c) {
  json j{{"ambiguity_fraction", c.ambiguity_fraction}, {"delta_eps", c.delta_eps}};
  j["tau_variance"] = c.tau_variance ? json(*c.tau_variance) : json(nullptr);
  return j;
}

std::string delta_histogram_csv(const DatasetStats& s) {
  std::string out = "dimension,delta,count\n";
  for (ValueDimension dim : kAllDimensions)
    for (int l = 0; l < kDeltaLevels; ++l)
      out += std::string(dimension_name(dim)) + ',' + level_label(l, -2.0) + ',' +
             std::to_string(s.delta_histogram[static_cast<std::size_t>(index_of(dim))][static_cast<std::size_t>(l)]) + '\n';
  return out;
}

std::string score_distribution_csv(const DatasetStats& s) {
  std::string out = "dimension,score,count\n";
  for (ValueDimension dim : kAllDimensions)
    for (int l = 0; l < kScoreLevels; ++l)
      out += std::string(dimension_name(dim)) + ',' + level_label(l, -1.0) + ',' +
             std::to_string(s.score_distribution[static_cast<std::size_t>(index_of(dim))][static_cast<std::size_t>(l)]) +
             '\n';
  return out;
}

}  // namespace visa
