#pragma once

// Preference-pair corpora annotated with Likert value vectors: anchor
// ambiguity filtering, negligible-shift filtering, rewrite-triple emission
// and distribution statistics.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "visa/backends.hpp"
#include "visa/json_io.hpp"

namespace visa {

struct PreferencePair {
  std::string pair_id;
  std::string prompt;
  std::string y_chosen;
  std::string y_rejected;
  std::string explanation;
  /// Identifies the chosen response across pairs.
  std::string anchor_id;

  void validate() const;
};

class AnnotatedPair {
 public:
  /// Both vectors must already be on the Likert grid.
  AnnotatedPair(PreferencePair pair, ValueVector v_chosen, ValueVector v_rejected);

  const PreferencePair& pair() const { return pair_; }
  const ValueVector& v_chosen() const { return v_chosen_; }
  const ValueVector& v_rejected() const { return v_rejected_; }

 private:
  PreferencePair pair_;
  ValueVector v_chosen_;
  ValueVector v_rejected_;
};

enum class Polarity { Positive, Negative };

struct RewriteTriple {
  std::string pair_id;
  std::string prompt;
  ValueVector v_target;
  std::string y_target;
  Polarity polarity = Polarity::Positive;
};

struct FilterConfig {
  double ambiguity_fraction = 0.15;
  double delta_eps = 0.25;
  /// When set, anchors with ambiguity > tau are discarded instead of a fixed
  /// fraction.
  std::optional<double> tau_variance;

  void validate() const;
};

/// {pair_id, prompt, y_chosen, y_rejected, explanation?, anchor_id?}. A
/// missing anchor_id falls back to the chosen text itself.
PreferencePair preference_pair_from_json(const json& j);

/// Needs v_chosen and v_rejected. With `quantize` the vectors are snapped to
/// the Likert grid; otherwise off-grid coordinates are a ValidationError.
AnnotatedPair annotated_pair_from_json(const json& j, bool quantize = true);

/// Annotates each pair with the detector and snaps the result to the grid.
std::vector<AnnotatedPair> annotate_pairs(const std::vector<PreferencePair>& pairs, Detector& detector,
                                          int parallelism = 1);

/// Per anchor: mean over dimensions of the population variance of v_chosen
/// across the anchor's pairs.
std::map<std::string, double> anchor_ambiguity(const std::vector<AnnotatedPair>& pairs);

/// ceil(fraction * n) with a small tolerance for representation error.
std::size_t discard_count(double fraction, std::size_t n_anchors);

struct AmbiguityFilterResult {
  std::vector<AnnotatedPair> kept;       // input order
  std::vector<AnnotatedPair> discarded;  // input order
  std::vector<std::string> discarded_anchors;  // ranking order
  std::size_t n_anchors = 0;
};

/// Fraction mode ranks anchors by descending ambiguity, larger anchor_id
/// first on ties, and discards the leading discard_count(fraction, n).
AmbiguityFilterResult filter_ambiguous(const std::vector<AnnotatedPair>& pairs, const FilterConfig& cfg);

/// Drops pairs with |v_chosen - v_rejected| < delta_eps.
std::vector<AnnotatedPair> filter_negligible_delta(const std::vector<AnnotatedPair>& pairs, double delta_eps);

/// Two triples per pair, Positive then Negative.
std::vector<RewriteTriple> emit_triples(const std::vector<AnnotatedPair>& pairs);

inline constexpr int kDeltaLevels = 9;  // -2.0 .. +2.0 in 0.5 steps
inline constexpr int kScoreLevels = 5;  // -1.0 .. +1.0 in 0.5 steps

struct DatasetStats {
  std::size_t n_pairs = 0;
  std::size_t n_samples = 0;
  std::size_t n_unique_vectors = 0;
  std::array<std::array<std::size_t, kDeltaLevels>, kNumDimensions> delta_histogram{};
  std::array<double, kNumDimensions> zero_delta_fraction{};
  std::array<std::array<std::size_t, kScoreLevels>, kNumDimensions> score_distribution{};
};

/// Counts over the triples the pairs emit: Δv = v_chosen - v_rejected per
/// pair, scores and unique vectors over both sides.
DatasetStats dataset_stats(const std::vector<AnnotatedPair>& pairs);

json to_json(const PreferencePair& p);
json to_json(const AnnotatedPair& p);
json to_json(const RewriteTriple& t);
json to_json(const DatasetStats& s);
json to_json(const FilterConfig& c);
/// One row per dimension and level, with a header line.
std::string delta_histogram_csv(const DatasetStats& s);
std::string score_distribution_csv(const DatasetStats& s);

}  // namespace visa
