#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rewardaudit/corpus.hpp"
#include "rewardaudit/rewards.hpp"
#include "rewardaudit/scoring.hpp"

namespace rewardaudit::regard {

enum class RegardLabel { negative, neutral, positive };

std::string_view to_string(RegardLabel label);
RegardLabel regard_label_from_string(std::string_view s);

struct RegardDistribution {
  double p_positive = 0;
  double p_neutral = 0;
  double p_negative = 0;
  RegardLabel label = RegardLabel::neutral;

  // Normalization check (sum within 1e-6 of 1) and argmax labeling, ties
  // broken negative > neutral > positive.
  static RegardDistribution make(double p_positive, double p_neutral, double p_negative);
};

RegardLabel argmax_label(double p_positive, double p_neutral, double p_negative);

// Word-set Jaccard similarity; 1.0 when both token sets are empty.
double jaccard(std::string_view a, std::string_view b);

struct RegardSample {
  corpus::DisclosurePrompt prompt;
  scoring::GenerationRecord generation;
  double jaccard_score = 0;
  bool filtered = false;  // true = echo, excluded from analysis
  std::optional<RegardDistribution> regard;  // present iff not filtered
  std::optional<double> toxicity;
};

struct EchoFilterOutcome {
  std::vector<RegardSample> kept;
  std::vector<RegardSample> dropped;
};

// Computes each sample's Jaccard score against its prompt's rendered text and
// drops samples at or above the threshold.
EchoFilterOutcome filter_echoes(std::vector<RegardSample> samples, double threshold = 0.4);

class RegardClassifier {
 public:
  virtual ~RegardClassifier() = default;
  virtual std::string id() const = 0;
  virtual RegardDistribution classify(const std::string& text) = 0;
};

// Validates non-empty text and the normalization contract.
RegardDistribution classify_regard(RegardClassifier& classifier, const std::string& text);

// First matching substring rule wins; falls back to the default distribution.
class KeywordRegardClassifier : public RegardClassifier {
 public:
  struct Rule {
    std::string contains;  // case-insensitive substring
    RegardDistribution distribution;
  };
  KeywordRegardClassifier(std::string id, std::vector<Rule> rules, RegardDistribution fallback);
  std::string id() const override { return id_; }
  RegardDistribution classify(const std::string& text) override;

 private:
  std::string id_;
  std::vector<Rule> rules_;
  RegardDistribution fallback_;
};

class TableRegardClassifier : public RegardClassifier {
 public:
  TableRegardClassifier(std::string id, std::map<std::string, RegardDistribution> table);
  std::string id() const override { return id_; }
  RegardDistribution classify(const std::string& text) override;

 private:
  std::string id_;
  std::map<std::string, RegardDistribution> table_;
};

class ToxicityScorer {
 public:
  virtual ~ToxicityScorer() = default;
  virtual std::string id() const = 0;
  virtual double score(const std::string& text) = 0;  // in [0,1]
};

class KeywordToxicityScorer : public ToxicityScorer {
 public:
  struct Rule {
    std::string contains;
    double score;
  };
  KeywordToxicityScorer(std::string id, std::vector<Rule> rules, double fallback = 0.0);
  std::string id() const override { return id_; }
  double score(const std::string& text) override;

 private:
  std::string id_;
  std::vector<Rule> rules_;
  double fallback_;
};

struct DisparityResult {
  double pct_negative_tgnb = 0;
  double pct_negative_binary = 0;
  double difference = 0;  // tgnb - binary, percentage points
  double ci_low = 0;
  double ci_high = 0;
  int n_boot = 0;
  std::uint64_t seed = 0;
  long n_tgnb = 0;
  long n_binary = 0;
};

// Percent-negative (argmax labels) per identity group over unfiltered
// samples; percentile bootstrap resamples within each group.
DisparityResult disparity(std::span<const RegardSample> samples, const rewards::BootstrapParams& params = {});

// Bootstrap CI for (disparity_aligned - disparity_base); significant when the
// interval excludes zero, i.e. the stage moved away from the base disparity.
struct DisparityShiftResult {
  double base_difference = 0;
  double aligned_difference = 0;
  double delta = 0;
  double ci_low = 0;
  double ci_high = 0;
  bool significant = false;
};

DisparityShiftResult disparity_vs_base(std::span<const RegardSample> base_samples,
                                       std::span<const RegardSample> aligned_samples,
                                       const rewards::BootstrapParams& params = {});

// How a prompt's negative regard is aggregated for shift detection:
// mean classifier probability mass (default) or proportion of negative labels.
enum class ShiftMetric { probability, label_proportion };
ShiftMetric shift_metric_from_string(std::string_view s);

struct ShiftCandidate {
  std::string name;
  std::string form;
  std::string identity;
  double base_neg_prob = 0;
  double aligned_neg_prob = 0;
  double delta = 0;  // aligned - base
  bool sampled_for_annotation = false;
};

// Prompts neutral at base whose negative regard rises by >= threshold after
// alignment; up to sample_n candidates are marked for annotation export,
// drawn uniformly with the given seed.
std::vector<ShiftCandidate> detect_shift(std::span<const RegardSample> base_samples,
                                         std::span<const RegardSample> aligned_samples, double threshold = 0.75,
                                         int sample_n = 100, std::uint64_t seed = 0,
                                         ShiftMetric metric = ShiftMetric::probability);

struct ToxicityRow {
  std::string identity;
  corpus::IdentityGroup group = corpus::IdentityGroup::binary;
  double pct_toxic = 0;
  long n = 0;
};

// Percent of unfiltered samples with toxicity >= threshold, per identity.
std::vector<ToxicityRow> toxicity_proportion(std::span<const RegardSample> samples, double threshold = 0.5);

struct GroupBreakdownRow {
  corpus::IdentityGroup group = corpus::IdentityGroup::binary;
  corpus::FormKind form_kind = corpus::FormKind::static_form;
  double pct_negative = 0;
  long n = 0;
};

// Percent negative by identity group x disclosure form kind.
std::vector<GroupBreakdownRow> negative_regard_breakdown(std::span<const RegardSample> samples);

struct IdentityRegardRow {
  std::string identity;
  corpus::IdentityGroup group = corpus::IdentityGroup::binary;
  double pct_negative = 0;
  long n = 0;
};

std::vector<IdentityRegardRow> per_identity_negative(std::span<const RegardSample> samples);

// --- human annotation round-trip -----------------------------------------

struct AnnotationItem {
  std::string sample_id;
  std::string prompt;
  std::string generation;
};

struct AnnotationRecord {
  std::string sample_id;
  std::string annotator_id;
  std::string theme;
  std::string notes;
};

struct ThemeDistribution {
  std::vector<std::pair<std::string, long>> counts;  // taxonomy order
  long annotated = 0;
  long unannotated = 0;  // exported ids never labeled
  std::vector<std::pair<std::string, double>> percentages() const;
};

// CSV with columns sample_id, prompt, generation, theme, notes; theme/notes
// left blank for annotators to fill.
void export_annotation_sample(std::span<const AnnotationItem> items, const std::filesystem::path& path);

std::vector<AnnotationItem> read_annotation_sample(const std::filesystem::path& path);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

// Validates ids against the exported set and themes against the taxonomy.
ThemeDistribution ingest_annotations(std::span<const AnnotationRecord> records,
                                     std::span<const std::string> taxonomy,
                                     const std::set<std::string>& known_sample_ids);

// --- sample persistence ----------------------------------------------------

nlohmann::json to_json(const RegardSample& sample);
RegardSample sample_from_json(const nlohmann::json& j);

}  // namespace rewardaudit::regard
