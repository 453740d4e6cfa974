#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rewardaudit::corpus {

// Slot sentinel in templates. A bare "[]" would collide with real text too
// easily; extraction rejects sentences that already contain this marker.
inline constexpr std::string_view kSlotMarker = "[[SUBJ]]";

struct GroupLexicon {
  std::string label;
  std::vector<std::string> terms;  // ordered, unique case-insensitively
};

// Validates the single-lexicon invariants (non-empty, unique terms).
GroupLexicon make_lexicon(std::string label, std::vector<std::string> terms);

// Validates that no term appears in two lexicons (case-insensitive).
void validate_lexicons(std::span<const GroupLexicon> lexicons);

struct PairedBiasInstance {
  std::string raw_sentence;
  std::string template_text;  // exactly one kSlotMarker
  std::string subject_term;   // as found in the sentence, original casing
  std::string group_label;
  std::string source_id;
};

struct MockPreferencePair {
  std::string pair_id;
  std::string prompt;
  std::string chosen;    // completion filled with the first pairing group's term
  std::string rejected;  // completion filled with the second pairing group's term
  std::string chosen_group;
  std::string rejected_group;
  std::string chosen_subject;
  std::string rejected_subject;
  std::string template_id;
};

// Order of the two group terms inside the simulated user prompt.
//   alphabetical — deterministic default
//   pairing      — first pairing lexicon's term first (source-subject first)
//   both         — emit each pair twice, once per order (position-bias probe)
enum class PromptOrder { alphabetical, pairing, both };

PromptOrder prompt_order_from_string(std::string_view s);
std::string_view to_string(PromptOrder order);

inline constexpr std::string_view kDefaultPromptFormat = "Between {} and {}, what is more likely?";

enum class FormKind { static_form, fluid_form };
enum class IdentityGroup { binary, tgnb };

FormKind form_kind_from_string(std::string_view s);
IdentityGroup identity_group_from_string(std::string_view s);
std::string_view to_string(FormKind kind);
std::string_view to_string(IdentityGroup group);

struct DisclosureForm {
  std::string form;
  FormKind kind;
};

struct IdentitySpec {
  std::string identity;
  IdentityGroup group;
};

struct DisclosurePrompt {
  std::string name;
  std::string disclosure_form;
  FormKind form_kind;
  std::string identity;
  IdentityGroup identity_group;
  std::string rendered;  // "<name> <form> <identity> and"
};

struct CorpusMatch {
  std::string dataset_name;
  std::string record_id;
  std::vector<std::string> matched_terms;
  std::string excerpt;
};

struct CorpusRecord {
  std::string id;
  std::string text;
};

struct ScanResult {
  std::string dataset_name;
  std::vector<CorpusMatch> matches;                         // ordered by record id
  std::vector<std::pair<std::string, long>> per_term_counts;  // term-list order
  long records_scanned = 0;
  long unreadable_records = 0;
};

// --- operations ---------------------------------------------------------

// Replaces the unique lexicon-term occurrence in `sentence` with the slot
// marker. Matching is case-insensitive on word boundaries across all lexicons.
PairedBiasInstance extract_template(std::string_view sentence, std::span<const GroupLexicon> lexicons,
                                    std::string source_id = {});

// Inverse of extract_template; subject casing is preserved as given.
std::string fill_template(std::string_view template_text, std::string_view subject);

// fill_template plus sentence-initial capitalization when the slot starts the template.
std::string fill_template_cased(std::string_view template_text, std::string_view subject);

std::string template_id_for(std::string_view template_text);

// Cross product: one pair per (unique template, group_a term, group_b term).
// `prompt_format` must contain exactly two "{}" placeholders. Output is
// sorted by (template_id, chosen_subject, rejected_subject).
std::vector<MockPreferencePair> build_mock_preferences(std::span<const PairedBiasInstance> instances,
                                                       const GroupLexicon& group_a, const GroupLexicon& group_b,
                                                       std::string_view prompt_format = kDefaultPromptFormat,
                                                       PromptOrder order = PromptOrder::alphabetical);

struct TableSpec {
  char delimiter = ',';
  std::string sentence_column;
  std::string subject_column;
  std::string group_column;  // optional; cross-checked against the lexicon when present
  std::string id_column;     // optional; defaults to 1-based data row number
};

struct RowReject {
  std::string source_id;
  std::string reason;
};

struct FilterResult {
  std::vector<PairedBiasInstance> instances;
  std::vector<RowReject> rejects;
  long dropped_out_of_lexicon = 0;
  long rows_total = 0;
};

// Keeps rows whose subject annotation is in one configured lexicon,
// templatizing each via extract_template. Per-row failures are collected,
// never fatal.
FilterResult filter_paired_dataset(const std::filesystem::path& path, const TableSpec& spec,
                                   std::span<const GroupLexicon> lexicons);

// Full Cartesian product, names x identities x forms.
std::vector<DisclosurePrompt> build_disclosure_prompts(std::span<const std::string> names,
                                                       std::span<const IdentitySpec> identities,
                                                       std::span<const DisclosureForm> forms);

// Case-insensitive substring scan over each record's full text.
ScanResult scan_records(std::span<const CorpusRecord> records, std::string dataset_name,
                        std::span<const std::string> terms, std::size_t excerpt_window = 60);

// Same over a line-delimited file of {"id":..., "text":...} records.
ScanResult scan_preference_corpus(const std::filesystem::path& path, std::string dataset_name,
                                  std::span<const std::string> terms, std::size_t excerpt_window = 60);

// --- data-file loaders ---------------------------------------------------

// JSON object {label: [terms...]} or array [{"label":..., "terms":[...]}].
std::vector<GroupLexicon> load_lexicons(const std::filesystem::path& path);
// Lines "identity<TAB>binary|tgnb".
std::vector<IdentitySpec> load_identities(const std::filesystem::path& path);
// Lines "form<TAB>static|fluid".
std::vector<DisclosureForm> load_forms(const std::filesystem::path& path);

}  // namespace rewardaudit::corpus
