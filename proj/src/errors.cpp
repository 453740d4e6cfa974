#include "rewardaudit/errors.hpp"

namespace rewardaudit {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::no_subject_found: return "NoSubjectFound";
    case errc::ambiguous_subject: return "AmbiguousSubject";
    case errc::malformed_template: return "MalformedTemplate";
    case errc::malformed_prompt_format: return "MalformedPromptFormat";
    case errc::unreadable_record: return "UnreadableRecord";
    case errc::empty_completion: return "EmptyCompletion";
    case errc::context_overflow: return "ContextOverflow";
    case errc::backend_unavailable: return "BackendUnavailable";
    case errc::corrupt_cache_entry: return "CorruptCacheEntry";
    case errc::missing_score: return "MissingScore";
    case errc::non_finite_input: return "NonFiniteInput";
    case errc::degenerate_variance: return "DegenerateVariance";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::classifier_unavailable: return "ClassifierUnavailable";
    case errc::empty_text: return "EmptyText";
    case errc::empty_group: return "EmptyGroup";
    case errc::no_matching_prompts: return "NoMatchingPrompts";
    case errc::missing_scores: return "MissingScores";
    case errc::unknown_theme: return "UnknownTheme";
    case errc::unknown_sample_id: return "UnknownSampleId";
    case errc::empty_input: return "EmptyInput";
    case errc::invalid_config: return "InvalidConfig";
    case errc::unwritable_output: return "UnwritableOutput";
  }
  return "UnknownError";
}

}  // namespace rewardaudit
