#pragma once

#include <stdexcept>
#include <string>

namespace rewardaudit {

enum class errc {
  // corpus
  no_subject_found,
  ambiguous_subject,
  malformed_template,
  malformed_prompt_format,
  unreadable_record,
  // scoring
  empty_completion,
  context_overflow,
  backend_unavailable,
  corrupt_cache_entry,
  // rewards
  missing_score,
  non_finite_input,
  degenerate_variance,
  length_mismatch,
  // regard
  classifier_unavailable,
  empty_text,
  empty_group,
  no_matching_prompts,
  missing_scores,
  unknown_theme,
  unknown_sample_id,
  // report / shared
  empty_input,
  invalid_config,
  unwritable_output,
};

const char* errc_name(errc code) noexcept;

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

// Backend failures carry a retryable flag so callers can distinguish
// transient outages from permanent ones.
class backend_error : public error {
 public:
  backend_error(const std::string& what, bool retryable)
      : error(errc::backend_unavailable, what), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

}  // namespace rewardaudit
