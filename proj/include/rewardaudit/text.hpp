#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rewardaudit::text {

// Word characters for boundary checks are ASCII alphanumerics. Hyphens,
// apostrophes and all punctuation act as boundaries, so "queer" does not
// match inside "genderqueer" but does match in "LGBTQ+ queer folks".
// Hyphen/space variants of a term must be listed explicitly.
bool is_word_char(unsigned char c) noexcept;

// ASCII-only case transforms; multibyte UTF-8 sequences pass through verbatim.
std::string lower_ascii(std::string_view s);
std::string capitalize_first(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b) noexcept;

// Byte offsets of case-insensitive occurrences of `term` in `haystack`,
// bounded by non-word characters (or string edges) on both sides.
// Multi-word terms are matched as contiguous substrings.
std::vector<std::size_t> find_term_occurrences(std::string_view haystack, std::string_view term);

// Case-insensitive substring containment (no boundary requirement).
bool contains_ci(std::string_view haystack, std::string_view needle) noexcept;

// Whitespace tokenization, the token model of the stub scorers.
std::vector<std::string> whitespace_tokens(std::string_view s);

// Jaccard word units: lowercase ASCII, strip ASCII punctuation, split on
// whitespace. UTF-8 multibyte bytes are kept as word content.
std::vector<std::string> jaccard_tokens(std::string_view s);

}  // namespace rewardaudit::text
