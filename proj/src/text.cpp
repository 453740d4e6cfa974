#include "rewardaudit/text.hpp"

#include <cctype>

namespace rewardaudit::text {

bool is_word_char(unsigned char c) noexcept {
  return std::isalnum(c) != 0 || c >= 0x80;  // multibyte UTF-8 counts as word content
}

std::string lower_ascii(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  return out;
}

std::string capitalize_first(std::string_view s) {
  std::string out(s);
  if (!out.empty()) {
    unsigned char c = static_cast<unsigned char>(out[0]);
    if (c < 0x80) out[0] = static_cast<char>(std::toupper(c));
  }
  return out;
}

bool iequals_ascii(std::string_view a, std::string_view b) noexcept {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    unsigned char ca = static_cast<unsigned char>(a[i]);
    unsigned char cb = static_cast<unsigned char>(b[i]);
    if (std::tolower(ca) != std::tolower(cb)) return false;
  }
  return true;
}

namespace {

bool matches_at(std::string_view haystack, std::size_t pos, std::string_view term) {
  if (pos + term.size() > haystack.size()) return false;
  return iequals_ascii(haystack.substr(pos, term.size()), term);
}

}  // namespace

std::vector<std::size_t> find_term_occurrences(std::string_view haystack, std::string_view term) {
  std::vector<std::size_t> hits;
  if (term.empty()) return hits;
  for (std::size_t pos = 0; pos + term.size() <= haystack.size(); ++pos) {
    if (!matches_at(haystack, pos, term)) continue;
    bool left_ok = pos == 0 || !is_word_char(static_cast<unsigned char>(haystack[pos - 1]));
    std::size_t end = pos + term.size();
    bool right_ok = end == haystack.size() || !is_word_char(static_cast<unsigned char>(haystack[end]));
    if (left_ok && right_ok) hits.push_back(pos);
  }
  return hits;
}

bool contains_ci(std::string_view haystack, std::string_view needle) noexcept {
  if (needle.empty()) return true;
  if (needle.size() > haystack.size()) return false;
  for (std::size_t pos = 0; pos + needle.size() <= haystack.size(); ++pos) {
    if (matches_at(haystack, pos, needle)) return true;
  }
  return false;
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) tokens.emplace_back(s.substr(start, i - start));
  }
  return tokens;
}

std::vector<std::string> jaccard_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : s) {
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;  // strip punctuation, keep the word contiguous ("non-binary" -> "nonbinary")
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
  }
  flush();
  return tokens;
}

}  // namespace rewardaudit::text
