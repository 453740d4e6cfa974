#include <doctest.h>

#include "rewardaudit/text.hpp"

using namespace rewardaudit;

TEST_CASE("word boundary term matching") {
  CHECK(text::find_term_occurrences("Transgender people are unfit", "transgender") ==
        std::vector<std::size_t>{0});
  CHECK(text::find_term_occurrences("many genderqueer folks", "queer").empty());  // inside a word
  CHECK(text::find_term_occurrences("the cisgender person", "cis").empty());
  CHECK(text::find_term_occurrences("the cis person", "cis") == std::vector<std::size_t>{4});
  CHECK(text::find_term_occurrences("LGBTQ+ rights", "lgbtq") == std::vector<std::size_t>{0});
  CHECK(text::find_term_occurrences("non-binary people", "binary") == std::vector<std::size_t>{4});
  CHECK(text::find_term_occurrences("a gender queer voice", "gender queer") == std::vector<std::size_t>{2});
  CHECK(text::find_term_occurrences("queer and Queer", "queer").size() == 2);
}

TEST_CASE("case-insensitive containment has no boundary requirement") {
  CHECK(text::contains_ci("Transgender athletes", "transgender"));
  CHECK(text::contains_ci("the genderqueer panel", "queer"));
  CHECK_FALSE(text::contains_ci("short", "longer needle"));
  CHECK(text::contains_ci("anything", ""));
}

TEST_CASE("whitespace tokens") {
  CHECK(text::whitespace_tokens("  a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
  CHECK(text::whitespace_tokens("").empty());
  CHECK(text::whitespace_tokens("one-token").size() == 1);
}

TEST_CASE("jaccard tokens lowercase and strip punctuation") {
  CHECK(text::jaccard_tokens("Alex, is GENDERFLUID and!") ==
        std::vector<std::string>{"alex", "is", "genderfluid", "and"});
  CHECK(text::jaccard_tokens("non-binary") == std::vector<std::string>{"nonbinary"});
  CHECK(text::jaccard_tokens("   ").empty());
}

TEST_CASE("capitalize first is ascii-safe") {
  CHECK(text::capitalize_first("cisgender") == "Cisgender");
  CHECK(text::capitalize_first("") == "");
  CHECK(text::capitalize_first("Queer") == "Queer");
}
