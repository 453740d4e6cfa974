#include "rewardaudit/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "rewardaudit/errors.hpp"
#include "rewardaudit/io.hpp"
#include "rewardaudit/text.hpp"

namespace rewardaudit::corpus {

GroupLexicon make_lexicon(std::string label, std::vector<std::string> terms) {
  if (label.empty()) fail(errc::invalid_config, "lexicon label must be non-empty");
  if (terms.empty()) fail(errc::invalid_config, "lexicon '" + label + "' has no terms");
  std::set<std::string> seen;
  for (const auto& term : terms) {
    if (term.empty()) fail(errc::invalid_config, "lexicon '" + label + "' contains an empty term");
    if (!seen.insert(text::lower_ascii(term)).second)
      fail(errc::invalid_config, "lexicon '" + label + "' repeats term '" + term + "'");
  }
  return GroupLexicon{std::move(label), std::move(terms)};
}

void validate_lexicons(std::span<const GroupLexicon> lexicons) {
  std::map<std::string, std::string> owner;  // lowercased term -> lexicon label
  for (const auto& lex : lexicons) {
    for (const auto& term : lex.terms) {
      auto [it, inserted] = owner.emplace(text::lower_ascii(term), lex.label);
      if (!inserted && it->second != lex.label)
        fail(errc::invalid_config,
             "term '" + term + "' appears in lexicons '" + it->second + "' and '" + lex.label + "'");
    }
  }
}

PairedBiasInstance extract_template(std::string_view sentence, std::span<const GroupLexicon> lexicons,
                                    std::string source_id) {
  if (sentence.find(kSlotMarker) != std::string_view::npos)
    fail(errc::malformed_template, "sentence already contains the slot marker");

  struct Hit {
    std::size_t pos;
    std::size_t len;
    const GroupLexicon* lexicon;
  };
  std::vector<Hit> hits;
  for (const auto& lex : lexicons) {
    for (const auto& term : lex.terms) {
      for (std::size_t pos : text::find_term_occurrences(sentence, term)) {
        hits.push_back(Hit{pos, term.size(), &lex});
      }
    }
  }
  if (hits.empty()) fail(errc::no_subject_found, "no lexicon term in: " + std::string(sentence));
  if (hits.size() > 1) {
    // Nested matches of terms from the same lexicon ("cis" inside "cisgender")
    // cannot happen because boundaries exclude them, so >1 hit means a real
    // ambiguity: repeated subject or two distinct subjects.
    fail(errc::ambiguous_subject,
         std::to_string(hits.size()) + " lexicon term occurrences in: " + std::string(sentence));
  }

  const Hit& hit = hits.front();
  PairedBiasInstance out;
  out.raw_sentence = std::string(sentence);
  out.subject_term = std::string(sentence.substr(hit.pos, hit.len));
  out.group_label = hit.lexicon->label;
  out.template_text = std::string(sentence.substr(0, hit.pos)) + std::string(kSlotMarker) +
                      std::string(sentence.substr(hit.pos + hit.len));
  out.source_id = std::move(source_id);
  return out;
}

std::string fill_template(std::string_view template_text, std::string_view subject) {
  std::size_t pos = template_text.find(kSlotMarker);
  if (pos == std::string_view::npos) fail(errc::malformed_template, "template has no slot");
  if (template_text.find(kSlotMarker, pos + kSlotMarker.size()) != std::string_view::npos)
    fail(errc::malformed_template, "template has more than one slot");
  std::string out(template_text.substr(0, pos));
  out += subject;
  out += template_text.substr(pos + kSlotMarker.size());
  return out;
}

std::string fill_template_cased(std::string_view template_text, std::string_view subject) {
  if (template_text.rfind(kSlotMarker, 0) == 0) return fill_template(template_text, text::capitalize_first(subject));
  return fill_template(template_text, subject);
}

std::string template_id_for(std::string_view template_text) { return io::sha256_hex(template_text).substr(0, 16); }

PromptOrder prompt_order_from_string(std::string_view s) {
  if (s == "alphabetical") return PromptOrder::alphabetical;
  if (s == "pairing") return PromptOrder::pairing;
  if (s == "both") return PromptOrder::both;
  fail(errc::invalid_config, "unknown prompt_order '" + std::string(s) + "'");
}

std::string_view to_string(PromptOrder order) {
  switch (order) {
    case PromptOrder::alphabetical: return "alphabetical";
    case PromptOrder::pairing: return "pairing";
    case PromptOrder::both: return "both";
  }
  return "?";
}

namespace {

std::string render_prompt(std::string_view format, std::string_view first, std::string_view second) {
  std::string out;
  int filled = 0;
  std::size_t i = 0;
  while (i < format.size()) {
    if (i + 1 < format.size() && format[i] == '{' && format[i + 1] == '}') {
      out += text::capitalize_first(filled == 0 ? first : second);
      ++filled;
      i += 2;
    } else {
      out += format[i];
      ++i;
    }
  }
  return out;
}

int count_placeholders(std::string_view format) {
  int n = 0;
  for (std::size_t i = 0; i + 1 < format.size(); ++i) {
    if (format[i] == '{' && format[i + 1] == '}') {
      ++n;
      ++i;
    }
  }
  return n;
}

}  // namespace

std::vector<MockPreferencePair> build_mock_preferences(std::span<const PairedBiasInstance> instances,
                                                       const GroupLexicon& group_a, const GroupLexicon& group_b,
                                                       std::string_view prompt_format, PromptOrder order) {
  if (count_placeholders(prompt_format) != 2)
    fail(errc::malformed_prompt_format,
         "prompt format needs exactly two {} placeholders: " + std::string(prompt_format));
  const GroupLexicon lexicons[2] = {group_a, group_b};
  validate_lexicons(lexicons);

  // Unique templates, keyed by id; first instance's source wins.
  std::map<std::string, std::string> templates;  // template_id -> template_text
  for (const auto& inst : instances) templates.emplace(template_id_for(inst.template_text), inst.template_text);

  std::vector<std::string> a_terms(group_a.terms.begin(), group_a.terms.end());
  std::vector<std::string> b_terms(group_b.terms.begin(), group_b.terms.end());
  auto ci_less = [](const std::string& x, const std::string& y) {
    return text::lower_ascii(x) < text::lower_ascii(y);
  };
  std::sort(a_terms.begin(), a_terms.end(), ci_less);
  std::sort(b_terms.begin(), b_terms.end(), ci_less);

  std::vector<MockPreferencePair> pairs;
  for (const auto& [tid, template_text] : templates) {
    for (const auto& a : a_terms) {
      for (const auto& b : b_terms) {
        MockPreferencePair pair;
        pair.template_id = tid;
        pair.chosen = fill_template_cased(template_text, a);
        pair.rejected = fill_template_cased(template_text, b);
        pair.chosen_group = group_a.label;
        pair.rejected_group = group_b.label;
        pair.chosen_subject = a;
        pair.rejected_subject = b;
        pair.pair_id = tid + "|" + a + "|" + b;

        bool a_first_alpha = text::lower_ascii(a) <= text::lower_ascii(b);
        switch (order) {
          case PromptOrder::alphabetical:
            pair.prompt = a_first_alpha ? render_prompt(prompt_format, a, b) : render_prompt(prompt_format, b, a);
            pairs.push_back(std::move(pair));
            break;
          case PromptOrder::pairing:
            pair.prompt = render_prompt(prompt_format, a, b);
            pairs.push_back(std::move(pair));
            break;
          case PromptOrder::both: {
            MockPreferencePair reversed = pair;
            pair.prompt = render_prompt(prompt_format, a, b);
            pairs.push_back(std::move(pair));
            reversed.prompt = render_prompt(prompt_format, b, a);
            reversed.pair_id += "|rev";
            pairs.push_back(std::move(reversed));
            break;
          }
        }
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const MockPreferencePair& x, const MockPreferencePair& y) { return x.pair_id < y.pair_id; });
  return pairs;
}

FilterResult filter_paired_dataset(const std::filesystem::path& path, const TableSpec& spec,
                                   std::span<const GroupLexicon> lexicons) {
  validate_lexicons(lexicons);
  auto rows = io::read_delimited(path, spec.delimiter);
  if (rows.empty()) fail(errc::empty_input, "no header row in " + path.string());

  const auto& header = rows.front();
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    fail(errc::invalid_config, "column '" + name + "' not found in " + path.string());
  };
  auto sentence_col = column(spec.sentence_column);
  auto subject_col = column(spec.subject_column);
  if (!sentence_col || !subject_col)
    fail(errc::invalid_config, "sentence_column and subject_column are required");
  auto group_col = column(spec.group_column);
  auto id_col = column(spec.id_column);

  auto lexicon_of = [&](std::string_view subject) -> const GroupLexicon* {
    for (const auto& lex : lexicons)
      for (const auto& term : lex.terms)
        if (text::iequals_ascii(term, subject)) return &lex;
    return nullptr;
  };

  FilterResult result;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    result.rows_total++;
    std::string source_id = id_col && *id_col < row.size() ? row[*id_col] : "row" + std::to_string(r);
    if (std::max(*sentence_col, *subject_col) >= row.size()) {
      result.rejects.push_back({source_id, "row has too few columns"});
      continue;
    }
    const std::string& sentence = row[*sentence_col];
    const std::string& subject = row[*subject_col];
    const GroupLexicon* lex = lexicon_of(subject);
    if (!lex) {
      result.dropped_out_of_lexicon++;
      continue;
    }
    try {
      PairedBiasInstance inst = extract_template(sentence, lexicons, source_id);
      if (!text::iequals_ascii(inst.subject_term, subject)) {
        result.rejects.push_back(
            {source_id, "subject annotation '" + subject + "' does not match extracted '" + inst.subject_term + "'"});
        continue;
      }
      if (group_col && *group_col < row.size() && !row[*group_col].empty() &&
          !text::iequals_ascii(row[*group_col], inst.group_label)) {
        result.rejects.push_back(
            {source_id, "group annotation '" + row[*group_col] + "' does not match lexicon '" + inst.group_label + "'"});
        continue;
      }
      result.instances.push_back(std::move(inst));
    } catch (const error& e) {
      result.rejects.push_back({source_id, e.what()});
    }
  }
  return result;
}

FormKind form_kind_from_string(std::string_view s) {
  if (s == "static") return FormKind::static_form;
  if (s == "fluid") return FormKind::fluid_form;
  fail(errc::invalid_config, "unknown disclosure form kind '" + std::string(s) + "'");
}

IdentityGroup identity_group_from_string(std::string_view s) {
  if (s == "binary") return IdentityGroup::binary;
  if (s == "tgnb") return IdentityGroup::tgnb;
  fail(errc::invalid_config, "unknown identity group '" + std::string(s) + "'");
}

std::string_view to_string(FormKind kind) { return kind == FormKind::static_form ? "static" : "fluid"; }
std::string_view to_string(IdentityGroup group) { return group == IdentityGroup::binary ? "binary" : "tgnb"; }

std::vector<DisclosurePrompt> build_disclosure_prompts(std::span<const std::string> names,
                                                       std::span<const IdentitySpec> identities,
                                                       std::span<const DisclosureForm> forms) {
  std::vector<DisclosurePrompt> prompts;
  prompts.reserve(names.size() * identities.size() * forms.size());
  for (const auto& name : names) {
    for (const auto& identity : identities) {
      for (const auto& form : forms) {
        DisclosurePrompt p;
        p.name = name;
        p.disclosure_form = form.form;
        p.form_kind = form.kind;
        p.identity = identity.identity;
        p.identity_group = identity.group;
        p.rendered = name + " " + form.form + " " + identity.identity + " and";
        prompts.push_back(std::move(p));
      }
    }
  }
  return prompts;
}

namespace {

// Snap a byte offset backward to the start of a UTF-8 sequence.
std::size_t utf8_floor(std::string_view s, std::size_t pos) {
  while (pos > 0 && pos < s.size() && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) --pos;
  return pos;
}

std::optional<std::size_t> find_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  for (std::size_t pos = 0; pos + needle.size() <= haystack.size(); ++pos) {
    if (text::iequals_ascii(haystack.substr(pos, needle.size()), needle)) return pos;
  }
  return std::nullopt;
}

}  // namespace

ScanResult scan_records(std::span<const CorpusRecord> records, std::string dataset_name,
                        std::span<const std::string> terms, std::size_t excerpt_window) {
  if (terms.empty()) fail(errc::empty_input, "term list is empty");
  ScanResult result;
  result.dataset_name = std::move(dataset_name);
  for (const auto& term : terms) result.per_term_counts.emplace_back(term, 0);

  for (const auto& record : records) {
    result.records_scanned++;
    std::vector<std::string> matched;
    std::size_t first_pos = std::string::npos;
    std::size_t first_len = 0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      auto pos = find_ci(record.text, terms[t]);
      if (!pos) continue;
      matched.push_back(terms[t]);
      result.per_term_counts[t].second++;
      if (*pos < first_pos) {
        first_pos = *pos;
        first_len = terms[t].size();
      }
    }
    if (matched.empty()) continue;

    std::size_t lo = utf8_floor(record.text, first_pos > excerpt_window ? first_pos - excerpt_window : 0);
    std::size_t hi = std::min(record.text.size(), first_pos + first_len + excerpt_window);
    hi = hi == record.text.size() ? hi : utf8_floor(record.text, hi);
    CorpusMatch match;
    match.dataset_name = result.dataset_name;
    match.record_id = record.id;
    match.matched_terms = std::move(matched);
    match.excerpt = std::string(record.text.substr(lo, hi - lo));
    result.matches.push_back(std::move(match));
  }
  std::sort(result.matches.begin(), result.matches.end(),
            [](const CorpusMatch& a, const CorpusMatch& b) { return a.record_id < b.record_id; });
  return result;
}

ScanResult scan_preference_corpus(const std::filesystem::path& path, std::string dataset_name,
                                  std::span<const std::string> terms, std::size_t excerpt_window) {
  std::vector<CorpusRecord> records;
  long unreadable = 0;
  io::for_each_jsonl(
      path,
      [&](std::size_t lineno, const io::json& j) {
        if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
          ++unreadable;
          return;
        }
        std::string id;
        if (j.contains("id")) {
          const auto& v = j["id"];
          id = v.is_string() ? v.get<std::string>() : v.dump();
        } else {
          id = "line" + std::to_string(lineno);
        }
        records.push_back(CorpusRecord{std::move(id), j["text"].get<std::string>()});
      },
      [&](std::size_t, const std::string&, const std::string&) { ++unreadable; });
  ScanResult result = scan_records(records, std::move(dataset_name), terms, excerpt_window);
  result.unreadable_records = unreadable;
  return result;
}

std::vector<GroupLexicon> load_lexicons(const std::filesystem::path& path) {
  io::json j = io::json::parse(io::read_file(path));
  std::vector<GroupLexicon> lexicons;
  if (j.is_object()) {
    for (auto& [label, terms] : j.items()) lexicons.push_back(make_lexicon(label, terms.get<std::vector<std::string>>()));
  } else if (j.is_array()) {
    for (auto& entry : j)
      lexicons.push_back(make_lexicon(entry.at("label").get<std::string>(),
                                      entry.at("terms").get<std::vector<std::string>>()));
  } else {
    fail(errc::invalid_config, "lexicon file must be a JSON object or array: " + path.string());
  }
  validate_lexicons(lexicons);
  return lexicons;
}

namespace {

std::pair<std::string, std::string> split_tab(const std::string& line, const std::filesystem::path& path) {
  std::size_t tab = line.find('\t');
  if (tab == std::string::npos)
    fail(errc::invalid_config, "expected '<value>\\t<tag>' in " + path.string() + ": " + line);
  return {line.substr(0, tab), line.substr(tab + 1)};
}

}  // namespace

std::vector<IdentitySpec> load_identities(const std::filesystem::path& path) {
  std::vector<IdentitySpec> out;
  for (const auto& line : io::read_lines(path)) {
    auto [identity, group] = split_tab(line, path);
    out.push_back(IdentitySpec{identity, identity_group_from_string(group)});
  }
  return out;
}

std::vector<DisclosureForm> load_forms(const std::filesystem::path& path) {
  std::vector<DisclosureForm> out;
  for (const auto& line : io::read_lines(path)) {
    auto [form, kind] = split_tab(line, path);
    out.push_back(DisclosureForm{form, form_kind_from_string(kind)});
  }
  return out;
}

}  // namespace rewardaudit::corpus
