// Acceptance suite: one line per criterion, [PASS]/[FAIL]/[SKIP], nonzero
// exit when anything fails. Scripted stub backends keep the whole suite
// model-free; dataset-dependent checks run only when the corresponding
// environment variables point at local copies of the public datasets.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rewardaudit/audit.hpp"
#include "rewardaudit/config.hpp"
#include "rewardaudit/corpus.hpp"
#include "rewardaudit/errors.hpp"
#include "rewardaudit/io.hpp"
#include "rewardaudit/regard.hpp"
#include "rewardaudit/report.hpp"
#include "rewardaudit/rewards.hpp"
#include "rewardaudit/scoring.hpp"
#include "rewardaudit/stats.hpp"
#include "rewardaudit/text.hpp"

namespace fs = std::filesystem;
using namespace rewardaudit;

namespace {

struct Outcome {
  enum Kind { pass, fail, skip } kind = pass;
  std::string detail;
};

Outcome ok(std::string detail = "") { return {Outcome::pass, std::move(detail)}; }
Outcome failed(std::string detail) { return {Outcome::fail, std::move(detail)}; }
Outcome skipped(std::string detail) { return {Outcome::skip, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path temp_dir(const char* name) {
  auto dir = fs::temp_directory_path() / "rewardaudit_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// --- shared synthetic-audit machinery --------------------------------------

struct SyntheticAudit {
  std::vector<corpus::MockPreferencePair> pairs;
  corpus::GroupLexicon group_a;
  corpus::GroupLexicon group_b;
};

SyntheticAudit make_synthetic_pairs(int templates, std::vector<std::string> a_terms,
                                    std::vector<std::string> b_terms) {
  SyntheticAudit out{{},
                     corpus::make_lexicon("ga", std::move(a_terms)),
                     corpus::make_lexicon("gb", std::move(b_terms))};
  std::vector<corpus::GroupLexicon> lexicons{out.group_a, out.group_b};
  std::vector<corpus::PairedBiasInstance> instances;
  for (int i = 0; i < templates; ++i) {
    // the varying word sits next to the subject slot so context-sensitive
    // stub scores differ template to template
    std::string sentence = "Following review" + std::to_string(i) + " " + out.group_a.terms[0] +
                           " staff kept underperforming badly.";
    instances.push_back(corpus::extract_template(sentence, lexicons, "s" + std::to_string(i)));
  }
  out.pairs = corpus::build_mock_preferences(instances, out.group_a, out.group_b);
  return out;
}

std::vector<rewards::RewardComparison> score_audit(const SyntheticAudit& audit, scoring::Scorer& policy,
                                                   scoring::Scorer& reference, double beta) {
  scoring::ScoringParams params;
  params.beta = beta;
  std::vector<rewards::RewardComparison> comparisons;
  comparisons.reserve(audit.pairs.size());
  for (const auto& pair : audit.pairs) {
    rewards::PairScores scores;
    scores.policy_chosen = scoring::score_completion(policy, pair.prompt, pair.chosen, params);
    scores.policy_rejected = scoring::score_completion(policy, pair.prompt, pair.rejected, params);
    scores.reference_chosen = scoring::score_completion(reference, pair.prompt, pair.chosen, params);
    scores.reference_rejected = scoring::score_completion(reference, pair.prompt, pair.rejected, params);
    comparisons.push_back(rewards::compare_pair(pair, scores, beta));
  }
  return comparisons;
}

// --- criteria ----------------------------------------------------------------

Outcome oracle_equivalence() {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240615);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::size_t n = 10 + rng() % 991;  // n in [10, 1000]
    std::vector<double> ratios(n);
    std::vector<int> selected(n);
    long ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ratios[i] = gauss(rng);
      selected[i] = static_cast<int>(rng() % 2);
      ones += selected[i];
    }
    if (ones == 0) selected[0] = 1;
    if (ones == static_cast<long>(n)) selected[0] = 0;

    // naive direct-formula Pearson oracle, kept independent of stats::pearson
    double n_d = static_cast<double>(n);
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double y = selected[i];
      sx += ratios[i];
      sy += y;
      sxy += ratios[i] * y;
      sxx += ratios[i] * ratios[i];
      syy += y * y;
    }
    double oracle = (n_d * sxy - sx * sy) / std::sqrt((n_d * sxx - sx * sx) * (n_d * syy - sy * sy));
    double mine = rewards::point_biserial(ratios, selected).r_pb;
    worst = std::max(worst, std::fabs(mine - oracle));
    if (worst > 1e-10) {
      return failed("diff " + format_double(worst) + " at trial " + std::to_string(trial));
    }
  }
  double elapsed = seconds_since(start);
  if (elapsed >= 60.0) return failed("runtime " + format_double(elapsed) + "s >= 60s");
  return ok("10000 instances, max |diff| " + format_double(worst) + ", " + format_double(elapsed) + "s");
}

Outcome identity_policy_exactness() {
  auto audit = make_synthetic_pairs(200, {"alpha", "ano"}, {"beta"});
  scoring::HashScorer stub("same-stub", 5, 3.0, 0.5, 1);
  auto comparisons = score_audit(audit, stub, stub, 0.1);
  for (const auto& c : comparisons) {
    if (c.r_chosen != 0.0 || c.r_rejected != 0.0) return failed("nonzero reward on pair " + c.pair_id);
    if (c.selection != rewards::Selection::tie) return failed("non-tie on pair " + c.pair_id);
  }
  auto rate = rewards::selection_rate(comparisons, "ga", {10000, 0.95, 7});
  if (rate.rate != 50.0) return failed("rate " + format_double(rate.rate) + " != 50.0 exactly");
  return ok(std::to_string(comparisons.size()) + " pairs, every reward exactly 0.0, rate exactly 50.0");
}

Outcome beta_invariance() {
  auto audit = make_synthetic_pairs(250, {"alpha", "ari"}, {"beta", "bo"});
  if (audit.pairs.size() != 1000) return failed("expected 1000 pairs, got " + std::to_string(audit.pairs.size()));
  scoring::HashScorer policy("policy", 11, 3.0, 0.5, 1);
  scoring::HashScorer reference("reference", 7, 3.0, 0.5, 1);
  std::vector<rewards::Selection> first;
  for (double beta : {0.05, 0.1, 1.0}) {
    auto comparisons = score_audit(audit, policy, reference, beta);
    std::vector<rewards::Selection> selections;
    selections.reserve(comparisons.size());
    for (const auto& c : comparisons) selections.push_back(c.selection);
    if (first.empty()) {
      first = std::move(selections);
    } else if (selections != first) {
      return failed("selection vectors differ across beta");
    }
  }
  long chosen = 0;
  for (auto s : first) chosen += s == rewards::Selection::chosen ? 1 : 0;
  return ok("1000 pairs, selections identical for beta in {0.05, 0.1, 1.0} (" + std::to_string(chosen) +
            " target selections)");
}

Outcome swap_antisymmetry() {
  auto audit = make_synthetic_pairs(250, {"alpha", "ari"}, {"beta", "bo"});
  scoring::HashScorer policy("policy", 11, 3.0, 0.5, 1);
  scoring::HashScorer reference("reference", 7, 3.0, 0.5, 1);
  auto forward = score_audit(audit, policy, reference, 1.0);
  auto swapped = score_audit(audit, reference, policy, 1.0);
  long ties = 0;
  for (const auto& c : forward) ties += c.selection == rewards::Selection::tie ? 1 : 0;
  if (ties != 0) return failed("audit is not tie-free");
  double rate_fwd = rewards::selection_rate(forward, "ga", {100, 0.95, 3}).rate;
  double rate_swp = rewards::selection_rate(swapped, "ga", {100, 0.95, 3}).rate;
  double diff = std::fabs(rate_swp - (100.0 - rate_fwd));
  if (diff > 1e-9) return failed("rate' != 100 - rate, diff " + format_double(diff));
  return ok("rate " + format_double(rate_fwd) + " -> swapped " + format_double(rate_swp) + ", diff " +
            format_double(diff));
}

Outcome bootstrap_correctness() {
  auto start = std::chrono::steady_clock::now();
  // (a) byte-for-byte reproducibility of seeded CIs
  std::mt19937_64 rng(4242);
  std::vector<rewards::RewardComparison> sample;
  for (int i = 0; i < 500; ++i) {
    bool target = rng() % 10 < 6;
    sample.push_back(rewards::compare_logprobs("p" + std::to_string(i), "ga", "gb", target ? -1.0 : -3.0, -2.0,
                                               target ? -3.0 : -1.0, -2.0, 1.0));
  }
  auto a = rewards::selection_rate(sample, "ga", {10000, 0.95, 987});
  auto b = rewards::selection_rate(sample, "ga", {10000, 0.95, 987});
  if (std::memcmp(&a.ci_low, &b.ci_low, sizeof(double)) != 0 ||
      std::memcmp(&a.ci_high, &b.ci_high, sizeof(double)) != 0) {
    return failed("same seed produced different CI endpoints");
  }

  // (b) coverage: 500 synthetic audits, n=500, p=0.6, 10k resamples each.
  // One long stream drives every audit; sequentially seeded generators are
  // correlated enough to under-disperse the audits and bias the coverage.
  int covered = 0;
  const int audits = 500;
  std::mt19937_64 data_rng(8675309);
  std::mt19937_64 seed_rng(4920);
  for (int i = 0; i < audits; ++i) {
    std::vector<double> credits(500);
    for (auto& c : credits) c = (data_rng() % 10) < 6 ? 1.0 : 0.0;
    auto [lo, hi] = stats::bootstrap_percentile_ci(
        credits.size(), 10000, 0.95, seed_rng(),
        [&](std::span<const std::size_t> idx) {
          double sum = 0;
          for (std::size_t k : idx) sum += credits[k];
          return sum / static_cast<double>(idx.size()) * 100.0;
        });
    if (lo <= 60.0 && 60.0 <= hi) ++covered;
  }
  double coverage = static_cast<double>(covered) / audits;
  double elapsed = seconds_since(start);
  if (elapsed >= 600.0) return failed("runtime " + format_double(elapsed) + "s >= 600s");
  if (coverage < 0.93 || coverage > 0.97) {
    return failed("coverage " + format_double(coverage * 100) + "% outside [93%, 97%]");
  }
  return ok("reproducible endpoints; coverage " + format_double(coverage * 100) + "% (" + std::to_string(covered) +
            "/500), " + format_double(elapsed) + "s");
}

Outcome kappa_hand_cases() {
  std::vector<int> a{1, 1, 0, 0};
  std::vector<int> b{1, 0, 1, 0};
  std::vector<int> complement{0, 0, 1, 1};
  if (rewards::cohen_kappa(a, a) != 1.0) return failed("kappa(a,a) != 1.0");
  if (rewards::cohen_kappa(a, b) != 0.0) return failed("2x2 case != 0.0");
  if (rewards::cohen_kappa(a, complement) != -1.0) return failed("complementary balanced != -1.0");
  return ok("identical -> 1.0, hand 2x2 -> 0.0, complementary -> -1.0, exact");
}

Outcome template_round_trip() {
  auto lexicons = std::vector<corpus::GroupLexicon>{
      corpus::make_lexicon("binary", {"cis", "cisgender"}),
      corpus::make_lexicon("tgnb", {"lgbtq", "queer", "transgender", "nonbinary"})};
  std::vector<std::string> all_terms;
  for (const auto& lex : lexicons)
    for (const auto& term : lex.terms) all_terms.push_back(term);

  std::vector<std::string> prefixes{"", "Everyone claims ", "The op-ed said ", "In town, ", "Reportedly, "};
  std::vector<std::string> suffixes{
      " people are unfit for professional work.", " folks never hold a steady job.",
      " tenants wreck every apartment.",          " drivers cause most accidents.",
      " students fail their exams.",              " neighbors can't be trusted at all.",
      " workers skip every deadline.",            " voters don't understand the issues.",
      " artists steal their ideas.",              " patients ignore medical advice."};
  std::mt19937_64 rng(31337);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    std::string term = all_terms[rng() % all_terms.size()];
    std::string prefix = prefixes[rng() % prefixes.size()];
    std::string suffix = suffixes[rng() % suffixes.size()] + " (case " + std::to_string(i) + ")";
    std::string subject = prefix.empty() ? text::capitalize_first(term) : term;  // sentence-initial casing cases
    std::string sentence = prefix + subject + suffix;
    corpus::PairedBiasInstance inst;
    try {
      inst = corpus::extract_template(sentence, lexicons, "s" + std::to_string(i));
    } catch (const error& e) {
      return failed("extract failed on: " + sentence + " (" + e.what() + ")");
    }
    if (corpus::fill_template(inst.template_text, inst.subject_term) != sentence) {
      return failed("round trip not byte-exact for: " + sentence);
    }
    ++checked;
  }
  if (checked != 500) return failed("expected 500 sentences");
  return ok("500/500 sentences byte-exact, including sentence-initial casing");
}

Outcome grid_cardinality() {
  fs::path data = fs::path(RA_SOURCE_DIR) / "data";
  auto names = io::read_lines(data / "names.txt");
  auto identities = corpus::load_identities(data / "identities.tsv");
  auto forms = corpus::load_forms(data / "disclosure_forms.tsv");
  if (names.size() != 100) return failed("names.txt has " + std::to_string(names.size()) + " entries, want 100");
  if (identities.size() != 50)
    return failed("identities.tsv has " + std::to_string(identities.size()) + " entries, want 50");
  if (forms.size() != 18) return failed("disclosure_forms.tsv has " + std::to_string(forms.size()) + ", want 18");
  auto prompts = corpus::build_disclosure_prompts(names, identities, forms);
  if (prompts.size() != 90000)
    return failed("grid yields " + std::to_string(prompts.size()) + " prompts, want 90000");
  for (const auto& p : {prompts.front(), prompts.back()}) {
    if (p.rendered.size() < 4 || p.rendered.substr(p.rendered.size() - 4) != " and")
      return failed("rendered prompt does not end with ' and': " + p.rendered);
  }
  return ok("100 x 50 x 18 = 90000 prompts, every one ends with ' and'");
}

Outcome jaccard_exactness() {
  struct Case {
    const char* a;
    const char* b;
    double expected;
  } cases[] = {
      {"the same words", "the same words", 1.0},
      {"alpha beta gamma", "delta epsilon", 0.0},
      {"alex is genderfluid and", "alex is happy today", 2.0 / 6.0},
  };
  for (const auto& c : cases) {
    double got = regard::jaccard(c.a, c.b);
    if (std::fabs(got - c.expected) > 1e-12) {
      return failed(std::string("jaccard(") + c.a + ", " + c.b + ") = " + format_double(got));
    }
  }

  // brute-force-checked filter on a 1000-sample corpus
  corpus::DisclosurePrompt prompt;
  prompt.name = "Alex";
  prompt.disclosure_form = "is";
  prompt.form_kind = corpus::FormKind::static_form;
  prompt.identity = "genderfluid";
  prompt.identity_group = corpus::IdentityGroup::tgnb;
  prompt.rendered = "Alex is genderfluid and";
  std::vector<std::string> bank{"alex", "is", "genderfluid", "and", "city", "work", "rain", "quiet", "alone"};
  std::mt19937_64 rng(5150);
  std::vector<regard::RegardSample> samples;
  for (int i = 0; i < 1000; ++i) {
    std::string generated;
    int words = 1 + static_cast<int>(rng() % 7);
    for (int w = 0; w < words; ++w) {
      if (w) generated += ' ';
      generated += bank[rng() % bank.size()];
    }
    regard::RegardSample s;
    s.prompt = prompt;
    s.generation.sample_index = i;
    s.generation.text = generated;
    samples.push_back(std::move(s));
  }
  auto outcome = regard::filter_echoes(samples, 0.4);
  std::set<int> expected_dropped;
  for (const auto& s : samples) {
    if (regard::jaccard(prompt.rendered, s.generation.text) >= 0.4) expected_dropped.insert(s.generation.sample_index);
  }
  std::set<int> actual_dropped;
  for (const auto& s : outcome.dropped) actual_dropped.insert(s.generation.sample_index);
  if (actual_dropped != expected_dropped) {
    return failed("filter set differs from brute force (" + std::to_string(actual_dropped.size()) + " vs " +
                  std::to_string(expected_dropped.size()) + ")");
  }
  return ok("worked examples exact to 1e-12; filter drops exactly the >= 0.4 set (" +
            std::to_string(actual_dropped.size()) + "/1000)");
}

Outcome end_to_end_determinism() {
  auto start = std::chrono::steady_clock::now();
  fs::path fixture = fs::path(RA_FIXTURE_DIR) / "audit_fixture.json";
  auto cfg = config::parse_config(fixture);
  config::validate_config(cfg);

  auto run = [&](const fs::path& out) {
    audit::RunOptions options;
    options.output_dir = out;
    audit::run_reward_audit(cfg, options);
    audit::run_generation_audit(cfg, options);
    audit::run_scan(cfg, options);
    auto report = audit::build_report(cfg, out);
    report::emit_report(report, out, report::parse_formats("json,csv,markdown"));
  };
  auto out_a = temp_dir("e2e_a");
  auto out_b = temp_dir("e2e_b");
  run(out_a);
  run(out_b);

  long pairs = 0;
  io::for_each_jsonl(out_a / "rewards" / "pairs.jsonl", [&](std::size_t, const io::json&) { ++pairs; }, {});
  if (pairs != 50) return failed("fixture yields " + std::to_string(pairs) + " pairs, want 50");

  std::vector<std::string> report_files;
  for (const auto& entry : fs::recursive_directory_iterator(out_a / "report")) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == ".svg") continue;  // plots excluded by the criterion
    report_files.push_back(fs::relative(entry.path(), out_a).generic_string());
  }
  if (report_files.empty()) return failed("no report files were produced");
  for (const auto& rel : report_files) {
    if (io::read_file(out_a / rel) != io::read_file(out_b / rel)) {
      return failed("report file differs across runs: " + rel);
    }
  }
  double elapsed = seconds_since(start);
  if (elapsed >= 60.0) return failed("runtime " + format_double(elapsed) + "s >= 60s");
  return ok(std::to_string(report_files.size()) + " report files byte-identical across two runs, " +
            format_double(elapsed) + "s");
}

Outcome cache_transparency() {
  fs::path fixture = fs::path(RA_FIXTURE_DIR) / "audit_fixture.json";
  auto base = config::parse_config(fixture);
  auto run = [&](bool use_cache, const fs::path& out) {
    auto doc = base.raw;
    doc["rewards"]["use_cache"] = use_cache;
    doc.erase("generations");
    doc.erase("scan");
    auto cfg = config::parse_config_json(doc, base.base_dir);
    config::validate_config(cfg);
    audit::RunOptions options;
    options.output_dir = out;
    audit::run_reward_audit(cfg, options);
  };
  auto cached = temp_dir("cache_on");
  auto uncached = temp_dir("cache_off");
  run(true, cached);
  run(false, uncached);
  for (const char* model : {"demo-a", "demo-b"}) {
    auto a = io::read_file(cached / "rewards" / model / "comparisons.jsonl");
    auto b = io::read_file(uncached / "rewards" / model / "comparisons.jsonl");
    if (a != b) return failed(std::string("comparison records differ for ") + model);
  }
  if (!fs::exists(cached / "cache" / "scores.jsonl")) return failed("cache file missing on the cached run");
  if (fs::exists(uncached / "cache" / "scores.jsonl")) return failed("cache file present on the uncached run");
  return ok("comparison records identical with the cache enabled and disabled");
}

Outcome data_dependent_checks() {
  const char* winoqueer = std::getenv("RA_WINOQUEER_CSV");
  const char* shp = std::getenv("RA_SHP_JSONL");
  const char* hhrlhf = std::getenv("RA_HHRLHF_JSONL");
  const char* oasst = std::getenv("RA_OASST_JSONL");
  if (!winoqueer && !shp && !hhrlhf && !oasst) {
    return skipped("datasets not available; set RA_WINOQUEER_CSV / RA_SHP_JSONL / RA_HHRLHF_JSONL / RA_OASST_JSONL");
  }
  std::string detail;
  if (winoqueer) {
    auto lexicons = corpus::load_lexicons(fs::path(RA_SOURCE_DIR) / "data" / "winoqueer_lexicons.json");
    corpus::TableSpec spec;
    const char* sentence_col = std::getenv("RA_WINOQUEER_SENTENCE_COL");
    const char* subject_col = std::getenv("RA_WINOQUEER_SUBJECT_COL");
    spec.sentence_column = sentence_col ? sentence_col : "sent_x";
    spec.subject_column = subject_col ? subject_col : "Gender_ID_x";
    auto filtered = corpus::filter_paired_dataset(winoqueer, spec, lexicons);
    const corpus::GroupLexicon* tgnb = &lexicons[0];
    const corpus::GroupLexicon* binary = &lexicons[0];
    for (const auto& lex : lexicons) {
      if (lex.label == "tgnb") tgnb = &lex;
      if (lex.label == "binary") binary = &lex;
    }
    auto pairs = corpus::build_mock_preferences(filtered.instances, *tgnb, *binary);
    if (pairs.size() != 15600) {
      return failed("winoqueer subset yields " + std::to_string(pairs.size()) + " pairs, want 15600");
    }
    detail += "winoqueer 15600 pairs; ";
  }
  auto terms = io::read_lines(fs::path(RA_SOURCE_DIR) / "data" / "scan_terms.txt");
  struct Dataset {
    const char* env;
    const char* name;
    long expected;
  } datasets[] = {{shp, "shp", 1043}, {hhrlhf, "hh-rlhf", 250}, {oasst, "oasst", 12}};
  for (const auto& d : datasets) {
    if (!d.env) continue;
    auto result = corpus::scan_preference_corpus(d.env, d.name, terms);
    if (static_cast<long>(result.matches.size()) != d.expected) {
      return failed(std::string(d.name) + " scan matched " + std::to_string(result.matches.size()) + ", want " +
                    std::to_string(d.expected));
    }
    detail += std::string(d.name) + " " + std::to_string(d.expected) + "; ";
  }
  return ok(detail);
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  } criteria[] = {
      {"oracle-equivalence (point-biserial vs naive Pearson, 1e-10)", oracle_equivalence},
      {"identity-policy exactness (rewards 0.0, rate 50.0)", identity_policy_exactness},
      {"beta-invariance (selections identical for 0.05/0.1/1.0)", beta_invariance},
      {"swap antisymmetry (rate' = 100 - rate within 1e-9)", swap_antisymmetry},
      {"bootstrap correctness (seeded reproducibility + 93-97% coverage)", bootstrap_correctness},
      {"kappa hand-cases (1.0 / 0.0 / -1.0 exact)", kappa_hand_cases},
      {"template round-trip (500 sentences byte-exact)", template_round_trip},
      {"grid cardinality (100 x 50 x 18 = 90000)", grid_cardinality},
      {"jaccard exactness (worked examples + brute-force filter)", jaccard_exactness},
      {"end-to-end determinism (50-pair / 40-prompt stub audit)", end_to_end_determinism},
      {"cache transparency (identical comparisons with cache on/off)", cache_transparency},
      {"data-dependent checks (winoqueer 15600; shp/hh-rlhf/oasst 1043/250/12)", data_dependent_checks},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = failed(std::string("exception: ") + e.what());
    }
    const char* tag = outcome.kind == Outcome::pass ? "PASS" : outcome.kind == Outcome::fail ? "FAIL" : "SKIP";
    std::printf("[%s] %s%s%s\n", tag, criterion.name, outcome.detail.empty() ? "" : " — ",
                outcome.detail.c_str());
    if (outcome.kind == Outcome::fail) ++failures;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
