#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rewardaudit/corpus.hpp"
#include "rewardaudit/errors.hpp"
#include "rewardaudit/regard.hpp"
#include "rewardaudit/rewards.hpp"
#include "rewardaudit/stats.hpp"

namespace py = pybind11;
using namespace rewardaudit;

namespace {

corpus::PairedBiasInstance py_extract_template(const std::string& sentence,
                                               const std::vector<corpus::GroupLexicon>& lexicons,
                                               const std::string& source_id) {
  return corpus::extract_template(sentence, lexicons, source_id);
}

std::vector<corpus::MockPreferencePair> py_build_mock_preferences(
    const std::vector<corpus::PairedBiasInstance>& instances, const corpus::GroupLexicon& group_a,
    const corpus::GroupLexicon& group_b, const std::string& prompt_format, const std::string& order) {
  return corpus::build_mock_preferences(instances, group_a, group_b, prompt_format,
                                        corpus::prompt_order_from_string(order));
}

std::vector<corpus::DisclosurePrompt> py_build_disclosure_prompts(
    const std::vector<std::string>& names, const std::vector<std::pair<std::string, std::string>>& identities,
    const std::vector<std::pair<std::string, std::string>>& forms) {
  std::vector<corpus::IdentitySpec> identity_specs;
  for (const auto& [identity, group] : identities)
    identity_specs.push_back({identity, corpus::identity_group_from_string(group)});
  std::vector<corpus::DisclosureForm> form_specs;
  for (const auto& [form, kind] : forms) form_specs.push_back({form, corpus::form_kind_from_string(kind)});
  return corpus::build_disclosure_prompts(names, identity_specs, form_specs);
}

py::dict py_scan_records(const std::vector<std::pair<std::string, std::string>>& records,
                         const std::string& dataset_name, const std::vector<std::string>& terms) {
  std::vector<corpus::CorpusRecord> recs;
  recs.reserve(records.size());
  for (const auto& [id, text] : records) recs.push_back({id, text});
  corpus::ScanResult result = corpus::scan_records(recs, dataset_name, terms);
  py::list matches;
  for (const auto& m : result.matches) {
    py::dict d;
    d["record_id"] = m.record_id;
    d["matched_terms"] = m.matched_terms;
    d["excerpt"] = m.excerpt;
    matches.append(d);
  }
  py::dict counts;
  for (const auto& [term, count] : result.per_term_counts) counts[py::str(term)] = count;
  py::dict out;
  out["dataset"] = result.dataset_name;
  out["matches"] = matches;
  out["per_term_counts"] = counts;
  out["records_scanned"] = result.records_scanned;
  return out;
}

rewards::SelectionRateResult py_selection_rate(const std::vector<rewards::RewardComparison>& comparisons,
                                               const std::string& target_group, int n_boot, double level,
                                               std::uint64_t seed) {
  return rewards::selection_rate(comparisons, target_group, rewards::BootstrapParams{n_boot, level, seed});
}

rewards::BinomialTestResult py_baseline_significance(const std::vector<rewards::RewardComparison>& comparisons,
                                                     const std::string& target_group, double alpha) {
  return rewards::baseline_significance(comparisons, target_group, alpha);
}

rewards::CorrelationResult py_point_biserial(const std::vector<double>& ratios, const std::vector<int>& selected) {
  return rewards::point_biserial(ratios, selected);
}

double py_cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) { return rewards::cohen_kappa(a, b); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bias audit toolkit for preference-aligned language models: mock preference "
            "construction, DPO implicit-reward statistics, and regard-based generation metrics.";

  py::register_exception<error>(m, "AuditError");

  // corpus
  py::class_<corpus::GroupLexicon>(m, "GroupLexicon")
      .def(py::init(&corpus::make_lexicon), py::arg("label"), py::arg("terms"))
      .def_readonly("label", &corpus::GroupLexicon::label)
      .def_readonly("terms", &corpus::GroupLexicon::terms);

  py::class_<corpus::PairedBiasInstance>(m, "PairedBiasInstance")
      .def_readonly("raw_sentence", &corpus::PairedBiasInstance::raw_sentence)
      .def_readonly("template_text", &corpus::PairedBiasInstance::template_text)
      .def_readonly("subject_term", &corpus::PairedBiasInstance::subject_term)
      .def_readonly("group_label", &corpus::PairedBiasInstance::group_label)
      .def_readonly("source_id", &corpus::PairedBiasInstance::source_id);

  py::class_<corpus::MockPreferencePair>(m, "MockPreferencePair")
      .def_readonly("pair_id", &corpus::MockPreferencePair::pair_id)
      .def_readonly("prompt", &corpus::MockPreferencePair::prompt)
      .def_readonly("chosen", &corpus::MockPreferencePair::chosen)
      .def_readonly("rejected", &corpus::MockPreferencePair::rejected)
      .def_readonly("chosen_group", &corpus::MockPreferencePair::chosen_group)
      .def_readonly("rejected_group", &corpus::MockPreferencePair::rejected_group)
      .def_readonly("chosen_subject", &corpus::MockPreferencePair::chosen_subject)
      .def_readonly("rejected_subject", &corpus::MockPreferencePair::rejected_subject)
      .def_readonly("template_id", &corpus::MockPreferencePair::template_id);

  py::class_<corpus::DisclosurePrompt>(m, "DisclosurePrompt")
      .def_readonly("name", &corpus::DisclosurePrompt::name)
      .def_readonly("disclosure_form", &corpus::DisclosurePrompt::disclosure_form)
      .def_readonly("identity", &corpus::DisclosurePrompt::identity)
      .def_readonly("rendered", &corpus::DisclosurePrompt::rendered)
      .def_property_readonly("form_kind",
                             [](const corpus::DisclosurePrompt& p) { return std::string(to_string(p.form_kind)); })
      .def_property_readonly("identity_group", [](const corpus::DisclosurePrompt& p) {
        return std::string(to_string(p.identity_group));
      });

  m.def("extract_template", &py_extract_template, py::arg("sentence"), py::arg("lexicons"),
        py::arg("source_id") = std::string(),
        "Replace the unique lexicon-term occurrence with the slot marker.");
  m.def("fill_template", &corpus::fill_template, py::arg("template_text"), py::arg("subject"));
  m.def("fill_template_cased", &corpus::fill_template_cased, py::arg("template_text"), py::arg("subject"));
  m.def("build_mock_preferences", &py_build_mock_preferences, py::arg("instances"), py::arg("group_a"),
        py::arg("group_b"), py::arg("prompt_format") = std::string(corpus::kDefaultPromptFormat),
        py::arg("prompt_order") = "alphabetical");
  m.def("build_disclosure_prompts", &py_build_disclosure_prompts, py::arg("names"), py::arg("identities"),
        py::arg("forms"),
        "Full name x identity x form grid; identities are (identity, 'binary'|'tgnb') pairs, "
        "forms are (form, 'static'|'fluid') pairs.");
  m.def("scan_records", &py_scan_records, py::arg("records"), py::arg("dataset_name"), py::arg("terms"),
        "Case-insensitive substring scan over (id, text) records.");
  m.attr("SLOT_MARKER") = std::string(corpus::kSlotMarker);

  // rewards
  py::class_<rewards::RewardComparison>(m, "RewardComparison")
      .def_readonly("pair_id", &rewards::RewardComparison::pair_id)
      .def_readonly("chosen_group", &rewards::RewardComparison::chosen_group)
      .def_readonly("rejected_group", &rewards::RewardComparison::rejected_group)
      .def_readonly("r_chosen", &rewards::RewardComparison::r_chosen)
      .def_readonly("r_rejected", &rewards::RewardComparison::r_rejected)
      .def_readonly("ref_log_ratio", &rewards::RewardComparison::ref_log_ratio)
      .def_property_readonly("selection",
                             [](const rewards::RewardComparison& c) { return std::string(to_string(c.selection)); })
      .def_property_readonly("selected_group", [](const rewards::RewardComparison& c) -> py::object {
        auto group = c.selected_group();
        return group ? py::cast(*group) : py::none();
      });

  py::class_<rewards::SelectionRateResult>(m, "SelectionRateResult")
      .def_readonly("rate", &rewards::SelectionRateResult::rate)
      .def_readonly("ci_low", &rewards::SelectionRateResult::ci_low)
      .def_readonly("ci_high", &rewards::SelectionRateResult::ci_high)
      .def_readonly("n_pairs", &rewards::SelectionRateResult::n_pairs)
      .def_readonly("n_boot", &rewards::SelectionRateResult::n_boot)
      .def_readonly("seed", &rewards::SelectionRateResult::seed)
      .def_readonly("significant_vs_baseline", &rewards::SelectionRateResult::significant_vs_baseline)
      .def("__repr__", [](const rewards::SelectionRateResult& r) {
        return "SelectionRateResult(" + rewards::format_rate_with_ci(r) + ")";
      });

  py::class_<rewards::CorrelationResult>(m, "CorrelationResult")
      .def_readonly("r_pb", &rewards::CorrelationResult::r_pb)
      .def_readonly("p_value", &rewards::CorrelationResult::p_value)
      .def_readonly("n", &rewards::CorrelationResult::n);

  py::class_<rewards::BinomialTestResult>(m, "BinomialTestResult")
      .def_readonly("p_value", &rewards::BinomialTestResult::p_value)
      .def_readonly("k", &rewards::BinomialTestResult::k)
      .def_readonly("n", &rewards::BinomialTestResult::n)
      .def_readonly("significant", &rewards::BinomialTestResult::significant);

  m.def("implicit_reward", &rewards::implicit_reward, py::arg("policy_logprob"), py::arg("reference_logprob"),
        py::arg("beta") = 1.0, "DPO implicit reward: beta * (log pi_theta - log pi_ref).");
  m.def("compare_logprobs", &rewards::compare_logprobs, py::arg("pair_id"), py::arg("chosen_group"),
        py::arg("rejected_group"), py::arg("policy_chosen_lp"), py::arg("reference_chosen_lp"),
        py::arg("policy_rejected_lp"), py::arg("reference_rejected_lp"), py::arg("beta") = 1.0);
  m.def("selection_rate", &py_selection_rate, py::arg("comparisons"), py::arg("target_group"),
        py::arg("n_boot") = 10000, py::arg("level") = 0.95, py::arg("seed") = 0,
        "Half-credit-tie selection rate with a percentile-bootstrap CI.");
  m.def("baseline_significance", &py_baseline_significance, py::arg("comparisons"), py::arg("target_group"),
        py::arg("alpha") = 0.05, "Exact two-sided binomial test of non-tie selections against 50%.");
  m.def("point_biserial", &py_point_biserial, py::arg("ref_log_ratios"), py::arg("selected"));
  m.def("cohen_kappa", &py_cohen_kappa, py::arg("a"), py::arg("b"));
  m.def("format_rate_with_ci", &rewards::format_rate_with_ci, py::arg("result"));

  // regard
  py::class_<regard::RegardDistribution>(m, "RegardDistribution")
      .def(py::init(&regard::RegardDistribution::make), py::arg("p_positive"), py::arg("p_neutral"),
           py::arg("p_negative"))
      .def_readonly("p_positive", &regard::RegardDistribution::p_positive)
      .def_readonly("p_neutral", &regard::RegardDistribution::p_neutral)
      .def_readonly("p_negative", &regard::RegardDistribution::p_negative)
      .def_property_readonly("label",
                             [](const regard::RegardDistribution& d) { return std::string(to_string(d.label)); });

  m.def("jaccard", &regard::jaccard, py::arg("a"), py::arg("b"),
        "Word-set Jaccard similarity over lowercased, punctuation-stripped tokens.");

#ifdef REWARDAUDIT_VERSION
  m.attr("__version__") = REWARDAUDIT_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
