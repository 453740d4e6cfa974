#include "rewardaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rewardaudit/errors.hpp"
#include "rewardaudit/io.hpp"

namespace rewardaudit::report {

namespace {

using nlohmann::json;

std::string fixed2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

json to_json(const rewards::SelectionRateResult& r) {
  return json{{"rate", r.rate},           {"ci_low", r.ci_low}, {"ci_high", r.ci_high},
              {"n_pairs", r.n_pairs},     {"n_boot", r.n_boot}, {"seed", r.seed},
              {"significant_vs_baseline", r.significant_vs_baseline}};
}

json to_json(const rewards::BinomialTestResult& r) {
  return json{{"p_value", r.p_value}, {"k", r.k}, {"n", r.n}, {"significant", r.significant}};
}

json to_json(const rewards::CorrelationResult& r) {
  return json{{"r_pb", r.r_pb}, {"p_value", r.p_value}, {"n", r.n}};
}

json to_json(const regard::DisparityResult& d) {
  return json{{"pct_negative_tgnb", d.pct_negative_tgnb},
              {"pct_negative_binary", d.pct_negative_binary},
              {"difference", d.difference},
              {"ci_low", d.ci_low},
              {"ci_high", d.ci_high},
              {"n_boot", d.n_boot},
              {"seed", d.seed},
              {"n_tgnb", d.n_tgnb},
              {"n_binary", d.n_binary}};
}

json to_json(const regard::ShiftCandidate& c) {
  return json{{"name", c.name},
              {"form", c.form},
              {"identity", c.identity},
              {"base_neg_prob", c.base_neg_prob},
              {"aligned_neg_prob", c.aligned_neg_prob},
              {"delta", c.delta},
              {"sampled_for_annotation", c.sampled_for_annotation}};
}

}  // namespace

json to_json(const AuditReport& report) {
  json j{{"schema_version", report.schema_version},
         {"config_digest", report.config_digest},
         {"model_ids", report.model_ids},
         {"sources", report.sources}};

  if (report.rewards) {
    const auto& r = *report.rewards;
    json models = json::array();
    for (const auto& m : r.models) {
      json jm{{"model", m.model_name},
              {"policy_id", m.policy_id},
              {"reference_id", m.reference_id},
              {"selection_rate", to_json(m.selection)},
              {"selection_rate_rendered", rewards::format_rate_with_ci(m.selection)},
              {"baseline_binomial", to_json(m.binomial)},
              {"ties", m.ties},
              {"failures", m.failures}};
      if (m.correlation) jm["point_biserial"] = to_json(*m.correlation);
      models.push_back(std::move(jm));
    }
    json agreement = json::array();
    for (const auto& a : r.agreement) {
      agreement.push_back(json{{"model_a", a.model_a}, {"model_b", a.model_b}, {"kappa", a.kappa}, {"n", a.n}});
    }
    j["rewards"] = json{{"target_group", r.target_group}, {"beta", r.beta},
                        {"alpha", r.alpha},               {"n_pairs", r.n_pairs},
                        {"models", std::move(models)},    {"agreement", std::move(agreement)}};
  }

  if (report.generations) {
    const auto& g = *report.generations;
    json stages = json::array();
    for (const auto& s : g.stages) {
      json js{{"stage", s.stage},
              {"generator_id", s.generator_id},
              {"n_samples", s.n_samples},
              {"n_filtered", s.n_filtered},
              {"failures", s.failures},
              {"disparity", to_json(s.disparity)}};
      if (s.vs_base) {
        js["vs_base"] = json{{"base_difference", s.vs_base->base_difference},
                             {"aligned_difference", s.vs_base->aligned_difference},
                             {"delta", s.vs_base->delta},
                             {"ci_low", s.vs_base->ci_low},
                             {"ci_high", s.vs_base->ci_high},
                             {"significant", s.vs_base->significant}};
      }
      json breakdown = json::array();
      for (const auto& b : s.breakdown) {
        breakdown.push_back(json{{"group", std::string(corpus::to_string(b.group))},
                                 {"form_kind", std::string(corpus::to_string(b.form_kind))},
                                 {"pct_negative", b.pct_negative},
                                 {"n", b.n}});
      }
      js["breakdown"] = std::move(breakdown);
      json per_identity = json::array();
      for (const auto& p : s.per_identity) {
        per_identity.push_back(json{{"identity", p.identity},
                                    {"group", std::string(corpus::to_string(p.group))},
                                    {"pct_negative", p.pct_negative},
                                    {"n", p.n}});
      }
      js["per_identity"] = std::move(per_identity);
      if (!s.toxicity.empty()) {
        json tox = json::array();
        for (const auto& t : s.toxicity) {
          tox.push_back(json{{"identity", t.identity},
                             {"group", std::string(corpus::to_string(t.group))},
                             {"pct_toxic", t.pct_toxic},
                             {"n", t.n}});
        }
        js["toxicity"] = std::move(tox);
      }
      stages.push_back(std::move(js));
    }
    json shifts = json::array();
    for (const auto& s : g.shifts) {
      json candidates = json::array();
      for (const auto& c : s.candidates) candidates.push_back(to_json(c));
      shifts.push_back(json{{"base_stage", s.base_stage},
                            {"aligned_stage", s.aligned_stage},
                            {"threshold", s.threshold},
                            {"n_prompts_compared", s.n_prompts_compared},
                            {"n_candidates", s.n_candidates},
                            {"n_sampled", s.n_sampled},
                            {"candidates", std::move(candidates)}});
    }
    j["generations"] = json{{"n_prompts", g.n_prompts},
                            {"jaccard_threshold", g.jaccard_threshold},
                            {"stages", std::move(stages)},
                            {"shifts", std::move(shifts)}};
  }

  if (report.scan) {
    json datasets = json::array();
    for (const auto& d : report.scan->datasets) {
      json counts = json::object();
      for (const auto& [term, count] : d.per_term_counts) counts[term] = count;
      datasets.push_back(json{{"dataset", d.dataset},
                              {"records_scanned", d.records_scanned},
                              {"unreadable_records", d.unreadable_records},
                              {"matched_records", d.matched_records},
                              {"per_term_counts", std::move(counts)}});
    }
    j["scan"] = json{{"datasets", std::move(datasets)}};
  }

  if (report.themes) {
    json entries = json::array();
    for (const auto& entry : report.themes->entries) {
      json counts = json::array();
      for (const auto& [theme, count] : entry.distribution.counts)
        counts.push_back(json{{"theme", theme}, {"count", count}});
      entries.push_back(json{{"name", entry.name},
                             {"counts", std::move(counts)},
                             {"annotated", entry.distribution.annotated},
                             {"unannotated", entry.distribution.unannotated}});
    }
    j["themes"] = json{{"entries", std::move(entries)}};
  }
  return j;
}

std::set<Format> parse_formats(const std::string& list) {
  std::set<Format> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "json") out.insert(Format::json);
    else if (item == "csv") out.insert(Format::csv);
    else if (item == "markdown" || item == "md") out.insert(Format::markdown);
    else if (item == "plots" || item == "svg") out.insert(Format::plots);
    else fail(errc::invalid_config, "unknown report format '" + item + "'");
  }
  if (out.empty()) fail(errc::invalid_config, "no report formats requested");
  return out;
}

// --- CSV tables -------------------------------------------------------------

namespace {

void write_reward_csvs(const RewardSection& r, const std::filesystem::path& dir,
                       std::vector<std::filesystem::path>& written) {
  std::string rates = io::csv_row({"model", "target_group", "rate", "ci_low", "ci_high", "n_pairs", "n_boot", "seed",
                                   "significant_vs_baseline", "binomial_p", "binomial_significant", "ties",
                                   "failures"});
  for (const auto& m : r.models) {
    rates += io::csv_row({m.model_name, r.target_group, fixed2(m.selection.rate), fixed2(m.selection.ci_low),
                          fixed2(m.selection.ci_high), std::to_string(m.selection.n_pairs),
                          std::to_string(m.selection.n_boot), std::to_string(m.selection.seed),
                          m.selection.significant_vs_baseline ? "true" : "false", sci(m.binomial.p_value),
                          m.binomial.significant ? "true" : "false", std::to_string(m.ties),
                          std::to_string(m.failures)});
  }
  io::write_file(dir / "selection_rates.csv", rates);
  written.push_back(dir / "selection_rates.csv");

  std::string corr = io::csv_row({"model", "r_pb", "p_value", "n"});
  for (const auto& m : r.models) {
    if (!m.correlation) continue;
    corr += io::csv_row({m.model_name, fixed(m.correlation->r_pb, 4), sci(m.correlation->p_value),
                         std::to_string(m.correlation->n)});
  }
  io::write_file(dir / "correlations.csv", corr);
  written.push_back(dir / "correlations.csv");

  std::string agree = io::csv_row({"model_a", "model_b", "kappa", "n"});
  for (const auto& a : r.agreement) {
    agree += io::csv_row({a.model_a, a.model_b, fixed(a.kappa, 4), std::to_string(a.n)});
  }
  io::write_file(dir / "agreement.csv", agree);
  written.push_back(dir / "agreement.csv");
}

void write_generation_csvs(const GenerationSection& g, const std::filesystem::path& dir,
                           std::vector<std::filesystem::path>& written) {
  std::string disp = io::csv_row({"stage", "pct_negative_tgnb", "pct_negative_binary", "difference", "ci_low",
                                  "ci_high", "n_tgnb", "n_binary", "vs_base_delta", "vs_base_significant"});
  for (const auto& s : g.stages) {
    disp += io::csv_row({s.stage, fixed2(s.disparity.pct_negative_tgnb), fixed2(s.disparity.pct_negative_binary),
                         fixed2(s.disparity.difference), fixed2(s.disparity.ci_low), fixed2(s.disparity.ci_high),
                         std::to_string(s.disparity.n_tgnb), std::to_string(s.disparity.n_binary),
                         s.vs_base ? fixed2(s.vs_base->delta) : "", s.vs_base ? (s.vs_base->significant ? "true" : "false") : ""});
  }
  io::write_file(dir / "disparity.csv", disp);
  written.push_back(dir / "disparity.csv");

  std::string breakdown = io::csv_row({"stage", "group", "form_kind", "pct_negative", "n"});
  std::string identities = io::csv_row({"stage", "identity", "group", "pct_negative", "n"});
  std::string toxicity = io::csv_row({"stage", "identity", "group", "pct_toxic", "n"});
  bool any_toxicity = false;
  for (const auto& s : g.stages) {
    for (const auto& b : s.breakdown) {
      breakdown += io::csv_row({s.stage, std::string(corpus::to_string(b.group)),
                                std::string(corpus::to_string(b.form_kind)), fixed2(b.pct_negative),
                                std::to_string(b.n)});
    }
    for (const auto& p : s.per_identity) {
      identities += io::csv_row({s.stage, p.identity, std::string(corpus::to_string(p.group)),
                                 fixed2(p.pct_negative), std::to_string(p.n)});
    }
    for (const auto& t : s.toxicity) {
      any_toxicity = true;
      toxicity += io::csv_row(
          {s.stage, t.identity, std::string(corpus::to_string(t.group)), fixed2(t.pct_toxic), std::to_string(t.n)});
    }
  }
  io::write_file(dir / "regard_breakdown.csv", breakdown);
  written.push_back(dir / "regard_breakdown.csv");
  io::write_file(dir / "per_identity_regard.csv", identities);
  written.push_back(dir / "per_identity_regard.csv");
  if (any_toxicity) {
    io::write_file(dir / "toxicity.csv", toxicity);
    written.push_back(dir / "toxicity.csv");
  }

  std::string shifts = io::csv_row(
      {"base_stage", "aligned_stage", "name", "form", "identity", "base_neg", "aligned_neg", "delta", "sampled"});
  for (const auto& s : g.shifts) {
    for (const auto& c : s.candidates) {
      shifts += io::csv_row({s.base_stage, s.aligned_stage, c.name, c.form, c.identity, fixed(c.base_neg_prob, 4),
                             fixed(c.aligned_neg_prob, 4), fixed(c.delta, 4),
                             c.sampled_for_annotation ? "true" : "false"});
    }
  }
  io::write_file(dir / "shift_candidates.csv", shifts);
  written.push_back(dir / "shift_candidates.csv");
}

void write_scan_csv(const ScanSection& s, const std::filesystem::path& dir,
                    std::vector<std::filesystem::path>& written) {
  std::string out = io::csv_row({"dataset", "term", "records_with_term"});
  for (const auto& d : s.datasets) {
    for (const auto& [term, count] : d.per_term_counts) {
      out += io::csv_row({d.dataset, term, std::to_string(count)});
    }
    out += io::csv_row({d.dataset, "(any)", std::to_string(d.matched_records)});
  }
  io::write_file(dir / "scan_counts.csv", out);
  written.push_back(dir / "scan_counts.csv");
}

void write_theme_csv(const ThemeSection& t, const std::filesystem::path& dir,
                     std::vector<std::filesystem::path>& written) {
  std::string out = io::csv_row({"set", "theme", "count", "pct"});
  for (const auto& entry : t.entries) {
    auto pct = entry.distribution.percentages();
    for (std::size_t i = 0; i < entry.distribution.counts.size(); ++i) {
      out += io::csv_row({entry.name, entry.distribution.counts[i].first,
                          std::to_string(entry.distribution.counts[i].second), fixed2(pct[i].second)});
    }
  }
  io::write_file(dir / "theme_distribution.csv", out);
  written.push_back(dir / "theme_distribution.csv");
}

// --- markdown ---------------------------------------------------------------

std::string markdown_report(const AuditReport& report) {
  std::ostringstream md;
  md << "# Bias audit report\n\n";
  md << "Config digest: `" << report.config_digest << "`\n\n";

  if (report.rewards) {
    const auto& r = *report.rewards;
    md << "## Stigma selection rate (target: " << r.target_group << ", vs 50% random baseline)\n\n";
    md << "| Model | Selection Rate | Binomial p | Above baseline |\n";
    md << "|---|---|---|---|\n";
    for (const auto& m : r.models) {
      md << "| " << m.model_name << " | " << rewards::format_rate_with_ci(m.selection) << " | "
         << sci(m.binomial.p_value) << " | "
         << (m.selection.significant_vs_baseline && m.binomial.significant ? "yes" : "no") << " |\n";
    }
    md << "| Random Baseline | 50.00 | | |\n\n";
    md << r.n_pairs << " pairs, " << (r.models.empty() ? 0 : r.models.front().selection.n_boot)
       << " bootstrap resamples, beta = " << r.beta << ".\n\n";

    bool any_corr = false;
    for (const auto& m : r.models) any_corr = any_corr || m.correlation.has_value();
    if (any_corr) {
      md << "## Reference-model bias transfer (point-biserial)\n\n";
      md << "| Model | r_pb | n |\n|---|---|---|\n";
      for (const auto& m : r.models) {
        if (!m.correlation) continue;
        md << "| " << m.model_name << " | " << fixed2(m.correlation->r_pb)
           << (m.correlation->p_value < r.alpha ? "*" : "") << " | " << m.correlation->n << " |\n";
      }
      md << "\n\\* significant at p < " << r.alpha << ".\n\n";
    }
    if (!r.agreement.empty()) {
      md << "## Selection agreement (Cohen's kappa)\n\n";
      md << "| Model A | Model B | kappa | n |\n|---|---|---|---|\n";
      for (const auto& a : r.agreement) {
        md << "| " << a.model_a << " | " << a.model_b << " | " << fixed2(a.kappa) << " | " << a.n << " |\n";
      }
      md << "\n";
    }
  }

  if (report.generations) {
    const auto& g = *report.generations;
    md << "## Negative regard disparity (TGNB - binary)\n\n";
    md << "| Stage | TGNB % | Binary % | Difference | 95% CI | vs base |\n|---|---|---|---|---|---|\n";
    for (const auto& s : g.stages) {
      std::string diff = fixed2(s.disparity.difference);
      if (s.vs_base && s.vs_base->significant) diff = "**" + diff + "**";
      md << "| " << s.stage << " | " << fixed2(s.disparity.pct_negative_tgnb) << " | "
         << fixed2(s.disparity.pct_negative_binary) << " | " << diff << " | [" << fixed2(s.disparity.ci_low) << ", "
         << fixed2(s.disparity.ci_high) << "] | " << (s.vs_base ? fixed2(s.vs_base->delta) : std::string("-"))
         << " |\n";
    }
    md << "\nBold difference: significantly different from the base stage. " << g.n_prompts
       << " prompts per stage, echo filter at Jaccard >= " << g.jaccard_threshold << ".\n\n";
    bool any_breakdown = false;
    for (const auto& s : g.stages) any_breakdown = any_breakdown || !s.breakdown.empty();
    if (any_breakdown) {
      md << "## Negative regard by group and disclosure form\n\n";
      md << "| Stage | Group | Form | Negative % | n |\n|---|---|---|---|---|\n";
      for (const auto& s : g.stages) {
        for (const auto& b : s.breakdown) {
          md << "| " << s.stage << " | " << corpus::to_string(b.group) << " | " << corpus::to_string(b.form_kind)
             << " | " << fixed2(b.pct_negative) << " | " << b.n << " |\n";
        }
      }
      md << "\n";
    }
    if (!g.shifts.empty()) {
      md << "## Neutral-to-negative narrative shifts\n\n";
      md << "| Base | Aligned | Threshold | Prompts compared | Candidates | Sampled |\n|---|---|---|---|---|---|\n";
      for (const auto& s : g.shifts) {
        md << "| " << s.base_stage << " | " << s.aligned_stage << " | " << s.threshold << " | "
           << s.n_prompts_compared << " | " << s.n_candidates << " | " << s.n_sampled << " |\n";
      }
      md << "\n";
    }
  }

  if (report.scan) {
    md << "## Preference-corpus term scan\n\n";
    md << "| Dataset | Records | Matched | Unreadable |\n|---|---|---|---|\n";
    for (const auto& d : report.scan->datasets) {
      md << "| " << d.dataset << " | " << d.records_scanned << " | " << d.matched_records << " | "
         << d.unreadable_records << " |\n";
    }
    md << "\n";
  }

  if (report.themes) {
    md << "## Annotated theme distribution\n\n";
    for (const auto& entry : report.themes->entries) {
      md << "### " << entry.name << "\n\n| Theme | Count | % |\n|---|---|---|\n";
      auto pct = entry.distribution.percentages();
      for (std::size_t i = 0; i < entry.distribution.counts.size(); ++i) {
        md << "| " << entry.distribution.counts[i].first << " | " << entry.distribution.counts[i].second << " | "
           << fixed2(pct[i].second) << " |\n";
      }
      md << "\n" << entry.distribution.annotated << " annotated, " << entry.distribution.unannotated
         << " exported but unlabeled.\n\n";
    }
  }
  return md.str();
}

// --- SVG plots ----------------------------------------------------------------

struct Bar {
  std::string label;
  double value;
  bool has_ci = false;
  double ci_low = 0, ci_high = 0;
};

std::string svg_bar_chart(const std::string& title, const std::vector<Bar>& bars, double y_min, double y_max,
                          double baseline = NAN) {
  const double width = 120.0 + 90.0 * static_cast<double>(bars.size());
  const double height = 360.0, top = 50.0, bottom = 300.0, left = 70.0;
  auto y_of = [&](double v) { return bottom - (v - y_min) / (y_max - y_min) * (bottom - top); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0)
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<text x=\"" << fixed(width / 2, 0) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
    << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << fixed(width - 20, 0) << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double v = y_min + (y_max - y_min) * tick / 4.0;
    s << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y_of(v) + 4, 1) << "\" text-anchor=\"end\">" << fixed2(v)
      << "</text>\n";
  }
  if (std::isfinite(baseline)) {
    s << "<line x1=\"" << left << "\" y1=\"" << fixed(y_of(baseline), 1) << "\" x2=\"" << fixed(width - 20, 0)
      << "\" y2=\"" << fixed(y_of(baseline), 1) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& bar = bars[i];
    double x = left + 20.0 + 90.0 * static_cast<double>(i);
    double zero = y_of(std::max(y_min, std::min(0.0, y_max)));
    double yv = y_of(bar.value);
    double y0 = std::min(zero, yv), y1 = std::max(zero, yv);
    s << "<rect x=\"" << fixed(x, 1) << "\" y=\"" << fixed(y0, 1) << "\" width=\"50\" height=\"" << fixed(y1 - y0, 1)
      << "\" fill=\"#4878a8\"/>\n";
    if (bar.has_ci) {
      double cx = x + 25.0;
      s << "<line x1=\"" << fixed(cx, 1) << "\" y1=\"" << fixed(y_of(bar.ci_low), 1) << "\" x2=\"" << fixed(cx, 1)
        << "\" y2=\"" << fixed(y_of(bar.ci_high), 1) << "\" stroke=\"black\"/>\n";
      for (double v : {bar.ci_low, bar.ci_high}) {
        s << "<line x1=\"" << fixed(cx - 6, 1) << "\" y1=\"" << fixed(y_of(v), 1) << "\" x2=\"" << fixed(cx + 6, 1)
          << "\" y2=\"" << fixed(y_of(v), 1) << "\" stroke=\"black\"/>\n";
      }
    }
    s << "<text x=\"" << fixed(x + 25, 1) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">" << bar.label
      << "</text>\n";
    s << "<text x=\"" << fixed(x + 25, 1) << "\" y=\"" << fixed(y0 - 4, 1) << "\" text-anchor=\"middle\">"
      << fixed2(bar.value) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string kappa_color(double kappa) {
  // -1 -> blue, 0 -> white, +1 -> red
  double t = std::clamp(kappa, -1.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (t >= 0) {
    g = static_cast<int>(255 * (1.0 - t));
    b = g;
  } else {
    r = static_cast<int>(255 * (1.0 + t));
    g = r;
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string svg_heatmap(const std::string& title, const std::vector<std::string>& labels,
                        const std::vector<std::vector<double>>& matrix) {
  const double cell = 70.0, left = 120.0, top = 70.0;
  const double width = left + cell * static_cast<double>(labels.size()) + 30.0;
  const double height = top + cell * static_cast<double>(labels.size()) + 30.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0)
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<text x=\"" << fixed(width / 2, 0) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
    << "</text>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s << "<text x=\"" << left - 8 << "\" y=\"" << fixed(top + cell * i + cell / 2 + 4, 1)
      << "\" text-anchor=\"end\">" << labels[i] << "</text>\n";
    s << "<text x=\"" << fixed(left + cell * i + cell / 2, 1) << "\" y=\"" << top - 10
      << "\" text-anchor=\"middle\">" << labels[i] << "</text>\n";
    for (std::size_t k = 0; k < labels.size(); ++k) {
      s << "<rect x=\"" << fixed(left + cell * k, 1) << "\" y=\"" << fixed(top + cell * i, 1) << "\" width=\""
        << cell - 2 << "\" height=\"" << cell - 2 << "\" fill=\"" << kappa_color(matrix[i][k]) << "\"/>\n";
      s << "<text x=\"" << fixed(left + cell * k + cell / 2, 1) << "\" y=\"" << fixed(top + cell * i + cell / 2 + 4, 1)
        << "\" text-anchor=\"middle\">" << fixed2(matrix[i][k]) << "</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::string svg_radar(const std::string& title, const std::vector<std::string>& axes,
                      const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const double cx = 260, cy = 240, radius = 150;
  double max_v = 1e-9;
  for (const auto& [name, values] : series)
    for (double v : values) max_v = std::max(max_v, v);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"520\" height=\"470\" font-family=\"sans-serif\" "
       "font-size=\"11\">\n";
  s << "<text x=\"260\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  const double pi = 3.14159265358979323846;
  auto point = [&](std::size_t axis, double frac) {
    double angle = -pi / 2 + 2 * pi * static_cast<double>(axis) / static_cast<double>(axes.size());
    return std::pair<double, double>{cx + radius * frac * std::cos(angle), cy + radius * frac * std::sin(angle)};
  };
  for (std::size_t a = 0; a < axes.size(); ++a) {
    auto [x, y] = point(a, 1.0);
    s << "<line x1=\"" << cx << "\" y1=\"" << cy << "\" x2=\"" << fixed(x, 1) << "\" y2=\"" << fixed(y, 1)
      << "\" stroke=\"#cccccc\"/>\n";
    auto [lx, ly] = point(a, 1.15);
    s << "<text x=\"" << fixed(lx, 1) << "\" y=\"" << fixed(ly, 1) << "\" text-anchor=\"middle\">" << axes[a]
      << "</text>\n";
  }
  const char* colors[] = {"#4878a8", "#a85048", "#48a860", "#a09048"};
  int color_index = 0;
  double legend_y = 420;
  for (const auto& [name, values] : series) {
    std::ostringstream points;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      auto [x, y] = point(a, values[a] / max_v);
      points << fixed(x, 1) << "," << fixed(y, 1) << " ";
    }
    const char* color = colors[color_index % 4];
    s << "<polygon points=\"" << points.str() << "\" fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\""
      << color << "\"/>\n";
    s << "<rect x=\"20\" y=\"" << fixed(legend_y - 10, 1) << "\" width=\"12\" height=\"12\" fill=\"" << color
      << "\"/>\n";
    s << "<text x=\"38\" y=\"" << fixed(legend_y, 1) << "\">" << name << "</text>\n";
    legend_y += 16;
    ++color_index;
  }
  s << "</svg>\n";
  return s.str();
}

void write_plots(const AuditReport& report, const std::filesystem::path& dir,
                 std::vector<std::filesystem::path>& written) {
  std::filesystem::create_directories(dir);
  if (report.rewards && !report.rewards->models.empty()) {
    std::vector<Bar> bars;
    for (const auto& m : report.rewards->models) {
      bars.push_back(Bar{m.model_name, m.selection.rate, true, m.selection.ci_low, m.selection.ci_high});
    }
    auto path = dir / "selection_rates.svg";
    io::write_file(path, svg_bar_chart("Selection rate of " + report.rewards->target_group + "-directed stigma (%)",
                                       bars, 0.0, 100.0, 50.0));
    written.push_back(path);

    const auto& agreement = report.rewards->agreement;
    if (!agreement.empty()) {
      std::vector<std::string> names;
      for (const auto& m : report.rewards->models) names.push_back(m.model_name);
      std::vector<std::vector<double>> matrix(names.size(), std::vector<double>(names.size(), 1.0));
      auto index_of = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
      };
      for (const auto& a : agreement) {
        std::size_t i = index_of(a.model_a), k = index_of(a.model_b);
        if (i < names.size() && k < names.size()) matrix[i][k] = matrix[k][i] = a.kappa;
      }
      auto path2 = dir / "agreement_heatmap.svg";
      io::write_file(path2, svg_heatmap("Selection agreement (Cohen's kappa)", names, matrix));
      written.push_back(path2);
    }
  }
  if (report.generations && !report.generations->stages.empty()) {
    std::vector<Bar> bars;
    double lo = 0.0, hi = 1.0;
    for (const auto& s : report.generations->stages) {
      bars.push_back(Bar{s.stage, s.disparity.difference, true, s.disparity.ci_low, s.disparity.ci_high});
      lo = std::min({lo, s.disparity.ci_low, s.disparity.difference});
      hi = std::max({hi, s.disparity.ci_high, s.disparity.difference});
    }
    auto path = dir / "disparity.svg";
    io::write_file(path, svg_bar_chart("Negative regard disparity, TGNB - binary (pct points)", bars, lo - 1.0,
                                       hi + 1.0, 0.0));
    written.push_back(path);
  }
  if (report.themes) {
    for (const auto& entry : report.themes->entries) {
      if (entry.distribution.counts.size() < 3) continue;
      std::vector<std::string> axes;
      std::vector<double> values;
      for (const auto& pct : entry.distribution.percentages()) {
        axes.push_back(pct.first);
        values.push_back(pct.second);
      }
      auto path = dir / ("themes_" + entry.name + ".svg");
      io::write_file(path, svg_radar("Theme distribution: " + entry.name, axes, {{entry.name, values}}));
      written.push_back(path);
    }
  }
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const AuditReport& report, const std::filesystem::path& out_dir,
                                               const std::set<Format>& formats) {
  std::filesystem::path dir = out_dir / "report";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::vector<std::filesystem::path> written;
  if (formats.count(Format::json)) {
    io::write_file(dir / "report.json", to_json(report).dump(2) + "\n");
    written.push_back(dir / "report.json");
  }
  if (formats.count(Format::csv)) {
    if (report.rewards) write_reward_csvs(*report.rewards, dir, written);
    if (report.generations) write_generation_csvs(*report.generations, dir, written);
    if (report.scan) write_scan_csv(*report.scan, dir, written);
    if (report.themes) write_theme_csv(*report.themes, dir, written);
  }
  if (formats.count(Format::markdown)) {
    io::write_file(dir / "report.md", markdown_report(report));
    written.push_back(dir / "report.md");
  }
  if (formats.count(Format::plots)) {
    write_plots(report, dir / "plots", written);
  }
  return written;
}

}  // namespace rewardaudit::report
