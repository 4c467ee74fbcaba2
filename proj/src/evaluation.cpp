#include "combinterp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "combinterp/error.hpp"
#include "combinterp/text.hpp"

namespace combinterp {

using nlohmann::json;

std::string_view to_string(CountingMode mode) {
  return mode == CountingMode::strict ? "strict" : "reversal_ok";
}

CountingMode counting_mode_from_string(std::string_view name) {
  std::string n = text::normalize(name);
  std::replace(n.begin(), n.end(), '-', '_');
  if (n == "strict") return CountingMode::strict;
  if (n == "reversal_ok") return CountingMode::reversal_ok;
  throw ConfigError("unknown counting mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",    "an",   "the",  "and",     "or",   "but",  "nor",  "of",    "in",
      "on",   "at",   "to",   "for",     "with", "by",   "from", "into",  "onto",
      "as",   "about", "over", "under",  "between", "through", "via", "per", "without"};
  return words;
}

std::vector<std::string> raw_tokens(std::string_view s, const MatchOptions& opts) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (c == '\'') continue;
    if (std::isalnum(u) || u >= 0x80) {
      cleaned.push_back(static_cast<char>(std::tolower(u)));
    } else {
      cleaned.push_back(' ');
    }
  }
  auto tokens = text::split_whitespace(cleaned);
  if (opts.fold_plural) {
    for (auto& t : tokens) {
      if (t.size() > 3 && t.back() == 's' && t[t.size() - 2] != 's') t.pop_back();
    }
  }
  return tokens;
}

}  // namespace

std::vector<std::string> keywords(std::string_view s, const MatchOptions& opts) {
  const auto tokens = raw_tokens(s, opts);
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (!stopwords().count(t)) out.push_back(t);
  }
  return out.empty() ? tokens : out;
}

bool match_label(std::string_view predicted, std::string_view gold, const MatchOptions& opts) {
  const auto g = keywords(gold, opts);
  if (g.empty()) return false;
  const auto p = keywords(predicted, opts);
  for (const auto& t : g) {
    if (std::find(p.begin(), p.end(), t) != p.end()) return true;
  }
  return false;
}

bool detect_reversal(const LabelPair& predicted, const LabelPair& gold, const MatchOptions& opts) {
  const bool straight =
      match_label(predicted.base, gold.base, opts) && match_label(predicted.additive, gold.additive, opts);
  if (straight) return false;
  return match_label(predicted.base, gold.additive, opts) &&
         match_label(predicted.additive, gold.base, opts);
}

SampleVerdict judge(const LabelPair& predicted, const LabelPair& gold, CountingMode mode,
                    const MatchOptions& opts, std::string sample_id) {
  SampleVerdict v;
  v.sample_id = std::move(sample_id);
  v.base_correct = match_label(predicted.base, gold.base, opts);
  v.additive_correct = match_label(predicted.additive, gold.additive, opts);
  v.reversed = detect_reversal(predicted, gold, opts);
  if (mode == CountingMode::reversal_ok && v.reversed) {
    v.base_correct = true;
    v.additive_correct = true;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

void VerdictCounts::add(const SampleVerdict& v) {
  ++n;
  if (v.base_correct) ++base;
  if (v.additive_correct) ++additive;
  if (v.base_correct && v.additive_correct) ++both;
  if (!v.base_correct && !v.additive_correct) ++none;
  if (v.reversed) ++reversed;
}

VerdictCounts& VerdictCounts::operator+=(const VerdictCounts& o) {
  n += o.n;
  both += o.both;
  none += o.none;
  base += o.base;
  additive += o.additive;
  reversed += o.reversed;
  return *this;
}

double percent(std::size_t count, std::size_t n) {
  if (n == 0) return 0.0;
  // Tenths of a percent, rounded half-up in integer arithmetic.
  const unsigned long long tenths = (2000ULL * count + n) / (2ULL * n);
  return static_cast<double>(tenths) / 10.0;
}

std::string format_percent(double pct) {
  const long long tenths = static_cast<long long>(std::floor(pct * 10.0 + 0.5 + 1e-9));
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%lld%%", tenths < 0 ? "-" : "", std::llabs(tenths) / 10,
                std::llabs(tenths) % 10);
  return buf;
}

EvaluationReport report_from_verdicts(std::vector<SampleVerdict> verdicts, CountingMode mode) {
  EvaluationReport r;
  r.counting_mode = mode;
  for (const auto& v : verdicts) r.counts.add(v);
  r.n = r.counts.n;
  r.both_pct = percent(r.counts.both, r.n);
  r.none_pct = percent(r.counts.none, r.n);
  r.base_pct = percent(r.counts.base, r.n);
  r.additive_pct = percent(r.counts.additive, r.n);
  r.reversed_pct = percent(r.counts.reversed, r.n);
  r.verdicts = std::move(verdicts);
  return r;
}

namespace {

std::map<std::string, const DesignSample*> index_golds(const std::vector<DesignSample>& golds) {
  std::map<std::string, const DesignSample*> by_id;
  for (const auto& s : golds) by_id.emplace(s.id, &s);
  return by_id;
}

const DesignSample& gold_for(const std::map<std::string, const DesignSample*>& by_id,
                             const std::string& sample_id) {
  auto it = by_id.find(sample_id);
  if (it == by_id.end()) throw InputError("sample '" + sample_id + "' is not in the dataset");
  if (!it->second->has_gold()) throw InputError("sample '" + sample_id + "' has no gold labels");
  return *it->second;
}

}  // namespace

EvaluationReport evaluate_run(const std::vector<InterpretationResult>& results,
                              const std::vector<DesignSample>& golds, CountingMode mode,
                              const MatchOptions& opts) {
  const auto by_id = index_golds(golds);
  std::vector<SampleVerdict> verdicts;
  verdicts.reserve(results.size());
  for (const auto& r : results) {
    const DesignSample& g = gold_for(by_id, r.sample_id);
    verdicts.push_back(judge({r.base, r.additive}, {*g.gold_base, *g.gold_additive}, mode, opts, r.sample_id));
  }
  EvaluationReport report = report_from_verdicts(std::move(verdicts), mode);
  report.fold_plural = opts.fold_plural;
  return report;
}

json to_json(const EvaluationReport& r) {
  json verdicts = json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"sample_id", v.sample_id},
                        {"base_correct", v.base_correct},
                        {"additive_correct", v.additive_correct},
                        {"reversed", v.reversed}});
  }
  return {{"n", r.n},
          {"counting_mode", to_string(r.counting_mode)},
          {"fold_plural", r.fold_plural},
          {"both_pct", r.both_pct},
          {"none_pct", r.none_pct},
          {"base_pct", r.base_pct},
          {"additive_pct", r.additive_pct},
          {"reversed_pct", r.reversed_pct},
          {"counts",
           {{"both", r.counts.both},
            {"none", r.counts.none},
            {"base", r.counts.base},
            {"additive", r.counts.additive},
            {"reversed", r.counts.reversed}}},
          {"verdicts", std::move(verdicts)}};
}

// ---------------------------------------------------------------------------
// Modular diagnostics
// ---------------------------------------------------------------------------

std::vector<ModularReport> modular_eval(const std::vector<InterpretationResult>& results,
                                        const std::vector<DesignSample>& golds, ModelClient& client,
                                        const ModularOptions& opts) {
  const auto by_id = index_golds(golds);
  std::vector<ModularReport> reports;
  auto report_for = [&](Mode mode) -> ModularReport& {
    const std::string method(to_string(mode));
    for (auto& r : reports) {
      if (r.method == method) return r;
    }
    reports.push_back({method, {{"image", 0, 0}, {"entity", 0, 0}, {"relation", 0, 0}}});
    return reports.back();
  };

  for (const auto& r : results) {
    if (!r.has_trace)
      throw InputError("sample '" + r.sample_id + "': result has no trace (was it written with --elide-trace?)");
    const DesignSample& g = gold_for(by_id, r.sample_id);
    const Trace& t = r.trace;

    bool image_hit = false;
    if (r.mode == Mode::unimodal) {
      for (const auto& label : t.image_labels) {
        if (client.similarity(label.label, *g.gold_base) >= opts.image_threshold) {
          image_hit = true;
          break;
        }
      }
    } else {
      image_hit = match_label(r.base, *g.gold_base, opts.match);
    }

    const bool entity_hit = std::any_of(t.candidates.begin(), t.candidates.end(), [&](const CandidateEntity& c) {
      return match_label(c.text, *g.gold_additive, opts.match);
    });

    if (t.pair_relations.empty() && t.candidates.size() >= 2 && r.mode != Mode::relation_pairs) {
      throw InputError("sample '" + r.sample_id +
                       "': trace has no candidate-pair relations (rerun with --pair-diagnostics)");
    }
    const bool relation_hit =
        std::any_of(t.pair_relations.begin(), t.pair_relations.end(), [&](const PairRelation& p) {
          if (!p.match.matched) return false;
          const auto& o = opts.match;
          return (match_label(p.head.text, *g.gold_base, o) && match_label(p.tail.text, *g.gold_additive, o)) ||
                 (match_label(p.tail.text, *g.gold_base, o) && match_label(p.head.text, *g.gold_additive, o));
        });

    ModularReport& rep = report_for(r.mode);
    const bool hits[] = {image_hit, entity_hit, relation_hit};
    for (std::size_t i = 0; i < 3; ++i) {
      ++rep.rows[i].n;
      if (hits[i]) ++rep.rows[i].correct;
    }
  }
  return reports;
}

json to_json(const ModularReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"module", row.module},
                    {"correct", row.correct},
                    {"n", row.n},
                    {"accuracy_pct", percent(row.correct, row.n)}});
  }
  return {{"method", report.method}, {"rows", std::move(rows)}};
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

// Display width: counts UTF-8 code points, not bytes.
std::size_t width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++w;
  }
  return w;
}

std::string layout(const std::vector<std::vector<std::string>>& table) {
  std::vector<std::size_t> widths;
  for (const auto& row : table) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], width(row[i]));
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < table[r].size(); ++i) {
      if (i) line += "  ";
      line += table[r][i];
      if (i + 1 < table[r].size()) line.append(widths[i] - width(table[r][i]), ' ');
    }
    out << line << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < widths.size(); ++i) total += widths[i] + (i ? 2 : 0);
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace

ReportRow to_row(const EvaluationReport& report, std::string method) {
  return {std::move(method), report.both_pct, report.none_pct, report.base_pct, report.additive_pct, report.n};
}

std::string render_rows(const std::vector<ReportRow>& rows, ReportStyle style) {
  if (style == ReportStyle::table4) throw InputError("render_rows: table4 needs modular reports");
  std::vector<std::vector<std::string>> table;
  table.push_back({"Method", "Both↑", "None↓", "Base↑", "Additive↑"});
  for (const auto& r : rows) {
    table.push_back({r.method, format_percent(r.both_pct), format_percent(r.none_pct),
                     format_percent(r.base_pct), format_percent(r.additive_pct)});
  }
  std::string out = style == ReportStyle::table5 ? "Role of image\n" : "Interpretation results\n";
  out += layout(table);
  if (rows.empty()) out += "(n = 0)\n";
  return out;
}

std::string render_report(const EvaluationReport& report, ReportStyle style, std::string method) {
  if (report.n == 0) return render_rows({}, style);
  std::string out = render_rows({to_row(report, std::move(method))}, style);
  out += "n = " + std::to_string(report.n) + ", counting mode " + std::string(to_string(report.counting_mode));
  if (report.fold_plural) out += ", plural folding on";
  out += "\nreversals: " + std::to_string(report.counts.reversed) + " / " + std::to_string(report.n) +
         " (" + format_percent(report.reversed_pct) + ")\n";
  return out;
}

std::string render_modular(const std::vector<ModularReport>& reports) {
  std::vector<std::vector<std::string>> table;
  table.push_back({"Method", "Module", "Correct number", "Accuracy"});
  for (const auto& rep : reports) {
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& row = rep.rows[i];
      table.push_back({i == 0 ? rep.method : "", row.module,
                       std::to_string(row.correct) + " / " + std::to_string(row.n),
                       format_percent(percent(row.correct, row.n))});
    }
  }
  std::string out = "Modular analysis\n" + layout(table);
  if (reports.empty()) out += "(n = 0)\n";
  return out;
}

}  // namespace combinterp
