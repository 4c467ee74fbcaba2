#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "combinterp/backend.hpp"
#include "combinterp/dataset.hpp"
#include "combinterp/pipeline.hpp"
#include "json.hpp"

namespace combinterp {

inline constexpr double kImageMatchThreshold = 0.75;

enum class CountingMode { strict, reversal_ok };

std::string_view to_string(CountingMode mode);
CountingMode counting_mode_from_string(std::string_view name);  // throws ConfigError

struct MatchOptions {
  bool fold_plural = false;  // "trunks" == "trunk"
};

/// Lowercased tokens with punctuation stripped and stopwords removed. When
/// every token is a stopword, the plain tokens are returned instead.
std::vector<std::string> keywords(std::string_view s, const MatchOptions& opts = {});

/// True when prediction and gold share at least one keyword.
bool match_label(std::string_view predicted, std::string_view gold, const MatchOptions& opts = {});

struct LabelPair {
  std::string base;
  std::string additive;
};

bool detect_reversal(const LabelPair& predicted, const LabelPair& gold, const MatchOptions& opts = {});

struct SampleVerdict {
  std::string sample_id;
  bool base_correct = false;
  bool additive_correct = false;
  bool reversed = false;
};

SampleVerdict judge(const LabelPair& predicted, const LabelPair& gold, CountingMode mode,
                    const MatchOptions& opts = {}, std::string sample_id = {});

/// Commutative, associative tally over verdicts.
struct VerdictCounts {
  std::size_t n = 0;
  std::size_t both = 0;
  std::size_t none = 0;
  std::size_t base = 0;
  std::size_t additive = 0;
  std::size_t reversed = 0;

  void add(const SampleVerdict& v);
  VerdictCounts& operator+=(const VerdictCounts& o);
  friend bool operator==(const VerdictCounts&, const VerdictCounts&) = default;
};

/// count/n as a percentage rounded half-up to one decimal; 0 when n == 0.
double percent(std::size_t count, std::size_t n);

/// "25.0%": one decimal, half-up.
std::string format_percent(double pct);

struct EvaluationReport {
  std::size_t n = 0;
  double both_pct = 0.0;
  double none_pct = 0.0;
  double base_pct = 0.0;
  double additive_pct = 0.0;
  double reversed_pct = 0.0;
  VerdictCounts counts;
  std::vector<SampleVerdict> verdicts;
  CountingMode counting_mode = CountingMode::strict;
  bool fold_plural = false;
};

EvaluationReport report_from_verdicts(std::vector<SampleVerdict> verdicts, CountingMode mode);

/// Throws InputError naming the first result whose sample has no gold pair.
EvaluationReport evaluate_run(const std::vector<InterpretationResult>& results,
                              const std::vector<DesignSample>& golds, CountingMode mode,
                              const MatchOptions& opts = {});

nlohmann::json to_json(const EvaluationReport& report);

// ---------------------------------------------------------------------------
// Modular diagnostics
// ---------------------------------------------------------------------------

struct ModuleRow {
  std::string module;
  std::size_t correct = 0;
  std::size_t n = 0;
};

struct ModularReport {
  std::string method;
  std::vector<ModuleRow> rows;  // image, entity, relation
};

struct ModularOptions {
  double image_threshold = kImageMatchThreshold;
  MatchOptions match;
};

/// One report per pipeline mode present in `results`, in first-seen order.
/// Unimodal image row: some top-k label has similarity >= threshold to the
/// gold base. Other modes: the chosen base matches the gold base.
/// Entity row: the gold additive matches some extracted candidate.
/// Relation row: the gold pair (either orientation) is among the
/// taxonomy-matched candidate pairs. Throws InputError for results without a
/// trace, without gold, or without pair diagnostics.
std::vector<ModularReport> modular_eval(const std::vector<InterpretationResult>& results,
                                        const std::vector<DesignSample>& golds, ModelClient& client,
                                        const ModularOptions& opts = {});

nlohmann::json to_json(const ModularReport& report);

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

enum class ReportStyle { table3, table4, table5 };

/// A row of supplied percentages.
struct ReportRow {
  std::string method;
  double both_pct = 0.0;
  double none_pct = 0.0;
  double base_pct = 0.0;
  double additive_pct = 0.0;
  std::size_t n = 0;
};

ReportRow to_row(const EvaluationReport& report, std::string method);

/// table3 / table5: Both, None, Base, Additive columns.
std::string render_rows(const std::vector<ReportRow>& rows, ReportStyle style);
std::string render_report(const EvaluationReport& report, ReportStyle style,
                          std::string method = "result");

/// table4: module, correct number, accuracy.
std::string render_modular(const std::vector<ModularReport>& reports);

}  // namespace combinterp
