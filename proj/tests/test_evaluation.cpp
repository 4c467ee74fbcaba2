#include "doctest.h"

#include <algorithm>
#include <random>

#include "combinterp/error.hpp"
#include "combinterp/evaluation.hpp"
#include "support/scenarios.hpp"

using namespace combinterp;

namespace {

struct MatchCase {
  const char* predicted;
  const char* gold;
  bool strict;
  bool folded;
};

// Hand-written: every expectation below was decided by reading the two
// strings, not by running the matcher.
const std::vector<MatchCase> kMatchTable = {
    {"tree", "Tree", true, true},
    {"rack", "Drying Rack", true, true},
    {"wooden drying rack", "Drying Rack", true, true},
    {"Tree", "Drying Rack", false, false},
    {"bicycle", "racing scooter", false, false},
    {"Racing-Scooter", "racing scooter", true, true},
    {"the lamp", "a lamp", true, true},
    {"lamp", "", false, false},
    {"", "lamp", false, false},
    {"Children's bike", "childrens bike", true, true},
    {"trunks", "tree trunk", false, true},
    {"cartons", "carton", false, true},
    {"glasses", "glass", false, false},
    {"bus", "bu", false, false},
    {"pendant luminaire", "Pendant Luminaire", true, true},
    {"vase series", "tree trunks", false, false},
    {"origami paper folding", "Origami", true, true},
    {"teaset", "Tea set", false, false},
    {"sharpener!!", "Knife Sharpener", true, true},
    {"with", "for", false, false},
    {"of the", "the", true, true},
    {"LED", "led lamp", true, true},
    {"knife block", "Knife Sharpener", true, true},
    {"block of wood", "wood", true, true},
    {"in", "Knife Block", false, false},
};

SampleVerdict verdict(bool base, bool additive, bool reversed = false) {
  SampleVerdict v;
  v.base_correct = base;
  v.additive_correct = additive;
  v.reversed = reversed;
  return v;
}

InterpretationResult result(std::string id, std::string base, std::string additive) {
  InterpretationResult r;
  r.sample_id = std::move(id);
  r.base = std::move(base);
  r.additive = std::move(additive);
  return r;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("matcher truth table") {
  for (const auto& c : kMatchTable) {
    CAPTURE(c.predicted);
    CAPTURE(c.gold);
    CHECK(match_label(c.predicted, c.gold) == c.strict);
    CHECK(match_label(c.predicted, c.gold, MatchOptions{true}) == c.folded);
  }
  CHECK(kMatchTable.size() >= 22);
}

TEST_CASE("keywords") {
  CHECK(keywords("The Drying Rack") == std::vector<std::string>{"drying", "rack"});
  CHECK(keywords("of the") == std::vector<std::string>{"of", "the"});
  CHECK(keywords("Children's bike-rack") == std::vector<std::string>{"childrens", "bike", "rack"});
  CHECK(keywords("tree trunks", MatchOptions{true}) == std::vector<std::string>{"tree", "trunk"});
  CHECK(keywords("").empty());
}

TEST_CASE("reversal detection") {
  const LabelPair gold{"Drying Rack", "Tree"};
  CHECK(detect_reversal({"tree", "rack"}, gold));
  CHECK(!detect_reversal({"rack", "tree"}, gold));
  CHECK(!detect_reversal({"tree", "bottle"}, gold));
  // Gold sharing a word on both sides: a straight hit is never a reversal.
  CHECK(!detect_reversal({"knife block", "knife sharpener"}, {"Knife Block", "Knife Sharpener"}));
}

TEST_CASE("judge") {
  const LabelPair gold{"Drying Rack", "Tree"};
  const SampleVerdict s = judge({"tree", "rack"}, gold, CountingMode::strict);
  CHECK(!s.base_correct);
  CHECK(!s.additive_correct);
  CHECK(s.reversed);
  const SampleVerdict r = judge({"tree", "rack"}, gold, CountingMode::reversal_ok, {}, "1");
  CHECK(r.base_correct);
  CHECK(r.additive_correct);
  CHECK(r.sample_id == "1");
  CHECK(counting_mode_from_string("reversal-ok") == CountingMode::reversal_ok);
  CHECK_THROWS_AS(counting_mode_from_string("lenient"), ConfigError);
}

TEST_CASE("four crafted verdicts") {
  const EvaluationReport rep = report_from_verdicts(
      {verdict(true, true), verdict(true, false), verdict(false, true), verdict(false, false)}, CountingMode::strict);
  CHECK(rep.n == 4);
  CHECK(format_percent(rep.both_pct) == "25.0%");
  CHECK(format_percent(rep.none_pct) == "25.0%");
  CHECK(format_percent(rep.base_pct) == "50.0%");
  CHECK(format_percent(rep.additive_pct) == "50.0%");
}

TEST_CASE("evaluate run against a manifest") {
  const auto& golds = scenarios::bundled();
  const std::vector<InterpretationResult> results = {
      result("1", "rack", "tree"),                     // both
      result("2", "knife block", "bread"),             // base only
      result("3", "kettle", "origami paper folding"),  // additive only
      result("bionic", "tree trunks", "vase series"),  // reversed
  };
  const EvaluationReport strict = evaluate_run(results, golds, CountingMode::strict);
  CHECK(strict.counts == VerdictCounts{4, 1, 1, 2, 2, 1});
  const EvaluationReport ok = evaluate_run(results, golds, CountingMode::reversal_ok);
  CHECK(ok.counts == VerdictCounts{4, 2, 0, 3, 3, 1});
  CHECK(ok.verdicts[3].sample_id == "bionic");

  CHECK_THROWS_AS(evaluate_run({result("nope", "a", "b")}, golds, CountingMode::strict), InputError);
  DesignSample no_gold = golds[0];
  no_gold.gold_base.reset();
  no_gold.gold_additive.reset();
  CHECK_THROWS_AS(evaluate_run({result("1", "a", "b")}, {no_gold}, CountingMode::strict), InputError);
}

TEST_CASE("all swapped predictions") {
  // Only pairs whose sides share no keyword can be told apart from their swap.
  std::vector<DesignSample> golds;
  for (const auto& g : scenarios::bundled())
    if (!match_label(*g.gold_base, *g.gold_additive)) golds.push_back(g);
  REQUIRE(golds.size() == 5);
  std::vector<InterpretationResult> swapped;
  for (const auto& g : golds) swapped.push_back(result(g.id, *g.gold_additive, *g.gold_base));
  const EvaluationReport strict = evaluate_run(swapped, golds, CountingMode::strict);
  CHECK(strict.both_pct == 0.0);
  CHECK(strict.reversed_pct == 100.0);
  const EvaluationReport ok = evaluate_run(swapped, golds, CountingMode::reversal_ok);
  CHECK(ok.both_pct == 100.0);

  // Knife Block / Knife Sharpener: the swap still matches on "knife".
  const SampleVerdict knife = judge({"Knife Sharpener", "Knife Block"}, {"Knife Block", "Knife Sharpener"},
                                    CountingMode::strict);
  CHECK(knife.base_correct);
  CHECK(knife.additive_correct);
  CHECK(!knife.reversed);
}

TEST_CASE("percent rounding") {
  CHECK(percent(138, 200) == 69.0);
  CHECK(percent(1, 3) == doctest::Approx(33.3));
  CHECK(percent(2, 3) == doctest::Approx(66.7));
  CHECK(percent(1, 8) == doctest::Approx(12.5));
  CHECK(percent(1, 16) == doctest::Approx(6.3));  // 6.25 rounds up
  CHECK(percent(0, 0) == 0.0);
  CHECK(format_percent(72) == "72.0%");
  CHECK(format_percent(4.5) == "4.5%");
  CHECK(format_percent(100) == "100.0%");
  CHECK(format_percent(0.05) == "0.1%");
}

TEST_CASE("randomized invariants") {
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> size(1, 60);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<SampleVerdict> vs(size(rng));
    std::size_t base = 0, additive = 0, both = 0, none = 0;
    for (auto& v : vs) {
      v = verdict(coin(rng), coin(rng), coin(rng));
      base += v.base_correct;
      additive += v.additive_correct;
      both += v.base_correct && v.additive_correct;
      none += !v.base_correct && !v.additive_correct;
    }
    const EvaluationReport r = report_from_verdicts(vs, CountingMode::strict);
    REQUIRE(r.counts.n == vs.size());
    CHECK(r.counts.base == base);
    CHECK(r.counts.additive == additive);
    CHECK(r.counts.both == both);
    CHECK(r.counts.none == none);
    CHECK(r.both_pct <= std::min(r.base_pct, r.additive_pct));
    // both + base-only + additive-only + none partitions n
    CHECK(r.counts.both + (r.counts.base - r.counts.both) + (r.counts.additive - r.counts.both) + r.counts.none ==
          r.counts.n);

    std::shuffle(vs.begin(), vs.end(), rng);
    CHECK(report_from_verdicts(vs, CountingMode::strict).counts == r.counts);

    // Tallies split at any point add up to the whole.
    const std::size_t cut = std::uniform_int_distribution<std::size_t>(0, vs.size())(rng);
    VerdictCounts left, right;
    for (std::size_t i = 0; i < vs.size(); ++i) (i < cut ? left : right).add(vs[i]);
    left += right;
    CHECK(left == r.counts);
  }
}

TEST_CASE("reversal_ok never lowers accuracy") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> vocab = {"rack", "tree", "knife", "block", "lamp", "bulb", "vase", "trunks"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  for (int trial = 0; trial < 500; ++trial) {
    const LabelPair gold{vocab[pick(rng)], vocab[pick(rng)]};
    const LabelPair pred{vocab[pick(rng)], vocab[pick(rng)]};
    const SampleVerdict s = judge(pred, gold, CountingMode::strict);
    const SampleVerdict o = judge(pred, gold, CountingMode::reversal_ok);
    CHECK((o.base_correct || !s.base_correct));
    CHECK((o.additive_correct || !s.additive_correct));
    CHECK(s.reversed == o.reversed);
  }
}

TEST_CASE("rendering") {
  const std::string t3 = render_rows({{"Multimodal", 72.0, 4.5, 87.5, 80.0, 200}}, ReportStyle::table3);
  CHECK(t3.rfind("Interpretation results\n", 0) == 0);
  CHECK(t3.find("Both↑") != std::string::npos);
  CHECK(t3.find("72.0%") != std::string::npos);
  CHECK(t3.find("72.0%  4.5%   87.5%  80.0%") != std::string::npos);
  CHECK(render_rows({}, ReportStyle::table5).find("(n = 0)") != std::string::npos);
  CHECK(render_rows({}, ReportStyle::table5).rfind("Role of image", 0) == 0);
  CHECK_THROWS_AS(render_rows({}, ReportStyle::table4), InputError);

  const std::string t4 = render_modular({{"Unimodal", {{"image", 138, 200}, {"entity", 150, 200}}}});
  CHECK(t4.find("138 / 200") != std::string::npos);
  CHECK(t4.find("69.0%") != std::string::npos);
  CHECK(t4.find("75.0%") != std::string::npos);
  CHECK(render_modular({}).find("(n = 0)") != std::string::npos);

  const EvaluationReport rep = report_from_verdicts(
      {verdict(true, true), verdict(true, false), verdict(false, true), verdict(false, false, true)},
      CountingMode::strict);
  const std::string text = render_report(rep, ReportStyle::table3, "unimodal");
  CHECK(text.find("unimodal") != std::string::npos);
  CHECK(text.find("n = 4, counting mode strict") != std::string::npos);
  CHECK(text.find("reversals: 1 / 4 (25.0%)") != std::string::npos);
  CHECK(to_json(rep)["both_pct"] == 25.0);
}

TEST_CASE("modular analysis") {
  const auto& golds = scenarios::bundled();
  PipelineConfig cfg;
  cfg.pair_diagnostics = true;
  ModelClient c(scenarios::shared(scenarios::all_scenarios()));
  const InterpretationResult bionic = interpret(scenarios::sample("bionic"), c, cfg, Mode::unimodal);

  const auto reports = modular_eval({bionic}, golds, c);
  REQUIRE(reports.size() == 1);
  REQUIRE(reports[0].rows.size() == 3);
  CHECK(reports[0].method == "unimodal");
  for (const auto& row : reports[0].rows) {
    CAPTURE(row.module);
    CHECK(row.correct == 1);
    CHECK(row.n == 1);
  }

  // A stricter image threshold rejects vase ~ vase series (0.8).
  ModularOptions strict;
  strict.image_threshold = 0.9;
  CHECK(modular_eval({bionic}, golds, c, strict)[0].rows[0].correct == 0);

  InterpretationResult elided = bionic;
  elided.has_trace = false;
  CHECK_THROWS_AS(modular_eval({elided}, golds, c), InputError);

  ModelClient c2(scenarios::shared(scenarios::all_scenarios()));
  const InterpretationResult plain = interpret(scenarios::sample("bionic"), c2, PipelineConfig{}, Mode::unimodal);
  try {
    modular_eval({plain}, golds, c2);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("--pair-diagnostics") != std::string::npos);
  }

  const InterpretationResult pairs = interpret(scenarios::sample("2"), c, PipelineConfig{}, Mode::relation_pairs);
  const auto rp = modular_eval({pairs}, golds, c);
  REQUIRE(rp.size() == 1);
  CHECK(rp[0].method == "relation_pairs");
  CHECK(rp[0].rows[2].correct == 1);
}

}  // TEST_SUITE
