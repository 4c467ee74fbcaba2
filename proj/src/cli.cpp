#include "combinterp/cli.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "combinterp/backend_config.hpp"
#include "combinterp/error.hpp"
#include "combinterp/log.hpp"
#include "combinterp/response_cache.hpp"
#include "combinterp/text.hpp"

namespace combinterp::cli {

using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

// Installs the SIGINT drain handler for the lifetime of the guard.
class InterruptGuard {
 public:
  InterruptGuard() {
    g_interrupted.store(false);
    previous_ = std::signal(SIGINT, on_sigint);
  }
  ~InterruptGuard() { std::signal(SIGINT, previous_ == SIG_ERR ? SIG_DFL : previous_); }
  InterruptGuard(const InterruptGuard&) = delete;
  InterruptGuard& operator=(const InterruptGuard&) = delete;

 private:
  void (*previous_)(int) = SIG_DFL;
};

void check_threshold(double v, const char* name) {
  if (!(v >= -1.0 && v <= 1.0))
    throw ConfigError(std::string(name) + " must lie in [-1, 1], got " + std::to_string(v));
}

}  // namespace

void check_run_config(const RunConfig& c) {
  check_threshold(c.relation_threshold, "relation threshold");
  check_threshold(c.match_threshold_image, "image match threshold");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (c.k_labels < 1) throw ConfigError("k_labels must be at least 1");
}

PipelineConfig pipeline_config(const RunConfig& c) {
  PipelineConfig p;
  p.k_labels = c.k_labels;
  p.relation_threshold = c.relation_threshold;
  if (c.taxonomy_path) p.taxonomy = load_taxonomy(*c.taxonomy_path);
  if (c.prompt_dir) p.templates = load_templates(*c.prompt_dir);
  p.max_pairs = c.max_pairs;
  p.seed = c.seed;
  p.pair_diagnostics = c.pair_diagnostics;
  return p;
}

// ---------------------------------------------------------------------------
// Batch
// ---------------------------------------------------------------------------

BatchOutcome run_batch(const std::vector<DesignSample>& samples, const ModelClient& client,
                       const PipelineConfig& cfg, Mode mode, bool use_image, std::size_t workers,
                       const std::atomic<bool>* stop) {
  if (workers < 1) throw ConfigError("workers must be at least 1");
  const std::size_t n = samples.size();
  std::vector<std::optional<InterpretationResult>> results(n);
  std::vector<std::optional<std::string>> errors(n);
  std::vector<char> ran(n, 0);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    ModelClient local = client;
    for (;;) {
      if (stop && stop->load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      ran[i] = 1;
      try {
        results[i] = interpret(samples[i], local, cfg, mode, use_image);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        log::warning("sample '" + samples[i].id + "' failed: " + e.what());
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    const std::size_t count = std::min(workers, std::max<std::size_t>(n, 1));
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(work);
  }

  BatchOutcome out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ran[i]) {
      out.truncated = true;
      continue;
    }
    ++out.attempted;
    if (results[i]) out.results.push_back(std::move(*results[i]));
    if (errors[i]) out.failures.push_back({samples[i].id, *errors[i]});
  }
  return out;
}

void write_results(std::ostream& out, const BatchOutcome& outcome, std::size_t total,
                   bool include_trace) {
  for (const auto& r : outcome.results) out << to_json(r, include_trace).dump() << '\n';
  if (outcome.truncated) {
    out << json{{"truncated", true}, {"attempted", outcome.attempted}, {"total", total}}.dump()
        << '\n';
  }
}

void write_results(const std::filesystem::path& path, const BatchOutcome& outcome,
                   std::size_t total, bool include_trace) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write results to '" + path.string() + "'");
  write_results(out, outcome, total, include_trace);
}

std::vector<InterpretationResult> read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read results file '" + path.string() + "'");
  std::vector<InterpretationResult> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.is_object() && j.value("truncated", false)) {
      log::warning("results file '" + path.string() + "' is truncated");
      continue;
    }
    out.push_back(result_from_json(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

BackendSetup setup_backends(const RunConfig& c) {
  BackendFileConfig file = load_backend_config(c.backend_config_path);
  if (c.cache_dir) file.defaults.cache_dir = *c.cache_dir;
  if (c.no_cache) file.defaults.cache_dir.reset();
  return build_backends(file);
}

void report_failures(const BatchOutcome& outcome, std::ostream& err) {
  if (outcome.failures.empty()) return;
  std::string ids;
  for (const auto& f : outcome.failures) {
    err << "error: sample '" << f.sample_id << "': " << f.message << '\n';
    ids += (ids.empty() ? "" : ", ") + f.sample_id;
  }
  err << "failed samples (" << outcome.failures.size() << "): " << ids << '\n';
}

int batch_exit_code(const BatchOutcome& outcome) {
  if (outcome.truncated) return 130;
  return outcome.failures.empty() ? kExitOk : kExitSampleFailures;
}

void emit_results(const RunConfig& c, const BatchOutcome& outcome, std::size_t total, Streams io) {
  if (c.output_path) {
    write_results(*c.output_path, outcome, total, !c.elide_trace);
  } else {
    write_results(io.out, outcome, total, !c.elide_trace);
  }
}

int cmd_interpret(const RunConfig& c, Streams io) {
  check_run_config(c);
  const auto samples = load_dataset(c.dataset_path);
  const PipelineConfig cfg = pipeline_config(c);
  BackendSetup setup = setup_backends(c);

  InterruptGuard guard;
  const BatchOutcome outcome =
      run_batch(samples, setup.client(), cfg, c.mode, c.use_image, c.workers, &g_interrupted);
  emit_results(c, outcome, samples.size(), io);
  if (setup.cache) setup.cache->flush_stats();
  report_failures(outcome, io.err);
  if (outcome.truncated)
    io.err << "interrupted after " << outcome.attempted << " of " << samples.size() << " samples\n";
  return batch_exit_code(outcome);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

struct EvaluateOptions {
  std::filesystem::path results_path;
  std::optional<std::filesystem::path> report_json;
  bool fold_plural = false;
  std::string style = "table3";
  std::string label;
};

int cmd_evaluate(const RunConfig& c, const EvaluateOptions& o, Streams io) {
  const auto golds = load_dataset(c.dataset_path);
  const auto results = read_results(o.results_path);
  const EvaluationReport report = evaluate_run(results, golds, c.counting_mode, {o.fold_plural});
  const ReportStyle style = o.style == "table5" ? ReportStyle::table5 : ReportStyle::table3;
  std::string label = o.label;
  if (label.empty()) label = results.empty() ? "result" : std::string(to_string(results.front().mode));
  io.out << render_report(report, style, label);
  if (o.report_json) write_json_file(*o.report_json, to_json(report));
  return kExitOk;
}

int cmd_modular(const RunConfig& c, const EvaluateOptions& o, Streams io) {
  check_run_config(c);
  const auto golds = load_dataset(c.dataset_path);
  const auto results = read_results(o.results_path);
  if (results.empty()) {
    log::warning("modular: results file holds no traces");
    io.out << render_modular({});
    if (o.report_json) write_json_file(*o.report_json, json::array());
    return kExitOk;
  }
  BackendSetup setup = setup_backends(c);
  ModelClient client = setup.client();
  const auto reports =
      modular_eval(results, golds, client, {c.match_threshold_image, {o.fold_plural}});
  io.out << render_modular(reports);
  if (o.report_json) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    write_json_file(*o.report_json, arr);
  }
  if (setup.cache) setup.cache->flush_stats();
  return kExitOk;
}

struct AblateOptions {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> report_json;
  bool fold_plural = false;
};

// Image-free variant and the with-image run it is compared against.
Mode with_image_counterpart(Mode mode) {
  switch (mode) {
    case Mode::generative: return Mode::generative;
    case Mode::vanilla: return Mode::vanilla;
    case Mode::relation_pairs: return Mode::unimodal;
    default: break;
  }
  throw ConfigError("ablate supports generative, vanilla and relation_pairs, not '" +
                    std::string(to_string(mode)) + "'");
}

int cmd_ablate(const RunConfig& c, const AblateOptions& o, Streams io) {
  check_run_config(c);
  const Mode paired = with_image_counterpart(c.mode);
  const auto samples = load_dataset(c.dataset_path);
  const PipelineConfig cfg = pipeline_config(c);
  BackendSetup setup = setup_backends(c);

  InterruptGuard guard;
  const BatchOutcome with =
      run_batch(samples, setup.client(), cfg, paired, true, c.workers, &g_interrupted);
  const BatchOutcome without =
      run_batch(samples, setup.client(), cfg, c.mode, false, c.workers, &g_interrupted);
  if (o.output_dir) {
    write_results(*o.output_dir / "with_image.jsonl", with, samples.size(), !c.elide_trace);
    write_results(*o.output_dir / "without_image.jsonl", without, samples.size(), !c.elide_trace);
  }
  if (setup.cache) setup.cache->flush_stats();

  const MatchOptions match{o.fold_plural};
  const EvaluationReport rw = evaluate_run(with.results, samples, c.counting_mode, match);
  const EvaluationReport rwo = evaluate_run(without.results, samples, c.counting_mode, match);
  const std::string name(to_string(c.mode));
  io.out << render_rows({to_row(rw, name + " w/ image"), to_row(rwo, name + " w/o image")},
                        ReportStyle::table5);
  if (o.report_json) {
    write_json_file(*o.report_json, {{"with_image", to_json(rw)}, {"without_image", to_json(rwo)}});
  }

  BatchOutcome all;
  all.failures = with.failures;
  all.failures.insert(all.failures.end(), without.failures.begin(), without.failures.end());
  all.truncated = with.truncated || without.truncated;
  report_failures(all, io.err);
  return batch_exit_code(all);
}

std::filesystem::path cache_dir_for(const std::optional<std::filesystem::path>& dir,
                                    const std::filesystem::path& backend_config) {
  if (dir) return *dir;
  if (backend_config.empty()) throw ConfigError("cache: pass --dir or --backend");
  const BackendFileConfig file = load_backend_config(backend_config);
  if (!file.defaults.cache_dir) throw ConfigError("backend config has no cache_dir");
  return *file.defaults.cache_dir;
}

int cmd_cache(const std::string& action, const std::filesystem::path& dir, Streams io) {
  if (action == "list") {
    for (const auto& e : cache_list(dir)) io.out << e.digest << '\t' << e.op << '\t' << e.bytes << '\n';
  } else if (action == "clear") {
    io.out << "removed " << cache_clear(dir) << " entries\n";
  } else {
    io.out << cache_stats(dir).dump(2) << '\n';
  }
  return kExitOk;
}

log::Level level_from_string(const std::string& s) {
  const std::string n = text::normalize(s);
  if (n == "debug") return log::Level::debug;
  if (n == "info") return log::Level::info;
  if (n == "warning" || n == "warn") return log::Level::warning;
  if (n == "error") return log::Level::error;
  if (n == "off") return log::Level::off;
  throw ConfigError("unknown log level '" + s + "'");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interpret combinational designs into base and additive concepts", "combinterp"};
  app.set_config("--config", "", "TOML file with option values; flags override it");
  app.require_subcommand(1);
  std::string log_level = "warning";
  app.add_option("--log-level", log_level, "debug, info, warning, error or off");

  RunConfig rc;
  std::string mode_name = "multimodal";
  std::string counting = "strict";
  std::optional<std::string> output, cache_dir, prompt_dir, taxonomy;

  auto run_options = [&](CLI::App* sub, bool with_mode) {
    sub->add_option("--dataset", rc.dataset_path, "line-delimited JSON manifest")->required();
    sub->add_option("--backend", rc.backend_config_path, "backend config (JSON)")->required();
    if (with_mode)
      sub->add_option("--mode", mode_name,
                      "unimodal, multimodal, generative, vanilla or relation-pairs");
    sub->add_option("--k-labels", rc.k_labels, "image labels kept (unimodal)")->check(CLI::PositiveNumber);
    sub->add_option("--relation-threshold", rc.relation_threshold)->check(CLI::Range(-1.0, 1.0));
    sub->add_option("--workers,-j", rc.workers)->check(CLI::PositiveNumber);
    sub->add_option("--output,-o", output, "results file (default: stdout)");
    sub->add_option("--cache-dir", cache_dir, "response cache directory");
    sub->add_flag("--no-cache", rc.no_cache, "bypass the response cache");
    sub->add_option("--seed", rc.seed, "seed for sampled candidate pairs");
    sub->add_option("--max-pairs", rc.max_pairs, "score at most this many candidate pairs (0: all)");
    sub->add_flag("--elide-trace", rc.elide_trace, "omit traces from result records");
    sub->add_flag("--pair-diagnostics", rc.pair_diagnostics,
                  "also score every candidate pair (needed by `modular`)");
    sub->add_option("--prompt-dir", prompt_dir, "directory of prompt template overrides");
    sub->add_option("--taxonomy", taxonomy, "relation taxonomy file");
    sub->add_option("--counting-mode", counting, "strict or reversal_ok");
  };

  auto* interpret = app.add_subcommand("interpret", "interpret every sample of a dataset");
  run_options(interpret, true);
  bool no_image = false;
  interpret->add_flag("--no-image", no_image, "run the image-free variant of an LLM mode");

  EvaluateOptions eo;
  std::optional<std::string> report_json;
  auto* evaluate = app.add_subcommand("evaluate", "score a results file against gold labels");
  evaluate->add_option("--dataset", rc.dataset_path)->required();
  evaluate->add_option("--results", eo.results_path)->required();
  evaluate->add_option("--counting-mode", counting, "strict or reversal_ok");
  evaluate->add_flag("--fold-plural", eo.fold_plural, "treat a trailing plural 's' as insignificant");
  evaluate->add_option("--report-json", report_json, "also write the full report as JSON");
  evaluate->add_option("--style", eo.style)->check(CLI::IsMember({"table3", "table5"}));
  evaluate->add_option("--label", eo.label, "method column text");

  auto* modular = app.add_subcommand("modular", "per-module accuracy from result traces");
  modular->add_option("--dataset", rc.dataset_path)->required();
  modular->add_option("--results", eo.results_path)->required();
  modular->add_option("--backend", rc.backend_config_path, "backend config for similarity")->required();
  modular->add_option("--image-threshold", rc.match_threshold_image)->check(CLI::Range(-1.0, 1.0));
  modular->add_flag("--fold-plural", eo.fold_plural);
  modular->add_option("--report-json", report_json);
  modular->add_option("--cache-dir", cache_dir);
  modular->add_flag("--no-cache", rc.no_cache);

  AblateOptions ao;
  std::optional<std::string> output_dir;
  auto* ablate = app.add_subcommand("ablate", "compare runs with and without the image");
  run_options(ablate, false);
  std::string ablate_mode = "generative";
  ablate->add_option("--mode", ablate_mode, "generative, vanilla or relation-pairs");
  ablate->add_option("--output-dir", output_dir, "write with_image.jsonl and without_image.jsonl here");
  ablate->add_flag("--fold-plural", ao.fold_plural);
  ablate->add_option("--report-json", report_json);

  auto* cache = app.add_subcommand("cache", "inspect or clear the response cache");
  cache->require_subcommand(1);
  std::optional<std::string> cache_cmd_dir;
  std::filesystem::path cache_backend;
  std::string cache_action;
  for (const char* action : {"list", "clear", "stats"}) {
    auto* sub = cache->add_subcommand(action);
    sub->add_option("--dir", cache_cmd_dir, "cache directory");
    sub->add_option("--backend", cache_backend, "backend config naming the cache directory");
    sub->callback([&cache_action, action] { cache_action = action; });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitStartup;
  }

  Streams io{out, err};
  try {
    log::set_level(level_from_string(log_level));
    rc.counting_mode = counting_mode_from_string(counting);
    if (output) rc.output_path = *output;
    if (cache_dir) rc.cache_dir = *cache_dir;
    if (prompt_dir) rc.prompt_dir = *prompt_dir;
    if (taxonomy) rc.taxonomy_path = *taxonomy;
    if (report_json) {
      eo.report_json = *report_json;
      ao.report_json = *report_json;
    }
    if (output_dir) ao.output_dir = *output_dir;

    if (interpret->parsed()) {
      rc.mode = mode_from_string(mode_name);
      rc.use_image = !no_image;
      return cmd_interpret(rc, io);
    }
    if (evaluate->parsed()) return cmd_evaluate(rc, eo, io);
    if (modular->parsed()) return cmd_modular(rc, eo, io);
    if (ablate->parsed()) {
      rc.mode = mode_from_string(ablate_mode);
      return cmd_ablate(rc, ao, io);
    }
    if (cache->parsed()) {
      return cmd_cache(cache_action, cache_dir_for(cache_cmd_dir, cache_backend), io);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitStartup;
  }
  return kExitStartup;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace combinterp::cli
