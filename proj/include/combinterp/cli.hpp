#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "combinterp/backend.hpp"
#include "combinterp/dataset.hpp"
#include "combinterp/evaluation.hpp"
#include "combinterp/pipeline.hpp"

namespace combinterp::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSampleFailures = 1;
inline constexpr int kExitStartup = 2;

struct RunConfig {
  std::filesystem::path dataset_path;
  Mode mode = Mode::multimodal;
  std::filesystem::path backend_config_path;
  std::size_t k_labels = 10;
  double relation_threshold = kDefaultRelationThreshold;
  double match_threshold_image = kImageMatchThreshold;
  std::size_t workers = 1;
  CountingMode counting_mode = CountingMode::strict;
  std::optional<std::filesystem::path> output_path;  // stdout when unset
  std::optional<std::filesystem::path> cache_dir;    // overrides the backend config
  bool no_cache = false;
  std::uint64_t seed = 0;
  std::size_t max_pairs = 0;
  bool elide_trace = false;
  bool pair_diagnostics = false;
  bool use_image = true;
  std::optional<std::filesystem::path> prompt_dir;
  std::optional<std::filesystem::path> taxonomy_path;
};

/// Throws ConfigError when a threshold leaves [-1, 1] or workers is 0.
void check_run_config(const RunConfig& config);

PipelineConfig pipeline_config(const RunConfig& config);

struct SampleFailure {
  std::string sample_id;
  std::string message;
};

struct BatchOutcome {
  std::vector<InterpretationResult> results;  // in dataset order, failures omitted
  std::vector<SampleFailure> failures;        // in dataset order
  bool truncated = false;                     // stopped before every sample ran
  std::size_t attempted = 0;
};

/// Interprets every sample on `workers` threads. When `stop` becomes true, no
/// new samples start; running ones finish.
BatchOutcome run_batch(const std::vector<DesignSample>& samples, const ModelClient& client,
                       const PipelineConfig& cfg, Mode mode, bool use_image, std::size_t workers,
                       const std::atomic<bool>* stop = nullptr);

/// One JSON record per result, then a {"truncated": true, ...} line if the
/// batch was cut short.
void write_results(std::ostream& out, const BatchOutcome& outcome, std::size_t total,
                   bool include_trace);
void write_results(const std::filesystem::path& path, const BatchOutcome& outcome,
                   std::size_t total, bool include_trace);

/// Reads a results file; the truncation marker is skipped.
std::vector<InterpretationResult> read_results(const std::filesystem::path& path);

/// Entry point. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace combinterp::cli
