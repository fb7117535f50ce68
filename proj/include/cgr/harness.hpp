#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cgr/config.hpp"
#include "cgr/stats.hpp"
#include "cgr/trainer.hpp"

namespace cgr {

/// Verbosity selected by CGR_LOG. The episode log is always written; `info`
/// adds progress lines on stderr and `trace` adds the per-step log.
enum class LogLevel { quiet, info, trace };

LogLevel parse_log_level(const std::string& s);
/// Reads CGR_LOG; unset means info.
LogLevel log_level_from_env();

inline constexpr const char* kStepsHeader =
    "episode,step,action,requested,fused_conf,reg_mult,n,reward_or_imputed,source";
inline constexpr const char* kEpisodesHeader = "episode,return,steps,requests,cum_requests";

/// Outcome of one (variant, seed) run as recorded in run.json.
struct RunRecord {
  std::string variant;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  bool converged = false;
  int convergence_episode = -1;
  double score = 0.0;
  std::uint64_t rewards_to_converge = 0;
  std::uint64_t total_requests = 0;
  std::uint64_t total_steps = 0;
  int episodes = 0;
};

struct SummaryRow {
  std::string variant;
  std::size_t runs = 0;
  std::size_t converged = 0;
  stats::BoxStats score;
  /// Over converged runs only; absent when none converged.
  std::optional<stats::BoxStats> rewards;
};

struct SweepOptions {
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  std::filesystem::path out_dir;
  LogLevel log = LogLevel::info;
};

struct SweepResult {
  std::vector<RunRecord> runs;  // variant-major, seeds in the given order
  std::vector<SummaryRow> summary;
  std::size_t failures() const;
};

/// Directory holding the logs of one run below a sweep directory.
std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& variant,
                                    std::uint64_t seed);

/// Trains one variant for one seed and writes episodes.csv, run.json and, at
/// trace level, steps.csv into `dir`. Run failures are caught and recorded.
RunRecord run_one(const ExperimentConfig& config, const Variant& variant, std::uint64_t seed,
                  const std::filesystem::path& dir, LogLevel log);

/// Runs every (variant, seed) pair on up to `jobs` worker threads, then
/// writes the sweep manifest and the report files into `out_dir`.
SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options);

std::vector<SummaryRow> summarize(const std::vector<std::string>& variants, const std::vector<RunRecord>& runs);

/// Reads a sweep directory and writes summary.csv, summary.md, curves.csv
/// and boxplot.csv into `out_dir`. Throws Error on missing or corrupt logs.
std::vector<SummaryRow> report(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir);

}  // namespace cgr
