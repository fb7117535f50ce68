// Command-line front end: train, sweep and report.
//
// Exit codes: 0 success, 1 configuration error, 2 run failure.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cgr/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRunFailure = 2;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) throw cgr::ConfigError("empty entry in --seeds");
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.front() == '-') throw cgr::ConfigError("bad seed '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw cgr::ConfigError("--seeds is empty");
  return seeds;
}

void print_summary(const std::vector<cgr::SummaryRow>& rows) {
  for (const auto& r : rows) {
    std::cout << r.variant << ": runs " << r.runs << ", converged " << r.converged;
    if (r.runs) std::cout << ", median score " << cgr::format_number(r.score.median);
    if (r.rewards) std::cout << ", median rewards " << cgr::format_number(r.rewards->median);
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence-gated reward requests: training and experiment harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  auto* train = app.add_subcommand("train", "Train every configured variant for one seed");
  train->add_option("--config", config_path, "Experiment config (flat TOML)")->required();
  auto* seed_opt = train->add_option("--seed", seed, "Run seed (default: first seed in the config)");
  train->add_option("--out", out_dir, "Output directory");

  std::string seeds_text;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run every (variant, seed) pair and aggregate");
  sweep->add_option("--config", config_path, "Experiment config (flat TOML)")->required();
  sweep->add_option("--seeds", seeds_text, "Comma-separated seeds (default: seeds from the config)");
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_dir, "Output directory")->required();

  std::string in_dir;
  auto* report = app.add_subcommand("report", "Aggregate an existing sweep directory");
  report->add_option("--in", in_dir, "Sweep directory")->required();
  report->add_option("--out", out_dir, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  cgr::LogLevel log = cgr::LogLevel::info;
  try {
    log = cgr::log_level_from_env();
  } catch (const cgr::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }

  if (*report) {
    try {
      print_summary(cgr::report(in_dir, out_dir));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kRunFailure;
    }
    return kOk;
  }

  cgr::ExperimentConfig config;
  cgr::SweepOptions options;
  try {
    config = cgr::parse_config(config_path);
    config.validate();
    options.out_dir = out_dir;
    options.log = log;
    if (*train) {
      options.seeds = {*seed_opt ? seed : config.seeds.front()};
      options.jobs = 1;
    } else {
      options.seeds = seeds_text.empty() ? config.seeds : parse_seed_list(seeds_text);
      options.jobs = jobs;
    }
  } catch (const cgr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const cgr::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    const auto result = cgr::run_sweep(config, options);
    if (log != cgr::LogLevel::quiet) print_summary(result.summary);
    if (result.failures() > 0) {
      std::cerr << "error: " << result.failures() << " run(s) failed; see run.json files under " << out_dir << '\n';
      return kRunFailure;
    }
  } catch (const cgr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  return kOk;
}
