#include "cgr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace cgr {

namespace fs = std::filesystem;
using json = nlohmann::json;

LogLevel parse_log_level(const std::string& s) {
  if (s == "quiet") return LogLevel::quiet;
  if (s == "info") return LogLevel::info;
  if (s == "trace") return LogLevel::trace;
  throw ConfigError("CGR_LOG must be quiet, info or trace, got '" + s + "'");
}

LogLevel log_level_from_env() {
  const char* v = std::getenv("CGR_LOG");
  return v ? parse_log_level(v) : LogLevel::info;
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.ok; }));
}

fs::path run_directory(const fs::path& root, const std::string& variant, std::uint64_t seed) {
  return root / "runs" / variant / ("seed-" + std::to_string(seed));
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

json to_json(const RunRecord& r) {
  json j;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  j["converged"] = r.converged;
  j["convergence_episode"] = r.convergence_episode;
  j["score"] = r.score;
  j["rewards_to_converge"] = r.rewards_to_converge;
  j["total_requests"] = r.total_requests;
  j["total_steps"] = r.total_steps;
  j["episodes"] = r.episodes;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.variant = j.at("variant").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("ok").get<bool>();
  if (!r.ok) r.error = j.value("error", std::string{});
  r.converged = j.at("converged").get<bool>();
  r.convergence_episode = j.at("convergence_episode").get<int>();
  r.score = j.at("score").get<double>();
  r.rewards_to_converge = j.at("rewards_to_converge").get<std::uint64_t>();
  r.total_requests = j.at("total_requests").get<std::uint64_t>();
  r.total_steps = j.at("total_steps").get<std::uint64_t>();
  r.episodes = j.at("episodes").get<int>();
  return r;
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("corrupt " + path.string() + ": " + e.what());
  }
}

std::vector<double> read_episode_returns(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kEpisodesHeader) throw Error("corrupt header in " + path.string());
  std::vector<double> returns;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 5) throw Error("corrupt row in " + path.string());
    try {
      returns.push_back(std::stod(fields[1]));
    } catch (const std::exception&) {
      throw Error("corrupt value in " + path.string());
    }
  }
  return returns;
}

std::string opt_number(const std::optional<stats::BoxStats>& b, double stats::BoxStats::*field) {
  return b ? format_number((*b).*field) : std::string{};
}

void write_report(const fs::path& out_dir, const std::vector<std::string>& variants,
                  const std::vector<SummaryRow>& summary,
                  const std::vector<std::vector<std::vector<double>>>& curves) {
  fs::create_directories(out_dir);
  {
    auto out = open_output(out_dir / "summary.csv");
    out << "variant,runs,converged,median_score,q25_score,q75_score,median_rewards,q25_rewards,q75_rewards\n";
    for (const auto& row : summary) {
      out << row.variant << ',' << row.runs << ',' << row.converged << ',';
      if (row.runs) {
        out << format_number(row.score.median) << ',' << format_number(row.score.q25) << ','
            << format_number(row.score.q75);
      } else {
        out << ",,";
      }
      out << ',' << opt_number(row.rewards, &stats::BoxStats::median) << ','
          << opt_number(row.rewards, &stats::BoxStats::q25) << ',' << opt_number(row.rewards, &stats::BoxStats::q75)
          << '\n';
    }
  }
  {
    auto out = open_output(out_dir / "summary.md");
    out << "| Variant | Median Score | # of Rewards |\n|---|---|---|\n";
    for (const auto& row : summary) {
      out << "| " << row.variant << " | " << (row.runs ? format_number(row.score.median) : "-") << " | "
          << (row.rewards ? format_number(row.rewards->median) : "-") << " |\n";
    }
  }
  {
    auto out = open_output(out_dir / "boxplot.csv");
    out << "variant,metric,q25,median,q75,min,max,count\n";
    auto emit = [&](const std::string& v, const char* metric, const stats::BoxStats& b) {
      out << v << ',' << metric << ',' << format_number(b.q25) << ',' << format_number(b.median) << ','
          << format_number(b.q75) << ',' << format_number(b.whisker_low) << ',' << format_number(b.whisker_high)
          << ',' << b.count << '\n';
    };
    for (const auto& row : summary) {
      if (row.runs) emit(row.variant, "score", row.score);
      if (row.rewards) emit(row.variant, "rewards", *row.rewards);
    }
  }
  {
    auto out = open_output(out_dir / "curves.csv");
    out << "variant,episode,mean_return,ci_low,ci_high,runs\n";
    for (std::size_t v = 0; v < variants.size(); ++v) {
      for (std::size_t e = 0; e < curves[v].size(); ++e) {
        const auto& xs = curves[v][e];
        const auto ci = stats::ci95(xs);
        out << variants[v] << ',' << e << ',' << format_number(stats::mean(xs)) << ',' << format_number(ci.low)
            << ',' << format_number(ci.high) << ',' << xs.size() << '\n';
      }
    }
  }
}

// curves[v][e] holds the episode-e returns of every successful run of
// variant v that lasted that long.
std::vector<std::vector<std::vector<double>>> collect_curves(const fs::path& root,
                                                             const std::vector<std::string>& variants,
                                                             const std::vector<RunRecord>& runs) {
  std::vector<std::vector<std::vector<double>>> curves(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (const auto& r : runs) {
      if (r.variant != variants[v] || !r.ok) continue;
      const auto returns = read_episode_returns(run_directory(root, r.variant, r.seed) / "episodes.csv");
      if (curves[v].size() < returns.size()) curves[v].resize(returns.size());
      for (std::size_t e = 0; e < returns.size(); ++e) curves[v][e].push_back(returns[e]);
    }
  }
  return curves;
}

}  // namespace

RunRecord run_one(const ExperimentConfig& config, const Variant& variant, std::uint64_t seed, const fs::path& dir,
                  LogLevel log) {
  RunRecord record;
  record.variant = variant.name;
  record.seed = seed;
  fs::create_directories(dir);
  try {
    auto episodes = open_output(dir / "episodes.csv");
    episodes << kEpisodesHeader << '\n';
    std::ofstream steps;
    TrainerHooks hooks;
    hooks.on_episode = [&](const EpisodeMetrics& m) {
      episodes << m.episode << ',' << format_number(m.episode_return) << ',' << m.steps << ',' << m.requests << ','
               << m.cumulative_requests << '\n';
    };
    if (log == LogLevel::trace) {
      steps = open_output(dir / "steps.csv");
      steps << kStepsHeader << '\n';
      hooks.on_step = [&](const StepRecord& s) {
        steps << s.episode << ',' << s.step << ',' << s.action << ',' << (s.confidence.request ? 1 : 0) << ','
              << format_number(s.confidence.fused_confidence) << ',' << format_number(s.confidence.regularizer)
              << ',' << s.confidence.n << ',' << format_number(s.reward_or_imputed) << ',' << s.source << '\n';
      };
    }
    const RunResult result = train(config.with_variant(variant), seed, std::move(hooks));
    record.converged = result.convergence.converged;
    record.convergence_episode = result.convergence.episode;
    record.score = result.highest_score();
    record.rewards_to_converge = result.convergence.rewards_to_converge;
    record.total_requests = result.total_requests;
    record.total_steps = result.total_steps;
    record.episodes = static_cast<int>(result.episodes.size());
  } catch (const std::exception& e) {
    record.ok = false;
    record.error = e.what();
  }
  auto out = open_output(dir / "run.json");
  out << to_json(record).dump(2) << '\n';
  if (log != LogLevel::quiet) {
    static std::mutex io;
    std::lock_guard lock(io);
    if (record.ok) {
      std::cerr << "[cgr] " << variant.name << " seed " << seed << ": " << record.episodes << " episodes, "
                << (record.converged ? "converged" : "not converged") << ", score " << format_number(record.score)
                << ", requests " << record.total_requests << '\n';
    } else {
      std::cerr << "[cgr] " << variant.name << " seed " << seed << " failed: " << record.error << '\n';
    }
  }
  return record;
}

std::vector<SummaryRow> summarize(const std::vector<std::string>& variants, const std::vector<RunRecord>& runs) {
  std::vector<SummaryRow> rows;
  for (const auto& v : variants) {
    SummaryRow row;
    row.variant = v;
    std::vector<double> scores;
    std::vector<double> rewards;
    for (const auto& r : runs) {
      if (r.variant != v || !r.ok) continue;
      scores.push_back(r.score);
      if (r.converged) rewards.push_back(static_cast<double>(r.rewards_to_converge));
    }
    row.runs = scores.size();
    row.converged = rewards.size();
    if (!scores.empty()) row.score = stats::box_stats(scores);
    if (!rewards.empty()) row.rewards = stats::box_stats(rewards);
    rows.push_back(row);
  }
  return rows;
}

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
  config.validate();
  if (options.seeds.empty()) throw ConfigError("sweep needs at least one seed");
  if (options.jobs < 1) throw ConfigError("--jobs must be at least 1");
  const auto variants = config.resolved_variants();
  for (const auto& v : variants) config.with_variant(v).validate();

  struct Job {
    std::size_t variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (auto s : options.seeds) jobs.push_back({v, s});

  SweepResult result;
  result.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      const auto& variant = variants[job.variant];
      result.runs[i] = run_one(config, variant, job.seed, run_directory(options.out_dir, variant.name, job.seed),
                               options.log);
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(options.jobs), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<std::string> names;
  for (const auto& v : variants) names.push_back(v.name);
  json manifest;
  manifest["env"] = config.env;
  manifest["variants"] = names;
  manifest["seeds"] = options.seeds;
  {
    auto out = open_output(options.out_dir / "sweep.json");
    out << manifest.dump(2) << '\n';
  }
  result.summary = summarize(names, result.runs);
  write_report(options.out_dir, names, result.summary, collect_curves(options.out_dir, names, result.runs));
  return result;
}

std::vector<SummaryRow> report(const fs::path& in_dir, const fs::path& out_dir) {
  const json manifest = read_json(in_dir / "sweep.json");
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;
  try {
    variants = manifest.at("variants").get<std::vector<std::string>>();
    seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const json::exception& e) {
    throw Error("corrupt sweep manifest: " + std::string(e.what()));
  }
  std::vector<RunRecord> runs;
  for (const auto& v : variants) {
    for (auto s : seeds) {
      const auto path = run_directory(in_dir, v, s) / "run.json";
      try {
        runs.push_back(record_from_json(read_json(path)));
      } catch (const json::exception& e) {
        throw Error("corrupt " + path.string() + ": " + e.what());
      }
    }
  }
  const auto summary = summarize(variants, runs);
  write_report(out_dir, variants, summary, collect_curves(in_dir, variants, runs));
  return summary;
}

}  // namespace cgr
