#include "cgr/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

namespace cgr {

Variant parse_variant(const std::string& raw) {
  std::string name = raw;
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  Variant v;
  v.name = raw;
  if (name == "dqn" || name == "a2c" || name == "her" || name == "baseline" || name == "off") return v;
  if (name == "random") {
    v.entropy = EntropyMode::random;
    return v;
  }
  if (name == "constant") {
    v.entropy = EntropyMode::constant;
    v.regularizer = RegularizerMode::exponential;
    return v;
  }
  std::string base = name;
  if (base.ends_with("-exp")) {
    v.regularizer = RegularizerMode::exponential;
    base.resize(base.size() - 4);
  } else if (base.ends_with("-hyper")) {
    v.regularizer = RegularizerMode::hyperbolic;
    base.resize(base.size() - 6);
  }
  if (base == "ae") {
    v.entropy = EntropyMode::action;
  } else if (base == "ae+re") {
    v.entropy = EntropyMode::action_reward;
  } else {
    throw ConfigError("unknown variant: " + raw);
  }
  return v;
}

int ExperimentConfig::resolved_episode_cap() const {
  if (episode_cap) return *episode_cap;
  if (env == "parking") return 200;
  if (env == "bitflip") return std::max(1, 20000 / (bits + 5));
  return 5000;
}

double ExperimentConfig::resolved_nu() const { return nu ? *nu : default_nu(regularizer); }

GateConfig ExperimentConfig::gate_config() const {
  return GateConfig{entropy, regularizer, resolved_nu(), threshold, constant_reading};
}

EnvironmentSpec ExperimentConfig::env_spec() const { return EnvironmentSpec{env, layout_seed, layout_text, bits}; }

std::vector<Variant> ExperimentConfig::resolved_variants() const {
  std::vector<Variant> out;
  if (variants.empty()) {
    std::string name = entropy == EntropyMode::off ? (agent == AgentKind::dqn ? "dqn" : "a2c") : to_string(entropy);
    if (regularizer != RegularizerMode::none) name += "-" + to_string(regularizer);
    out.push_back({name, entropy, regularizer});
    return out;
  }
  for (const auto& name : variants) out.push_back(parse_variant(name));
  return out;
}

ExperimentConfig ExperimentConfig::with_variant(const Variant& v) const {
  ExperimentConfig c = *this;
  c.entropy = v.entropy;
  c.regularizer = v.regularizer;
  c.variants.clear();
  return c;
}

void ExperimentConfig::validate() const {
  static const std::vector<std::string> envs{"keylock", "keylock-small", "parking", "bitflip"};
  if (std::find(envs.begin(), envs.end(), env) == envs.end()) throw ConfigError("unknown env: " + env);
  const bool goal_env = env == "parking" || env == "bitflip";
  if (her && !goal_env) throw ConfigError("her requires a goal-conditioned environment (parking, bitflip)");
  if (her_k < 0) throw ConfigError("her_k must be non-negative");
  const bool continuous = env == "parking";
  if (continuous && agent == AgentKind::dqn) throw ConfigError("dqn needs a discrete action space");
  if (!continuous && agent == AgentKind::a2c) throw ConfigError("a2c needs a continuous action space");
  if (bits < 1 || bits > 64) throw ConfigError("bits must lie in [1, 64]");
  if (hidden_width < 1 || reward_hidden_width < 1 || hidden_layers < 0) throw ConfigError("invalid network widths");
  if (nu && *nu <= 0.0) throw ConfigError("nu must be positive");
  if (threshold < 0.0 || threshold > 1.0) throw ConfigError("cthresh must lie in [0, 1]");
  if (epsilon < 0.0 || epsilon > 1.0 || epsilon_min < 0.0 || epsilon_min > epsilon || epsilon_decay <= 0.0 ||
      epsilon_decay > 1.0)
    throw ConfigError("invalid epsilon schedule");
  if (learning_rate <= 0.0) throw ConfigError("alpha must be positive");
  if (discount < 0.0 || discount > 1.0) throw ConfigError("delta must lie in [0, 1]");
  if (tau < 0.0 || tau > 1.0) throw ConfigError("tau must lie in [0, 1]");
  if (buffer_size == 0 || batch_size == 0) throw ConfigError("buffer_size and batch_size must be positive");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (episode_cap && *episode_cap < 1) throw ConfigError("episode_cap must be positive");
  for (const auto& v : variants) parse_variant(v);
}

// ---------------------------------------------------------------------------
// Flat TOML

namespace {

using Scalar = std::variant<std::string, double, bool>;
struct Value {
  std::variant<Scalar, std::vector<Scalar>> v;
  int line = 0;
};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

// Removes a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

Scalar parse_scalar(const std::string& text, int line) {
  if (text.empty()) fail(line, "missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') fail(line, "unterminated string");
    return text.substr(1, text.size() - 2);
  }
  if (text == "true") return true;
  if (text == "false") return false;
  std::string digits;
  for (char c : text)
    if (c != '_') digits.push_back(c);
  double value = 0.0;
  const auto* end = digits.data() + digits.size();
  auto [ptr, ec] = std::from_chars(digits.data(), end, value);
  if (ec != std::errc() || ptr != end) fail(line, "cannot parse value '" + text + "'");
  return value;
}

Value parse_value(const std::string& text, int line) {
  Value out;
  out.line = line;
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') fail(line, "unterminated array");
    std::vector<Scalar> items;
    std::string body = text.substr(1, text.size() - 2);
    std::string current;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(current).empty()) items.push_back(parse_scalar(trim(current), line));
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    if (!trim(current).empty()) items.push_back(parse_scalar(trim(current), line));
    out.v = std::move(items);
    return out;
  }
  out.v = parse_scalar(text, line);
  return out;
}

const Scalar& scalar_of(const Value& v) {
  if (const auto* s = std::get_if<Scalar>(&v.v)) return *s;
  fail(v.line, "expected a single value, got an array");
}

std::string as_string(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&scalar_of(v))) return *s;
  fail(v.line, "expected a string");
}

double as_number(const Value& v) {
  if (const auto* d = std::get_if<double>(&scalar_of(v))) return *d;
  fail(v.line, "expected a number");
}

long long as_integer(const Value& v) {
  const double d = as_number(v);
  if (d != static_cast<double>(static_cast<long long>(d))) fail(v.line, "expected an integer");
  return static_cast<long long>(d);
}

bool as_bool(const Value& v) {
  if (const auto* b = std::get_if<bool>(&scalar_of(v))) return *b;
  fail(v.line, "expected true or false");
}

std::vector<Scalar> as_array(const Value& v) {
  if (const auto* a = std::get_if<std::vector<Scalar>>(&v.v)) return *a;
  fail(v.line, "expected an array");
}

std::size_t as_count(const Value& v) {
  const auto n = as_integer(v);
  if (n < 0) fail(v.line, "expected a non-negative integer");
  return static_cast<std::size_t>(n);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::map<std::string, Value> entries;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) fail(line_no, "tables are not supported");
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    if (key.empty()) fail(line_no, "empty key");
    if (entries.contains(key)) fail(line_no, "duplicate key '" + key + "'");
    entries.emplace(key, parse_value(trim(line.substr(eq + 1)), line_no));
  }

  using Setter = std::function<void(const Value&)>;
  const std::map<std::string, Setter> setters{
      {"env", [&](const Value& v) { cfg.env = as_string(v); }},
      {"layout_seed", [&](const Value& v) { cfg.layout_seed = as_count(v); }},
      {"layout_file",
       [&](const Value& v) {
         std::filesystem::path p = as_string(v);
         if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
         cfg.layout_text = read_file(p);
       }},
      {"bits", [&](const Value& v) { cfg.bits = static_cast<int>(as_integer(v)); }},
      {"agent",
       [&](const Value& v) {
         const auto s = as_string(v);
         if (s == "dqn") cfg.agent = AgentKind::dqn;
         else if (s == "a2c") cfg.agent = AgentKind::a2c;
         else fail(v.line, "agent must be dqn or a2c");
       }},
      {"her", [&](const Value& v) { cfg.her = as_bool(v); }},
      {"her_k", [&](const Value& v) { cfg.her_k = static_cast<int>(as_integer(v)); }},
      {"hidden_width", [&](const Value& v) { cfg.hidden_width = static_cast<int>(as_integer(v)); }},
      {"reward_hidden_width", [&](const Value& v) { cfg.reward_hidden_width = static_cast<int>(as_integer(v)); }},
      {"hidden_layers", [&](const Value& v) { cfg.hidden_layers = static_cast<int>(as_integer(v)); }},
      {"target_sync",
       [&](const Value& v) {
         const auto s = as_string(v);
         if (s == "soft") cfg.target_sync = TargetSync::soft;
         else if (s == "hard") cfg.target_sync = TargetSync::hard;
         else fail(v.line, "target_sync must be soft or hard");
       }},
      {"entropy", [&](const Value& v) { cfg.entropy = parse_entropy_mode(as_string(v)); }},
      {"reg", [&](const Value& v) { cfg.regularizer = parse_regularizer_mode(as_string(v)); }},
      {"nu", [&](const Value& v) { cfg.nu = as_number(v); }},
      {"cthresh", [&](const Value& v) { cfg.threshold = as_number(v); }},
      {"constant_reading",
       [&](const Value& v) {
         const auto s = as_string(v);
         if (s == "confidence") cfg.constant_reading = ConstantReading::confidence_one;
         else if (s == "entropy") cfg.constant_reading = ConstantReading::entropy_one;
         else fail(v.line, "constant_reading must be confidence or entropy");
       }},
      {"impute_sample", [&](const Value& v) { cfg.impute_sample = as_bool(v); }},
      {"her_to_feedback", [&](const Value& v) { cfg.her_to_feedback = as_bool(v); }},
      {"epsilon", [&](const Value& v) { cfg.epsilon = as_number(v); }},
      {"epsilon_decay", [&](const Value& v) { cfg.epsilon_decay = as_number(v); }},
      {"epsilon_min", [&](const Value& v) { cfg.epsilon_min = as_number(v); }},
      {"alpha", [&](const Value& v) { cfg.learning_rate = as_number(v); }},
      {"delta", [&](const Value& v) { cfg.discount = as_number(v); }},
      {"tau", [&](const Value& v) { cfg.tau = as_number(v); }},
      {"buffer_size", [&](const Value& v) { cfg.buffer_size = as_count(v); }},
      {"batch_size", [&](const Value& v) { cfg.batch_size = as_count(v); }},
      {"episode_cap", [&](const Value& v) { cfg.episode_cap = static_cast<int>(as_integer(v)); }},
      {"seeds",
       [&](const Value& v) {
         cfg.seeds.clear();
         for (const auto& s : as_array(v)) {
           const auto* d = std::get_if<double>(&s);
           if (!d || *d < 0 || *d != static_cast<double>(static_cast<std::uint64_t>(*d)))
             fail(v.line, "seeds must be non-negative integers");
           cfg.seeds.push_back(static_cast<std::uint64_t>(*d));
         }
       }},
      {"variants",
       [&](const Value& v) {
         cfg.variants.clear();
         for (const auto& s : as_array(v)) {
           const auto* name = std::get_if<std::string>(&s);
           if (!name) fail(v.line, "variants must be strings");
           cfg.variants.push_back(*name);
         }
       }},
  };

  for (const auto& [key, value] : entries) {
    auto it = setters.find(key);
    if (it == setters.end()) fail(value.line, "unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(value.line, e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  return parse_config_text(read_file(path), path.parent_path());
}

}  // namespace cgr
