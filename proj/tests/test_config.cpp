#include "cgr/config.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cgr;

TEST_CASE("empty config gives the defaults") {
  const auto cfg = parse_config_text("# nothing here\n\n");
  CHECK(cfg.env == "keylock-small");
  CHECK(cfg.agent == AgentKind::dqn);
  CHECK(cfg.learning_rate == 0.005);
  CHECK(cfg.discount == 0.99);
  CHECK(cfg.tau == 0.99);
  CHECK(cfg.buffer_size == 40000);
  CHECK(cfg.batch_size == 16);
  CHECK(cfg.threshold == 0.25);
  CHECK(cfg.epsilon == 1.0);
  CHECK(cfg.epsilon_decay == 0.995);
  CHECK(cfg.epsilon_min == 0.01);
  CHECK(cfg.entropy == EntropyMode::off);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0});
}

TEST_CASE("nu defaults per regularizer") {
  CHECK(parse_config_text("reg = \"hyper\"\n").resolved_nu() == 1.0);
  CHECK(parse_config_text("reg = \"exp\"\n").resolved_nu() == 0.5);
  CHECK(parse_config_text("reg = \"exp\"\nnu = 0.2\n").resolved_nu() == 0.2);
}

TEST_CASE("values of every kind parse") {
  const auto cfg = parse_config_text(
      "env = \"bitflip\"  # comment\n"
      "bits = 6\n"
      "her = true\n"
      "entropy = \"ae+re\"\n"
      "cthresh = 0.3\n"
      "seeds = [4, 5, 6]\n"
      "variants = [\"dqn\", \"ae-exp\"]\n"
      "episode_cap = 12\n");
  CHECK(cfg.env == "bitflip");
  CHECK(cfg.bits == 6);
  CHECK(cfg.her);
  CHECK(cfg.entropy == EntropyMode::action_reward);
  CHECK(cfg.threshold == 0.3);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5, 6});
  CHECK(cfg.resolved_episode_cap() == 12);
  const auto vs = cfg.resolved_variants();
  REQUIRE(vs.size() == 2);
  CHECK(vs[1].entropy == EntropyMode::action);
  CHECK(vs[1].regularizer == RegularizerMode::exponential);
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(parse_config_text("her = true\n"), ConfigError);  // keylock has no goals
  CHECK_THROWS_AS(parse_config_text("colour = \"red\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("bits = 4\nbits = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("agent = \"a2c\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("env = \"parking\"\n"), ConfigError);  // dqn on continuous actions
  CHECK_THROWS_AS(parse_config_text("cthresh = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("seeds = []\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("variants = [\"ae+xx\"]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("/nonexistent/cgr.toml"), ConfigError);
  CHECK_NOTHROW(parse_config_text("env = \"parking\"\nagent = \"a2c\"\nher = true\n"));
}

TEST_CASE("layout_file resolves relative to the config directory") {
  const auto cfg = parse_config_text("layout_file = \"keylock_corridor.txt\"\n", CGR_FIXTURE_DIR);
  CHECK(cfg.layout_text.starts_with("A.KL"));
}

TEST_CASE("variant names") {
  CHECK(parse_variant("dqn").entropy == EntropyMode::off);
  CHECK(parse_variant("random").entropy == EntropyMode::random);
  const auto c = parse_variant("constant");
  CHECK(c.entropy == EntropyMode::constant);
  CHECK(c.regularizer == RegularizerMode::exponential);
  const auto v = parse_variant("AE+RE-hyper");
  CHECK(v.name == "AE+RE-hyper");
  CHECK(v.entropy == EntropyMode::action_reward);
  CHECK(v.regularizer == RegularizerMode::hyperbolic);
  CHECK_THROWS_AS(parse_variant("re"), ConfigError);
}
