#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cimsim/config.hpp"
#include "cimsim/errors.hpp"

using namespace cimsim;

namespace {

const std::string kConfigs = std::string(CIMSIM_SOURCE_DIR) + "/configs/";

Config parse(const std::string& text) {
  Config c;
  std::istringstream is(text);
  c.parse(is, "test");
  return c;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("shipped defaults file equals the built-in defaults") {
    Config c;
    c.parse_file(kConfigs + "defaults.cfg");
    CHECK(dump_settings(resolve(c)) == dump_settings(Settings{}));
    CHECK(dump_settings(resolve(Config{})) == dump_settings(Settings{}));
  }

  TEST_CASE("dump round trips through the parser") {
    Settings s;
    s.macro.noise.seed = 99;
    s.macro.adc.gamma = 8;
    s.layer.c_in = 32;
    const std::string text = dump_settings(s);
    CHECK(dump_settings(resolve(parse(text))) == text);
  }

  TEST_CASE("include and later keys win") {
    Config c;
    c.parse_file(kConfigs + "low_noise_fc.cfg");
    const auto s = resolve(c);
    CHECK(s.macro.noise.seed == 7);
    CHECK(s.macro.topology.variant == DplVariant::ParallelSplit);
    CHECK(s.layer.kind == LayerKind::Fc);
    CHECK(s.layer.c_in == 1152);
    CHECK(s.layer.gamma == 4);
    CHECK(s.macro.r_in == Settings{}.macro.r_in);
  }

  TEST_CASE("relative include resolves against the including file") {
    const auto dir = std::filesystem::temp_directory_path() / "cimsim_cfg_test";
    std::filesystem::create_directories(dir / "sub");
    std::ofstream(dir / "sub" / "base.cfg") << "[noise]\nseed = 3\n";
    std::ofstream(dir / "top.cfg") << "include = sub/base.cfg\n[layer]\nc_out = 12\n";
    Config c;
    c.parse_file((dir / "top.cfg").string());
    CHECK(c.get("noise.seed") == "3");
    CHECK(resolve(c).layer.c_out == 12);
    std::ofstream(dir / "loop.cfg") << "include = loop.cfg\n";
    Config d;
    CHECK_THROWS_AS(d.parse_file((dir / "loop.cfg").string()), ConfigError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("environment and overrides") {
    Config c = parse("[noise]\nseed = 2\n");
    std::string e1 = "IMAGINE_SIM_NOISE__SEED=5", e2 = "IMAGINE_SIM_Layer__C_OUT=20", e3 = "PATH=/bin";
    char* env[] = {e1.data(), e2.data(), e3.data(), nullptr};
    c.apply_env(env);
    CHECK(c.get("noise.seed") == "5");
    CHECK(c.get("layer.c_out") == "20");
    c.apply_override("noise.seed=9");
    CHECK(resolve(c).macro.noise.seed == 9);

    std::string bad = "IMAGINE_SIM_SEED=1";
    char* env2[] = {bad.data(), nullptr};
    CHECK_THROWS_AS(c.apply_env(env2), ConfigError);
    CHECK_THROWS_AS(c.apply_override("seed=1"), ConfigError);
    CHECK_THROWS_AS(c.apply_override("noise.seed"), ConfigError);
  }

  TEST_CASE("unknown keys and malformed values") {
    CHECK_THROWS_AS(resolve(parse("[noise]\nsede = 1\n")), ConfigError);
    CHECK_THROWS_AS(resolve(parse("[noise]\nseed = abc\n")), ConfigError);
    CHECK_THROWS_AS(resolve(parse("[macro]\ntopology = diagonal\n")), ConfigError);
    CHECK_THROWS_AS(parse("[noise\nseed = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[noise]\nseed\n"), ConfigError);
  }

  TEST_CASE("hash follows content") {
    const Config a = parse("[noise]\nseed = 1\n# comment\n");
    const Config b = parse("[noise]\n  seed=1   ; trailing\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != parse("[noise]\nseed = 2\n").hash());
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  }
}
