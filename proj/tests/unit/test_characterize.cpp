#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cimsim/characterize.hpp"
#include "cimsim/errors.hpp"

using namespace cimsim;

namespace {

CharacterizeOptions quick(std::vector<int> gammas) {
  CharacterizeOptions o;
  o.gammas = std::move(gammas);
  o.iters = 3;
  o.fill_step = 16;
  return o;
}

}  // namespace

TEST_SUITE("characterize") {
  TEST_CASE("noise spec CSV round trip") {
    HwNoiseSpec s;
    s.gammas = {1, 2, 4, 8, 16, 32};
    s.rms_lsb = {0.43, 0.54, 0.87, 1.55, 2.89, 5.54};
    s.settling_inl_lsb = 0.94;
    s.injection_bound_lsb = 1.0;
    s.sa_residual_sigma_lsb = 0.52;
    std::stringstream ss;
    write_noise_spec(ss, s);
    CHECK(ss.str().rfind("field,gamma,value\noutput_rms_lsb,1,0.43\n", 0) == 0);
    const auto back = read_noise_spec(ss);
    CHECK(back.gammas == s.gammas);
    CHECK(back.rms_lsb == s.rms_lsb);
    CHECK(back.settling_inl_lsb == s.settling_inl_lsb);
    CHECK(back.injection_bound_lsb == s.injection_bound_lsb);
    CHECK(back.sa_residual_sigma_lsb == s.sa_residual_sigma_lsb);

    std::istringstream comment("# produced elsewhere\nfield,gamma,value\nsettling_inl_lsb,,0\n"
                               "injection_bound_lsb,,0\nsa_residual_sigma_lsb,,0\n");
    CHECK(read_noise_spec(comment).gammas.empty());
  }

  TEST_CASE("noise spec validation") {
    HwNoiseSpec s;
    s.gammas = {1, 2};
    s.rms_lsb = {0.5, 0.4};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.rms_lsb = {0.4};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.rms_lsb = {0.4, 0.5};
    s.sa_residual_sigma_lsb = -1;
    CHECK_THROWS_AS(s.validate(), ConfigError);

    std::istringstream header("gamma,value\n");
    CHECK_THROWS_AS(read_noise_spec(header), LoadError);
    std::istringstream missing("field,gamma,value\noutput_rms_lsb,1,0.4\n");
    CHECK_THROWS_AS(read_noise_spec(missing), LoadError);
    std::istringstream unknown("field,gamma,value\nbogus,,1\n");
    CHECK_THROWS_AS(read_noise_spec(unknown), LoadError);
    std::istringstream value("field,gamma,value\noutput_rms_lsb,1,abc\n");
    CHECK_THROWS_AS(read_noise_spec(value), LoadError);
  }

  TEST_CASE("noise off gives zero RMS and the oracle transfer") {
    MacroConfig base;
    base.noise = NonidealityConfig::ideal();
    const auto t = characterize_transfer(base, quick({1, 8}));
    REQUIRE_FALSE(t.points.empty());
    for (const auto& p : t.points) {
      CHECK(p.rms == 0.0);
      CHECK(p.mean_code == p.ideal_code);
    }
    for (const auto& s : characterize_rms(base, quick({1, 4}))) CHECK(s.max_rms == 0.0);
  }

  TEST_CASE("transfer is monotone in the fill with the expected slope sign") {
    MacroConfig base;
    base.noise = NonidealityConfig::ideal();
    const auto t = characterize_transfer(base, quick({4}));
    for (std::size_t i = 1; i < t.points.size(); ++i) CHECK(t.points[i].ideal_code >= t.points[i - 1].ideal_code);
    REQUIRE(t.summary.size() == 1);
    CHECK(t.summary[0].slope > 0);
  }

  TEST_CASE("zero SA spread leaves calibration idle") {
    MacroConfig base;
    base.noise.sa_sigma_prelayout = 0.0;
    base.noise.sa_noise_sigma = 0.0;
    const auto r = characterize_calibration(base, 20);
    CHECK(r.rms_before == 0.0);
    CHECK(r.rms_after <= kCalResolution / kLsb8);
    CHECK(r.flagged == 0);
    CHECK(r.within_1lsb == 1.0);
    for (const auto& c : r.columns) CHECK(c.before == 0.0);
  }

  TEST_CASE("clustering error vanishes without settling") {
    MacroConfig base;
    base.noise = NonidealityConfig::ideal();
    const auto pts = characterize_clustering(base, {2, 8}, {1, 36}, 2, 1);
    CHECK(pts.size() == 4);
    for (const auto& p : pts) CHECK(p.mean_abs_error == 0.0);
  }

  TEST_CASE("jobs do not change results") {
    MacroConfig base;
    auto o = quick({2});
    o.jobs = 1;
    const auto a = characterize_transfer(base, o);
    o.jobs = 4;
    const auto b = characterize_transfer(base, o);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      CHECK(a.points[i].mean_code == b.points[i].mean_code);
      CHECK(a.points[i].rms == b.points[i].rms);
    }
  }
}
