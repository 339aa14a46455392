#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cimsim/errors.hpp"
#include "cimsim/macro_engine.hpp"
#include "support.hpp"

using namespace cimsim;

namespace {

MacroConfig ideal_config(int r_in, int r_w, int r_out, int gamma, int units) {
  MacroConfig c;
  c.noise = NonidealityConfig::ideal();
  c.r_in = r_in;
  c.r_w = r_w;
  c.adc = {r_out, gamma};
  c.topology = DplTopology::serial(units);
  return c;
}

// Floating-point restatement of the ideal chain, used away from code boundaries.
double float_argument(const CimCycleInput& in, const MacroConfig& cfg, int o) {
  const auto& p = cfg.electrical;
  const double cl = p.c_load();
  const double alpha = alpha_eff(p, cfg.geometry, cfg.topology);
  const double a = cl / (p.c_acc + cl);
  const double half = std::ldexp(1.0, cfg.adc.r_out - 1);
  const double gain = cfg.adc.gamma * half / (32 * p.c_c / p.c_adc * p.v_ddh);
  double dv = kTieEpsilon + (in.beta.empty() ? 0.0 : in.beta[o] * kBetaStep);
  for (int b = 0; b < cfg.r_w; ++b) {
    double wb = std::ldexp(1.0, b - cfg.r_w);
    if (b == 0) wb *= 2 * cl / (cl + p.c_acc);
    for (int k = 0; k < cfg.r_in; ++k) {
      const double ck = cfg.r_in == 1 ? 1.0 : a * std::pow(1 - a, cfg.r_in - 1 - k);
      long s = 0;
      for (std::size_t i = 0; i < in.inputs.size(); ++i) {
        if (!((in.inputs[i] >> k) & 1)) continue;
        const unsigned u = in.weights[i * in.n_outputs + o];
        s += ((u >> b) & 1) ? 1 : -1;
      }
      dv += wb * ck * alpha * p.v_ddl * s;
    }
  }
  return half + gain * dv;
}

}  // namespace

TEST_SUITE("macro") {
  TEST_CASE("oracle agrees with a floating-point restatement") {
    std::mt19937_64 g(21);
    int checked = 0;
    for (int t = 0; t < 500; ++t) {
      auto c = testing::random_oracle_case(g);
      const auto o = integer_oracle(c.in, c.cfg);
      for (int j = 0; j < c.in.n_outputs; ++j) {
        const double f = float_argument(c.in, c.cfg, j);
        CHECK(o.argument[j] == doctest::Approx(f).epsilon(1e-9).scale(1.0));
        if (std::abs(f - std::round(f)) < 1e-6) continue;
        const int top = (1 << c.cfg.adc.r_out) - 1;
        const int code = static_cast<int>(std::clamp(std::floor(f), 0.0, double(top)));
        CHECK(o.codes[j] == code);
        ++checked;
      }
    }
    CHECK(checked > 1000);
  }

  TEST_CASE("zero inputs give the midcode") {
    for (int r_out = 1; r_out <= 8; ++r_out) {
      auto cfg = ideal_config(8, 4, r_out, 1, 2);
      CimCycleInput in;
      in.inputs.assign(72, 0);
      in.n_outputs = 5;
      in.weights.assign(72 * 5, 9);
      const auto t = run_cycle(in, cfg);
      for (int j = 0; j < 5; ++j) {
        CHECK(t.codes[j] == (1 << (r_out - 1)));
        CHECK(t.oracle_codes[j] == t.codes[j]);
        CHECK(t.v_mbiw[j] == doctest::Approx(cfg.electrical.v_ddl).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("r_in = 1 bypasses input accumulation") {
    auto cfg = ideal_config(1, 1, 8, 8, 1);
    CimCycleInput in;
    in.inputs.assign(36, 1);
    in.n_outputs = 2;
    in.weights.resize(72);
    for (int i = 0; i < 36; ++i) {
      in.weights[i * 2] = 1;
      in.weights[i * 2 + 1] = i < 9 ? 1 : 0;
    }
    const auto t = run_cycle(in, cfg);
    CHECK(t.codes == t.oracle_codes);
    CHECK(t.codes[0] > 128);
    CHECK(t.codes[1] < 128);
  }

  TEST_CASE("sign symmetry of offset-binary weights") {
    std::mt19937_64 g(22);
    for (int t = 0; t < 100; ++t) {
      auto c = testing::random_oracle_case(g);
      c.in.beta.clear();
      auto flipped = c.in;
      const unsigned full = (1u << c.cfg.r_w) - 1;
      for (auto& w : flipped.weights) w = static_cast<std::uint8_t>(full - w);
      const auto a = integer_oracle(c.in, c.cfg);
      const auto b = integer_oracle(flipped, c.cfg);
      for (int j = 0; j < c.in.n_outputs; ++j)
        CHECK(std::abs(a.deviation[j] + b.deviation[j]) < 1e-6);  // tie epsilon counts twice
    }
  }

  TEST_CASE("noisy runs are deterministic per cycle key") {
    MacroConfig cfg;
    cfg.topology = DplTopology::serial(2);
    std::mt19937_64 g(23);
    std::vector<std::uint8_t> w(72 * 16);
    for (auto& x : w) x = g() % 16;
    std::vector<std::uint32_t> x(72);
    for (auto& v : x) v = g() % 256;
    Macro m(cfg);
    m.load_weights(w, 72, 16);
    const auto a = m.run(x, 5);
    const auto b = m.run(x, 5);
    CHECK(a.codes == b.codes);
    CHECK(a.v_mbiw == b.v_mbiw);
    bool differs = false;
    for (std::uint64_t k = 6; k < 16 && !differs; ++k) differs = m.run(x, k).v_mbiw != a.v_mbiw;
    CHECK(differs);
  }

  TEST_CASE("input validation") {
    auto cfg = ideal_config(4, 2, 8, 1, 1);
    CimCycleInput in;
    in.inputs = {16};
    in.n_outputs = 1;
    in.weights = {1};
    CHECK_THROWS_AS(integer_oracle(in, cfg), UsageError);
    in.inputs = {15};
    in.weights = {4};
    CHECK_THROWS_AS(run_cycle(in, cfg), UsageError);
    in.inputs.assign(37, 1);
    in.weights.assign(37, 1);
    CHECK_THROWS_AS(run_cycle(in, cfg), ConfigError);
    cfg.r_w = 5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ideal_config(4, 2, 8, 3, 1);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    Macro m(ideal_config(4, 2, 8, 1, 1));
    CHECK(m.config().n_outputs() == 128);
    m.load_weights(std::vector<std::uint8_t>(36 * 2, 1), 36, 2);
    CHECK_THROWS_AS(m.set_beta({1}), UsageError);
    CHECK_THROWS_AS(m.set_beta({1, 16}), ConfigError);
  }

  TEST_CASE("saturation flags") {
    auto cfg = ideal_config(8, 4, 8, 32, 1);
    CimCycleInput in;
    in.inputs.assign(36, 255);
    in.n_outputs = 2;
    in.weights.resize(72);
    for (int i = 0; i < 36; ++i) {
      in.weights[2 * i] = 15;
      in.weights[2 * i + 1] = 0;
    }
    const auto t = run_cycle(in, cfg);
    CHECK(t.codes[0] == 255);
    CHECK(t.codes[1] == 0);
    CHECK(t.saturated[0]);
    CHECK(t.saturated[1]);
    CHECK(t.oracle_saturated == t.saturated);
    CHECK(t.extrapolated);
  }

  TEST_CASE("gamma doubles the deviation exactly") {
    std::mt19937_64 g(24);
    for (int t = 0; t < 200; ++t) {
      auto c = testing::random_oracle_case(g);
      c.cfg.adc.gamma = 1 << (g() % 5);
      auto d = c.cfg;
      d.adc.gamma *= 2;
      const auto a = integer_oracle(c.in, c.cfg);
      const auto b = integer_oracle(c.in, d);
      for (int j = 0; j < c.in.n_outputs; ++j) CHECK(b.deviation[j] == 2 * a.deviation[j]);
    }
  }

  TEST_CASE("energy ledger is populated") {
    auto cfg = ideal_config(8, 4, 8, 1, 2);
    CimCycleInput in;
    in.inputs.assign(72, 200);
    in.n_outputs = 4;
    in.weights.assign(72 * 4, 5);
    const auto t = run_cycle(in, cfg);
    CHECK(t.energy.total() > 0);
  }
}
