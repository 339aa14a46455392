#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "cimsim/dp_array.hpp"
#include "cimsim/errors.hpp"

using namespace cimsim;

namespace {

ElectricalParams no_parasitics() {
  ElectricalParams p;
  p.c_p_per_unit = 0;
  p.c_p_glob = 0;
  return p;
}

InputBitVector ones(int n) { return {std::vector<std::uint8_t>(n, 1)}; }

}  // namespace

TEST_SUITE("dp_array") {
  TEST_CASE("geometry invariants") {
    MacroGeometry g;
    CHECK_NOTHROW(g.validate());
    g.n_rows = 1000;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    CHECK_THROWS_AS(DplTopology::serial(0).validate(MacroGeometry{}), ConfigError);
    CHECK_THROWS_AS(DplTopology::serial(33).validate(MacroGeometry{}), ConfigError);
    CHECK(DplTopology{DplVariant::Baseline, 3}.normalized(MacroGeometry{}).connected_units == 32);
  }

  TEST_CASE("alpha_eff worked values") {
    const MacroGeometry g;
    const auto p = no_parasitics();
    CHECK(alpha_eff(p, g, DplTopology::baseline(g)) == doctest::Approx(8.27e-4).epsilon(2e-3));
    CHECK(alpha_eff(p, g, DplTopology::serial(1)) == doctest::Approx(1.073e-2).epsilon(2e-3));
    auto big = p;
    big.c_mb = 1e-6;
    CHECK(alpha_eff(big, g, DplTopology::serial(1)) < 1e-9);
  }

  TEST_CASE("max_swing worked values") {
    const MacroGeometry g;
    const auto p = no_parasitics();
    CHECK(max_swing(p, g, DplTopology::baseline(g), 1152) == doctest::Approx(0.762).epsilon(2e-3));
    CHECK(max_swing(p, g, DplTopology::serial(1), 36) == doctest::Approx(0.309).epsilon(2e-3));
    CHECK(max_swing(p, g, DplTopology::serial(1), 0) == 0.0);
    CHECK_THROWS_AS(max_swing(p, g, DplTopology::serial(1), 37), UsageError);
  }

  TEST_CASE("swing ordering and monotonicity") {
    const MacroGeometry g;
    const ElectricalParams p;
    for (int n_on = 1; n_on <= 36; n_on += 5) {
      double prev = 1e9;
      for (int u = 1; u <= 32; ++u) {
        const double s = max_swing(p, g, DplTopology::serial(u), n_on);
        CHECK(s <= prev);
        prev = s;
        CHECK(s >= max_swing(p, g, DplTopology::parallel(u), n_on));
        CHECK(max_swing(p, g, DplTopology::parallel(u), n_on) >= max_swing(p, g, DplTopology::baseline(g), n_on));
      }
    }
    const double ratio = alpha_eff(p, g, DplTopology::serial(1)) / alpha_eff(p, g, DplTopology::baseline(g));
    CHECK(ratio >= 13.0);
    CHECK(ratio <= 20.0);
    ElectricalParams cal = p;
    cal.c_p_per_unit = cp_per_unit_for_swing_ratio(20.0, p, g);
    CHECK(alpha_eff(cal, g, DplTopology::serial(1)) / alpha_eff(cal, g, DplTopology::baseline(g)) ==
          doctest::Approx(20.0).epsilon(1e-9));
  }

  TEST_CASE("dp_bit_plane ideal examples") {
    const MacroGeometry g;
    const auto p = no_parasitics();
    const auto ideal = NonidealityConfig::ideal();
    const auto t = DplTopology::serial(1);
    WeightPlane w(g.n_rows, g.n_cols);
    for (int i = 0; i < 36; ++i) w.set(i, 0, true);
    CHECK(dp_bit_plane(w, InputBitVector{std::vector<std::uint8_t>(36, 0)}, 0, p, g, t, ideal, nullptr) == p.v_ddl);
    CHECK(dp_bit_plane(w, ones(36), 0, p, g, t, ideal, nullptr) == doctest::Approx(0.5545).epsilon(1e-3));
    for (int i = 0; i < 36; i += 2) w.set(i, 1, true);
    CHECK(dp_bit_plane(w, ones(36), 1, p, g, t, ideal, nullptr) == doctest::Approx(p.v_ddl).epsilon(1e-15));
    CHECK_THROWS_AS(dp_bit_plane(w, ones(37), 0, p, g, t, ideal, nullptr), ConfigError);
  }

  TEST_CASE("dp_bit_plane is affine in the signed sum and sign-symmetric") {
    const MacroGeometry g;
    const ElectricalParams p;
    const auto ideal = NonidealityConfig::ideal();
    const auto t = DplTopology::serial(2);
    const double a = alpha_eff(p, g, t);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
      WeightPlane w(g.n_rows, 2);
      InputBitVector x{std::vector<std::uint8_t>(72)};
      for (int i = 0; i < 72; ++i) {
        x.bits[i] = rng() & 1;
        const bool b = rng() & 1;
        w.set(i, 0, b);
        w.set(i, 1, !b);
      }
      const int s = signed_dot(w, x, 0);
      const double v0 = dp_bit_plane(w, x, 0, p, g, t, ideal, nullptr);
      const double v1 = dp_bit_plane(w, x, 1, p, g, t, ideal, nullptr);
      CHECK(v0 == doctest::Approx(p.v_ddl * (1 + a * s)).epsilon(1e-12));
      CHECK((v0 - p.v_ddl) == doctest::Approx(-(v1 - p.v_ddl)).epsilon(1e-12));
    }
  }

  TEST_CASE("settling error") {
    const MacroGeometry g;
    const ElectricalParams p;
    NonidealityConfig nc;
    const auto t = DplTopology::serial(2);
    std::vector<std::int8_t> half(72, 0);
    for (int i = 0; i < 36; ++i) half[i] = 1;
    const double target = p.v_ddh / 2;

    CHECK(settling_error(half, target, p, g, DplTopology::baseline(g), nc) == 0.0);
    nc.t_dp = 1e3;
    CHECK(settling_error(half, target, p, g, t, nc) == 0.0);

    nc.t_dp = nc.tau(false);
    const double e = settling_error(half, target, p, g, t, nc);
    CHECK(e != 0.0);
    CHECK(std::abs(e) <= nc.settling_e_max);

    nc.t_dp = 5 * nc.tau(false);
    std::vector<std::int8_t> uniform(72, 1);
    CHECK(settling_error(uniform, target, p, g, t, nc) == 0.0);

    // Corner ordering and parallel split settling faster.
    nc.t_dp = 2e-9;
    nc.corner = Corner::SS;
    const double ss = std::abs(settling_error(half, target, p, g, t, nc));
    nc.corner = Corner::FF;
    const double ff = std::abs(settling_error(half, target, p, g, t, nc));
    CHECK(ss > ff);
    nc.corner = Corner::TT;
    CHECK(std::abs(settling_error(half, target, p, g, DplTopology::parallel(2), nc)) <
          std::abs(settling_error(half, target, p, g, t, nc)));
    // Larger near mid-rail.
    CHECK(std::abs(settling_error(half, target, p, g, t, nc)) >
          std::abs(settling_error(half, 0.7, p, g, t, nc)));
  }

  TEST_CASE("cluster factor grows with run length") {
    const MacroGeometry g;
    const auto t = DplTopology::serial(8);
    double prev = -1;
    for (int run : {1, 2, 36, 72, 144}) {
      std::vector<std::int8_t> prod(288);
      for (int i = 0; i < 288; ++i) prod[i] = ((i / run) % 2) ? -1 : 1;
      const double cf = std::abs(cluster_factor(prod, g, t));
      CHECK(cf >= prev);
      prev = cf;
    }
    CHECK(prev > 0.2);
  }

  TEST_CASE("noise is seeded and clamped") {
    const MacroGeometry g;
    const ElectricalParams p;
    const NonidealityConfig nc;
    const auto t = DplTopology::serial(1);
    WeightPlane w(g.n_rows, 1);
    RngStream a(1, 1), b(1, 1);
    const double va = dp_bit_plane(w, ones(36), 0, p, g, t, nc, &a);
    const double vb = dp_bit_plane(w, ones(36), 0, p, g, t, nc, &b);
    CHECK(va == vb);
    CHECK(dp_finish(2.0, 0, 0.0, 1e-15, p, NonidealityConfig::ideal(), nullptr) == p.v_ddh);
    CHECK(dp_finish(-1.0, 0, 0.0, 1e-15, p, NonidealityConfig::ideal(), nullptr) == 0.0);
  }

  TEST_CASE("CIMW weight plane round trip") {
    WeightPlane w(37, 11);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 37; ++i)
      for (int j = 0; j < 11; ++j) w.set(i, j, rng() & 1);
    std::stringstream ss;
    w.write(ss);
    const std::string bytes = ss.str();
    CHECK(bytes.size() == 16 + (37 * 11 + 7) / 8);
    CHECK(bytes.substr(0, 4) == "CIMW");
    CHECK(WeightPlane::read(ss) == w);

    std::stringstream bad("CIMX");
    CHECK_THROWS_AS(WeightPlane::read(bad), LoadError);
    std::stringstream cut(bytes.substr(0, bytes.size() - 2));
    CHECK_THROWS_AS(WeightPlane::read(cut), LoadError);
  }

  TEST_CASE("drive energy") {
    const MacroGeometry g;
    const ElectricalParams p;
    CHECK(dp_drive_energy(p, g, DplTopology::serial(1), 0) == 0.0);
    // Serial split never costs more than the baseline for the same active rows.
    for (int ch = 4; ch * 9 <= 1152; ch *= 2) {
      const int rows = 9 * ch;
      const int units = (rows + 35) / 36;
      CHECK(dp_drive_energy(p, g, DplTopology::serial(units), rows) <=
            dp_drive_energy(p, g, DplTopology::baseline(g), rows));
    }
  }
}
