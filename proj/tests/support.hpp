#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "cimsim/macro_engine.hpp"

namespace cimsim::testing {

/// Random ideal-mode macro invocation with at most `max_rows` active rows.
struct OracleCase {
  MacroConfig cfg;
  CimCycleInput in;
};

inline OracleCase random_oracle_case(std::mt19937_64& g, int max_rows = 72, int max_outputs = 16) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); };
  OracleCase c;
  c.cfg.noise = NonidealityConfig::ideal();
  c.cfg.r_in = uni(1, 8);
  c.cfg.r_w = uni(1, 4);
  c.cfg.adc.r_out = uni(1, 8);
  static constexpr int kGammas[] = {1, 2, 4, 8, 16, 32};
  c.cfg.adc.gamma = kGammas[uni(0, 5)];
  const int rows = uni(1, max_rows);
  const int units = (rows + 35) / 36 + uni(0, 1);
  switch (uni(0, 2)) {
    case 0: c.cfg.topology = DplTopology::serial(units); break;
    case 1: c.cfg.topology = DplTopology::parallel(units); break;
    default: c.cfg.topology = DplTopology::baseline(c.cfg.geometry); break;
  }
  const int n_out = uni(1, std::min(max_outputs, c.cfg.n_outputs()));
  c.in.n_outputs = n_out;
  // Mix dense random data with sparse and aligned patterns so codes span the range.
  const int style = uni(0, 2);
  c.in.inputs.resize(rows);
  for (auto& x : c.in.inputs) {
    const std::uint32_t full = (1u << c.cfg.r_in) - 1;
    x = style == 1 ? (uni(0, 3) == 0 ? std::uniform_int_distribution<std::uint32_t>(0, full)(g) : 0u)
                   : std::uniform_int_distribution<std::uint32_t>(0, full)(g);
  }
  c.in.weights.resize(static_cast<std::size_t>(rows) * n_out);
  const int wmax = (1 << c.cfg.r_w) - 1;
  const int bias = uni(0, wmax);
  for (auto& w : c.in.weights)
    w = static_cast<std::uint8_t>(style == 2 ? (uni(0, 3) ? bias : uni(0, wmax)) : uni(0, wmax));
  c.in.beta.resize(n_out);
  for (auto& b : c.in.beta) b = uni(0, 1) ? uni(-15, 15) : 0;
  return c;
}

}  // namespace cimsim::testing
