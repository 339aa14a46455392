#include "cimsim/mbiw.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "cimsim/charge_core.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"

namespace cimsim {

const char* to_string(MbiwPhase p) {
  switch (p) {
    case MbiwPhase::DP: return "DP";
    case MbiwPhase::AccumulateIn: return "AccumulateIn";
    case MbiwPhase::WeightSelfWeight: return "WeightSelfWeight";
    case MbiwPhase::WeightPairShare: return "WeightPairShare";
    case MbiwPhase::Done: return "Done";
  }
  return "?";
}

// --- injection ---------------------------------------------------------------

InjectionErrorModel InjectionErrorModel::analytic(double bound, double slope_in, double slope_acc,
                                                  double v_mid) {
  if (bound < 0) throw UsageError("injection bound must be >= 0");
  InjectionErrorModel m;
  m.bound_ = bound;
  m.a_ = slope_in;
  m.b_ = slope_acc;
  m.mid_ = v_mid;
  return m;
}

InjectionErrorModel InjectionErrorModel::load_grid(std::istream& is) {
  InjectionErrorModel m;
  if (!(is >> m.n_in_ >> m.n_acc_ >> m.vmin_ >> m.vmax_))
    throw LoadError("injection map: bad header");
  if (m.n_in_ < 2 || m.n_acc_ < 2 || !(m.vmax_ > m.vmin_))
    throw LoadError("injection map: need at least 2x2 points and vmax > vmin");
  m.grid_.resize(static_cast<std::size_t>(m.n_in_) * m.n_acc_);
  for (auto& e : m.grid_) {
    double mv;
    if (!(is >> mv)) throw LoadError("injection map: truncated grid");
    e = mv * kMilli;
    m.bound_ = std::max(m.bound_, std::abs(e));
  }
  return m;
}

InjectionErrorModel InjectionErrorModel::load_grid_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw LoadError("injection map: cannot open " + path);
  return load_grid(f);
}

double InjectionErrorModel::operator()(double v_in, double v_acc) const {
  if (grid_.empty()) {
    if (bound_ == 0.0) return 0.0;
    return bound_ * std::tanh(a_ * (v_in - mid_)) * std::tanh(b_ * (v_acc - mid_));
  }
  auto coord = [&](double v, int n) {
    const double t = (std::clamp(v, vmin_, vmax_) - vmin_) / (vmax_ - vmin_) * (n - 1);
    const int i = std::min(static_cast<int>(t), n - 2);
    return std::pair{i, t - i};
  };
  const auto [i, fi] = coord(v_in, n_in_);
  const auto [j, fj] = coord(v_acc, n_acc_);
  auto at = [&](int r, int c) { return grid_[static_cast<std::size_t>(r) * n_acc_ + c]; };
  return (1 - fi) * ((1 - fj) * at(i, j) + fj * at(i, j + 1)) +
         fi * ((1 - fj) * at(i + 1, j) + fj * at(i + 1, j + 1));
}

// --- leakage / imbalance -------------------------------------------------------

double leak_drift(double v, const ElectricalParams& p, const NonidealityConfig& nc,
                  double step_fraction) {
  if (!nc.leakage || v == p.v_ddl) return 0.0;
  const double x = (v - p.v_ddl) / (p.v_ddh - p.v_ddl);
  return -nc.leak_drift_at_rail * x * x * x * step_fraction;
}

double acc_imbalance(std::uint64_t seed, int col, double sigma) {
  if (sigma == 0.0) return 0.0;
  RngStream r(seed, stream_key({0xacc0ULL, static_cast<std::uint64_t>(col)}));
  return r.gaussian(sigma);
}

double alpha_mb(const ElectricalParams& p, double c_acc) {
  return p.c_load() / (c_acc + p.c_load());
}

// --- state machine --------------------------------------------------------------

MbiwState mbiw_begin(const ElectricalParams& p, int r_in, int r_w, std::span<const double> c_acc) {
  if (r_in < 1 || r_in > 8) throw ConfigError("r_in must be in [1, 8]");
  if (r_w < 1 || r_w > 4) throw ConfigError("r_w must be in [1, 4]");
  MbiwState s;
  s.r_in = r_in;
  s.r_w = r_w;
  s.v_acc.assign(r_w, p.v_ddl);
  s.v_dpl.assign(r_w, p.v_ddl);
  if (c_acc.empty()) {
    s.c_acc.assign(r_w, p.c_acc);
  } else {
    if (static_cast<int>(c_acc.size()) != r_w) throw UsageError("mbiw_begin: c_acc size != r_w");
    s.c_acc.assign(c_acc.begin(), c_acc.end());
  }
  return s;
}

void mbiw_load_dp(MbiwState& s, std::span<const double> v_dp) {
  if (s.phase != MbiwPhase::DP)
    throw SequencingError(std::string("DP result loaded during ") + to_string(s.phase));
  if (v_dp.size() != s.v_dpl.size()) throw UsageError("mbiw_load_dp: column count mismatch");
  std::copy(v_dp.begin(), v_dp.end(), s.v_dpl.begin());
  s.phase = s.r_in == 1 ? MbiwPhase::WeightSelfWeight : MbiwPhase::AccumulateIn;
}

void accumulate_input_bit(MbiwState& s, const ElectricalParams& p, const NonidealityConfig& nc,
                          const InjectionErrorModel* inj) {
  if (s.phase != MbiwPhase::AccumulateIn)
    throw SequencingError(std::string("input accumulation during ") + to_string(s.phase));
  const double step_fraction = 1.0 / 8.0;
  for (std::size_t c = 0; c < s.v_acc.size(); ++c) {
    const double prev = s.v_acc[c];
    CapNode nodes[2] = {{p.c_load(), s.v_dpl[c]}, {s.c_acc[c], prev}};
    double v = share(nodes);
    if (nc.injection && inj) v += (*inj)(s.v_dpl[c], prev);
    v += leak_drift(v, p, nc, step_fraction);
    s.v_acc[c] = v;
    s.v_dpl[c] = v;
  }
  if (++s.k < s.r_in) {
    std::fill(s.v_dpl.begin(), s.v_dpl.end(), p.v_ddl);  // precharge for the next bit
    s.phase = MbiwPhase::DP;
  } else {
    s.phase = MbiwPhase::WeightSelfWeight;
  }
}

WeightAccumulation accumulate_weights(MbiwState& s, const ElectricalParams& p) {
  if (s.phase != MbiwPhase::WeightSelfWeight)
    throw SequencingError(std::string("weight accumulation during ") + to_string(s.phase));
  // LSB column: DPL shared with its own C_acc, freshly precharged to V_DDL.
  CapNode self[2] = {{p.c_load(), s.v_dpl[0]}, {s.c_acc[0], p.v_ddl}};
  double v = share(self);
  s.phase = MbiwPhase::WeightPairShare;
  for (int b = 1; b < s.r_w; ++b) {
    CapNode pair[2] = {{p.c_load(), v}, {p.c_load(), s.v_dpl[b]}};
    v = share(pair);
    s.v_dpl[b - 1] = v;
    s.v_dpl[b] = v;
  }
  s.v_dpl[s.r_w - 1] = v;
  s.phase = MbiwPhase::Done;
  return {v, std::ldexp(p.v_ddl, -s.r_w)};
}

WeightAccumulation accumulate_weights(std::span<const double> v_cols, int r_w, int cols_per_block,
                                      const ElectricalParams& p, double c_acc_lsb) {
  if (r_w > cols_per_block) throw ConfigError("r_w exceeds the columns of a block");
  if (r_w < 1 || static_cast<int>(v_cols.size()) < r_w)
    throw UsageError("accumulate_weights: need r_w column voltages");
  MbiwState s = mbiw_begin(p, 1, r_w);
  if (c_acc_lsb > 0) s.c_acc[0] = c_acc_lsb;
  std::copy_n(v_cols.begin(), r_w, s.v_dpl.begin());
  s.phase = MbiwPhase::WeightSelfWeight;
  return accumulate_weights(s, p);
}

double input_accumulation_closed_form(std::span<const double> v_dp, double a, double v_ddl) {
  const int r = static_cast<int>(v_dp.size());
  double v = std::pow(1 - a, r) * v_ddl;
  for (int k = 0; k < r; ++k) v += a * std::pow(1 - a, r - 1 - k) * v_dp[k];
  return v;
}

double weight_accumulation_closed_form(std::span<const double> v_cols, double v_ddl) {
  const int r_w = static_cast<int>(v_cols.size());
  double d = 0.0;
  for (int b = 0; b < r_w; ++b) d += std::ldexp(v_cols[b] - v_ddl, b - r_w);
  return d;
}

void validate_schedule(std::span<const PhaseInterval> schedule) {
  for (const auto& iv : schedule)
    if (!(iv.end > iv.start)) throw SequencingError("schedule: empty or reversed interval");
  for (std::size_t i = 0; i < schedule.size(); ++i)
    for (std::size_t j = 0; j < schedule.size(); ++j) {
      const auto& a = schedule[i];
      const auto& b = schedule[j];
      if (a.phase != MbiwPhase::DP || b.phase != MbiwPhase::AccumulateIn) continue;
      if (a.start < b.end && b.start < a.end)
        throw SequencingError("schedule: CS_DP and ACC_in overlap");
    }
}

}  // namespace cimsim
