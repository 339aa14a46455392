#include "cimsim/adc.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cimsim/charge_core.hpp"
#include "cimsim/errors.hpp"

namespace cimsim {

bool gamma_supported(int gamma) {
  return gamma == 1 || gamma == 2 || gamma == 4 || gamma == 8 || gamma == 16 || gamma == 32;
}

void AdcConfig::validate() const {
  if (r_out < 1 || r_out > 8) throw ConfigError("r_out must be in [1, 8]");
  if (!gamma_supported(gamma)) throw ConfigError("gamma must be one of 1, 2, 4, 8, 16, 32");
}

double alpha_adc(const ElectricalParams& p) { return 32.0 * p.c_c / p.c_adc; }

double code_step(const ElectricalParams& p, const AdcConfig& cfg) {
  return alpha_adc(p) * p.v_ddh / std::ldexp(1.0, cfg.r_out - 1) / cfg.gamma;
}

double AbnParams::delta_v() const { return beta_code * kBetaStep; }

void AbnParams::validate() const {
  if (beta_code < kBetaMin || beta_code > kBetaMax)
    throw ConfigError("beta code " + std::to_string(beta_code) + " outside [-15, 15]");
}

double CalUnit::delta_v() const {
  return (code - kCalMid) * kCalResolution + assist_beta * kBetaStep;
}

SenseAmp make_sense_amp(const NonidealityConfig& nc, int col, double v_ddh) {
  SenseAmp sa;
  if (nc.sa_offset) {
    RngStream r(nc.seed, stream_key({0x5aULL, static_cast<std::uint64_t>(col)}));
    sa.offset = r.gaussian(nc.sa_sigma_prelayout * nc.sa_postlayout_factor);
  }
  sa.noise_sigma = nc.sa_noise_sigma + nc.supply_noise_slope * std::max(0.0, v_ddh - 0.8);
  sa.kickback = nc.kickback;
  return sa;
}

// --- ladder ------------------------------------------------------------------

std::vector<double> ladder_taps(const ElectricalParams& p, double sigma, std::uint64_t seed) {
  constexpr int kSegments = 32;
  std::vector<double> r(kSegments, 1.0);
  if (sigma > 0) {
    RngStream rng(seed, stream_key({0x1adde7ULL}));
    for (auto& x : r) x += rng.gaussian(sigma);
  }
  std::vector<double> taps(kSegments + 1, 0.0);
  double total = 0.0;
  for (double x : r) total += x;
  double acc = 0.0;
  for (int m = 1; m < kSegments; ++m) {
    acc += r[m - 1];
    taps[m] = p.v_ddh * acc / total;
  }
  taps[kSegments] = p.v_ddh;
  return taps;
}

LadderTable ladder_levels(int gamma, const ElectricalParams& p, const NonidealityConfig& nc) {
  if (!gamma_supported(gamma)) throw ConfigError("gamma must be one of 1, 2, 4, 8, 16, 32");
  LadderTable t;
  t.gamma = gamma;
  t.extrapolated = gamma > 16;
  const double mid = p.v_ddh / 2.0;
  std::vector<double> taps;
  if (nc.ladder_grid) taps = ladder_taps(p, nc.ladder_mismatch_sigma, nc.seed);
  for (int j = 0; j < 8; ++j) {
    const double dev = kSlotSwingWeight[j] * p.v_ddh / (2.0 * gamma);
    if (!nc.ladder_grid) {
      t.s_in[j] = mid + dev;
      t.s_inb[j] = mid - dev;
      continue;
    }
    // The differential swing snaps to the grid; odd multiples sit one tap off-centre.
    const double grid = p.v_ddh / 32.0;
    const int n = std::min(32, static_cast<int>(std::round(2.0 * dev / grid)));  // half away from zero
    t.s_in[j] = taps[16 + (n + 1) / 2];
    t.s_inb[j] = taps[16 - n / 2];
  }
  return t;
}

// --- conversion --------------------------------------------------------------

Conversion convert_behavioral(double v_mbiw, const AbnParams& abn, const CalUnit& cal,
                              const AdcConfig& cfg, const ElectricalParams& p) {
  cfg.validate();
  const double half = std::ldexp(1.0, cfg.r_out - 1);
  const double lsb = alpha_adc(p) * p.v_ddh / half;
  const double dv = (v_mbiw - p.v_ddl) + abn.delta_v() + cal.delta_v();
  const double arg = half + cfg.gamma * (dv + kTieEpsilon) / lsb;
  const double top = 2.0 * half;
  Conversion c;
  c.saturated = arg < 0.0 || arg >= top;
  c.code = static_cast<int>(std::clamp(std::floor(arg), 0.0, top - 1.0));
  return c;
}

Conversion convert_structural(double v_dpl, const AbnParams& abn, const CalUnit& cal,
                              const AdcConfig& cfg, const ElectricalParams& p,
                              const LadderTable& ladder, const SenseAmp& sa,
                              const NonidealityConfig& nc, RngStream* rng) {
  cfg.validate();
  if (ladder.gamma != cfg.gamma) throw ConfigError("ladder table built for a different gamma");
  const int r = cfg.r_out;
  auto step = [&](int slot) { return kSlotCaps[slot] * p.c_c * ladder.swing(slot) / p.c_adc; };

  double v = v_dpl + abn.delta_v() + cal.delta_v();
  if (nc.dpl_ktc && rng) v += rng->gaussian(ktc_sigma(p.c_load(), nc.temperature_k));
  const double ref = p.v_ddl;

  Conversion c;
  c.residues.reserve(r + 1);
  int code = 0;
  bool bit = false;
  for (int i = 0; i < r; ++i) {
    if (i > 0) v += bit ? -step(8 - i) : step(8 - i);
    c.residues.push_back(v - ref);
    double noise = 0.0;
    if (rng && sa.noise_sigma > 0) noise = rng->gaussian(sa.noise_sigma);
    bit = (v - ref + sa.offset + noise) >= -kTieEpsilon;
    code = (code << 1) | (bit ? 1 : 0);
    v += bit ? sa.kickback : -sa.kickback;
  }
  const double last = step(8 - r);
  v += bit ? -last : last;
  const double res = v - ref;
  c.residues.push_back(res);
  c.code = code;
  const int top = (1 << r) - 1;
  if (code == top) c.saturated = res - last >= -kTieEpsilon;
  if (code == 0) c.saturated = !(res + last >= -kTieEpsilon);
  return c;
}

// --- calibration -----------------------------------------------------------

namespace {

// Largest index in [0, n_max] whose compare reports "still below"; SAR order.
template <typename Decide>
int sar_search(int bits, int n_max, Decide&& high) {
  int idx = 0;
  for (int b = bits - 1; b >= 0; --b) {
    const int trial = idx | (1 << b);
    if (trial > n_max) continue;
    if (!high(trial)) idx = trial;
  }
  return idx;
}

}  // namespace

CalUnit calibrate(const SenseAmp& sa, const NonidealityConfig& nc, RngStream* rng) {
  auto decide = [&](double injected) {
    double noise = 0.0;
    if (rng && sa.noise_sigma > 0) noise = rng->gaussian(sa.noise_sigma);
    return injected + sa.offset + noise >= -kTieEpsilon;
  };
  const int cal_max = (1 << kCalBits) - 1;
  CalUnit cal;
  auto search_cal = [&] {
    cal.code = sar_search(kCalBits, cal_max, [&](int c) {
      CalUnit t = cal;
      t.code = c;
      return decide(t.delta_v() - kCalResolution / 2);
    });
    return cal.code == 0 || cal.code == cal_max;
  };
  cal.out_of_range = search_cal();
  if (cal.out_of_range && nc.abn_assist) {
    cal.code = kCalMid;
    const int span = kBetaMax - kBetaMin;
    const int idx = sar_search(5, span, [&](int i) {
      return decide((i + kBetaMin) * kBetaStep - kBetaStep / 2);
    });
    cal.assist_beta = idx + kBetaMin;
    cal.out_of_range = search_cal();
  }
  return cal;
}

void write_calibration(std::ostream& os, std::span<const CalUnit> cal) {
  for (std::size_t i = 0; i < cal.size(); ++i) {
    os << i << ',' << cal[i].code << ',' << (cal[i].out_of_range ? 1 : 0);
    if (cal[i].assist_beta != 0) os << ',' << cal[i].assist_beta;
    os << '\n';
  }
}

std::vector<CalUnit> read_calibration(std::istream& is, int n_cols) {
  std::vector<CalUnit> out(n_cols);
  std::vector<bool> seen(n_cols, false);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int col, code, flag, assist = 0;
    if (!(ls >> col >> code >> flag)) throw LoadError("calibration line " + std::to_string(lineno) + ": expected col,code,flag");
    ls >> assist;
    if (col < 0 || col >= n_cols) throw LoadError("calibration line " + std::to_string(lineno) + ": column out of range");
    if (code < 0 || code >= (1 << kCalBits) || (flag != 0 && flag != 1) || assist < kBetaMin ||
        assist > kBetaMax)
      throw LoadError("calibration line " + std::to_string(lineno) + ": field out of range");
    out[col] = CalUnit{code, flag == 1, assist};
    seen[col] = true;
  }
  for (int c = 0; c < n_cols; ++c)
    if (!seen[c]) throw LoadError("calibration: missing column " + std::to_string(c));
  return out;
}

InlStats inl_stats(std::span<const double> x, std::span<const double> y, double y_max) {
  if (x.size() != y.size()) throw UsageError("inl_stats: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0 && y[i] < y_max)) continue;
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    ++n;
  }
  InlStats s;
  s.points = n;
  if (n < 2) return s;
  const double den = n * sxx - sx * sx;
  const double b = den != 0 ? (n * sxy - sx * sy) / den : 0.0;
  const double a = (sy - b * sx) / n;
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0 && y[i] < y_max)) continue;
    const double e = std::abs(y[i] - (a + b * x[i]));
    sum += e;
    s.peak = std::max(s.peak, e);
  }
  s.mean = sum / n;
  return s;
}

}  // namespace cimsim
