#include "cimsim/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "cimsim/errors.hpp"
#include "parallel.hpp"

namespace cimsim {

MacroConfig characterization_config(const MacroConfig& base, int fc_rows) {
  MacroConfig cfg = base;
  cfg.r_in = 8;
  cfg.r_w = 1;
  cfg.adc.r_out = 8;
  const int units = (fc_rows + cfg.geometry.rows_per_unit - 1) / cfg.geometry.rows_per_unit;
  if (units > cfg.geometry.units_per_col) throw ConfigError("fc_rows exceed the column height");
  if (cfg.topology.variant != DplVariant::Baseline) cfg.topology.connected_units = units;
  cfg.jobs = 1;
  return cfg;
}

namespace {

// Signed zero on r_in bits maps to the unsigned code 2^{r_in-1}.
std::vector<std::uint32_t> signed_zero_inputs(int rows, int r_in) {
  return std::vector<std::uint32_t>(rows, 1u << (r_in - 1));
}

std::vector<std::uint8_t> fill_weights(int rows, int outputs, int fill) {
  std::vector<std::uint8_t> w(static_cast<std::size_t>(rows) * outputs, 0);
  for (int i = 0; i < std::min(fill, rows); ++i)
    std::fill_n(w.begin() + static_cast<std::ptrdiff_t>(i) * outputs, outputs, 1);
  return w;
}

struct PointStats {
  double mean = 0;
  double rms = 0;
  double ideal = 0;
  bool ideal_saturated = false;
};

PointStats run_point(const Macro& proto, const std::vector<std::uint8_t>& w, int rows,
                     const std::vector<std::uint32_t>& inputs, int iters, std::uint64_t key) {
  Macro m = proto;
  const int n_out = m.config().n_outputs();
  m.load_weights(w, rows, n_out);
  const auto prep = m.prepare(inputs, true);
  std::vector<double> sum(n_out, 0.0), sum2(n_out, 0.0);
  for (int it = 0; it < iters; ++it) {
    const auto tr = m.run(prep, stream_key({key, static_cast<std::uint64_t>(it)}));
    for (int o = 0; o < n_out; ++o) {
      sum[o] += tr.codes[o];
      sum2[o] += static_cast<double>(tr.codes[o]) * tr.codes[o];
    }
  }
  PointStats s;
  double var_acc = 0.0, mean_acc = 0.0;
  for (int o = 0; o < n_out; ++o) {
    const double mu = sum[o] / iters;
    mean_acc += mu;
    var_acc += std::max(0.0, sum2[o] / iters - mu * mu);
  }
  s.mean = mean_acc / n_out;
  s.rms = std::sqrt(var_acc / n_out);
  double ideal = 0.0;
  for (int c : prep.oracle.codes) ideal += c;
  s.ideal = ideal / n_out;
  s.ideal_saturated = std::any_of(prep.oracle.saturated.begin(), prep.oracle.saturated.end(),
                                  [](auto f) { return f != 0; });
  return s;
}

}  // namespace

TransferTable characterize_transfer(const MacroConfig& base, const CharacterizeOptions& opt) {
  if (opt.iters < 1 || opt.fill_step < 1) throw UsageError("iters and fill_step must be >= 1");
  const MacroConfig cfg0 = characterization_config(base, opt.fc_rows);
  const int rows = opt.fc_rows;
  const auto inputs = signed_zero_inputs(rows, cfg0.r_in);
  std::vector<int> fills;
  for (int f = 0; f < rows; f += opt.fill_step) fills.push_back(f);
  fills.push_back(rows);

  TransferTable table;
  for (int g : opt.gammas) {
    MacroConfig cfg = cfg0;
    cfg.adc.gamma = g;
    const Macro proto(cfg);
    const int n_out = cfg.n_outputs();
    std::vector<PointStats> stats(fills.size());
    detail::parallel_for(static_cast<int>(fills.size()), opt.jobs, [&](int i) {
      const auto w = fill_weights(rows, n_out, fills[i]);
      stats[i] = run_point(proto, w, rows, inputs, opt.iters,
                           stream_key({0x7a5fULL, static_cast<std::uint64_t>(g),
                                       static_cast<std::uint64_t>(fills[i])}));
    });

    const double top = std::ldexp(1.0, cfg.adc.r_out) - 1;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < fills.size(); ++i) {
      const bool use = !stats[i].ideal_saturated && stats[i].ideal >= 1 && stats[i].ideal <= top - 1;
      x.push_back(fills[i]);
      y.push_back(use ? stats[i].mean : 0.0);  // 0 excludes the point from the fit
    }
    // Least-squares line over the usable points, then per-point deviation.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (y[i] > 0 && y[i] < top) {
        sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i], ++n;
      }
    const double den = n * sxx - sx * sx;
    const double slope = (n >= 2 && den != 0) ? (n * sxy - sx * sy) / den : 0.0;
    const double icept = n > 0 ? (sy - slope * sx) / n : 0.0;

    TransferSummary sum;
    sum.gamma = g;
    sum.slope = slope;
    sum.extrapolated = cfg.adc.extrapolated();
    double inl_acc = 0;
    for (std::size_t i = 0; i < fills.size(); ++i) {
      TransferPoint tp;
      tp.gamma = g;
      tp.fill = fills[i];
      tp.ideal_code = stats[i].ideal;
      tp.mean_code = stats[i].mean;
      tp.rms = stats[i].rms;
      if (y[i] > 0 && y[i] < top && n >= 2) {
        tp.inl = std::abs(y[i] - (icept + slope * x[i]));
        inl_acc += tp.inl;
        if (tp.inl > sum.peak_inl) {
          sum.peak_inl = tp.inl;
          sum.peak_fill = fills[i];
        }
      } else {
        tp.inl = std::numeric_limits<double>::quiet_NaN();
      }
      sum.max_rms = std::max(sum.max_rms, tp.rms);
      table.points.push_back(tp);
    }
    sum.mean_inl = n > 0 ? inl_acc / n : 0.0;
    table.summary.push_back(sum);
  }
  return table;
}

std::vector<TransferSummary> characterize_rms(const MacroConfig& base, const CharacterizeOptions& opt) {
  return characterize_transfer(base, opt).summary;
}

std::vector<ClusteringPoint> characterize_clustering(const MacroConfig& base,
                                                     const std::vector<int>& connected_units,
                                                     const std::vector<int>& run_lengths, int iters,
                                                     int jobs) {
  std::vector<ClusteringPoint> out;
  for (int units : connected_units) {
    const int rows = units * base.geometry.rows_per_unit;
    const MacroConfig cfg = characterization_config(base, rows);
    const Macro proto(cfg);
    const int n_out = cfg.n_outputs();
    const auto inputs = signed_zero_inputs(rows, cfg.r_in);
    std::vector<ClusteringPoint> pts(run_lengths.size());
    detail::parallel_for(static_cast<int>(run_lengths.size()), jobs, [&](int j) {
      const int len = std::max(1, run_lengths[j]);
      std::vector<std::uint8_t> w(static_cast<std::size_t>(rows) * n_out);
      for (int i = 0; i < rows; ++i)
        std::fill_n(w.begin() + static_cast<std::ptrdiff_t>(i) * n_out, n_out,
                    static_cast<std::uint8_t>((i / len) % 2 == 0 ? 1 : 0));
      Macro m = proto;
      m.load_weights(w, rows, n_out);
      const auto prep = m.prepare(inputs, true);
      double err = 0;
      for (int it = 0; it < iters; ++it) {
        const auto tr = m.run(prep, stream_key({0xc157ULL, static_cast<std::uint64_t>(units),
                                                static_cast<std::uint64_t>(len),
                                                static_cast<std::uint64_t>(it)}));
        for (int o = 0; o < n_out; ++o) err += std::abs(tr.codes[o] - prep.oracle.codes[o]);
      }
      pts[j] = {units, len, err / (static_cast<double>(iters) * n_out)};
    });
    out.insert(out.end(), pts.begin(), pts.end());
  }
  return out;
}

CalibrationReport characterize_calibration(const MacroConfig& base, int samples) {
  if (samples < 1) throw UsageError("samples must be >= 1");
  const auto& nc = base.noise;
  CalibrationReport rep;
  double sb = 0, sa2 = 0;
  int within = 0;
  for (int c = 0; c < base.geometry.n_cols; ++c) {
    const SenseAmp sa = make_sense_amp(nc, c, base.electrical.v_ddh);
    CalibrationColumn col;
    col.col = c;
    col.offset = sa.offset;
    col.before = sa.offset / kLsb8;
    double acc = 0;
    for (int s = 0; s < samples; ++s) {
      RngStream rng(nc.seed, stream_key({0xca1ULL, static_cast<std::uint64_t>(c),
                                         static_cast<std::uint64_t>(s)}));
      const CalUnit cal = nc.calibrate ? calibrate(sa, nc, &rng) : CalUnit{};
      acc += sa.offset + cal.delta_v();
      if (s == 0) col.out_of_range = cal.out_of_range;
    }
    col.after = acc / samples / kLsb8;
    sb += col.before * col.before;
    sa2 += col.after * col.after;
    if (std::abs(col.after) <= 1.0) ++within;
    if (col.out_of_range) ++rep.flagged;
    rep.columns.push_back(col);
  }
  const double n = base.geometry.n_cols;
  rep.rms_before = std::sqrt(sb / n);
  rep.rms_after = std::sqrt(sa2 / n);
  rep.within_1lsb = within / n;
  return rep;
}

AdcInl adc_static_inl(const MacroConfig& base, int gamma, int instances, int points_per_lsb) {
  if (instances < 1 || points_per_lsb < 1) throw UsageError("instances and points_per_lsb must be >= 1");
  AdcConfig ac = base.adc;
  ac.gamma = gamma;
  ac.validate();
  const auto& p = base.electrical;
  const int levels = 1 << ac.r_out;
  const double lsb = code_step(p, ac);
  const double span = 1.25 * (levels / 2 + 1) * lsb;
  const double dx = lsb / points_per_lsb;
  const int n_pts = static_cast<int>(std::ceil(2 * span / dx));

  AdcInl res;
  res.gamma = gamma;
  double mean_acc = 0;
  for (int inst = 0; inst < instances; ++inst) {
    NonidealityConfig nc = base.noise;
    nc.seed = stream_key({base.noise.seed, 0x1ad0ULL, static_cast<std::uint64_t>(inst)});
    const LadderTable lt = ladder_levels(gamma, p, nc);
    const SenseAmp sa{};
    auto code_at = [&](double dv) {
      return convert_structural(p.v_ddl + dv, AbnParams{}, CalUnit{}, ac, p, lt, sa, nc, nullptr).code;
    };
    // Coarse ramp, then bisection of every crossing down to ~1e-6 LSB.
    std::vector<double> trans(levels, std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> hit(levels, false);
    int prev = code_at(-span);
    hit[prev] = true;
    for (int i = 1; i <= n_pts; ++i) {
      const double hi_v = -span + i * dx;
      const int code = code_at(hi_v);
      hit[code] = true;
      for (int c = prev + 1; c <= code; ++c) {
        double lo = hi_v - dx, hi = hi_v;
        for (int it = 0; it < 24; ++it) {
          const double mid = 0.5 * (lo + hi);
          (code_at(mid) >= c ? hi : lo) = mid;
        }
        trans[c] = 0.5 * (lo + hi);
      }
      prev = std::max(prev, code);
    }
    std::vector<double> cx, ty;
    for (int c = 1; c < levels; ++c)
      if (!std::isnan(trans[c])) cx.push_back(c), ty.push_back(trans[c]);
    const int n = static_cast<int>(cx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) sx += cx[i], sy += ty[i], sxx += cx[i] * cx[i], sxy += cx[i] * ty[i];
    const double den = n * sxx - sx * sx;
    const double slope = den != 0 ? (n * sxy - sx * sy) / den : lsb;
    const double icept = n > 0 ? (sy - slope * sx) / n : 0.0;
    double m = 0, pk = 0;
    for (int i = 0; i < n; ++i) {
      const double e = std::abs(ty[i] - (icept + slope * cx[i])) / slope;
      m += e;
      pk = std::max(pk, e);
    }
    mean_acc += n > 0 ? m / n : 0.0;
    res.peak = std::max(res.peak, pk);
    res.missing_codes = std::max(res.missing_codes,
                                 static_cast<int>(std::count(hit.begin(), hit.end(), false)));
  }
  res.mean = mean_acc / instances;
  return res;
}

// --- noise spec ----------------------------------------------------------------

void HwNoiseSpec::validate() const {
  if (gammas.size() != rms_lsb.size()) throw ConfigError("noise spec: gamma/rms size mismatch");
  for (std::size_t i = 0; i < rms_lsb.size(); ++i) {
    if (rms_lsb[i] < 0) throw ConfigError("noise spec: negative rms");
    if (i > 0 && (gammas[i] <= gammas[i - 1] || rms_lsb[i] < rms_lsb[i - 1]))
      throw ConfigError("noise spec: gamma curve must be increasing in gamma and non-decreasing in rms");
  }
  if (settling_inl_lsb < 0 || injection_bound_lsb < 0 || sa_residual_sigma_lsb < 0)
    throw ConfigError("noise spec: negative field");
}

HwNoiseSpec make_noise_spec(const std::vector<TransferSummary>& rms, const CalibrationReport& cal,
                            const MacroConfig& base) {
  HwNoiseSpec s;
  auto sorted = rms;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.gamma < b.gamma; });
  double run = 0;
  for (const auto& r : sorted) {
    run = std::max(run, r.max_rms);  // running max keeps the curve monotone
    s.gammas.push_back(r.gamma);
    s.rms_lsb.push_back(run);
  }
  const auto& nc = base.noise;
  if (nc.settling) s.settling_inl_lsb = nc.settling_e_max * std::exp(-nc.t_dp / nc.tau(false)) / kLsb8;
  if (nc.injection) s.injection_bound_lsb = nc.injection_bound / kLsb8;
  s.sa_residual_sigma_lsb = cal.rms_after;
  s.validate();
  return s;
}

void write_noise_spec(std::ostream& os, const HwNoiseSpec& spec) {
  spec.validate();
  std::ostringstream ss;
  ss.precision(9);
  ss << "field,gamma,value\n";
  for (std::size_t i = 0; i < spec.gammas.size(); ++i)
    ss << "output_rms_lsb," << spec.gammas[i] << ',' << spec.rms_lsb[i] << '\n';
  ss << "settling_inl_lsb,," << spec.settling_inl_lsb << '\n';
  ss << "injection_bound_lsb,," << spec.injection_bound_lsb << '\n';
  ss << "sa_residual_sigma_lsb,," << spec.sa_residual_sigma_lsb << '\n';
  os << ss.str();
}

HwNoiseSpec read_noise_spec(std::istream& is) {
  HwNoiseSpec s;
  std::string line;
  bool header = false;
  bool seen[3] = {false, false, false};
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "field,gamma,value") throw LoadError("noise spec: bad header '" + line + "'");
      header = true;
      continue;
    }
    const auto a = line.find(','), b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos) throw LoadError("noise spec: bad row '" + line + "'");
    const std::string field = line.substr(0, a), g = line.substr(a + 1, b - a - 1);
    double v;
    try {
      v = std::stod(line.substr(b + 1));
    } catch (const std::exception&) {
      throw LoadError("noise spec: bad value in '" + line + "'");
    }
    if (field == "output_rms_lsb") {
      s.gammas.push_back(std::stoi(g));
      s.rms_lsb.push_back(v);
    } else if (field == "settling_inl_lsb") {
      s.settling_inl_lsb = v, seen[0] = true;
    } else if (field == "injection_bound_lsb") {
      s.injection_bound_lsb = v, seen[1] = true;
    } else if (field == "sa_residual_sigma_lsb") {
      s.sa_residual_sigma_lsb = v, seen[2] = true;
    } else {
      throw LoadError("noise spec: unknown field '" + field + "'");
    }
  }
  if (!header || !seen[0] || !seen[1] || !seen[2]) throw LoadError("noise spec: missing fields");
  s.validate();
  return s;
}

}  // namespace cimsim
