#include "cimsim/macro_engine.hpp"

#include <algorithm>
#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>

#include "cimsim/charge_core.hpp"
#include "cimsim/errors.hpp"
#include "parallel.hpp"

namespace cimsim {

namespace mp = boost::multiprecision;
using Q = mp::cpp_rational;

void MacroConfig::validate() const {
  geometry.validate();
  electrical.validate();
  topology.validate(geometry);
  adc.validate();
  if (r_in < 1 || r_in > 8) throw ConfigError("r_in must be in [1, 8]");
  if (r_w < 1 || r_w > 4) throw ConfigError("r_w must be in [1, 4]");
  if (r_w > geometry.cols_per_block) throw ConfigError("r_w exceeds the columns of a block");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

int MacroConfig::output_column(int o) const {
  const int opb = outputs_per_block();
  return (o / opb) * geometry.cols_per_block + (o % opb) * r_w;
}

namespace {

void check_inputs(std::span<const std::uint32_t> inputs, const MacroConfig& cfg) {
  if (static_cast<int>(inputs.size()) > cfg.rows())
    throw ConfigError("input vector longer than the rows of the connected DP units");
  const std::uint32_t lim = 1u << cfg.r_in;
  for (auto x : inputs)
    if (x >= lim) throw UsageError("input value does not fit r_in bits");
}

Q floor_q(const Q& q) {
  mp::cpp_int n = mp::numerator(q), d = mp::denominator(q);
  mp::cpp_int f = n / d;
  if (n < 0 && f * d != n) f -= 1;
  return Q(f);
}

OracleResult oracle_impl(std::span<const std::uint32_t> inputs, std::span<const std::uint8_t> weights,
                         int n_outputs, std::span<const int> beta, const MacroConfig& cfg) {
  const auto& p = cfg.electrical;
  const auto topo = cfg.topology.normalized(cfg.geometry);
  const int r_in = cfg.r_in, r_w = cfg.r_w, r_out = cfg.adc.r_out;
  const Q cc(p.c_c), cpu(p.c_p_per_unit), glob(p.c_p_glob), cmb(p.c_mb), cadc(p.c_adc),
      cacc(p.c_acc), vddl(p.v_ddl), vddh(p.v_ddh);
  Q cp = cpu * topo.connected_units;
  if (topo.variant != DplVariant::SerialSplit) cp += glob;
  const Q cl = cmb + cadc;
  const Q alpha = cc / (cc * dp_rows(cfg.geometry, topo) + cp + cl);
  const Q a = cl / (cacc + cl);
  const Q half = Q(mp::cpp_int(1) << (r_out - 1));
  const Q lsb = Q(32) * cc / cadc * vddh / half;
  const Q gain = Q(cfg.adc.gamma) / lsb;

  // Coefficient of the signed sum of bit-plane k on column bit b.
  std::vector<Q> ck(r_in);
  if (r_in == 1) {
    ck[0] = alpha * vddl;
  } else {
    Q pw = 1;
    for (int k = r_in - 1; k >= 0; --k) {
      ck[k] = a * pw * alpha * vddl;
      pw *= (1 - a);
    }
  }
  std::vector<Q> wb(r_w);
  for (int b = 0; b < r_w; ++b) wb[b] = Q(1) / Q(mp::cpp_int(1) << (r_w - b));
  wb[0] *= 2 * cl / (cl + cacc);  // self-weighting share with C_acc
  std::vector<Q> coef(static_cast<std::size_t>(r_in) * r_w);
  for (int k = 0; k < r_in; ++k)
    for (int b = 0; b < r_w; ++b) coef[k * r_w + b] = gain * wb[b] * ck[k];

  const Q beta_step(kBetaStep), eps(kTieEpsilon);
  const Q top = 2 * half;
  const int n_rows = static_cast<int>(inputs.size());

  OracleResult out;
  out.codes.resize(n_outputs);
  out.saturated.resize(n_outputs);
  out.argument.resize(n_outputs);
  out.deviation.resize(n_outputs);
  std::vector<long> s(static_cast<std::size_t>(r_in) * r_w);
  for (int o = 0; o < n_outputs; ++o) {
    std::fill(s.begin(), s.end(), 0L);
    for (int i = 0; i < n_rows; ++i) {
      const std::uint32_t x = inputs[i];
      if (!x) continue;
      const unsigned u = weights[static_cast<std::size_t>(i) * n_outputs + o];
      for (int k = 0; k < r_in; ++k) {
        if (!((x >> k) & 1)) continue;
        for (int b = 0; b < r_w; ++b) s[k * r_w + b] += ((u >> b) & 1) ? 1 : -1;
      }
    }
    Q arg = half + gain * ((beta.empty() ? 0 : beta[o]) * beta_step + eps);
    for (std::size_t j = 0; j < s.size(); ++j)
      if (s[j]) arg += coef[j] * s[j];
    const bool sat = arg < 0 || arg >= top;
    Q code = floor_q(arg);
    if (code < 0) code = 0;
    if (code > top - 1) code = top - 1;
    out.codes[o] = static_cast<int>(mp::numerator(code));
    out.saturated[o] = sat ? 1 : 0;
    out.argument[o] = static_cast<double>(arg);
    out.deviation[o] = static_cast<double>(Q(arg - half));
  }
  return out;
}

}  // namespace

OracleResult integer_oracle(const CimCycleInput& in, const MacroConfig& cfg) {
  cfg.validate();
  check_inputs(in.inputs, cfg);
  if (in.n_outputs > cfg.n_outputs()) throw ConfigError("more outputs than the macro provides");
  if (in.weights.size() < in.inputs.size() * in.n_outputs)
    throw UsageError("weight matrix smaller than rows x outputs");
  if (!in.beta.empty() && static_cast<int>(in.beta.size()) != in.n_outputs)
    throw UsageError("beta size must equal n_outputs");
  return oracle_impl(in.inputs, in.weights, in.n_outputs, in.beta, cfg);
}

// --- Macro -------------------------------------------------------------------

Macro::Macro(MacroConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto& g = cfg_.geometry;
  const auto& nc = cfg_.noise;
  plane_ = WeightPlane(g.n_rows, g.n_cols);
  sa_.resize(g.n_cols);
  c_acc_.resize(g.n_cols);
  for (int c = 0; c < g.n_cols; ++c) {
    sa_[c] = make_sense_amp(nc, c, cfg_.electrical.v_ddh);
    c_acc_[c] = cfg_.electrical.c_acc * (1.0 + acc_imbalance(nc.seed, c, nc.cap_imbalance_sigma));
  }
  cal_.assign(g.n_cols, CalUnit{});
  ladder_ = ladder_levels(cfg_.adc.gamma, cfg_.electrical, nc);
  if (!cfg_.injection_map.empty())
    inj_ = InjectionErrorModel::load_grid_file(cfg_.injection_map);
  else
    inj_ = InjectionErrorModel::analytic(nc.injection_bound, nc.injection_slope_in,
                                         nc.injection_slope_acc, cfg_.electrical.v_ddl);
  if (nc.sa_offset && nc.calibrate) calibrate();
}

void Macro::load_weights(std::span<const std::uint8_t> weights, int n_rows, int n_outputs) {
  if (n_rows > cfg_.rows()) throw ConfigError("weight rows exceed the connected DP units");
  if (n_outputs > cfg_.n_outputs()) throw ConfigError("more outputs than the macro provides");
  if (weights.size() != static_cast<std::size_t>(n_rows) * n_outputs)
    throw UsageError("weight matrix size != rows x outputs");
  const unsigned lim = 1u << cfg_.r_w;
  plane_ = WeightPlane(cfg_.geometry.n_rows, cfg_.geometry.n_cols);
  for (int i = 0; i < n_rows; ++i)
    for (int o = 0; o < n_outputs; ++o) {
      const unsigned u = weights[static_cast<std::size_t>(i) * n_outputs + o];
      if (u >= lim) throw UsageError("weight value does not fit r_w bits");
      const int col = cfg_.output_column(o);
      for (int b = 0; b < cfg_.r_w; ++b) plane_.set(i, col + b, (u >> b) & 1);
    }
  weights_.assign(weights.begin(), weights.end());
  n_rows_ = n_rows;
  n_outputs_ = n_outputs;
  if (static_cast<int>(beta_.size()) != n_outputs) beta_.assign(n_outputs, 0);
}

void Macro::set_beta(std::vector<int> beta) {
  if (static_cast<int>(beta.size()) != n_outputs_) throw UsageError("beta size must equal the loaded outputs");
  for (int b : beta) AbnParams{b}.validate();
  beta_ = std::move(beta);
}

void Macro::calibrate() {
  for (int c = 0; c < cfg_.geometry.n_cols; ++c) {
    RngStream rng(cfg_.noise.seed, stream_key({0xca1ULL, static_cast<std::uint64_t>(c)}));
    cal_[c] = cimsim::calibrate(sa_[c], cfg_.noise, &rng);
  }
}

void Macro::set_calibration(std::vector<CalUnit> cal) {
  if (static_cast<int>(cal.size()) != cfg_.geometry.n_cols)
    throw UsageError("calibration snapshot size != columns");
  cal_ = std::move(cal);
}

Macro::Prepared Macro::prepare(std::span<const std::uint32_t> inputs, bool with_oracle) const {
  check_inputs(inputs, cfg_);
  if (static_cast<int>(inputs.size()) > n_rows_ && n_rows_ > 0) {
    for (std::size_t i = n_rows_; i < inputs.size(); ++i)
      if (inputs[i]) throw ConfigError("input drives a row without loaded weights");
  }
  const auto& p = cfg_.electrical;
  const auto& g = cfg_.geometry;
  const auto topo = cfg_.topology.normalized(g);
  const double alpha = alpha_eff(p, g, topo);
  const int rows = cfg_.rows();
  const int n_cols_used = n_outputs_ == 0 ? 0 : cfg_.output_column(n_outputs_ - 1) + cfg_.r_w;

  Prepared prep;
  prep.n_active.assign(cfg_.r_in, 0);
  prep.sum.assign(cfg_.r_in, std::vector<double>(n_cols_used, 0.0));
  prep.settle.assign(cfg_.r_in, std::vector<double>(n_cols_used, 0.0));
  const bool settling = cfg_.noise.settling && topo.variant != DplVariant::Baseline;
  std::vector<int> active;
  std::vector<std::int8_t> prod;
  for (int k = 0; k < cfg_.r_in; ++k) {
    active.clear();
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if ((inputs[i] >> k) & 1) active.push_back(static_cast<int>(i));
    prep.n_active[k] = static_cast<int>(active.size());
    if (active.empty()) continue;
    for (int c = 0; c < n_cols_used; ++c) {
      double s = 0.0;
      for (int i : active) {
        const double m = 1.0 + cell_mismatch(cfg_.noise.seed, i, c, cfg_.noise.cc_mismatch_sigma);
        s += plane_.sign(i, c) * m;
      }
      prep.sum[k][c] = s;
      if (settling) {
        prod.assign(rows, 0);
        for (int i : active) prod[i] = static_cast<std::int8_t>(plane_.sign(i, c));
        const double target = p.v_ddl * (1.0 + alpha * s);
        prep.settle[k][c] = settling_error(prod, target, p, g, topo, cfg_.noise);
      }
    }
  }
  if (with_oracle) {
    std::vector<std::uint32_t> in(inputs.begin(), inputs.end());
    in.resize(n_rows_, 0);
    prep.oracle = oracle_impl(in, weights_, n_outputs_, beta_, cfg_);
  }
  return prep;
}

TraceReport Macro::run(const Prepared& prep, std::uint64_t cycle_key) const {
  const auto& p = cfg_.electrical;
  const auto& g = cfg_.geometry;
  const auto& nc = cfg_.noise;
  const auto& ep = cfg_.energy;
  const auto topo = cfg_.topology.normalized(g);
  const double alpha = alpha_eff(p, g, topo);
  const double c_dpl = dpl_capacitance(p, g, topo);
  const int r_in = cfg_.r_in, r_w = cfg_.r_w;
  const int n_cols_used = prep.sum.empty() ? 0 : static_cast<int>(prep.sum[0].size());

  TraceReport tr;
  tr.v_dp.assign(r_in, std::vector<double>(n_cols_used, p.v_ddl));
  if (r_in > 1) tr.v_acc.assign(r_in, std::vector<double>(n_cols_used, p.v_ddl));
  tr.v_mbiw.assign(n_outputs_, 0.0);
  tr.codes.assign(n_outputs_, 0);
  tr.saturated.assign(n_outputs_, 0);
  tr.cal_out_of_range.assign(n_outputs_, 0);
  tr.residues.assign(n_outputs_, {});
  tr.common_mode = std::ldexp(p.v_ddl, -r_w);
  tr.extrapolated = cfg_.adc.extrapolated();
  std::vector<EnergyLedger> ledgers(n_outputs_);

  detail::parallel_for(n_outputs_, cfg_.jobs, [&](int o) {
    const int col0 = cfg_.output_column(o);
    std::vector<RngStream> rng;
    rng.reserve(r_w);
    for (int b = 0; b < r_w; ++b)
      rng.emplace_back(nc.seed, stream_key({cycle_key, static_cast<std::uint64_t>(col0 + b)}));
    MbiwState s = mbiw_begin(p, r_in, r_w, std::span(c_acc_).subspan(col0, r_w));
    EnergyLedger& led = ledgers[o];
    std::vector<double> v(r_w);
    const double v2 = p.v_ddl * p.v_ddl;
    for (int k = 0; k < r_in; ++k) {
      const int n_on = prep.n_active[k];
      for (int b = 0; b < r_w; ++b) {
        const int c = col0 + b;
        const double ideal = p.v_ddl * (1.0 + alpha * prep.sum[k][c]) + prep.settle[k][c];
        v[b] = dp_finish(ideal, n_on, alpha, c_dpl, p, nc, &rng[b]);
        tr.v_dp[k][c] = v[b];
        led.add(EnergyCategory::DpDrive,
                n_on * (p.c_c * v2 * (1.0 - alpha * n_on) + p.c_in_wire_per_cell * v2));
        led.add(EnergyCategory::DplPrecharge, c_dpl * p.v_ddl * std::abs(v[b] - p.v_ddl));
      }
      mbiw_load_dp(s, v);
      if (r_in > 1) {
        accumulate_input_bit(s, p, nc, &inj_);
        led.add(EnergyCategory::ChargeShare, ep.charge_share * r_w, r_w);
        for (int b = 0; b < r_w; ++b) tr.v_acc[k][col0 + b] = s.v_acc[b];
      }
    }
    const auto wa = accumulate_weights(s, p);
    led.add(EnergyCategory::ChargeShare, ep.charge_share * r_w, r_w);
    tr.v_mbiw[o] = wa.v_mbiw;

    const int msb = col0 + r_w - 1;
    const AbnParams abn{beta_[o]};
    Conversion conv;
    if (cfg_.structural_adc)
      conv = convert_structural(wa.v_mbiw, abn, cal_[msb], cfg_.adc, p, ladder_, sa_[msb], nc,
                                &rng[r_w - 1]);
    else
      conv = convert_behavioral(wa.v_mbiw, abn, cal_[msb], cfg_.adc, p);
    tr.codes[o] = conv.code;
    tr.saturated[o] = conv.saturated ? 1 : 0;
    tr.cal_out_of_range[o] = cal_[msb].out_of_range ? 1 : 0;
    tr.residues[o] = std::move(conv.residues);
    led.add(EnergyCategory::SaDecision, ep.sa_decision * cfg_.adc.r_out, cfg_.adc.r_out);
    led.add(EnergyCategory::RegisterUpdate, ep.register_bit * cfg_.adc.r_out, cfg_.adc.r_out);
  });
  for (const auto& l : ledgers) tr.energy.merge(l);
  if (n_outputs_ > 0)
    tr.energy.add(EnergyCategory::LadderDc, ep.ladder_current * ep.ladder_settle * p.v_ddh);
  if (!prep.oracle.codes.empty()) {
    tr.oracle_codes = prep.oracle.codes;
    tr.oracle_saturated = prep.oracle.saturated;
  }
  return tr;
}

TraceReport Macro::run(std::span<const std::uint32_t> inputs, std::uint64_t cycle_key) const {
  return run(prepare(inputs, cfg_.noise.any_enabled()), cycle_key);
}

TraceReport run_cycle(const CimCycleInput& in, const MacroConfig& cfg, std::uint64_t cycle_key) {
  Macro m(cfg);
  m.load_weights(in.weights, static_cast<int>(in.inputs.size()), in.n_outputs);
  if (!in.beta.empty()) m.set_beta(in.beta);
  return m.run(m.prepare(in.inputs, true), cycle_key);
}

}  // namespace cimsim
