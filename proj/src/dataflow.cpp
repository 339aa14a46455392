#include "cimsim/dataflow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "cimsim/errors.hpp"

namespace cimsim {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

int sub_block_rows() { return MacroGeometry{}.rows_per_unit; }

}  // namespace

const char* to_string(LayerKind k) { return k == LayerKind::Conv ? "conv" : "fc"; }
const char* to_string(PipeMode m) { return m == PipeMode::Serial ? "serial" : "pipelined"; }
const char* to_string(Regime r) {
  return r == Regime::InputDominated ? "input-dominated" : "output-dominated";
}

void LayerConfig::validate() const {
  const std::string who = name.empty() ? std::string("layer") : "layer '" + name + "'";
  if (c_out < 1) throw ConfigError(who + ": C_out must be positive");
  if (r_in < 1 || r_in > 8) throw ConfigError(who + ": r_in must be in [1, 8]");
  if (r_w < 1 || r_w > 4) throw ConfigError(who + ": r_w must be in [1, 4]");
  if (r_out < 1 || r_out > 8) throw ConfigError(who + ": r_out must be in [1, 8]");
  if (!gamma_supported(gamma)) throw ConfigError(who + ": gamma must be one of 1, 2, 4, 8, 16, 32");
  if (kind == LayerKind::Conv) {
    if (c_in < 4 || c_in % 4 != 0) throw ConfigError(who + ": conv C_in must be a positive multiple of 4");
    if (kernel != 1 && kernel != 3) throw ConfigError(who + ": conv kernel must be 1x1 or 3x3");
    if (stride < 1) throw ConfigError(who + ": stride must be >= 1");
    if (padding < 0) throw ConfigError(who + ": padding must be >= 0");
  } else if (c_in < 1) {
    throw ConfigError(who + ": fc C_in must be positive");
  }
  if (!beta.empty() && static_cast<int>(beta.size()) != c_out)
    throw ConfigError(who + ": beta needs one code per output channel");
  for (int b : beta)
    if (b < kBetaMin || b > kBetaMax) throw ConfigError(who + ": beta code outside [-15, 15]");
}

int LayerConfig::out_h(int h) const {
  if (kind == LayerKind::Fc) return h > 0 ? 1 : 0;
  const int span = h + 2 * padding - kernel;
  return h <= 0 || span < 0 ? 0 : span / stride + 1;
}

int LayerConfig::out_w(int w) const { return out_h(w); }

int filter_row(const LayerConfig& l, int tap, int channel) {
  if (l.kind == LayerKind::Fc) return channel;
  return (channel / 4) * 4 * l.taps() + tap * 4 + channel % 4;
}

void PipelineConfig::validate() const {
  if (n_cim < 1) throw ConfigError("N_cim must be >= 1");
  if (bw < 1) throw ConfigError("BW must be >= 1");
  if (!(clock_hz > 0)) throw ConfigError("clock must be positive");
}

int stall_cycles(const LayerConfig& l, const PipelineConfig& pipe) {
  l.validate();
  pipe.validate();
  return 1 + pipe.n_cim + static_cast<int>(ceil_div(static_cast<std::int64_t>(l.r_out) * l.c_out, pipe.bw));
}

CyclesPerOutput cycles_per_output(const LayerConfig& l, const PipelineConfig& pipe) {
  l.validate();
  pipe.validate();
  CyclesPerOutput c;
  c.t_in = static_cast<int>(ceil_div(l.kernel_bits(), pipe.bw));
  c.t_out = static_cast<int>(ceil_div(static_cast<std::int64_t>(l.r_out) * l.c_out, pipe.bw));
  c.n_in = pipe.n_cim - 1 + c.t_in;
  c.n_out = pipe.n_cim + c.t_out - 1;
  c.cycles = std::max(c.n_in, c.n_out);
  c.regime = c.n_in >= c.n_out ? Regime::InputDominated : Regime::OutputDominated;
  c.row_start = l.taps() * (pipe.mode == PipeMode::Pipelined ? c.n_in : c.t_in);
  return c;
}

std::uint64_t closed_form_cycles(const LayerConfig& l, const PipelineConfig& pipe, int h, int w) {
  const auto c = cycles_per_output(l, pipe);
  const std::uint64_t ho = l.out_h(h), wo = l.out_w(w);
  const std::uint64_t n = ho * wo;
  if (n == 0) return 0;
  if (pipe.mode == PipeMode::Serial) {
    const std::uint64_t stall = stall_cycles(l, pipe);
    return ho * c.row_start + (n - ho) * c.t_in + n * stall;
  }
  const std::uint64_t row = std::max(pipe.n_cim - 1 + c.row_start, c.n_out);
  return c.row_start + (ho - 1) * row + (n - ho) * c.cycles + pipe.n_cim + c.t_out;
}

Timeline simulate_timeline(const LayerConfig& l, const PipelineConfig& pipe, int h, int w,
                           bool keep_events) {
  const auto c = cycles_per_output(l, pipe);
  const int wo = l.out_w(w);
  const int n = l.out_h(h) * wo;
  Timeline tl;
  if (n == 0) return tl;
  const bool serial = pipe.mode == PipeMode::Serial;
  constexpr std::int64_t kUnset = -1;
  std::vector<std::int64_t> f_s(n, kUnset), f_e(n, kUnset), m_s(n, kUnset), m_e(n, kUnset),
      s_s(n, kUnset), s_e(n, kUnset);
  auto emit = [&](std::int64_t t, EventKind k, int p) {
    if (keep_events) tl.events.push_back({static_cast<std::uint64_t>(t), k, p});
  };
  int fp = 0, mp = 0, sp = 0;
  for (std::int64_t t = 0; sp < n; ++t) {
    // Ends first, so same-cycle starts see them.
    if (sp > 0 && s_e[sp - 1] == t) emit(t, EventKind::StoreEnd, sp - 1);
    if (mp > 0 && m_e[mp - 1] == t) emit(t, EventKind::MacroCommit, mp - 1);
    if (fp > 0 && f_e[fp - 1] == t) emit(t, EventKind::FetchEnd, fp - 1);
    if (fp > 0 && f_s[fp - 1] + 1 == t) emit(t, EventKind::ShiftWrite, fp - 1);

    if (sp < n && sp < mp && t >= m_e[sp] && (sp == 0 || t >= s_e[sp - 1])) {
      s_s[sp] = t;
      s_e[sp] = t + c.t_out;
      emit(t, EventKind::StoreStart, sp);
      ++sp;
    }
    if (mp < n && mp < fp && f_e[mp] != kUnset) {
      bool ok;
      if (serial) {
        ok = t >= f_e[mp] + 1;
      } else {
        // Output registers free once the previous store is in its last cycle.
        ok = t >= f_e[mp] && (mp == 0 || (t >= m_e[mp - 1] && s_s[mp - 1] != kUnset && t >= s_e[mp - 1] - 1));
      }
      if (ok) {
        m_s[mp] = t;
        m_e[mp] = t + pipe.n_cim;
        tl.macro_busy += pipe.n_cim;
        emit(t, EventKind::MacroStart, mp);
        ++mp;
      }
    }
    if (fp < n) {
      bool ok;
      if (fp == 0) {
        ok = true;
      } else if (serial) {
        ok = sp > fp - 1 && t >= s_e[fp - 1];
      } else {
        // The shift register holds during the previous op; the first word of
        // the next kernel latches at the edge that ends it.
        ok = t >= f_e[fp - 1] && mp > fp - 1 && t + 1 >= m_e[fp - 1];
      }
      if (ok) {
        const int len = fp % wo == 0 ? c.row_start : c.t_in;
        f_s[fp] = t;
        f_e[fp] = t + len;
        emit(t, EventKind::FetchStart, fp);
        ++fp;
      }
    }
  }
  tl.cycles = static_cast<std::uint64_t>(s_e[n - 1]);
  emit(s_e[n - 1], EventKind::StoreEnd, n - 1);
  return tl;
}

// --- LMEM tensors ------------------------------------------------------------

std::vector<std::uint8_t> pack_lmem(const Tensor& t, int r) {
  if (r < 1 || r > 32) throw UsageError("pack_lmem: precision out of range");
  std::vector<std::uint8_t> out((t.bits(r) + 7) / 8, 0);
  std::size_t bit = 0;
  for (std::int32_t v : t.data) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < r; ++b, ++bit)
      if ((u >> b) & 1u) out[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
  }
  return out;
}

Tensor unpack_lmem(const std::vector<std::uint8_t>& bytes, int h, int w, int c, int r, bool is_signed) {
  Tensor t{h, w, c, {}};
  const std::size_t n = static_cast<std::size_t>(h) * w * c;
  if (bytes.size() * 8 < n * r) throw LoadError("LMEM image shorter than its shape");
  t.data.resize(n);
  std::size_t bit = 0;
  for (auto& v : t.data) {
    std::uint32_t u = 0;
    for (int b = 0; b < r; ++b, ++bit) u |= static_cast<std::uint32_t>((bytes[bit / 8] >> (bit % 8)) & 1u) << b;
    v = static_cast<std::int32_t>(u);
    if (is_signed && r < 32 && ((u >> (r - 1)) & 1u)) v -= static_cast<std::int32_t>(1u << r);
  }
  return t;
}

// --- im2col -----------------------------------------------------------------

namespace {

void check_image(const LayerConfig& l, const Tensor& img) {
  if (l.kind == LayerKind::Fc) {
    if (img.h * img.w * img.c != 0 && (img.h != 1 || img.w != 1))
      throw UsageError("fc input must be a 1x1 map; flatten it first");
  }
  if (img.h * img.w != 0 && img.c != l.c_in)
    throw UsageError("image channels " + std::to_string(img.c) + " != layer C_in " + std::to_string(l.c_in));
  if (img.data.size() != static_cast<std::size_t>(img.h) * img.w * img.c)
    throw UsageError("image data size does not match its shape");
  const std::int64_t lo = l.signed_in ? -(std::int64_t{1} << (l.r_in - 1)) : 0;
  const std::int64_t hi = l.signed_in ? (std::int64_t{1} << (l.r_in - 1)) : (std::int64_t{1} << l.r_in);
  for (auto v : img.data)
    if (v < lo || v >= hi) throw UsageError("image value does not fit r_in bits");
}

std::uint32_t to_offset(const LayerConfig& l, std::int32_t v) {
  return static_cast<std::uint32_t>(l.signed_in ? v + (1 << (l.r_in - 1)) : v);
}

}  // namespace

TransferPlan im2col_schedule(const LayerConfig& l, const Tensor& image, const PipelineConfig& pipe) {
  l.validate();
  pipe.validate();
  check_image(l, image);
  TransferPlan plan;
  plan.kernel_bits = l.kernel_bits();
  plan.h_out = l.out_h(image.h);
  plan.w_out = l.out_w(image.w);
  const int n = plan.h_out * plan.w_out;
  const int k = l.kind == LayerKind::Fc ? 1 : l.kernel;
  const int taps = l.taps();
  const std::uint32_t zero = to_offset(l, 0);

  plan.patches.assign(n, std::vector<std::uint32_t>(l.rows(), zero));
  std::vector<int> zero_taps(n, 0);
  for (int p = 0; p < n; ++p) {
    const int oy = p / plan.w_out, ox = p % plan.w_out;
    for (int t = 0; t < taps; ++t) {
      const int iy = oy * l.stride - (l.kind == LayerKind::Fc ? 0 : l.padding) + t / k;
      const int ix = ox * l.stride - (l.kind == LayerKind::Fc ? 0 : l.padding) + t % k;
      if (iy < 0 || iy >= image.h || ix < 0 || ix >= image.w) {
        ++zero_taps[p];
        continue;
      }
      for (int c = 0; c < l.c_in; ++c) plan.patches[p][filter_row(l, t, c)] = to_offset(l, image.at(iy, ix, c));
    }
  }

  // Kernel bit j = (tap * C_in + c) * r_in + b.
  auto masks = [&](int bit_lo, int bit_hi, Fetch& f) {
    for (int e = bit_lo / l.r_in; e <= (bit_hi - 1) / l.r_in; ++e) {
      const int t = e / l.c_in, c = e % l.c_in;
      f.ch_mask |= 1u << (filter_row(l, t, c) / sub_block_rows());
      f.cs_k_mask |= static_cast<std::uint8_t>(1u << (t % k));
    }
  };
  if (plan.kernel_bits <= pipe.bw) {
    plan.kernels_per_transfer = pipe.bw / plan.kernel_bits;
    plan.transfers_per_kernel = 1;
    for (int oy = 0; oy < plan.h_out; ++oy)
      for (int ox = 0; ox < plan.w_out; ox += plan.kernels_per_transfer) {
        Fetch f;
        f.position = oy * plan.w_out + ox;
        f.kernels = std::min(plan.kernels_per_transfer, plan.w_out - ox);
        f.bits = f.kernels * plan.kernel_bits;
        masks(0, plan.kernel_bits, f);
        for (int i = 0; i < f.kernels; ++i) f.zero_taps += zero_taps[f.position + i];
        plan.fetches.push_back(f);
      }
  } else {
    plan.transfers_per_kernel = static_cast<int>(ceil_div(plan.kernel_bits, pipe.bw));
    for (int p = 0; p < n; ++p)
      for (int j = 0; j < plan.transfers_per_kernel; ++j) {
        Fetch f;
        f.position = p;
        f.part = j;
        const int lo = j * pipe.bw, hi = std::min(plan.kernel_bits, lo + pipe.bw);
        f.bits = hi - lo;
        masks(lo, hi, f);
        if (j == 0) f.zero_taps = zero_taps[p];
        plan.fetches.push_back(f);
      }
  }
  return plan;
}

// --- layer simulation --------------------------------------------------------

double LayerReport::ops() const {
  return 2.0 * static_cast<double>(macro_ops) * static_cast<double>(rows_per_op) * output.c;
}

MacroConfig layer_macro_config(const LayerConfig& l, const MacroConfig& base) {
  l.validate();
  MacroConfig cfg = base;
  cfg.r_in = l.r_in;
  cfg.r_w = l.r_w;
  cfg.adc.r_out = l.r_out;
  cfg.adc.gamma = l.gamma;
  const int units = static_cast<int>(std::clamp<std::int64_t>(
      ceil_div(l.rows(), base.geometry.rows_per_unit), 1, base.geometry.units_per_col));
  switch (base.topology.variant) {
    case DplVariant::Baseline: cfg.topology = DplTopology::baseline(base.geometry); break;
    case DplVariant::SerialSplit: cfg.topology = DplTopology::serial(units); break;
    case DplVariant::ParallelSplit: cfg.topology = DplTopology::parallel(units); break;
  }
  cfg.validate();
  if (l.rows() > cfg.rows()) throw UnmappableError("filter rows exceed the macro");
  if (l.c_out > cfg.n_outputs()) throw UnmappableError("C_out exceeds the macro columns");
  return cfg;
}

LayerReport simulate_layer(const LayerConfig& l, const Tensor& image, const PipelineConfig& pipe,
                           const Macro& macro, std::uint64_t key) {
  l.validate();
  pipe.validate();
  const auto& mc = macro.config();
  if (mc.r_in != l.r_in || mc.r_w != l.r_w || mc.adc.r_out != l.r_out || mc.adc.gamma != l.gamma)
    throw ConfigError("macro precisions do not match the layer");
  if (static_cast<int>(macro.beta().size()) != l.c_out)
    throw ConfigError("macro holds " + std::to_string(macro.beta().size()) + " outputs, layer needs " +
                      std::to_string(l.c_out));
  if (l.rows() > mc.rows()) throw ConfigError("layer rows exceed the connected DP units");

  const std::size_t in_bits = image.bits(l.r_in);
  if (in_bits > kLmemBits)
    throw CapacityError("input map needs " + std::to_string((in_bits + 7) / 8) + " bytes, LMEM holds " +
                            std::to_string(kLmemBits / 8),
                        in_bits, kLmemBits);
  const std::size_t out_bits =
      static_cast<std::size_t>(l.out_h(image.h)) * l.out_w(image.w) * l.c_out * l.r_out;
  if (out_bits > kLmemBits)
    throw CapacityError("output map needs " + std::to_string((out_bits + 7) / 8) + " bytes, LMEM holds " +
                            std::to_string(kLmemBits / 8),
                        out_bits, kLmemBits);

  const TransferPlan plan = im2col_schedule(l, image, pipe);
  const Timeline tl = simulate_timeline(l, pipe, image.h, image.w, true);
  const auto& ep = mc.energy;

  LayerReport rep;
  rep.per_output = cycles_per_output(l, pipe);
  rep.closed_form = closed_form_cycles(l, pipe, image.h, image.w);
  rep.cycles = tl.cycles;
  rep.rows_per_op = l.rows();
  rep.extrapolated = mc.adc.extrapolated();
  rep.output = Tensor{plan.h_out, plan.w_out, l.c_out, {}};
  rep.output.data.assign(static_cast<std::size_t>(plan.h_out) * plan.w_out * l.c_out, 0);

  for (const auto& f : plan.fetches) {
    rep.energy.add(EnergyCategory::LmemAccess, ep.lmem_access * f.bits / 128.0);
    rep.energy.add(EnergyCategory::RegisterUpdate, ep.shift_sub_block * std::popcount(f.ch_mask),
                   std::popcount(f.ch_mask));
  }
  rep.fetch_transfers = plan.fetches.size();

  // Walk the timeline; the macro samples the shift register at MacroStart and
  // the store reads the committed output registers.
  OutputRegisters regs(l.c_out);
  std::vector<std::int64_t> commit_time(plan.patches.size(), -1);
  int visible = -1;
  std::vector<int> staged;
  const int half_out = 1 << (l.r_out - 1);
  const std::int64_t out_chunk_bits = static_cast<std::int64_t>(l.r_out) * l.c_out;
  for (const Event& e : tl.events) {
    switch (e.kind) {
      case EventKind::ShiftWrite:
        if (e.position > 0 && commit_time[e.position - 1] < 0)
          throw SequencingError("shift register written while the macro still reads it");
        break;
      case EventKind::MacroStart: {
        const auto prep = macro.prepare(plan.patches[e.position], false);
        const auto tr = macro.run(prep, stream_key({key, static_cast<std::uint64_t>(e.position)}));
        for (int o = 0; o < l.c_out; ++o) {
          regs.stage(o, tr.codes[o]);
          rep.saturated += tr.saturated[o];
        }
        rep.energy.merge(tr.energy);
        ++rep.macro_ops;
        break;
      }
      case EventKind::MacroCommit:
        regs.commit();
        commit_time[e.position] = static_cast<std::int64_t>(e.time);
        visible = e.position;
        break;
      case EventKind::StoreEnd: {
        if (visible != e.position) throw SequencingError("output registers overwritten before the store finished");
        const int oy = e.position / plan.w_out, ox = e.position % plan.w_out;
        for (int o = 0; o < l.c_out; ++o) {
          const int code = regs.read(o);
          rep.output.at(oy, ox, o) = l.signed_out ? code - half_out : code;
        }
        for (std::int64_t b = 0; b < out_chunk_bits; b += pipe.bw) {
          const double bits = static_cast<double>(std::min<std::int64_t>(pipe.bw, out_chunk_bits - b));
          rep.energy.add(EnergyCategory::LmemAccess, ep.lmem_access * bits / 128.0);
          ++rep.store_transfers;
        }
        break;
      }
      default: break;
    }
  }
  const std::uint64_t idle = tl.cycles - tl.macro_busy;
  if (idle > 0) rep.energy.add(EnergyCategory::Leakage, ep.leakage_per_cycle * idle, idle);
  return rep;
}

std::vector<LayerConfig> layer_passes(const LayerConfig& l, const MacroGeometry& g) {
  l.validate();
  const int max_rows = g.rows_per_unit * g.units_per_col;
  int ch_chunk = l.kind == LayerKind::Fc ? max_rows : (max_rows / (4 * l.taps())) * 4;
  if (ch_chunk < (l.kind == LayerKind::Fc ? 1 : 4)) throw UnmappableError("a single filter group exceeds the macro rows");
  const int per_block = g.cols_per_block / l.r_w;
  const int out_chunk = g.n_blocks * per_block;
  std::vector<LayerConfig> passes;
  for (int c0 = 0; c0 < l.c_in; c0 += ch_chunk)
    for (int o0 = 0; o0 < l.c_out; o0 += out_chunk) {
      LayerConfig p = l;
      p.c_in = std::min(ch_chunk, l.c_in - c0);
      p.c_out = std::min(out_chunk, l.c_out - o0);
      if (!l.beta.empty()) p.beta.assign(l.beta.begin() + o0, l.beta.begin() + o0 + p.c_out);
      passes.push_back(std::move(p));
    }
  return passes;
}

EnergyLedger estimate_layer_energy(const LayerConfig& l, const PipelineConfig& pipe,
                                   const MacroConfig& base, int h, int w) {
  const MacroConfig cfg = layer_macro_config(l, base);
  const auto& p = cfg.electrical;
  const auto& ep = cfg.energy;
  const auto topo = cfg.topology.normalized(cfg.geometry);
  const double alpha = alpha_eff(p, cfg.geometry, topo);
  const double c_dpl = dpl_capacitance(p, cfg.geometry, topo);
  const auto c = cycles_per_output(l, pipe);
  const double n_pos = static_cast<double>(l.out_h(h)) * l.out_w(w);
  const double cols = static_cast<double>(l.c_out) * l.r_w;
  const double n_on = l.rows() / 2.0;
  const double v2 = p.v_ddl * p.v_ddl;

  EnergyLedger e;
  if (n_pos == 0) return e;
  const double planes = n_pos * l.r_in * cols;
  e.add(EnergyCategory::DpDrive, planes * n_on * (p.c_c * v2 * (1.0 - alpha * n_on) + p.c_in_wire_per_cell * v2));
  e.add(EnergyCategory::DplPrecharge, planes * c_dpl * p.v_ddl * alpha * p.v_ddl * std::sqrt(n_on));
  const double shares = n_pos * l.c_out * l.r_w * (l.r_in > 1 ? l.r_in + 1 : 1);
  e.add(EnergyCategory::ChargeShare, ep.charge_share * shares);
  e.add(EnergyCategory::SaDecision, ep.sa_decision * n_pos * l.c_out * l.r_out);
  e.add(EnergyCategory::LadderDc, ep.ladder_current * ep.ladder_settle * p.v_ddh * n_pos);
  e.add(EnergyCategory::RegisterUpdate,
        n_pos * (ep.register_bit * l.c_out * l.r_out +
                 ep.shift_sub_block * c.t_in * std::ceil(l.rows() / static_cast<double>(sub_block_rows()))));
  e.add(EnergyCategory::LmemAccess,
        ep.lmem_access * n_pos * (l.kernel_bits() + static_cast<double>(l.r_out) * l.c_out) / 128.0);
  const double cycles = static_cast<double>(closed_form_cycles(l, pipe, h, w));
  e.add(EnergyCategory::Leakage, ep.leakage_per_cycle * std::max(0.0, cycles - n_pos * pipe.n_cim));
  return e;
}

DramEstimate dram_overlay_estimate(const std::vector<LayerConfig>& net, int h, int w,
                                   double offchip_bw, const PipelineConfig& pipe,
                                   const MacroConfig& base) {
  DramEstimate d;
  int ch = h, cw = w;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& l = net[i];
    l.validate();
    const int lh = l.kind == LayerKind::Fc ? 1 : ch, lw = l.kind == LayerKind::Fc ? 1 : cw;
    d.weight_bits += static_cast<std::uint64_t>(l.rows()) * l.c_out * l.r_w;
    for (const auto& pass : layer_passes(l, base.geometry)) {
      d.compute_cycles += closed_form_cycles(pass, pipe, lh, lw);
      d.compute_energy += estimate_layer_energy(pass, pipe, base, lh, lw).total();
    }
    const int oh = l.out_h(lh), ow = l.out_w(lw);
    const std::uint64_t out_bits = static_cast<std::uint64_t>(oh) * ow * l.c_out * l.r_out;
    if (out_bits > kLmemBits) d.spill_bits += 2 * out_bits;
    ch = oh;
    cw = ow;
  }
  const double moved = static_cast<double>(d.weight_bits + d.spill_bits);
  if (offchip_bw > 0 && std::isfinite(offchip_bw))
    d.transfer_cycles = static_cast<std::uint64_t>(std::ceil(moved / offchip_bw));
  d.cycle_ratio = d.compute_cycles ? static_cast<double>(d.transfer_cycles) / d.compute_cycles : 0.0;
  d.dram_energy = d.transfer_cycles ? moved * base.energy.dram_per_bit : 0.0;
  d.energy_ratio = d.compute_energy > 0 ? d.dram_energy / d.compute_energy : 0.0;
  return d;
}

std::vector<LayerConfig> reference_cnn() {
  auto conv = [](std::string name, int c_in, int c_out, int stride, int r_in) {
    LayerConfig l;
    l.name = std::move(name);
    l.c_in = c_in;
    l.c_out = c_out;
    l.stride = stride;
    l.r_in = r_in;
    l.r_w = l.r_out = 4;
    return l;
  };
  std::vector<LayerConfig> net{
      conv("conv1", 4, 32, 1, 8),
      conv("conv2", 32, 32, 2, 4),
      conv("conv3", 32, 64, 2, 4),
      conv("conv4", 64, 64, 2, 4),
  };
  LayerConfig fc;
  fc.name = "fc";
  fc.kind = LayerKind::Fc;
  fc.c_in = 4 * 4 * 64;
  fc.c_out = 10;
  fc.r_in = fc.r_w = fc.r_out = 4;
  net.push_back(fc);
  return net;
}

}  // namespace cimsim
