// cimsim command-line front end.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cimsim/characterize.hpp"
#include "cimsim/config.hpp"
#include "cimsim/dataflow.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/model_runtime.hpp"
#include "cimsim/rng.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace cimsim;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kUnmappable = 3 };

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string num(std::int64_t v) { return std::to_string(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }
std::string num(bool v) { return v ? "1" : "0"; }

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  int group_col = -1;  // plot-data inserts a block break when this column changes

  template <class... T>
  void add(const T&... v) { rows.push_back({num(v)...}); }
  void add_row(std::vector<std::string> r) { rows.push_back(std::move(r)); }
};

struct Globals {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 0;
  std::string corner;
  std::string vdd;
  std::string topology;
  std::string emit = "csv";
  std::string out = ".";
  std::string mode;
};

struct Context {
  Settings s;
  std::string command;
  std::uint64_t hash = 0;
  int jobs = 1;
  std::string emit;
  fs::path out;

  std::string provenance() const {
    char h[32];
    std::snprintf(h, sizeof h, "%016llx", static_cast<unsigned long long>(hash));
    std::ostringstream os;
    os << "# cimsim " << CIMSIM_VERSION << "\n"
       << "# command: " << command << "\n"
       << "# seed: " << s.macro.noise.seed << "\n"
       << "# config_hash: " << h << "\n";
    return os.str();
  }

  fs::path write(const Table& t) const {
    fs::create_directories(out);
    const bool plot = emit == "plot-data";
    const fs::path path = out / (t.name + (plot ? ".dat" : ".csv"));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << provenance();
    const char sep = plot ? ' ' : ',';
    if (plot) f << "# ";
    for (std::size_t i = 0; i < t.columns.size(); ++i) f << (i ? std::string(1, sep) : "") << t.columns[i];
    f << "\n";
    const std::string* last = nullptr;
    for (const auto& r : t.rows) {
      if (plot && t.group_col >= 0) {
        if (last && *last != r[t.group_col]) f << "\n\n";
        last = &r[t.group_col];
      }
      for (std::size_t i = 0; i < r.size(); ++i) f << (i ? std::string(1, sep) : "") << r[i];
      f << "\n";
    }
    if (!f) throw std::runtime_error("write failed: " + path.string());
    return path;
  }
};

int default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n ? static_cast<int>(n) : 1;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Config file < environment < --set < dedicated flags.
Context make_context(const Globals& g, const std::string& command,
                     const std::vector<std::pair<std::string, std::string>>& flag_keys) {
  Config c;
  if (!g.config_path.empty()) c.parse_file(g.config_path);
  c.apply_env(environ);
  for (const auto& a : g.sets) c.apply_override(a);
  if (g.seed_given) c.set("noise.seed", std::to_string(g.seed));
  if (!g.corner.empty()) c.set("noise.corner", g.corner);
  if (!g.topology.empty()) c.set("macro.topology", g.topology);
  if (!g.mode.empty()) c.set("pipeline.mode", g.mode);
  if (!g.vdd.empty()) {
    const auto p = g.vdd.find_first_of("/,");
    if (p == std::string::npos) throw UsageError("--vdd expects LOW/HIGH, e.g. 0.4/0.8");
    c.set("electrical.v_ddl", g.vdd.substr(0, p));
    c.set("electrical.v_ddh", g.vdd.substr(p + 1));
  }
  for (const auto& [k, v] : flag_keys) c.set(k, v);

  Context ctx;
  ctx.s = resolve(c);
  ctx.command = command;
  ctx.hash = fnv1a64(dump_settings(ctx.s));
  ctx.jobs = g.jobs > 0 ? g.jobs : default_jobs();
  ctx.emit = g.emit;
  ctx.out = g.out;
  ctx.s.macro.jobs = ctx.jobs;
  ctx.s.characterize.jobs = ctx.jobs;
  return ctx;
}

void report(const fs::path& p) { std::cout << "wrote " << p.string() << "\n"; }

// ---------------------------------------------------------------- characterize

struct CharacterizeArgs {
  std::vector<int> gammas;
  int iters = 0;
  int fill_step = 0;
  int cal_samples = 200;
  int inl_instances = 8;
};

int cmd_characterize(const Globals& g, const CharacterizeArgs& a) {
  std::vector<std::pair<std::string, std::string>> keys;
  if (!a.gammas.empty()) keys.emplace_back("characterize.gammas", join_ints(a.gammas));
  if (a.iters > 0) keys.emplace_back("characterize.iters", std::to_string(a.iters));
  if (a.fill_step > 0) keys.emplace_back("characterize.fill_step", std::to_string(a.fill_step));
  Context ctx = make_context(g, "characterize", keys);
  const auto& base = ctx.s.macro;

  const TransferTable tt = characterize_transfer(base, ctx.s.characterize);
  Table transfer{"transfer", {"gamma", "fill", "ideal_code", "mean_code", "inl_lsb", "rms_lsb"}, {}, 0};
  for (const auto& p : tt.points) transfer.add(p.gamma, p.fill, p.ideal_code, p.mean_code, p.inl, p.rms);
  report(ctx.write(transfer));

  Table rms{"rms", {"gamma", "slope", "mean_inl_lsb", "peak_inl_lsb", "peak_fill", "max_rms_lsb", "extrapolated"}, {}};
  for (const auto& s : tt.summary)
    rms.add(s.gamma, s.slope, s.mean_inl, s.peak_inl, s.peak_fill, s.max_rms, s.extrapolated);
  report(ctx.write(rms));

  Table inl{"adc_inl", {"gamma", "mean_inl_lsb", "peak_inl_lsb", "missing_codes"}, {}};
  for (int gm : ctx.s.characterize.gammas) {
    const AdcInl r = adc_static_inl(base, gm, a.inl_instances);
    inl.add(r.gamma, r.mean, r.peak, r.missing_codes);
  }
  report(ctx.write(inl));

  const CalibrationReport cal = characterize_calibration(base, a.cal_samples);
  Table calt{"calibration", {"col", "offset_v", "before_lsb8", "after_lsb8", "out_of_range"}, {}};
  for (const auto& c : cal.columns) calt.add(c.col, c.offset, c.before, c.after, c.out_of_range);
  report(ctx.write(calt));

  const HwNoiseSpec spec = make_noise_spec(tt.summary, cal, base);
  fs::create_directories(ctx.out);
  const fs::path sp = ctx.out / "noise_spec.csv";
  {
    std::ofstream f(sp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + sp.string());
    f << ctx.provenance();
    write_noise_spec(f, spec);
  }
  report(sp);

  std::cout << ctx.provenance();
  for (const auto& s : tt.summary)
    std::cout << "gamma " << s.gamma << ": max rms " << num(s.max_rms) << " LSB, mean INL "
              << num(s.mean_inl) << " LSB" << (s.extrapolated ? " (extrapolated)" : "") << "\n";
  std::cout << "calibration: " << num(cal.rms_before) << " -> " << num(cal.rms_after) << " LSB8 rms, "
            << num(100 * cal.within_1lsb) << "% within 1 LSB8, " << cal.flagged << " flagged\n";
  return kOk;
}

// ------------------------------------------------------------------- sim-layer

struct SimLayerArgs {
  int gamma = 0;
  int h = 0;
  int w = 0;
  bool dump_output = false;
};

Tensor random_image(const LayerConfig& l, int h, int w, std::uint64_t seed) {
  Tensor t{h, w, l.c_in, {}};
  t.data.resize(static_cast<std::size_t>(h) * w * l.c_in);
  RngStream rng(seed, stream_key({0x696d616765ULL}));
  const std::int64_t lo = l.signed_in ? -(std::int64_t{1} << (l.r_in - 1)) : 0;
  const std::int64_t hi = l.signed_in ? (std::int64_t{1} << (l.r_in - 1)) - 1 : (std::int64_t{1} << l.r_in) - 1;
  for (auto& v : t.data) v = static_cast<std::int32_t>(rng.uniform_int(lo, hi));
  return t;
}

int cmd_sim_layer(const Globals& g, const SimLayerArgs& a) {
  std::vector<std::pair<std::string, std::string>> keys;
  if (a.gamma > 0) keys.emplace_back("layer.gamma", std::to_string(a.gamma));
  if (a.h > 0) keys.emplace_back("image.h", std::to_string(a.h));
  if (a.w > 0) keys.emplace_back("image.w", std::to_string(a.w));
  Context ctx = make_context(g, "sim-layer", keys);
  LayerConfig l = ctx.s.layer;
  if (l.name.empty()) l.name = "layer";
  const int h = l.kind == LayerKind::Fc ? 1 : ctx.s.image_h;
  const int w = l.kind == LayerKind::Fc ? 1 : ctx.s.image_w;

  MacroConfig mc = layer_macro_config(l, ctx.s.macro);
  Macro macro(mc);
  const std::uint64_t seed = mc.noise.seed;
  RngStream wr(seed, stream_key({0x77656967687473ULL}));
  std::vector<std::uint8_t> weights(static_cast<std::size_t>(l.rows()) * l.c_out);
  for (auto& v : weights) v = static_cast<std::uint8_t>(wr.uniform_int(0, (1 << l.r_w) - 1));
  macro.load_weights(weights, l.rows(), l.c_out);
  std::vector<int> beta = l.beta;
  beta.resize(l.c_out, 0);
  macro.set_beta(beta);
  if (mc.noise.sa_offset && mc.noise.calibrate) macro.calibrate();

  const Tensor image = random_image(l, h, w, seed);
  const LayerReport r = simulate_layer(l, image, ctx.s.pipe, macro, stream_key({seed, 1}));

  Table rep{"layer_report", {"metric", "value"}, {}};
  rep.add_row({"layer", l.name});
  rep.add_row({"mode", to_string(ctx.s.pipe.mode)});
  rep.add_row({"regime", to_string(r.per_output.regime)});
  rep.add_row({"t_in", num(r.per_output.t_in)});
  rep.add_row({"t_out", num(r.per_output.t_out)});
  rep.add_row({"n_in", num(r.per_output.n_in)});
  rep.add_row({"n_out", num(r.per_output.n_out)});
  rep.add_row({"cycles", num(r.cycles)});
  rep.add_row({"closed_form_cycles", num(r.closed_form)});
  rep.add_row({"macro_ops", num(r.macro_ops)});
  rep.add_row({"fetch_transfers", num(r.fetch_transfers)});
  rep.add_row({"store_transfers", num(r.store_transfers)});
  rep.add_row({"saturated", num(r.saturated)});
  rep.add_row({"rows_per_op", num(r.rows_per_op)});
  rep.add_row({"ops", num(r.ops())});
  rep.add_row({"energy_j", num(r.energy.total())});
  rep.add_row({"energy_per_op_j", num(r.energy_per_op())});
  rep.add_row({"latency_s", num(static_cast<double>(r.cycles) / ctx.s.pipe.clock_hz)});
  rep.add_row({"extrapolated", num(r.extrapolated)});
  report(ctx.write(rep));

  Table en{"layer_energy", {"category", "joules", "events"}, {}};
  for (int c = 0; c < kEnergyCategories; ++c) {
    const auto cat = static_cast<EnergyCategory>(c);
    en.add_row({to_string(cat), num(r.energy.get(cat)), num(r.energy.events(cat))});
  }
  report(ctx.write(en));

  if (a.dump_output) {
    Table out{"layer_output", {"y", "x", "c", "code"}, {}, 0};
    for (int y = 0; y < r.output.h; ++y)
      for (int x = 0; x < r.output.w; ++x)
        for (int c = 0; c < r.output.c; ++c) out.add(y, x, c, r.output.at(y, x, c));
    report(ctx.write(out));
  }

  std::cout << ctx.provenance() << l.name << ": " << r.cycles << " cycles (closed form " << r.closed_form
            << "), " << to_string(r.per_output.regime) << ", " << num(r.energy_per_op() * 1e15)
            << " fJ/op\n";
  return kOk;
}

// --------------------------------------------------------------------- run-net

struct RunNetArgs {
  std::string bundle;
  std::string reference;
  std::string images;
  int random = 16;
  std::string save_bundle;
  std::string save_images;
  bool no_oracle = false;
};

int cmd_run_net(const Globals& g, const RunNetArgs& a) {
  Context ctx = make_context(g, "run-net", {});
  if (a.bundle.empty() == a.reference.empty()) throw UsageError("run-net needs exactly one of --bundle or --reference");
  const std::uint64_t seed = ctx.s.macro.noise.seed;
  const ModelBundle b = a.bundle.empty() ? reference_bundle(a.reference, seed) : load_bundle(a.bundle);
  b.validate();
  if (!a.save_bundle.empty()) save_bundle(a.save_bundle, b);

  ImageSet set;
  if (!a.images.empty()) {
    std::ifstream f(a.images);
    if (!f) throw LoadError("cannot open " + a.images);
    set = read_images_csv(f, b.input_h, b.input_w, b.input_c);
  } else {
    if (a.random < 1) throw UsageError("--random must be at least 1");
    set = random_images(b, a.random, stream_key({seed, 0x696d67ULL}));
  }
  if (!a.save_images.empty()) {
    std::ofstream f(a.save_images, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + a.save_images);
    write_images_csv(f, set);
  }

  plan_mapping(b, ctx.s.macro.geometry);
  RunOptions opt;
  opt.macro = ctx.s.macro;
  opt.pipe = ctx.s.pipe;
  opt.with_oracle = !a.no_oracle;
  opt.jobs = ctx.jobs;
  const NetworkResult r = run_network(b, set.images, set.labels, opt);

  Table pred{"predictions", {"image", "label", "prediction", "oracle_prediction"}, {}};
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    const std::string label = i < set.labels.size() ? num(set.labels[i]) : "";
    const std::string oracle = i < r.oracle_predictions.size() ? num(r.oracle_predictions[i]) : "";
    pred.add_row({num(static_cast<std::uint64_t>(i)), label, num(r.predictions[i]), oracle});
  }
  report(ctx.write(pred));

  Table layers{"layers", {"layer", "cycles", "macro_ops", "saturated", "energy_j"}, {}};
  for (const auto& s : r.layers)
    layers.add_row({s.name, num(s.cycles), num(s.macro_ops), num(s.saturated), num(s.energy.total())});
  report(ctx.write(layers));

  std::size_t agree = 0;
  for (std::size_t i = 0; i < r.oracle_predictions.size(); ++i) agree += r.oracle_predictions[i] == r.predictions[i];
  std::cout << ctx.provenance() << r.predictions.size() << " images";
  if (r.accuracy >= 0) std::cout << ", accuracy " << num(r.accuracy);
  if (r.oracle_accuracy >= 0) std::cout << ", oracle accuracy " << num(r.oracle_accuracy);
  if (!r.oracle_predictions.empty()) std::cout << ", oracle agreement " << agree << "/" << r.predictions.size();
  std::cout << (r.extrapolated ? " (extrapolated noise)" : "") << "\n";
  return kOk;
}

// ----------------------------------------------------------------------- sweep

struct SweepArgs {
  std::vector<std::string> kinds;
  std::vector<double> loads_ff{40, 80, 160, 320};
  std::vector<double> offchip_bw{8, 16, 32, 64, 128, 0};
};

void sweep_alpha(const Context& ctx) {
  const auto& p = ctx.s.macro.electrical;
  const auto& geo = ctx.s.macro.geometry;
  const double base = alpha_eff(p, geo, DplTopology::baseline(geo));
  Table t{"alpha", {"units", "rows", "alpha_baseline", "alpha_serial", "alpha_parallel", "ratio_serial", "ratio_parallel"}, {}};
  for (int u = 1; u <= geo.units_per_col; ++u) {
    const double s = alpha_eff(p, geo, DplTopology::serial(u));
    const double q = alpha_eff(p, geo, DplTopology::parallel(u));
    t.add(u, u * geo.rows_per_unit, base, s, q, s / base, q / base);
  }
  report(ctx.write(t));
}

// Drive energy with every row of a 3x3 filter over `channels` inputs switching.
void sweep_dp_energy(const Context& ctx, const SweepArgs& a) {
  const auto& geo = ctx.s.macro.geometry;
  Table t{"dp_energy", {"load_ff", "channels", "rows", "units", "baseline_j", "serial_j", "parallel_j",
                        "saving_serial", "saving_parallel"}, {}, 0};
  for (double cl : a.loads_ff) {
    ElectricalParams p = ctx.s.macro.electrical;
    p.c_adc = cl * 1e-15 - p.c_mb;
    if (p.c_adc <= 0) throw UsageError("--load below C_mb");
    for (int ch = 4; ch * 9 <= geo.n_rows; ch *= 2) {
      const int rows = 9 * ch;
      const int units = (rows + geo.rows_per_unit - 1) / geo.rows_per_unit;
      const double eb = dp_drive_energy(p, geo, DplTopology::baseline(geo), rows);
      const double es = dp_drive_energy(p, geo, DplTopology::serial(units), rows);
      const double ep = dp_drive_energy(p, geo, DplTopology::parallel(units), rows);
      t.add(cl, ch, rows, units, eb, es, ep, 1 - es / eb, 1 - ep / eb);
    }
  }
  report(ctx.write(t));
}

void sweep_layer_energy(const Context& ctx) {
  Table t{"layer_energy", {"c_in", "c_out", "cycles", "regime", "energy_j", "energy_per_op_j"}, {}};
  for (int c_in = 4; c_in <= 128; c_in *= 2) {
    LayerConfig l = ctx.s.layer;
    l.kind = LayerKind::Conv;
    l.kernel = 3;
    l.c_in = c_in;
    l.beta.clear();
    l.validate();
    const MacroConfig mc = layer_macro_config(l, ctx.s.macro);
    const EnergyLedger e = estimate_layer_energy(l, ctx.s.pipe, mc, ctx.s.image_h, ctx.s.image_w);
    const double ops = 2.0 * l.taps() * l.c_in * l.c_out * l.out_h(ctx.s.image_h) * l.out_w(ctx.s.image_w);
    t.add_row({num(c_in), num(l.c_out), num(closed_form_cycles(l, ctx.s.pipe, ctx.s.image_h, ctx.s.image_w)),
               to_string(cycles_per_output(l, ctx.s.pipe).regime), num(e.total()), num(e.total() / ops)});
  }
  report(ctx.write(t));
}

void sweep_dram(const Context& ctx, const SweepArgs& a) {
  Table t{"dram", {"offchip_bw", "weight_bits", "spill_bits", "transfer_cycles", "compute_cycles",
                   "cycle_ratio", "dram_j", "compute_j", "energy_ratio"}, {}};
  const auto net = reference_cnn();
  for (double bw : a.offchip_bw) {
    const DramEstimate d = dram_overlay_estimate(net, 32, 32, bw, ctx.s.pipe, ctx.s.macro);
    t.add_row({bw > 0 ? num(bw) : "unlimited", num(d.weight_bits), num(d.spill_bits), num(d.transfer_cycles),
               num(d.compute_cycles), num(d.cycle_ratio), num(d.dram_energy), num(d.compute_energy),
               num(d.energy_ratio)});
  }
  report(ctx.write(t));
}

void sweep_clustering(const Context& ctx) {
  const auto pts = characterize_clustering(ctx.s.macro, {1, 2, 4, 8, 16, 32}, {1, 2, 4, 9, 18, 36},
                                           std::max(1, ctx.s.characterize.iters / 10), ctx.jobs);
  Table t{"clustering", {"connected_units", "run_length", "mean_abs_error_lsb"}, {}, 0};
  for (const auto& p : pts) t.add(p.connected_units, p.run_length, p.mean_abs_error);
  report(ctx.write(t));
}

int cmd_sweep(const Globals& g, const SweepArgs& a) {
  Context ctx = make_context(g, "sweep", {});
  std::vector<std::string> kinds = a.kinds;
  if (kinds.empty()) kinds = {"alpha", "dp-energy", "layer-energy", "dram"};
  for (const auto& k : kinds) {
    if (k == "alpha") sweep_alpha(ctx);
    else if (k == "dp-energy") sweep_dp_energy(ctx, a);
    else if (k == "layer-energy") sweep_layer_energy(ctx);
    else if (k == "dram") sweep_dram(ctx, a);
    else if (k == "clustering") sweep_clustering(ctx);
    else throw UsageError("unknown sweep kind '" + k + "'");
  }
  return kOk;
}

// ------------------------------------------------------------------- calibrate

struct CalibrateArgs {
  int samples = 200;
};

int cmd_calibrate(const Globals& g, const CalibrateArgs& a) {
  Context ctx = make_context(g, "calibrate", {});
  MacroConfig mc = ctx.s.macro;
  mc.noise.calibrate = true;
  Macro m(mc);
  m.calibrate();
  fs::create_directories(ctx.out);
  const fs::path cp = ctx.out / "calibration.txt";
  {
    std::ofstream f(cp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + cp.string());
    write_calibration(f, m.calibration());
  }
  report(cp);

  const CalibrationReport cal = characterize_calibration(mc, a.samples);
  Table t{"calibration_report", {"col", "offset_v", "before_lsb8", "after_lsb8", "out_of_range"}, {}};
  for (const auto& c : cal.columns) t.add(c.col, c.offset, c.before, c.after, c.out_of_range);
  report(ctx.write(t));
  std::cout << ctx.provenance() << "offset rms " << num(cal.rms_before) << " -> " << num(cal.rms_after)
            << " LSB8, " << num(100 * cal.within_1lsb) << "% within 1 LSB8, " << cal.flagged
            << " flagged\n";
  return kOk;
}

int cmd_config(const Globals& g) {
  Context ctx = make_context(g, "config", {});
  std::cout << ctx.provenance() << dump_settings(ctx.s);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Charge-domain compute-in-memory macro simulator"};
  app.set_version_flag("--version", std::string(CIMSIM_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Sectioned key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", g.sets, "Override section.key=value (repeatable)");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { g.seed = s; g.seed_given = true; }, "Noise seed");
  app.add_option("--jobs,-j", g.jobs, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
  app.add_option("--corner", g.corner, "Process corner")->check(CLI::IsMember({"SS", "TT", "FF"}, CLI::ignore_case));
  app.add_option("--vdd", g.vdd, "Supplies as LOW/HIGH volts, e.g. 0.4/0.8");
  app.add_option("--topology", g.topology, "DPL split")->check(CLI::IsMember({"baseline", "serial", "parallel"}));
  app.add_option("--mode", g.mode, "Dataflow mode")->check(CLI::IsMember({"serial", "pipelined"}));
  app.add_option("--emit", g.emit, "Table format")->check(CLI::IsMember({"csv", "plot-data"}));
  app.add_option("--out,-o", g.out, "Output directory");

  CharacterizeArgs ca;
  auto* ch = app.add_subcommand("characterize", "Transfer, RMS, INL and calibration sweeps; writes the noise spec");
  ch->add_option("--gamma", ca.gammas, "ADC gains")->delimiter(',');
  ch->add_option("--iters", ca.iters, "Noise iterations per point")->check(CLI::PositiveNumber);
  ch->add_option("--fill-step", ca.fill_step, "Rows added per sweep point")->check(CLI::PositiveNumber);
  ch->add_option("--cal-samples", ca.cal_samples, "Samples per column for calibration residuals")->check(CLI::PositiveNumber);
  ch->add_option("--inl-instances", ca.inl_instances, "Ladder mismatch instances for static INL")->check(CLI::PositiveNumber);

  SimLayerArgs sa;
  auto* sl = app.add_subcommand("sim-layer", "Simulate the [layer] section on a random image");
  sl->add_option("--gamma", sa.gamma, "ADC gain")->check(CLI::PositiveNumber);
  sl->add_option("--height", sa.h, "Input height")->check(CLI::PositiveNumber);
  sl->add_option("--width", sa.w, "Input width")->check(CLI::PositiveNumber);
  sl->add_flag("--dump-output", sa.dump_output, "Also write the output codes");

  RunNetArgs ra;
  auto* rn = app.add_subcommand("run-net", "Run a model bundle over images");
  rn->add_option("--bundle", ra.bundle, "Model bundle file")->check(CLI::ExistingFile);
  rn->add_option("--reference", ra.reference, "Built-in network")->check(CLI::IsMember({"mlp", "cnn"}));
  rn->add_option("--images", ra.images, "Image CSV (label,v0,v1,...)")->check(CLI::ExistingFile);
  rn->add_option("--random", ra.random, "Random images when --images is absent");
  rn->add_option("--save-bundle", ra.save_bundle, "Write the bundle used");
  rn->add_option("--save-images", ra.save_images, "Write the images used");
  rn->add_flag("--no-oracle", ra.no_oracle, "Skip the ideal-mode reference run");

  SweepArgs wa;
  auto* sw = app.add_subcommand("sweep", "Design-space sweeps");
  sw->add_option("--kind", wa.kinds, "alpha, dp-energy, layer-energy, dram, clustering")->delimiter(',');
  sw->add_option("--load-ff", wa.loads_ff, "DPL loads for dp-energy, fF")->delimiter(',');
  sw->add_option("--offchip-bw", wa.offchip_bw, "Off-chip bits per cycle for dram (0 = unlimited)")->delimiter(',');

  CalibrateArgs ka;
  auto* cb = app.add_subcommand("calibrate", "Offset calibration of every column");
  cb->add_option("--samples", ka.samples, "Samples per column for residuals")->check(CLI::PositiveNumber);

  auto* cf = app.add_subcommand("config", "Print the resolved configuration");

  if (argc <= 1) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*ch) return cmd_characterize(g, ca);
    if (*sl) return cmd_sim_layer(g, sa);
    if (*rn) return cmd_run_net(g, ra);
    if (*sw) return cmd_sweep(g, wa);
    if (*cb) return cmd_calibrate(g, ka);
    if (*cf) return cmd_config(g);
  } catch (const UnmappableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnmappable;
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnmappable;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const LoadError& e) {
    std::cerr << "load error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
