// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the number of failures.
//
//   acceptance [--cli PATH] [--work DIR]
//
// With --cli, criterion 10 also runs the command-line tool at two --jobs values
// and compares every output file byte for byte.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cimsim/adc.hpp"
#include "cimsim/characterize.hpp"
#include "cimsim/charge_core.hpp"
#include "cimsim/dataflow.hpp"
#include "cimsim/macro_engine.hpp"
#include "cimsim/mbiw.hpp"
#include "cimsim/model_runtime.hpp"
#include "support.hpp"

using namespace cimsim;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr int kOracleInstances = 10000;
constexpr double kOracleSeconds = 60.0;
constexpr double kMbiwRel = 1e-12;
constexpr int kKtcSamples = 1000000;
constexpr double kKtcTarget = 2.4e-3;
constexpr double kKtcTol = 0.02;
constexpr double kSwingRatioMin = 10.0;
constexpr double kSwingRatioCalibrated = 20.0;
constexpr double kSwingRatioCalTol = 0.05;
constexpr double kSavingTarget = 0.72;
constexpr double kSavingTol = 0.10;
constexpr double kInlMeanLo = 0.55, kInlMeanHi = 1.65;
constexpr double kInlPeakMax = 4.5;
constexpr int kInlInstances = 16;
constexpr double kCalWithin = 0.90;
constexpr double kCalRatio = 5.0;
constexpr double kCalResidual = 0.47e-3;
constexpr int kCycleConfigs = 1000;
constexpr double kRmsLo = 0.26, kRmsHi = 0.78;

struct Result {
  bool pass;
  std::string detail;
};

int jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n ? static_cast<int>(n) : 1;
}

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

Result c1_oracle() {
  std::mt19937_64 g(20240101);
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0;
  std::size_t codes = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const auto c = testing::random_oracle_case(g);
    const TraceReport tr = run_cycle(c.in, c.cfg, static_cast<std::uint64_t>(i));
    const OracleResult o = integer_oracle(c.in, c.cfg);
    codes += o.codes.size();
    if (tr.codes != o.codes || tr.saturated != o.saturated) ++mismatches;
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {mismatches == 0 && s < kOracleSeconds,
          fmt("%d instances, %zu codes, %d mismatches, %.1f s", kOracleInstances, codes, mismatches, s)};
}

Result c2_mbiw() {
  const ElectricalParams p;
  const NonidealityConfig nc = NonidealityConfig::ideal();
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> v(0.0, p.v_ddh);
  double worst_in = 0, worst_w = 0;
  for (int trial = 0; trial < 200; ++trial) {
    for (int r_in = 1; r_in <= 8; ++r_in) {
      std::vector<double> vdp(r_in);
      for (auto& x : vdp) x = v(g);
      MbiwState s = mbiw_begin(p, r_in, 1);
      for (int k = 0; k < r_in; ++k) {
        mbiw_load_dp(s, std::span<const double>(&vdp[k], 1));
        if (r_in > 1) accumulate_input_bit(s, p, nc, nullptr);
      }
      const double step = r_in == 1 ? s.v_dpl[0] : s.v_acc[0];
      const double closed = r_in == 1 ? vdp[0] : input_accumulation_closed_form(vdp, alpha_mb(p, p.c_acc), p.v_ddl);
      worst_in = std::max(worst_in, std::abs(step - closed) / std::abs(closed));
    }
    for (int r_w = 1; r_w <= 4; ++r_w) {
      std::vector<double> cols(r_w);
      for (auto& x : cols) x = v(g);
      const WeightAccumulation wa = accumulate_weights(cols, r_w, 4, p);
      const double dev = wa.v_mbiw - p.v_ddl;
      const double closed = weight_accumulation_closed_form(cols, p.v_ddl);
      const double cm = wa.common_mode - std::ldexp(p.v_ddl, -r_w);
      worst_w = std::max({worst_w, std::abs(dev - closed) / std::max(std::abs(closed), 1e-3), std::abs(cm)});
    }
  }
  return {worst_in <= kMbiwRel && worst_w <= kMbiwRel,
          fmt("max rel error input %.2e, weight %.2e", worst_in, worst_w)};
}

Result c3_ktc() {
  const CapNode node{0.7e-15, 0.4};
  const NoiseSource src{NoiseKind::ThermalKTC, 300.0, 3};
  RngStream rng(11, 3);
  double sum = 0, sum2 = 0;
  for (int i = 0; i < kKtcSamples; ++i) {
    const double x = sample_noise(src, node, rng);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / kKtcSamples;
  const double sd = std::sqrt(sum2 / kKtcSamples - mean * mean);
  return {std::abs(sd / kKtcTarget - 1) <= kKtcTol,
          fmt("std %.4f mV over %d samples (analytic %.4f mV)", sd * 1e3, kKtcSamples,
              ktc_sigma(0.7e-15, 300) * 1e3)};
}

Result c4_swing() {
  const MacroGeometry g;
  const ElectricalParams p;
  const double base = alpha_eff(p, g, DplTopology::baseline(g));
  const double ratio = alpha_eff(p, g, DplTopology::serial(1)) / base;
  ElectricalParams cal = p;
  cal.c_p_per_unit = cp_per_unit_for_swing_ratio(kSwingRatioCalibrated, p, g);
  const double ratio_cal =
      alpha_eff(cal, g, DplTopology::serial(1)) / alpha_eff(cal, g, DplTopology::baseline(g));
  bool ordered = true;
  for (int c_in = 4; c_in * 9 <= g.n_rows; c_in += 4) {
    const int rows = 9 * c_in;
    const int units = (rows + g.rows_per_unit - 1) / g.rows_per_unit;
    const double s = max_swing(p, g, DplTopology::serial(units), rows);
    const double q = max_swing(p, g, DplTopology::parallel(units), rows);
    const double b = max_swing(p, g, DplTopology::baseline(g), rows);
    ordered = ordered && s >= q && q >= b;
  }
  return {ratio >= kSwingRatioMin && std::abs(ratio_cal / kSwingRatioCalibrated - 1) <= kSwingRatioCalTol && ordered,
          fmt("default ratio %.2fx; C_p = %.3f fF/unit gives %.2fx; serial>=parallel>=baseline at every C_in: %s",
              ratio, cal.c_p_per_unit * 1e15, ratio_cal, ordered ? "yes" : "no")};
}

double saving(double c_load, int channels) {
  const MacroGeometry g;
  ElectricalParams p;
  p.c_adc = c_load - p.c_mb;
  const int rows = 9 * channels;
  const int units = (rows + g.rows_per_unit - 1) / g.rows_per_unit;
  return 1 - dp_drive_energy(p, g, DplTopology::serial(units), rows) /
                 dp_drive_energy(p, g, DplTopology::baseline(g), rows);
}

Result c5_energy() {
  const double s40 = saving(40e-15, 64);
  bool monotone = true;
  double prev = s40;
  std::string trail = fmt("%.1f%%", 100 * s40);
  for (double cl = 50e-15; cl <= 400e-15; cl += 10e-15) {
    const double s = saving(cl, 64);
    monotone = monotone && s < prev;
    prev = s;
  }
  trail += fmt(" at 40 fF, %.1f%% at 400 fF", 100 * prev);
  return {std::abs(s40 - kSavingTarget) <= kSavingTol && monotone,
          "64 channels: " + trail + (monotone ? ", decreasing in C_L" : ", NOT monotone in C_L")};
}

Result c6_adc() {
  const ElectricalParams p;
  const NonidealityConfig ideal = NonidealityConfig::ideal();
  int mismatch = 0, nonmono = 0, points = 0;
  for (int r = 1; r <= 8; ++r) {
    const AdcConfig cfg{r, 1};
    const LadderTable lad = ladder_levels(1, p, ideal);
    const double half = std::ldexp(1.0, r - 1);
    const double lsb = code_step(p, cfg);
    int last_b = -1, last_s = -1;
    for (int c = -1; c <= (1 << r); ++c)
      for (double f : {0.125, 0.375, 0.5, 0.625, 0.875}) {
        const double v = p.v_ddl + (c - half + f) * lsb;
        const int b = convert_behavioral(v, {}, {}, cfg, p).code;
        const int s = convert_structural(v, {}, {}, cfg, p, lad, SenseAmp{}, ideal, nullptr).code;
        mismatch += b != s;
        nonmono += b < last_b || s < last_s;
        last_b = b;
        last_s = s;
        ++points;
      }
  }
  MacroConfig base;
  const AdcInl inl = adc_static_inl(base, 32, kInlInstances);
  const AdcInl inl1 = adc_static_inl(base, 1, kInlInstances);
  const AdcInl inl8 = adc_static_inl(base, 8, kInlInstances);

  // Pre-floor argument of the exact oracle doubles with gamma.
  MacroConfig oc;
  oc.noise = ideal;
  oc.r_in = 4;
  oc.r_w = 2;
  oc.topology = DplTopology::serial(1);
  std::mt19937_64 g(5);
  CimCycleInput in;
  in.inputs.resize(20);
  for (auto& x : in.inputs) x = static_cast<std::uint32_t>(g() % 16);
  in.n_outputs = 8;
  in.weights.resize(20 * 8);
  for (auto& w : in.weights) w = static_cast<std::uint8_t>(g() % 4);
  bool gain_exact = true;
  for (int gm = 1; gm < 32; gm *= 2) {
    oc.adc.gamma = gm;
    const auto a = integer_oracle(in, oc);
    oc.adc.gamma = 2 * gm;
    const auto b = integer_oracle(in, oc);
    for (int o = 0; o < in.n_outputs; ++o) gain_exact = gain_exact && b.deviation[o] == 2 * a.deviation[o];
    oc.adc.gamma = gm;
    gain_exact = gain_exact && code_step(p, {8, gm}) == 2 * code_step(p, {8, 2 * gm});
  }
  const bool ok = mismatch == 0 && nonmono == 0 && inl.mean >= kInlMeanLo && inl.mean <= kInlMeanHi &&
                  inl.peak <= kInlPeakMax && inl1.mean <= inl8.mean && inl8.mean <= inl.mean && gain_exact;
  return {ok, fmt("structural=behavioral on %d points (%d mismatches, %d non-monotone); INL mean %.2f/%.2f/%.2f LSB "
                  "at gamma 1/8/32, peak %.2f LSB at 32; gain x2 exact: %s",
                  points, mismatch, nonmono, inl1.mean, inl8.mean, inl.mean, inl.peak, gain_exact ? "yes" : "no")};
}

Result c7_calibration() {
  MacroConfig base;
  const CalibrationReport rep = characterize_calibration(base, 200);
  NonidealityConfig quiet = base.noise;
  quiet.sa_noise_sigma = 0;
  int in_range = 0;
  double worst = 0;
  for (int c = 0; c < base.geometry.n_cols; ++c) {
    const SenseAmp sa = make_sense_amp(quiet, c, base.electrical.v_ddh);
    const CalUnit cu = calibrate(sa, quiet, nullptr);
    if (cu.out_of_range) continue;
    ++in_range;
    worst = std::max(worst, std::abs(sa.offset + cu.delta_v()));
  }
  const double ratio = rep.rms_before / rep.rms_after;
  return {rep.within_1lsb >= kCalWithin && ratio >= kCalRatio && worst <= kCalResidual,
          fmt("%.1f%% within 1 LSB8, spatial rms %.2f -> %.2f LSB8 (%.1fx), worst residual %.3f mV over %d in-range columns",
              100 * rep.within_1lsb, rep.rms_before, rep.rms_after, ratio, worst * 1e3, in_range)};
}

Result c8_cycles() {
  std::mt19937_64 g(99);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); };
  int mismatches = 0;
  for (int i = 0; i < kCycleConfigs; ++i) {
    LayerConfig l;
    l.kind = uni(0, 4) ? LayerKind::Conv : LayerKind::Fc;
    l.kernel = uni(0, 3) ? 3 : 1;
    l.c_in = l.kind == LayerKind::Conv ? 4 * uni(1, 32) : uni(1, 1152);
    if (l.rows() > 1152) l.c_in = l.kind == LayerKind::Conv ? 4 * uni(1, 1152 / (4 * l.taps())) : 1152;
    l.c_out = uni(1, 256);
    l.r_in = uni(1, 8);
    l.r_out = uni(1, 8);
    l.stride = uni(1, 2);
    l.padding = l.kernel == 3 ? uni(0, 1) : 0;
    PipelineConfig pipe;
    pipe.mode = uni(0, 1) ? PipeMode::Pipelined : PipeMode::Serial;
    pipe.n_cim = uni(1, 4);
    pipe.bw = std::array{32, 64, 128, 256}[uni(0, 3)];
    const int h = l.kind == LayerKind::Fc ? 1 : uni(1, 12);
    const int w = l.kind == LayerKind::Fc ? 1 : uni(1, 12);
    mismatches += simulate_timeline(l, pipe, h, w).cycles != closed_form_cycles(l, pipe, h, w);
  }
  LayerConfig a;
  a.c_in = 16;
  a.r_in = 8;
  a.c_out = 64;
  a.r_out = 8;
  const CyclesPerOutput cp = cycles_per_output(a, PipelineConfig{});
  LayerConfig b = a;
  b.c_out = 256;
  const int stall = stall_cycles(b, PipelineConfig{PipeMode::Serial});
  const bool worked = cp.n_in == 9 && cp.n_out == 4 && cp.cycles == 9 && cp.regime == Regime::InputDominated && stall == 18;
  return {mismatches == 0 && worked, fmt("%d configs, %d mismatches; N_in=%d N_out=%d (%s) N_stall=%d", kCycleConfigs,
                                         mismatches, cp.n_in, cp.n_out, to_string(cp.regime), stall)};
}

Result c9_rms() {
  MacroConfig base;
  CharacterizeOptions opt;
  opt.jobs = jobs();
  const auto rows = characterize_rms(base, opt);
  bool monotone = true;
  std::string list;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) monotone = monotone && rows[i].max_rms >= rows[i - 1].max_rms;
    list += fmt("%s%d:%.2f", i ? " " : "", rows[i].gamma, rows[i].max_rms);
  }
  const double r1 = rows.front().max_rms;
  return {rows.front().gamma == 1 && monotone && r1 >= kRmsLo && r1 <= kRmsHi,
          "max rms (LSB) by gamma " + list + (monotone ? ", non-decreasing" : ", NOT monotone")};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

bool same_tree(const fs::path& a, const fs::path& b, int& files) {
  std::vector<fs::path> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename());
  std::size_t nb = std::distance(fs::directory_iterator(b), fs::directory_iterator{});
  if (names.size() != nb || names.empty()) return false;
  for (const auto& n : names) {
    if (slurp(a / n) != slurp(b / n)) return false;
    ++files;
  }
  return true;
}

std::string serialize(const TransferTable& t) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& p : t.points) os << p.gamma << ' ' << p.fill << ' ' << p.mean_code << ' ' << p.rms << ' ' << p.inl << '\n';
  return os.str();
}

std::string serialize(const NetworkResult& r) {
  std::ostringstream os;
  for (const auto& s : r.scores) {
    for (int v : s) os << v << ' ';
    os << '\n';
  }
  for (const auto& l : r.layers) os << l.cycles << ' ' << l.saturated << ' ' << l.energy.total() << '\n';
  return os.str();
}

Result c10_determinism(const std::string& cli, const fs::path& work) {
  MacroConfig base;
  CharacterizeOptions opt;
  opt.gammas = {1, 4, 32};
  opt.iters = 10;
  opt.fill_step = 8;
  opt.jobs = 1;
  const std::string t1 = serialize(characterize_transfer(base, opt));
  opt.jobs = std::max(2, jobs());
  const std::string tn = serialize(characterize_transfer(base, opt));
  const std::string t1b = serialize(characterize_transfer(base, CharacterizeOptions{opt.gammas, 10, 8, 128, 1}));

  const ModelBundle b = reference_bundle("cnn", 3);
  const ImageSet imgs = random_images(b, 12, 4);
  RunOptions ro;
  ro.jobs = 1;
  const std::string n1 = serialize(run_network(b, imgs.images, {}, ro));
  ro.jobs = std::max(2, jobs());
  const std::string nn = serialize(run_network(b, imgs.images, {}, ro));
  bool lib_ok = t1 == tn && t1 == t1b && n1 == nn;
  std::string detail = fmt("library: transfer sweep and network run identical across jobs: %s", lib_ok ? "yes" : "no");

  bool cli_ok = true;
  if (!cli.empty()) {
    int files = 0;
    const fs::path root = work / "acceptance_determinism";
    fs::remove_all(root);
    const std::string runs[] = {
        "characterize --gamma 1,8 --iters 6 --fill-step 16 --cal-samples 20 --inl-instances 2",
        "run-net --reference cnn --random 6",
        "sim-layer --height 6 --width 6 --dump-output",
        "sweep",
        "calibrate --samples 20",
    };
    int idx = 0;
    for (const auto& args : runs) {
      const fs::path a = root / fmt("r%d_j1", idx), bdir = root / fmt("r%d_jn", idx), c = root / fmt("r%d_j1b", idx);
      ++idx;
      auto run = [&](const fs::path& out, int j) {
        const std::string cmd = "\"" + cli + "\" " + args + " --seed 17 --jobs " + std::to_string(j) + " --out \"" +
                                out.string() + "\" > /dev/null";
        return std::system(cmd.c_str()) == 0;
      };
      cli_ok = cli_ok && run(a, 1) && run(bdir, 3) && run(c, 1) && same_tree(a, bdir, files) && same_tree(a, c, files);
    }
    detail += fmt("; cli: %d output files byte-identical across reruns and --jobs 1/3: %s", files, cli_ok ? "yes" : "no");
  }
  return {lib_ok && cli_ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  fs::path work = fs::temp_directory_path();
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string a = argv[i];
    if (a == "--cli") cli = argv[i + 1];
    else if (a == "--work") work = argv[i + 1];
  }
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
      {"oracle equivalence", c1_oracle},
      {"mbiw radix closed forms", c2_mbiw},
      {"kT/C noise", c3_ktc},
      {"swing adaptivity", c4_swing},
      {"DP energy savings", c5_energy},
      {"ADC", c6_adc},
      {"calibration", c7_calibration},
      {"cycle model", c8_cycles},
      {"RMS vs gamma", c9_rms},
      {"determinism", [&] { return c10_determinism(cli, work); }},
  };
  int failures = 0, n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Result r{false, ""};
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << n << ". " << name << ": " << r.detail << std::endl;
  }
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << (n - failures) << "/" << n << std::endl;
  return failures;
}
