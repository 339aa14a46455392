#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "cimsim/dp_array.hpp"
#include "cimsim/nonideality.hpp"
#include "cimsim/rng.hpp"

namespace cimsim {

/// Comparator tie-break: an input exactly on a threshold resolves upward.
inline constexpr double kTieEpsilon = 1e-12;

inline constexpr double kBetaStep = 60e-3 / 31.0;
inline constexpr int kBetaMin = -15;
inline constexpr int kBetaMax = 15;

inline constexpr double kCalResolution = 0.47e-3;
inline constexpr int kCalBits = 7;
inline constexpr int kCalMid = 64;

bool gamma_supported(int gamma);

struct AdcConfig {
  int r_out = 8;
  int gamma = 1;

  void validate() const;  // ConfigError for r_out outside [1, 8] or an unsupported gamma
  bool extrapolated() const { return gamma > 16; }
};

/// Binary-equivalent injection gain: 32 C_c / C_adc.
double alpha_adc(const ElectricalParams& p);

/// DPL-referred voltage of one output code step at gain gamma.
double code_step(const ElectricalParams& p, const AdcConfig& cfg);

struct AbnParams {
  int beta_code = 0;
  double delta_v() const;
  void validate() const;
};

struct CalUnit {
  int code = kCalMid;
  bool out_of_range = false;
  int assist_beta = 0;  // borrowed ABN offset steps, nonzero only with abn_assist

  double delta_v() const;  // total DPL-referred correction
};

struct SenseAmp {
  double offset = 0.0;
  double noise_sigma = 0.0;
  double kickback = 0.0;
};

/// SA instance of column `col` for mismatch seed `nc.seed`.
SenseAmp make_sense_amp(const NonidealityConfig& nc, int col, double v_ddh);

/// Reference-ladder drive of each SAR update slot. Slot j in 3..7 drives
/// 2^{j-3} unit caps at full swing; slots 2..0 drive one unit cell at 1/2, 1/4
/// and 1/8 of the swing.
struct LadderTable {
  int gamma = 1;
  std::array<double, 8> s_in{};
  std::array<double, 8> s_inb{};
  bool extrapolated = false;

  double swing(int slot) const { return s_in[slot] - s_inb[slot]; }
};

inline constexpr std::array<int, 8> kSlotCaps = {1, 1, 1, 1, 2, 4, 8, 16};
inline constexpr std::array<double, 8> kSlotSwingWeight = {0.125, 0.25, 0.5, 1, 1, 1, 1, 1};

/// Ladder taps for `gamma`. With nc.ladder_grid the differential swing of each
/// slot snaps to the V_DDH/32 grid and the taps come from a resistor string
/// whose segment mismatch follows nc.ladder_mismatch_sigma; otherwise exact.
LadderTable ladder_levels(int gamma, const ElectricalParams& p, const NonidealityConfig& nc);

/// Grid tap voltages m V_DDH/32, m = 0..32, of the mismatch instance `seed`.
std::vector<double> ladder_taps(const ElectricalParams& p, double mismatch_sigma, std::uint64_t seed);

struct Conversion {
  int code = 0;
  bool saturated = false;
  std::vector<double> residues;  // DPL minus reference before each decision, then the final residue
};

/// Behavioral transfer:
/// floor(2^{r-1} + gamma (dV + dV_beta + dV_cal + eps) / (alpha_adc V_DDH / 2^{r-1})),
/// saturated to [0, 2^r - 1], with dV = v_mbiw - V_DDL.
Conversion convert_behavioral(double v_mbiw, const AbnParams& abn, const CalUnit& cal,
                              const AdcConfig& cfg, const ElectricalParams& p);

/// Structural SAR: offset and calibration injection onto the DPL, then r_out
/// decision/update cycles against the ladder table.
Conversion convert_structural(double v_dpl, const AbnParams& abn, const CalUnit& cal,
                              const AdcConfig& cfg, const ElectricalParams& p,
                              const LadderTable& ladder, const SenseAmp& sa,
                              const NonidealityConfig& nc, RngStream* rng);

/// 7b SAR search of the calibration bank with the DPL at V_DDL. The compare
/// point of each trial is dithered by half a step so the residual offset lands
/// within +-resolution/2. Offsets beyond the bank clamp to an extreme code and
/// set `out_of_range`; with nc.abn_assist the beta bank is searched first for
/// those columns.
CalUnit calibrate(const SenseAmp& sa, const NonidealityConfig& nc, RngStream* rng);

/// "col,code,flag" lines; flag is 1 for out-of-range columns.
void write_calibration(std::ostream& os, std::span<const CalUnit> cal);
std::vector<CalUnit> read_calibration(std::istream& is, int n_cols);

/// Master/slave output registers: staged codes become visible on commit().
class OutputRegisters {
 public:
  explicit OutputRegisters(int n = 0) : master_(n, 0), slave_(n, 0) {}
  void stage(int i, int code) { master_.at(i) = code; }
  void commit() { slave_ = master_; ++commits_; }
  int read(int i) const { return slave_.at(i); }
  const std::vector<int>& visible() const { return slave_; }
  int commits() const { return commits_; }

 private:
  std::vector<int> master_;
  std::vector<int> slave_;
  int commits_ = 0;
};

struct InlStats {
  double mean = 0.0;
  double peak = 0.0;
  int points = 0;
};

/// |y - least-squares line| over points with 0 < y < y_max.
InlStats inl_stats(std::span<const double> x, std::span<const double> y, double y_max);

}  // namespace cimsim
