#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cimsim/dp_array.hpp"
#include "cimsim/nonideality.hpp"

namespace cimsim {

enum class MbiwPhase { DP, AccumulateIn, WeightSelfWeight, WeightPairShare, Done };

const char* to_string(MbiwPhase p);

/// Charge-injection error of one input-accumulation share, as a function of the
/// just-computed DP voltage and the previous accumulator voltage.
class InjectionErrorModel {
 public:
  InjectionErrorModel() = default;

  /// bound * tanh(a (v_in - v_mid)) * tanh(b (v_acc - v_mid)); zero on both midlines.
  static InjectionErrorModel analytic(double bound, double slope_in, double slope_acc, double v_mid);

  /// Text grid: header "n_vin n_vacc vmin vmax" (volts), then n_vin rows of
  /// n_vacc entries in millivolts. Both axes span [vmin, vmax]; queries outside
  /// are clamped to the edge. Bilinear interpolation in between.
  static InjectionErrorModel load_grid(std::istream& is);
  static InjectionErrorModel load_grid_file(const std::string& path);

  double operator()(double v_in, double v_acc) const;
  double bound() const { return bound_; }
  bool tabulated() const { return !grid_.empty(); }

 private:
  double bound_ = 0.0;
  double a_ = 0.0, b_ = 0.0, mid_ = 0.0;
  int n_in_ = 0, n_acc_ = 0;
  double vmin_ = 0.0, vmax_ = 0.0;
  std::vector<double> grid_;  // volts, row-major over v_in
};

/// Leakage drift on C_acc over one accumulation step of `step_fraction` of the
/// leakage horizon. Odd and cubic in (v - V_DDL); exactly zero at V_DDL.
double leak_drift(double v, const ElectricalParams& p, const NonidealityConfig& nc,
                  double step_fraction);

/// Relative C_acc deviation of a column for the mismatch instance `seed`.
double acc_imbalance(std::uint64_t seed, int col, double sigma);

/// Accumulator state of one group of r_w adjacent columns (LSB column first).
struct MbiwState {
  MbiwPhase phase = MbiwPhase::DP;
  int k = 0;
  int r_in = 1;
  int r_w = 1;
  std::vector<double> v_acc;  // per column
  std::vector<double> v_dpl;  // per column, the C_mb + C_adc node
  std::vector<double> c_acc;  // per column
};

/// Fresh state: C_acc precharged to V_DDL, waiting for the first DP phase.
/// `c_acc` holds per-column capacitances; empty means the nominal p.c_acc.
MbiwState mbiw_begin(const ElectricalParams& p, int r_in, int r_w, std::span<const double> c_acc = {});

/// End of a DP phase: the DPL voltages of the group are captured on C_mb + C_adc.
/// With r_in = 1 the input accumulation is bypassed and the state moves straight
/// to weight accumulation.
void mbiw_load_dp(MbiwState& s, std::span<const double> v_dp);

/// One LSB-first input-accumulation share between C_mb + C_adc and C_acc. The
/// DPL is then precharged to V_DDL for the next bit. Throws SequencingError
/// outside the AccumulateIn phase.
void accumulate_input_bit(MbiwState& s, const ElectricalParams& p, const NonidealityConfig& nc,
                          const InjectionErrorModel* inj);

struct WeightAccumulation {
  double v_mbiw;       // final voltage on the MSB column's DPL
  double common_mode;  // (1/2)^{r_w} V_DDL contribution of the self-weighting precharge
};

/// Self-weighting of the LSB column with its V_DDL-precharged C_acc, then
/// pairwise shares LSB to MSB. Runs the physical share sequence.
WeightAccumulation accumulate_weights(MbiwState& s, const ElectricalParams& p);

/// Stateless form over the per-column DPL voltages of one group.
WeightAccumulation accumulate_weights(std::span<const double> v_cols, int r_w, int cols_per_block,
                                      const ElectricalParams& p, double c_acc_lsb = 0.0);

/// Closed-form accumulator after r steps: (1-a)^r V0 + sum a (1-a)^{r-1-k} V_k.
double input_accumulation_closed_form(std::span<const double> v_dp, double alpha_mb, double v_ddl);

/// Closed-form weight accumulation deviation: sum (1/2)^{r_w-b} (V_b - V_DDL).
double weight_accumulation_closed_form(std::span<const double> v_cols, double v_ddl);

double alpha_mb(const ElectricalParams& p, double c_acc);

/// A switch-control interval of the schedule, in arbitrary time units.
struct PhaseInterval {
  MbiwPhase phase;
  double start;
  double end;
};

/// Throws SequencingError if any DP interval overlaps an AccumulateIn interval
/// or an interval is empty or reversed.
void validate_schedule(std::span<const PhaseInterval> schedule);

}  // namespace cimsim
