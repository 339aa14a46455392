#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cimsim/adc.hpp"
#include "cimsim/dp_array.hpp"
#include "cimsim/energy.hpp"
#include "cimsim/mbiw.hpp"
#include "cimsim/nonideality.hpp"

namespace cimsim {

struct MacroConfig {
  MacroGeometry geometry;
  ElectricalParams electrical;
  DplTopology topology = DplTopology::serial(32);
  AdcConfig adc;
  int r_in = 8;
  int r_w = 4;
  NonidealityConfig noise;
  EnergyParams energy;
  bool structural_adc = true;
  std::string injection_map;  // optional tabulated injection-error grid
  int jobs = 1;

  void validate() const;
  int outputs_per_block() const { return geometry.cols_per_block / r_w; }
  int n_outputs() const { return geometry.n_blocks * outputs_per_block(); }
  int rows() const { return dp_rows(geometry, topology); }
  /// First (LSB) column of output o.
  int output_column(int o) const;
};

/// Inputs and weights of one macro invocation. Weights are offset-binary
/// u in [0, 2^{r_w}), effective value 2u - (2^{r_w} - 1), row-major [row][output].
struct CimCycleInput {
  std::vector<std::uint32_t> inputs;
  std::vector<std::uint8_t> weights;
  int n_outputs = 0;
  std::vector<int> beta;  // per output; empty means 0
};

struct OracleResult {
  std::vector<int> codes;
  std::vector<std::uint8_t> saturated;
  std::vector<double> argument;   // pre-floor value, rounded to double for reporting
  std::vector<double> deviation;  // argument - 2^{r_out-1}, one rounding, so it scales exactly with gamma
};

/// Exact rational evaluation of the ideal transfer chain (ideal calibration).
OracleResult integer_oracle(const CimCycleInput& in, const MacroConfig& cfg);

struct TraceReport {
  std::vector<std::vector<double>> v_dp;   // [k][column], DPL after each bit-plane
  std::vector<std::vector<double>> v_acc;  // [k][column], accumulator after each share
  std::vector<double> v_mbiw;              // per output
  double common_mode = 0.0;                // self-weighting V_DDL term, reported apart
  std::vector<int> codes;
  std::vector<std::uint8_t> saturated;
  std::vector<std::uint8_t> cal_out_of_range;
  std::vector<std::vector<double>> residues;  // per output
  std::vector<int> oracle_codes;
  std::vector<std::uint8_t> oracle_saturated;
  EnergyLedger energy;
  bool extrapolated = false;  // gamma beyond the validated MSB gain
};

/// One programmed macro instance: weights, beta codes, SA offsets, ladder and
/// calibration state. run() is const and may be called concurrently.
class Macro {
 public:
  explicit Macro(MacroConfig cfg);

  const MacroConfig& config() const { return cfg_; }
  void load_weights(std::span<const std::uint8_t> weights, int n_rows, int n_outputs);
  void set_beta(std::vector<int> beta);
  const std::vector<int>& beta() const { return beta_; }

  /// Runs calibrate() on every column.
  void calibrate();
  void set_calibration(std::vector<CalUnit> cal);
  const std::vector<CalUnit>& calibration() const { return cal_; }
  const std::vector<SenseAmp>& sense_amps() const { return sa_; }
  const WeightPlane& plane() const { return plane_; }
  const LadderTable& ladder() const { return ladder_; }

  /// Deterministic part of a cycle: per-bit signed sums and settling errors.
  struct Prepared {
    std::vector<int> n_active;                // [k]
    std::vector<std::vector<double>> sum;     // [k][column], mismatch-weighted signed sum
    std::vector<std::vector<double>> settle;  // [k][column]
    OracleResult oracle;
  };
  Prepared prepare(std::span<const std::uint32_t> inputs, bool with_oracle) const;
  TraceReport run(const Prepared& prep, std::uint64_t cycle_key) const;
  TraceReport run(std::span<const std::uint32_t> inputs, std::uint64_t cycle_key) const;

 private:
  MacroConfig cfg_;
  WeightPlane plane_;
  std::vector<std::uint8_t> weights_;
  int n_rows_ = 0;
  int n_outputs_ = 0;
  std::vector<int> beta_;
  std::vector<SenseAmp> sa_;
  std::vector<CalUnit> cal_;
  std::vector<double> c_acc_;
  LadderTable ladder_;
  InjectionErrorModel inj_;
};

/// Builds a Macro for `in`, runs one cycle and attaches the oracle.
TraceReport run_cycle(const CimCycleInput& in, const MacroConfig& cfg, std::uint64_t cycle_key = 0);

}  // namespace cimsim
