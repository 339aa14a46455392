#pragma once

#include <cstdint>

namespace cimsim {

enum class Corner { SS, TT, FF };

/// Multiplier applied to the settling time constants of the split DPL.
double corner_tau_scale(Corner c);

/// Every analog error source of the macro. Each one can be switched off on its
/// own; `ideal()` turns all of them off, which is the mode checked against the
/// integer oracle.
struct NonidealityConfig {
  std::uint64_t seed = 1;
  double temperature_k = 300.0;

  // dp-array
  bool dp_thermal = true;          // bitcell kT/C_c noise attenuated by alpha_eff
  bool dpl_ktc = true;             // kT/C sampled on the DPL at each charge-share
  bool settling = true;
  Corner corner = Corner::TT;
  double t_dp = 5e-9;              // seconds per single-bit DP
  double tau_serial = 1.0e-9;
  double tau_parallel = 0.3e-9;
  double settling_e_max = 8e-3;    // volts
  double cc_mismatch_sigma = 0.0;  // relative, per cell

  // mbiw
  bool injection = true;
  double injection_bound = 3.125e-3;
  double injection_slope_in = 8.0;    // 1/V, tanh argument scale along V_in
  double injection_slope_acc = 8.0;   // 1/V, along V_acc
  bool leakage = true;
  double leak_drift_at_rail = 1.0e-3;  // volts drift at |V - V_DDL| = V_DDH - V_DDL over the horizon
  double leak_horizon = 48e-9;         // seconds, full 8b accumulation
  double cap_imbalance_sigma = 0.003;  // relative C_acc vs C_mb + C_adc, per column

  // dsci-adc
  bool sa_offset = true;
  double sa_sigma_prelayout = 20e-3;
  double sa_postlayout_factor = 1.75;
  bool calibrate = true;
  bool abn_assist = true;          // out-of-range columns borrow the beta bank
  double sa_noise_sigma = 1.2e-3;  // per decision
  double kickback = 0.0;           // volts per decision
  bool ladder_grid = true;         // snap S-IN(b) taps to V_DDH/32
  double ladder_mismatch_sigma = 0.005;  // relative, per ladder segment

  // Disabled knob for supply-dependent RMS growth (IR drop); volts of extra
  // decision noise per volt of V_DDH above 0.8 V.
  double supply_noise_slope = 0.0;

  double tau(bool parallel) const;

  static NonidealityConfig ideal();
  bool any_enabled() const;
};

}  // namespace cimsim
