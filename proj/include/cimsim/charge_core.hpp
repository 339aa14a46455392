#pragma once

#include <cstdint>
#include <span>

#include "cimsim/rng.hpp"

namespace cimsim {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kFemto = 1e-15;
inline constexpr double kMilli = 1e-3;

/// One capacitor plate referenced to ground.
struct CapNode {
  double capacitance;  // farads, > 0
  double voltage;      // volts
};

/// Charge-conserving share: every node in `nodes` ends at the common voltage
/// sum(C_i V_i) / sum(C_i). Summation runs in ascending index with Kahan
/// compensation, so a permutation of the list only changes the result by the
/// rounding of the compensated sum. Nodes already at a common voltage are left
/// untouched, which makes a repeated share bit-exactly idempotent.
///
/// Throws UsageError for fewer than two nodes or a non-positive capacitance.
double share(std::span<CapNode> nodes);

/// Ideal driver: node ends exactly at `level`. Throws UsageError if level is outside [0, vddh].
void precharge(CapNode& node, double level, double vddh);

/// Total stored charge, Kahan-summed in index order.
double total_charge(std::span<const CapNode> nodes);

enum class NoiseKind { None, ThermalKTC, GaussianFixed };

struct NoiseSource {
  NoiseKind kind = NoiseKind::None;
  double sigma_or_temp = 300.0;  // kelvin for ThermalKTC, volts for GaussianFixed
  std::uint64_t stream = 0;
};

/// sqrt(kT/C) in volts.
double ktc_sigma(double capacitance, double temperature_k);

/// Sigma that `src` would produce on `node` (0 for NoiseKind::None).
double noise_sigma(const NoiseSource& src, const CapNode& node);

/// One zero-mean Gaussian draw from `rng` with the sigma of `src` on `node`.
double sample_noise(const NoiseSource& src, const CapNode& node, RngStream& rng);

}  // namespace cimsim
