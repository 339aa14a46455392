#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cimsim/nonideality.hpp"
#include "cimsim/rng.hpp"

namespace cimsim {

struct MacroGeometry {
  int n_rows = 1152;
  int n_cols = 256;
  int rows_per_unit = 36;
  int units_per_col = 32;
  int cols_per_block = 4;
  int n_blocks = 64;

  void validate() const;
};

/// Capacitances in farads, supplies in volts.
struct ElectricalParams {
  double c_c = 0.7e-15;
  double c_p_per_unit = 0.3e-15;
  double c_p_glob = 3.0e-15;          // column-spanning routing, see alpha_eff()
  double c_mb = 14.0e-15;
  double c_adc = 26.0e-15;            // C_sar + C_p,sar (+ bank parasitics)
  double c_acc = 40.0e-15;
  double c_in_wire_per_cell = 0.05e-15;  // DP-IN routing per crossed bitcell
  double v_ddl = 0.4;
  double v_ddh = 0.8;

  double c_load() const { return c_mb + c_adc; }
  void validate() const;
};

enum class DplVariant { Baseline, SerialSplit, ParallelSplit };

struct DplTopology {
  DplVariant variant = DplVariant::SerialSplit;
  int connected_units = 32;

  static DplTopology baseline(const MacroGeometry& g) { return {DplVariant::Baseline, g.units_per_col}; }
  static DplTopology serial(int units) { return {DplVariant::SerialSplit, units}; }
  static DplTopology parallel(int units) { return {DplVariant::ParallelSplit, units}; }

  // Baseline always connects every unit.
  DplTopology normalized(const MacroGeometry& g) const;
  void validate(const MacroGeometry& g) const;
};

/// Binary weight storage; bit 1 acts as +1, bit 0 as -1.
class WeightPlane {
 public:
  WeightPlane() = default;
  WeightPlane(int n_rows, int n_cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool get(int row, int col) const { return bits_[index(row, col)] != 0; }
  void set(int row, int col, bool bit) { bits_[index(row, col)] = bit ? 1 : 0; }
  int sign(int row, int col) const { return get(row, col) ? 1 : -1; }

  // "CIMW" little-endian file: 16-byte header then row-major packed bits.
  void write(std::ostream& os) const;
  static WeightPlane read(std::istream& is);

  bool operator==(const WeightPlane&) const = default;

 private:
  std::size_t index(int row, int col) const;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// One input bit-plane k: bits[i] = X_i[k]. Rows past bits.size() are inactive.
struct InputBitVector {
  std::vector<std::uint8_t> bits;
  int active_rows() const;
};

int dp_rows(const MacroGeometry& g, const DplTopology& t);
double dp_parasitic(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t);

/// C_c / (N_dp C_c + C_p + C_L) for the given DPL split.
double alpha_eff(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t);

/// Total capacitance on the DPL during the DP phase (C_c / alpha_eff).
double dpl_capacitance(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t);

/// Peak-to-peak ideal DPL swing with n_on aligned rows.
double max_swing(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t, int n_on);

/// Per-unit parasitic that makes the 1-unit serial split reach `target_ratio`
/// times the baseline alpha_eff.
double cp_per_unit_for_swing_ratio(double target_ratio, const ElectricalParams& p,
                                   const MacroGeometry& g);

/// Sum over rows of X_i[k] * (+1/-1 weight sign) for one column.
int signed_dot(const WeightPlane& w, const InputBitVector& x, int col);

/// Deterministic incomplete-settling error of a split DPL (volts, additive).
/// `products[i]` is X_i * s_i for each row of the connected units, in row order
/// starting at unit 0, the unit nearest the column periphery.
double settling_error(std::span<const std::int8_t> products, double target_voltage,
                      const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t,
                      const NonidealityConfig& nc);

double settling_error(const WeightPlane& w, const InputBitVector& x, int col,
                      const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t,
                      const NonidealityConfig& nc);

/// Clustering factor in [0, 1]: normalised charge that must cross unit switches.
/// Returns the signed value; the sign is that of the excess on the near side.
double cluster_factor(std::span<const std::int8_t> products, const MacroGeometry& g,
                      const DplTopology& t);

/// Settled DPL voltage for one input bit-plane on one column. With `rng` null or
/// all sources disabled in `nc`, the result is V_DDL (1 + alpha_eff * signed_dot)
/// clamped to the rails.
double dp_bit_plane(const WeightPlane& w, const InputBitVector& x, int col,
                    const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t,
                    const NonidealityConfig& nc, RngStream* rng);

/// Adds the enabled noise terms to a settled DPL voltage and clamps it to the rails.
double dp_finish(double v, int n_active, double alpha, double c_dpl, const ElectricalParams& p,
                 const NonidealityConfig& nc, RngStream* rng);

/// Relative C_c deviation of cell (row, col) for a mismatch instance.
double cell_mismatch(std::uint64_t seed, int row, int col, double sigma);

/// Energy drawn by the DP-IN drivers when n_on rows swing by V_DDL in the same
/// direction on one column: n_on * (C_c V^2 (1 - alpha_eff n_on) + C_wire V^2).
double dp_drive_energy(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t,
                       int n_on);

}  // namespace cimsim
