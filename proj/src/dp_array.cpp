#include "cimsim/dp_array.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "binio.hpp"
#include "cimsim/charge_core.hpp"
#include "cimsim/errors.hpp"

namespace cimsim {

double corner_tau_scale(Corner c) {
  switch (c) {
    case Corner::SS: return 1.5;
    case Corner::TT: return 1.0;
    case Corner::FF: return 0.7;
  }
  return 1.0;
}

double NonidealityConfig::tau(bool parallel) const {
  return (parallel ? tau_parallel : tau_serial) * corner_tau_scale(corner);
}

NonidealityConfig NonidealityConfig::ideal() {
  NonidealityConfig c;
  c.dp_thermal = c.dpl_ktc = c.settling = false;
  c.cc_mismatch_sigma = 0.0;
  c.injection = c.leakage = false;
  c.cap_imbalance_sigma = 0.0;
  c.sa_offset = false;
  c.sa_noise_sigma = 0.0;
  c.kickback = 0.0;
  c.ladder_grid = false;
  c.ladder_mismatch_sigma = 0.0;
  c.supply_noise_slope = 0.0;
  return c;
}

bool NonidealityConfig::any_enabled() const {
  return dp_thermal || dpl_ktc || settling || cc_mismatch_sigma > 0 || injection || leakage ||
         cap_imbalance_sigma > 0 || sa_offset || sa_noise_sigma > 0 || kickback != 0 ||
         ladder_grid || ladder_mismatch_sigma > 0 || supply_noise_slope > 0;
}

void MacroGeometry::validate() const {
  if (rows_per_unit <= 0 || units_per_col <= 0 || cols_per_block <= 0 || n_blocks <= 0)
    throw ConfigError("geometry: counts must be positive");
  if (n_rows != rows_per_unit * units_per_col)
    throw ConfigError("geometry: n_rows must equal rows_per_unit * units_per_col");
  if (n_cols != cols_per_block * n_blocks)
    throw ConfigError("geometry: n_cols must equal cols_per_block * n_blocks");
}

void ElectricalParams::validate() const {
  if (!(c_c > 0 && c_mb > 0 && c_adc > 0 && c_acc > 0))
    throw ConfigError("electrical: capacitances must be > 0");
  if (c_p_per_unit < 0 || c_p_glob < 0 || c_in_wire_per_cell < 0)
    throw ConfigError("electrical: parasitics must be >= 0");
  if (!(v_ddh > 0 && v_ddl > 0 && v_ddl < v_ddh))
    throw ConfigError("electrical: need 0 < V_DDL < V_DDH");
}

DplTopology DplTopology::normalized(const MacroGeometry& g) const {
  DplTopology t = *this;
  if (t.variant == DplVariant::Baseline) t.connected_units = g.units_per_col;
  return t;
}

void DplTopology::validate(const MacroGeometry& g) const {
  if (connected_units < 1 || connected_units > g.units_per_col)
    throw ConfigError("topology: connected_units outside [1, units_per_col]");
  if (variant == DplVariant::Baseline && connected_units != g.units_per_col)
    throw ConfigError("topology: baseline DPL connects every unit");
}

// --- WeightPlane ---------------------------------------------------------

WeightPlane::WeightPlane(int n_rows, int n_cols)
    : rows_(n_rows), cols_(n_cols), bits_(static_cast<std::size_t>(n_rows) * n_cols, 0) {
  if (n_rows < 0 || n_cols < 0) throw UsageError("WeightPlane: negative size");
}

std::size_t WeightPlane::index(int row, int col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_)
    throw UsageError("WeightPlane: index out of range");
  return static_cast<std::size_t>(row) * cols_ + col;
}

void WeightPlane::write(std::ostream& os) const {
  os.write("CIMW", 4);
  binio::put<std::uint16_t>(os, 1);
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(rows_));
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(cols_));
  binio::put<std::uint16_t>(os, 0);  // reserved, pads the header to 16 bytes
  std::uint8_t byte = 0;
  std::size_t nbits = 0;
  for (auto b : bits_) {
    byte |= static_cast<std::uint8_t>(b << (nbits % 8));
    if (++nbits % 8 == 0) {
      os.put(static_cast<char>(byte));
      byte = 0;
    }
  }
  if (nbits % 8) os.put(static_cast<char>(byte));
}

WeightPlane WeightPlane::read(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "CIMW", 4) != 0)
    throw LoadError("weight plane: bad magic");
  const auto version = binio::get<std::uint16_t>(is, "weight plane header");
  if (version != 1) throw LoadError("weight plane: unsupported version");
  const auto rows = binio::get<std::uint32_t>(is, "weight plane header");
  const auto cols = binio::get<std::uint32_t>(is, "weight plane header");
  binio::get<std::uint16_t>(is, "weight plane header");
  if (rows > (1u << 20) || cols > (1u << 20)) throw LoadError("weight plane: implausible size");
  WeightPlane w(static_cast<int>(rows), static_cast<int>(cols));
  const std::size_t nbits = w.bits_.size();
  std::uint8_t byte = 0;
  for (std::size_t i = 0; i < nbits; ++i) {
    if (i % 8 == 0) {
      const int c = is.get();
      if (c == std::char_traits<char>::eof()) throw LoadError("weight plane: truncated payload");
      byte = static_cast<std::uint8_t>(c);
    }
    w.bits_[i] = (byte >> (i % 8)) & 1;
  }
  return w;
}

int InputBitVector::active_rows() const {
  return static_cast<int>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

// --- swing model ----------------------------------------------------------

int dp_rows(const MacroGeometry& g, const DplTopology& t) {
  return t.normalized(g).connected_units * g.rows_per_unit;
}

// Baseline and parallel-split both carry the column-spanning global line
// (C_p_glob); the serial split segments the main DPL and has no such wire.
double dp_parasitic(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t) {
  const auto n = t.normalized(g);
  const double local = n.connected_units * p.c_p_per_unit;
  return n.variant == DplVariant::SerialSplit ? local : local + p.c_p_glob;
}

double dpl_capacitance(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t) {
  return dp_rows(g, t) * p.c_c + dp_parasitic(p, g, t) + p.c_load();
}

double alpha_eff(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t) {
  return p.c_c / dpl_capacitance(p, g, t);
}

double max_swing(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t, int n_on) {
  if (n_on < 0 || n_on > dp_rows(g, t)) throw UsageError("max_swing: n_on exceeds connected rows");
  return 2.0 * p.v_ddl * alpha_eff(p, g, t) * n_on;
}

double cp_per_unit_for_swing_ratio(double target_ratio, const ElectricalParams& p,
                                   const MacroGeometry& g) {
  // (N Cc + U cp + glob + CL) / (n Cc + cp + CL) = R, solved for cp with n = one unit.
  const double big = g.n_rows * p.c_c + p.c_p_glob + p.c_load();
  const double small = g.rows_per_unit * p.c_c + p.c_load();
  const double denom = target_ratio - g.units_per_col;
  const double cp = (big - target_ratio * small) / denom;
  if (!(cp >= 0)) throw UsageError("swing ratio not reachable with a non-negative C_p");
  return cp;
}

int signed_dot(const WeightPlane& w, const InputBitVector& x, int col) {
  int s = 0;
  const int n = std::min<int>(static_cast<int>(x.bits.size()), w.rows());
  for (int i = 0; i < n; ++i)
    if (x.bits[i]) s += w.sign(i, col);
  return s;
}

// --- settling --------------------------------------------------------------

double cluster_factor(std::span<const std::int8_t> products, const MacroGeometry& g,
                      const DplTopology& t) {
  const auto n = t.normalized(g);
  const int units = n.connected_units;
  if (units < 2) return 0.0;
  std::vector<double> unit_sum(units, 0.0);
  for (std::size_t i = 0; i < products.size(); ++i) {
    const auto u = static_cast<int>(i) / g.rows_per_unit;
    if (u < units) unit_sum[u] += products[i];
  }
  double mean = 0.0;
  for (double s : unit_sum) mean += s;
  mean /= units;
  // Charge crossing the switch between unit j and j+1 is the prefix excess.
  double prefix = 0.0, worst = 0.0;
  for (int j = 0; j + 1 < units; ++j) {
    prefix += unit_sum[j] - mean;
    if (std::abs(prefix) > std::abs(worst)) worst = prefix;
  }
  const double norm = g.rows_per_unit * units / 2.0;
  return std::clamp(worst / norm, -1.0, 1.0);
}

double settling_error(std::span<const std::int8_t> products, double target_voltage,
                      const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t,
                      const NonidealityConfig& nc) {
  const auto n = t.normalized(g);
  if (n.variant == DplVariant::Baseline || !nc.settling) return 0.0;
  if (!(nc.t_dp > 0)) throw UsageError("settling_error: T_dp must be > 0");
  const double cf = cluster_factor(products, g, n);
  if (cf == 0.0) return 0.0;
  const double half = p.v_ddh / 2.0;
  const double proximity = std::clamp(1.0 - std::abs(target_voltage - half) / half, 0.0, 1.0);
  const double tau = nc.tau(n.variant == DplVariant::ParallelSplit);
  return nc.settling_e_max * std::exp(-nc.t_dp / tau) * cf * proximity;
}

namespace {

std::vector<std::int8_t> column_products(const WeightPlane& w, const InputBitVector& x, int col,
                                         int rows) {
  std::vector<std::int8_t> prod(rows, 0);
  const int n = std::min<int>({rows, static_cast<int>(x.bits.size()), w.rows()});
  for (int i = 0; i < n; ++i)
    if (x.bits[i]) prod[i] = static_cast<std::int8_t>(w.sign(i, col));
  return prod;
}

}  // namespace

double settling_error(const WeightPlane& w, const InputBitVector& x, int col,
                      const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t,
                      const NonidealityConfig& nc) {
  const auto prod = column_products(w, x, col, dp_rows(g, t));
  const double alpha = alpha_eff(p, g, t);
  const double target = p.v_ddl * (1.0 + alpha * signed_dot(w, x, col));
  return settling_error(prod, target, p, g, t, nc);
}

double cell_mismatch(std::uint64_t seed, int row, int col, double sigma) {
  if (sigma == 0.0) return 0.0;
  const auto h = stream_key({seed, 0xce11ULL, static_cast<std::uint64_t>(row),
                             static_cast<std::uint64_t>(col)});
  // Box-Muller from two 53-bit uniforms.
  const double u1 = (static_cast<double>(h >> 11) + 0.5) / 9007199254740992.0;
  const double u2 = static_cast<double>(splitmix64(h) >> 11) / 9007199254740992.0;
  return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double dp_bit_plane(const WeightPlane& w, const InputBitVector& x, int col,
                    const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t,
                    const NonidealityConfig& nc, RngStream* rng) {
  const auto n = t.normalized(g);
  n.validate(g);
  if (col < 0 || col >= w.cols()) throw UsageError("dp_bit_plane: column out of range");
  const int rows = dp_rows(g, n);
  for (std::size_t i = rows; i < x.bits.size(); ++i)
    if (x.bits[i]) throw ConfigError("dp_bit_plane: active row outside the connected units");

  const double alpha = alpha_eff(p, g, n);
  double weighted = 0.0;
  int active = 0;
  const int limit = std::min<int>(static_cast<int>(x.bits.size()), w.rows());
  for (int i = 0; i < limit; ++i) {
    if (!x.bits[i]) continue;
    ++active;
    const double m = 1.0 + cell_mismatch(nc.seed, i, col, nc.cc_mismatch_sigma);
    weighted += w.sign(i, col) * m;
  }
  double v = p.v_ddl * (1.0 + alpha * weighted);

  if (nc.settling && n.variant != DplVariant::Baseline) {
    const auto prod = column_products(w, x, col, rows);
    v += settling_error(prod, v, p, g, n, nc);
  }
  return dp_finish(v, active, alpha, dpl_capacitance(p, g, n), p, nc, rng);
}

double dp_finish(double v, int n_active, double alpha, double c_dpl, const ElectricalParams& p,
                 const NonidealityConfig& nc, RngStream* rng) {
  if (rng) {
    if (nc.dp_thermal && n_active > 0)
      v += rng->gaussian(alpha * std::sqrt(static_cast<double>(n_active)) *
                         ktc_sigma(p.c_c, nc.temperature_k));
    if (nc.dpl_ktc) v += rng->gaussian(ktc_sigma(c_dpl, nc.temperature_k));
  }
  return std::clamp(v, 0.0, p.v_ddh);
}

double dp_drive_energy(const ElectricalParams& p, const MacroGeometry& g, const DplTopology& t,
                       int n_on) {
  if (n_on < 0 || n_on > dp_rows(g, t)) throw UsageError("dp_drive_energy: n_on out of range");
  const double alpha = alpha_eff(p, g, t);
  const double v2 = p.v_ddl * p.v_ddl;
  return n_on * (p.c_c * v2 * (1.0 - alpha * n_on) + p.c_in_wire_per_cell * v2);
}

}  // namespace cimsim
