#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cimsim/energy.hpp"
#include "cimsim/macro_engine.hpp"

namespace cimsim {

enum class LayerKind { Conv, Fc };

const char* to_string(LayerKind k);

struct LayerConfig {
  std::string name;
  LayerKind kind = LayerKind::Conv;
  int kernel = 3;  // side; K = kernel^2 taps for conv, 1 for fc
  int c_in = 16;
  int c_out = 64;
  int r_in = 8;
  int r_w = 4;
  int r_out = 8;
  int gamma = 1;
  std::vector<int> beta;  // per output channel, empty means all 0
  int stride = 1;
  int padding = 1;
  bool signed_in = false;   // signed -> offset conversion on fetch
  bool signed_out = false;  // offset -> signed conversion on store

  int taps() const { return kind == LayerKind::Fc ? 1 : kernel * kernel; }
  /// DP rows of one filter.
  int rows() const { return taps() * c_in; }
  int kernel_bits() const { return rows() * r_in; }
  int out_h(int h) const;
  int out_w(int w) const;
  void validate() const;
};

/// Macro row holding (tap, channel): groups of four channels occupy 4K
/// consecutive rows, tap-major inside the group; fc rows follow the channel.
int filter_row(const LayerConfig& l, int tap, int channel);

enum class PipeMode { Serial, Pipelined };

const char* to_string(PipeMode m);

struct PipelineConfig {
  PipeMode mode = PipeMode::Pipelined;
  int n_cim = 1;
  int bw = 128;
  double clock_hz = 50e6;

  void validate() const;
};

inline constexpr std::size_t kLmemBits = 32 * 1024 * 8;

/// Cycles between the end of one output's fetch and the next fetch in serial mode.
int stall_cycles(const LayerConfig& l, const PipelineConfig& pipe);

enum class Regime { InputDominated, OutputDominated };

const char* to_string(Regime r);

struct CyclesPerOutput {
  int t_in = 0;   // transfers of one kernel
  int t_out = 0;  // transfers of one output vector
  int n_in = 0;
  int n_out = 0;
  int cycles = 0;  // max(n_in, n_out)
  int row_start = 0;  // fetch cycles of a new image row
  Regime regime = Regime::InputDominated;
};

CyclesPerOutput cycles_per_output(const LayerConfig& l, const PipelineConfig& pipe);

/// Closed-form cycle count of one layer pass over an h x w input.
std::uint64_t closed_form_cycles(const LayerConfig& l, const PipelineConfig& pipe, int h, int w);

enum class EventKind { FetchStart, ShiftWrite, FetchEnd, MacroStart, MacroCommit, StoreStart, StoreEnd };

struct Event {
  std::uint64_t time = 0;
  EventKind kind = EventKind::FetchStart;
  int position = 0;
};

struct Timeline {
  std::uint64_t cycles = 0;
  std::uint64_t macro_busy = 0;
  std::vector<Event> events;  // time order, ties in pipeline order
};

/// Cycle-stepped fetch / macro / store schedule; independent of the closed form.
Timeline simulate_timeline(const LayerConfig& l, const PipelineConfig& pipe, int h, int w,
                           bool keep_events = false);

/// Activation tensor in LMEM order: element (y, x, c) of an r-bit map lives at
/// bits [((y*w + x)*c_total + c)*r, +r), LSB first.
struct Tensor {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<std::int32_t> data;  // (y, x, c) row-major

  std::int32_t at(int y, int x, int ch) const { return data[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
  std::int32_t& at(int y, int x, int ch) { return data[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
  std::size_t bits(int r) const { return data.size() * static_cast<std::size_t>(r); }
};

std::vector<std::uint8_t> pack_lmem(const Tensor& t, int r);
Tensor unpack_lmem(const std::vector<std::uint8_t>& bytes, int h, int w, int c, int r, bool is_signed);

struct Fetch {
  int position = 0;  // first output position served
  int part = 0;      // index inside a split kernel
  int bits = 0;      // payload, <= BW
  int kernels = 1;   // whole kernels carried (packing), 1 when split
  std::uint32_t ch_mask = 0;  // CH_i: sub-blocks written
  std::uint8_t cs_k_mask = 0; // CS_K,j: kernel columns written inside them
  int zero_taps = 0;          // padded taps in the payload
};

struct TransferPlan {
  int kernel_bits = 0;
  int kernels_per_transfer = 0;  // > 0 when whole kernels pack
  int transfers_per_kernel = 0;
  int h_out = 0;
  int w_out = 0;
  std::vector<Fetch> fetches;
  /// Per output position: offset-binary input codes in macro row order.
  std::vector<std::vector<std::uint32_t>> patches;
};

/// Im2col lowering of `image` (values signed when l.signed_in).
TransferPlan im2col_schedule(const LayerConfig& l, const Tensor& image, const PipelineConfig& pipe);

struct LayerReport {
  Tensor output;  // codes, signed when l.signed_out
  std::uint64_t cycles = 0;
  std::uint64_t closed_form = 0;
  std::uint64_t macro_ops = 0;
  std::uint64_t fetch_transfers = 0;
  std::uint64_t store_transfers = 0;
  std::uint64_t saturated = 0;
  int rows_per_op = 0;
  CyclesPerOutput per_output;
  EnergyLedger energy;
  bool extrapolated = false;

  double ops() const;  // 2 K C_in C_out per output position
  double energy_per_op() const { return ops() > 0 ? energy.total() / ops() : 0.0; }
};

/// Event-ordered fetch / macro / store simulation of one layer pass. The
/// macro must hold the layer's filters (rows in filter_row order, outputs =
/// c_out) and be configured with the layer's precisions.
LayerReport simulate_layer(const LayerConfig& l, const Tensor& image, const PipelineConfig& pipe,
                           const Macro& macro, std::uint64_t key = 0);

/// Splits a layer into passes that fit one macro load: input-channel chunks
/// (partial sums added digitally) times output-channel batches.
std::vector<LayerConfig> layer_passes(const LayerConfig& l, const MacroGeometry& g);

/// Macro configuration for a layer derived from `base`: precisions, gamma and
/// as many connected units as the filter needs.
MacroConfig layer_macro_config(const LayerConfig& l, const MacroConfig& base);

struct DramEstimate {
  std::uint64_t weight_bits = 0;
  std::uint64_t spill_bits = 0;   // intermediate maps exceeding one LMEM, out and back
  std::uint64_t transfer_cycles = 0;
  std::uint64_t compute_cycles = 0;
  double cycle_ratio = 0;
  double dram_energy = 0;
  double compute_energy = 0;
  double energy_ratio = 0;
};

/// Analytic per-pass energy of a layer from the event counts of the closed form.
EnergyLedger estimate_layer_energy(const LayerConfig& l, const PipelineConfig& pipe,
                                   const MacroConfig& base, int h, int w);

/// Off-chip weight and spill traffic of one image through `net` at
/// `offchip_bw` bits per cycle (0 or infinity means unlimited).
DramEstimate dram_overlay_estimate(const std::vector<LayerConfig>& net, int h, int w,
                                   double offchip_bw, const PipelineConfig& pipe,
                                   const MacroConfig& base);

/// Small CNN for 32x32 inputs used by the overlay estimate and examples.
std::vector<LayerConfig> reference_cnn();

}  // namespace cimsim
