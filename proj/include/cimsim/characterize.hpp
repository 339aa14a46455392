#pragma once

#include <iosfwd>
#include <vector>

#include "cimsim/macro_engine.hpp"

namespace cimsim {

struct CharacterizeOptions {
  std::vector<int> gammas{1, 2, 4, 8, 16, 32};
  int iters = 100;
  int fill_step = 4;   // rows added per sweep point
  int fc_rows = 128;   // one 128b input patch
  int jobs = 1;
};

/// Base configuration of the sweeps: FC mode, binary weights, 8b signed inputs
/// held at zero, serial split over the units that hold fc_rows.
MacroConfig characterization_config(const MacroConfig& base, int fc_rows);

struct TransferPoint {
  int gamma = 1;
  int fill = 0;            // rows holding a 1 weight bit, from row 0 up
  double ideal_code = 0;   // oracle
  double mean_code = 0;    // over columns and iterations
  double inl = 0;          // |mean_code - least-squares line|, NaN when saturated
  double rms = 0;          // RMS over columns of the per-column temporal std
};

struct TransferSummary {
  int gamma = 1;
  double slope = 0;        // codes per fill row, from the fit
  double mean_inl = 0;
  double peak_inl = 0;
  int peak_fill = 0;
  double max_rms = 0;
  bool extrapolated = false;
};

struct TransferTable {
  std::vector<TransferPoint> points;
  std::vector<TransferSummary> summary;
};

/// Weight-fill sweep from all-0 to all-1 with inputs at signed zero.
TransferTable characterize_transfer(const MacroConfig& base, const CharacterizeOptions& opt);

/// Max-over-codes output RMS per gamma (same sweep, summary only).
std::vector<TransferSummary> characterize_rms(const MacroConfig& base, const CharacterizeOptions& opt);

struct ClusteringPoint {
  int connected_units = 0;
  int run_length = 0;
  double mean_abs_error = 0;  // |code - oracle| averaged over columns and iterations, LSB
};

/// Zero-expected DPs built from alternating runs of 1 and 0 weight bits.
std::vector<ClusteringPoint> characterize_clustering(const MacroConfig& base,
                                                     const std::vector<int>& connected_units,
                                                     const std::vector<int>& run_lengths, int iters,
                                                     int jobs);

struct CalibrationColumn {
  int col = 0;
  double offset = 0;   // volts
  double before = 0;   // input-referred deviation, LSB8
  double after = 0;    // mean over samples, LSB8
  bool out_of_range = false;
};

struct CalibrationReport {
  std::vector<CalibrationColumn> columns;
  double rms_before = 0;   // spatial RMS, LSB8
  double rms_after = 0;
  double within_1lsb = 0;  // fraction of columns with |after| <= 1 LSB8
  int flagged = 0;
};

inline constexpr double kLsb8 = 3.125e-3;

CalibrationReport characterize_calibration(const MacroConfig& base, int samples);

struct AdcInl {
  int gamma = 1;
  double mean = 0;  // LSB, averaged over ladder instances
  double peak = 0;  // LSB, worst instance
  int missing_codes = 0;
};

/// Static INL of the structural converter from its code-transition levels
/// (least-squares line), noise off, ladder settings from base.noise, averaged
/// over `instances` ladder-mismatch seeds.
AdcInl adc_static_inl(const MacroConfig& base, int gamma, int instances, int points_per_lsb = 4);

/// Code-domain noise statistics handed to hardware-aware training.
struct HwNoiseSpec {
  std::vector<int> gammas;
  std::vector<double> rms_lsb;  // per gamma, non-decreasing
  double settling_inl_lsb = 0;
  double injection_bound_lsb = 0;
  double sa_residual_sigma_lsb = 0;

  void validate() const;
};

HwNoiseSpec make_noise_spec(const std::vector<TransferSummary>& rms, const CalibrationReport& cal,
                            const MacroConfig& base);

/// CSV: header "field,gamma,value"; per-gamma rows "output_rms_lsb,<g>,<v>",
/// scalar rows with an empty gamma.
void write_noise_spec(std::ostream& os, const HwNoiseSpec& spec);
HwNoiseSpec read_noise_spec(std::istream& is);

}  // namespace cimsim
