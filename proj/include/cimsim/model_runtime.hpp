#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cimsim/dataflow.hpp"

namespace cimsim {

/// Scale and zero point of one tensor: real = scale * (q - zero).
struct QuantParams {
  float scale = 1.0f;
  float zero = 0.0f;

  bool operator==(const QuantParams&) const = default;
};

struct BundleLayer {
  LayerConfig config;
  /// Offset-binary weight codes, [filter_row][c_out].
  std::vector<std::uint8_t> weights;
  QuantParams in_q;
  QuantParams w_q;
  QuantParams out_q;
};

struct ModelBundle {
  std::uint16_t version = 1;
  int input_h = 1;
  int input_w = 1;
  int input_c = 1;
  std::vector<BundleLayer> layers;
  std::optional<std::vector<CalUnit>> calibration;  // one entry per macro column

  /// Throws LoadError naming the offending layer.
  void validate() const;
};

inline constexpr std::uint16_t kBundleVersion = 1;

ModelBundle read_bundle(std::istream& is);
void write_bundle(std::ostream& os, const ModelBundle& b);
ModelBundle load_bundle(const std::string& path);
void save_bundle(const std::string& path, const ModelBundle& b);

struct LayerMapping {
  int layer = 0;
  int rows = 0;             // K * C_in
  int units = 0;            // connected DP units per column
  int columns_per_output = 0;
  int outputs_per_block = 0;
  int blocks_used = 0;      // in the widest batch
  int batches = 1;          // sequential column batches
  int row_passes = 1;       // input-channel chunks
  bool multi_pass = false;  // partial sums added digitally
  std::vector<LayerConfig> passes;  // row pass major, then batch

  bool operator==(const LayerMapping& o) const;
};

struct MappingPlan {
  std::vector<LayerMapping> layers;

  bool operator==(const MappingPlan&) const = default;
};

/// Deterministic allocation. Throws UnmappableError when a single filter
/// group exceeds the rows, or when multi-pass is disallowed and needed.
MappingPlan plan_mapping(const ModelBundle& b, const MacroGeometry& g, bool allow_multi_pass = true);

struct RunOptions {
  MacroConfig macro;   // geometry, electrical, noise and energy of the target
  PipelineConfig pipe;
  bool with_oracle = true;  // ideal-mode run alongside when noise is on
  int jobs = 1;             // images in flight
};

struct LayerStats {
  std::string name;
  std::uint64_t cycles = 0;
  std::uint64_t macro_ops = 0;
  std::uint64_t saturated = 0;
  EnergyLedger energy;
};

struct NetworkResult {
  std::vector<std::vector<std::int32_t>> scores;  // final layer outputs per image
  std::vector<int> predictions;
  std::vector<int> oracle_predictions;  // empty unless computed
  double accuracy = -1;                 // -1 without labels
  double oracle_accuracy = -1;
  std::vector<LayerStats> layers;       // summed over images
  bool extrapolated = false;
};

/// Layer-by-layer inference; images are (h, w, c) tensors matching the bundle
/// input shape. Labels may be empty.
NetworkResult run_network(const ModelBundle& b, const std::vector<Tensor>& images,
                          const std::vector<int>& labels, const RunOptions& opt);

/// Image CSV: one image per line, "label,v0,v1,..." in (y, x, c) order.
struct ImageSet {
  std::vector<Tensor> images;
  std::vector<int> labels;
};

ImageSet read_images_csv(std::istream& is, int h, int w, int c);
void write_images_csv(std::ostream& os, const ImageSet& s);

/// Small documented networks with seeded random weights: "mlp" (64-32-10),
/// "cnn" (8x8x4 input, two 3x3 convs, fc).
ModelBundle reference_bundle(const std::string& name, std::uint64_t seed);

/// Random images for a bundle's input shape; labels are left empty.
ImageSet random_images(const ModelBundle& b, int count, std::uint64_t seed);

}  // namespace cimsim
