#include "cimsim/model_runtime.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

#include "binio.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"
#include "parallel.hpp"

namespace cimsim {

namespace {

constexpr char kMagic[4] = {'C', 'I', 'M', 'B'};
constexpr std::uint16_t kEndianTag = 0xFEFF;
constexpr std::uint32_t kFlagCalibration = 1;

std::string layer_label(std::size_t i, const std::string& name) {
  return "layer " + std::to_string(i) + (name.empty() ? std::string() : " '" + name + "'");
}

// Spatial shape entering each layer, after the implicit flatten before fc.
struct Shape {
  int h, w, c;
};

}  // namespace

void ModelBundle::validate() const {
  if (input_h < 1 || input_w < 1 || input_c < 1) throw LoadError("bundle: input shape must be positive");
  if (layers.empty()) throw LoadError("bundle: no layers");
  Shape s{input_h, input_w, input_c};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& L = layers[i];
    const auto& l = L.config;
    const std::string who = layer_label(i, l.name);
    if (l.r_in < 1 || l.r_in > 8 || l.r_w < 1 || l.r_w > 4 || l.r_out < 1 || l.r_out > 8)
      throw LoadError(who + ": unsupported precision " + std::to_string(l.r_in) + "/" + std::to_string(l.r_w) +
                      "/" + std::to_string(l.r_out) + " (max in/w/out is 8/4/8)");
    try {
      l.validate();
    } catch (const ConfigError& e) {
      throw LoadError(who + ": " + e.what());
    }
    const int expect_c = l.kind == LayerKind::Fc ? s.h * s.w * s.c : s.c;
    if (l.c_in != expect_c)
      throw LoadError(who + ": C_in " + std::to_string(l.c_in) + " does not match the incoming " +
                      std::to_string(expect_c) + " channels");
    if (l.kind == LayerKind::Conv && (s.h == 1 && s.w == 1) && i > 0 && layers[i - 1].config.kind == LayerKind::Fc)
      throw LoadError(who + ": conv after fc is not supported");
    if (i > 0) {
      const auto& p = layers[i - 1].config;
      if (l.r_in != p.r_out) throw LoadError(who + ": r_in differs from the previous layer's r_out");
      if (l.signed_in != p.signed_out) throw LoadError(who + ": signedness differs from the previous layer's output");
    }
    if (L.weights.size() != static_cast<std::size_t>(l.rows()) * l.c_out)
      throw LoadError(who + ": weight count " + std::to_string(L.weights.size()) + " != K*C_in*C_out");
    const unsigned lim = 1u << l.r_w;
    for (auto u : L.weights)
      if (u >= lim) throw LoadError(who + ": weight code does not fit r_w bits");
    if (l.kind == LayerKind::Fc) {
      s = {1, 1, l.c_out};
    } else {
      s = {l.out_h(s.h), l.out_w(s.w), l.c_out};
      if (s.h < 1 || s.w < 1) throw LoadError(who + ": empty output map");
    }
  }
  if (calibration) {
    for (const auto& c : *calibration)
      if (c.code < 0 || c.code >= (1 << kCalBits) || c.assist_beta < kBetaMin || c.assist_beta > kBetaMax)
        throw LoadError("bundle: calibration entry out of range");
  }
}

// --- serialization -------------------------------------------------------

void write_bundle(std::ostream& os, const ModelBundle& b) {
  using namespace binio;
  b.validate();
  os.write(kMagic, 4);
  put<std::uint16_t>(os, b.version);
  put<std::uint16_t>(os, kEndianTag);
  put<std::uint32_t>(os, b.input_h);
  put<std::uint32_t>(os, b.input_w);
  put<std::uint32_t>(os, b.input_c);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(b.layers.size()));
  put<std::uint32_t>(os, b.calibration ? kFlagCalibration : 0);
  put<std::uint32_t>(os, 0);
  for (const auto& L : b.layers) {
    const auto& l = L.config;
    std::ostringstream rec;
    put<std::uint8_t>(rec, l.kind == LayerKind::Fc ? 1 : 0);
    put<std::uint8_t>(rec, l.kernel);
    put<std::uint8_t>(rec, l.stride);
    put<std::uint8_t>(rec, l.padding);
    put<std::uint32_t>(rec, l.c_in);
    put<std::uint32_t>(rec, l.c_out);
    put<std::uint8_t>(rec, l.r_in);
    put<std::uint8_t>(rec, l.r_w);
    put<std::uint8_t>(rec, l.r_out);
    put<std::uint8_t>(rec, l.gamma);
    put<std::uint8_t>(rec, (l.signed_in ? 1 : 0) | (l.signed_out ? 2 : 0));
    for (int i = 0; i < 3; ++i) put<std::uint8_t>(rec, 0);
    for (const auto& q : {L.in_q, L.w_q, L.out_q}) {
      put_f32(rec, q.scale);
      put_f32(rec, q.zero);
    }
    for (int o = 0; o < l.c_out; ++o) put<std::int8_t>(rec, l.beta.empty() ? 0 : l.beta[o]);
    // Per output, per filter row, r_w bits LSB first: the order of the block's columns.
    const std::size_t nbits = static_cast<std::size_t>(l.rows()) * l.c_out * l.r_w;
    std::vector<std::uint8_t> packed((nbits + 7) / 8, 0);
    std::size_t bit = 0;
    for (int o = 0; o < l.c_out; ++o)
      for (int r = 0; r < l.rows(); ++r) {
        const unsigned u = L.weights[static_cast<std::size_t>(r) * l.c_out + o];
        for (int k = 0; k < l.r_w; ++k, ++bit)
          if ((u >> k) & 1u) packed[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
      }
    put<std::uint32_t>(rec, static_cast<std::uint32_t>(packed.size()));
    rec.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    const std::string body = rec.str();
    put<std::uint16_t>(os, static_cast<std::uint16_t>(l.name.size()));
    os.write(l.name.data(), static_cast<std::streamsize>(l.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(body.size()));
    os.write(body.data(), static_cast<std::streamsize>(body.size()));
  }
  if (b.calibration) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(b.calibration->size()));
    for (const auto& c : *b.calibration) {
      put<std::uint8_t>(os, c.code);
      put<std::uint8_t>(os, c.out_of_range ? 1 : 0);
      put<std::int8_t>(os, c.assist_beta);
    }
  }
}

ModelBundle read_bundle(std::istream& is) {
  using namespace binio;
  char magic[4];
  if (!is.read(magic, 4)) throw LoadError("bundle: truncated header");
  if (!std::equal(magic, magic + 4, kMagic)) throw LoadError("bundle: bad magic, expected CIMB");
  ModelBundle b;
  b.version = get<std::uint16_t>(is, "header");
  if (b.version != kBundleVersion)
    throw LoadError("bundle: unsupported version " + std::to_string(b.version));
  if (get<std::uint16_t>(is, "header") != kEndianTag) throw LoadError("bundle: endianness tag mismatch");
  b.input_h = static_cast<int>(get<std::uint32_t>(is, "header"));
  b.input_w = static_cast<int>(get<std::uint32_t>(is, "header"));
  b.input_c = static_cast<int>(get<std::uint32_t>(is, "header"));
  const auto n_layers = get<std::uint32_t>(is, "header");
  const auto flags = get<std::uint32_t>(is, "header");
  if (get<std::uint32_t>(is, "header") != 0 || (flags & ~kFlagCalibration))
    throw LoadError("bundle: reserved header bits set");
  if (n_layers > 4096) throw LoadError("bundle: implausible layer count");

  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::string idx = layer_label(i, "");
    const auto name_len = get<std::uint16_t>(is, idx + " name");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw LoadError("truncated " + idx + " name");
    const std::string who = layer_label(i, name);
    const auto rec_len = get<std::uint32_t>(is, who + " length");
    std::string body;
    char chunk[4096];
    while (body.size() < rec_len) {
      const auto want = std::min<std::size_t>(sizeof chunk, rec_len - body.size());
      is.read(chunk, static_cast<std::streamsize>(want));
      body.append(chunk, static_cast<std::size_t>(is.gcount()));
      if (static_cast<std::size_t>(is.gcount()) != want)
        throw LoadError("truncated " + who + ": record needs " + std::to_string(rec_len) + " bytes, " +
                        std::to_string(body.size()) + " available");
    }
    std::istringstream rec(body);
    BundleLayer L;
    auto& l = L.config;
    l.name = name;
    const auto kind = get<std::uint8_t>(rec, who);
    if (kind > 1) throw LoadError(who + ": unknown layer kind");
    l.kind = kind == 1 ? LayerKind::Fc : LayerKind::Conv;
    l.kernel = get<std::uint8_t>(rec, who);
    l.stride = get<std::uint8_t>(rec, who);
    l.padding = get<std::uint8_t>(rec, who);
    l.c_in = static_cast<int>(get<std::uint32_t>(rec, who));
    l.c_out = static_cast<int>(get<std::uint32_t>(rec, who));
    l.r_in = get<std::uint8_t>(rec, who);
    l.r_w = get<std::uint8_t>(rec, who);
    l.r_out = get<std::uint8_t>(rec, who);
    l.gamma = get<std::uint8_t>(rec, who);
    const auto lf = get<std::uint8_t>(rec, who);
    if (lf & ~3u) throw LoadError(who + ": unknown flag bits");
    l.signed_in = lf & 1;
    l.signed_out = lf & 2;
    for (int k = 0; k < 3; ++k)
      if (get<std::uint8_t>(rec, who) != 0) throw LoadError(who + ": reserved bytes set");
    for (QuantParams* q : {&L.in_q, &L.w_q, &L.out_q}) {
      q->scale = get_f32(rec, who);
      q->zero = get_f32(rec, who);
    }
    if (l.c_out < 1 || l.c_out > (1 << 20) || l.c_in < 1 || l.c_in > (1 << 20))
      throw LoadError(who + ": implausible channel counts");
    l.beta.resize(l.c_out);
    for (auto& x : l.beta) x = get<std::int8_t>(rec, who + " beta");
    if (l.r_w < 1 || l.r_w > 4 || l.r_in < 1 || l.r_in > 8 || l.r_out < 1 || l.r_out > 8)
      throw LoadError(who + ": unsupported precision " + std::to_string(l.r_in) + "/" + std::to_string(l.r_w) +
                      "/" + std::to_string(l.r_out) + " (max in/w/out is 8/4/8)");
    const auto wbytes = get<std::uint32_t>(rec, who + " weights");
    const std::size_t nbits = static_cast<std::size_t>(l.rows()) * l.c_out * l.r_w;
    if (wbytes != (nbits + 7) / 8)
      throw LoadError(who + ": weight payload " + std::to_string(wbytes) + " bytes, expected " +
                      std::to_string((nbits + 7) / 8));
    std::vector<std::uint8_t> packed(wbytes);
    if (!rec.read(reinterpret_cast<char*>(packed.data()), wbytes)) throw LoadError("truncated " + who + " weights");
    if (rec.peek() != std::char_traits<char>::eof()) throw LoadError(who + ": record length mismatch");
    if (nbits % 8 && (packed.back() >> (nbits % 8))) throw LoadError(who + ": nonzero padding bits");
    L.weights.assign(static_cast<std::size_t>(l.rows()) * l.c_out, 0);
    std::size_t bit = 0;
    for (int o = 0; o < l.c_out; ++o)
      for (int r = 0; r < l.rows(); ++r) {
        unsigned u = 0;
        for (int k = 0; k < l.r_w; ++k, ++bit) u |= ((packed[bit / 8] >> (bit % 8)) & 1u) << k;
        L.weights[static_cast<std::size_t>(r) * l.c_out + o] = static_cast<std::uint8_t>(u);
      }
    b.layers.push_back(std::move(L));
  }
  if (flags & kFlagCalibration) {
    const auto n = get<std::uint32_t>(is, "calibration");
    if (n > 65536) throw LoadError("bundle: implausible calibration size");
    std::vector<CalUnit> cal(n);
    for (auto& c : cal) {
      c.code = get<std::uint8_t>(is, "calibration");
      const auto f = get<std::uint8_t>(is, "calibration");
      if (f > 1) throw LoadError("bundle: calibration flag must be 0 or 1");
      c.out_of_range = f == 1;
      c.assist_beta = get<std::int8_t>(is, "calibration");
    }
    b.calibration = std::move(cal);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw LoadError("bundle: trailing bytes");
  b.validate();
  return b;
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open bundle " + path);
  return read_bundle(f);
}

void save_bundle(const std::string& path, const ModelBundle& b) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot write bundle " + path);
  write_bundle(f, b);
}

// --- mapping -------------------------------------------------------------

bool LayerMapping::operator==(const LayerMapping& o) const {
  if (layer != o.layer || rows != o.rows || units != o.units || columns_per_output != o.columns_per_output ||
      outputs_per_block != o.outputs_per_block || blocks_used != o.blocks_used || batches != o.batches ||
      row_passes != o.row_passes || multi_pass != o.multi_pass || passes.size() != o.passes.size())
    return false;
  for (std::size_t i = 0; i < passes.size(); ++i) {
    const auto &a = passes[i], &b = o.passes[i];
    if (a.c_in != b.c_in || a.c_out != b.c_out || a.beta != b.beta) return false;
  }
  return true;
}

MappingPlan plan_mapping(const ModelBundle& b, const MacroGeometry& g, bool allow_multi_pass) {
  g.validate();
  MappingPlan plan;
  for (std::size_t i = 0; i < b.layers.size(); ++i) {
    const auto& l = b.layers[i].config;
    LayerMapping m;
    m.layer = static_cast<int>(i);
    m.rows = l.rows();
    m.passes = layer_passes(l, g);
    const int ch_chunk = m.passes.front().c_in;
    const int out_chunk = m.passes.front().c_out;
    m.row_passes = (l.c_in + ch_chunk - 1) / ch_chunk;
    m.batches = (l.c_out + out_chunk - 1) / out_chunk;
    m.multi_pass = m.row_passes > 1;
    if (m.multi_pass && !allow_multi_pass)
      throw UnmappableError(layer_label(i, l.name) + ": " + std::to_string(m.rows) + " rows exceed the " +
                            std::to_string(g.n_rows) + "-row array");
    const int pass_rows = m.passes.front().rows();
    m.units = std::min(g.units_per_col, (pass_rows + g.rows_per_unit - 1) / g.rows_per_unit);
    m.columns_per_output = l.r_w;
    m.outputs_per_block = g.cols_per_block / l.r_w;
    m.blocks_used = (out_chunk + m.outputs_per_block - 1) / m.outputs_per_block;
    plan.layers.push_back(std::move(m));
  }
  return plan;
}

// --- inference -----------------------------------------------------------

namespace {

struct PassMacro {
  LayerConfig cfg;
  int c0 = 0;  // first input channel
  int o0 = 0;  // first output channel
  std::unique_ptr<Macro> macro;
};

std::vector<std::vector<PassMacro>> build_macros(const ModelBundle& b, const MappingPlan& plan,
                                                 const MacroConfig& base) {
  std::vector<std::vector<PassMacro>> out(b.layers.size());
  for (std::size_t i = 0; i < b.layers.size(); ++i) {
    const auto& L = b.layers[i];
    const auto& l = L.config;
    int c0 = 0, o0 = 0;
    for (const auto& pass : plan.layers[i].passes) {
      PassMacro pm;
      pm.cfg = pass;
      pm.c0 = c0;
      pm.o0 = o0;
      if (c0 > 0) std::fill(pm.cfg.beta.begin(), pm.cfg.beta.end(), 0);  // offset enters once
      MacroConfig mc = layer_macro_config(pass, base);
      mc.jobs = 1;
      pm.macro = std::make_unique<Macro>(mc);
      std::vector<std::uint8_t> w(static_cast<std::size_t>(pass.rows()) * pass.c_out);
      for (int t = 0; t < pass.taps(); ++t)
        for (int c = 0; c < pass.c_in; ++c)
          for (int o = 0; o < pass.c_out; ++o)
            w[static_cast<std::size_t>(filter_row(pass, t, c)) * pass.c_out + o] =
                L.weights[static_cast<std::size_t>(filter_row(l, t, c0 + c)) * l.c_out + o0 + o];
      pm.macro->load_weights(w, pass.rows(), pass.c_out);
      std::vector<int> beta = pm.cfg.beta;
      if (beta.empty()) beta.assign(pass.c_out, 0);
      pm.macro->set_beta(beta);
      if (b.calibration && mc.noise.sa_offset) pm.macro->set_calibration(*b.calibration);
      o0 += pass.c_out;
      if (o0 >= l.c_out) {
        o0 = 0;
        c0 += pass.c_in;
      }
      out[i].push_back(std::move(pm));
    }
  }
  return out;
}

Tensor slice_channels(const Tensor& x, int c0, int n) {
  Tensor s{x.h, x.w, n, {}};
  s.data.resize(static_cast<std::size_t>(x.h) * x.w * n);
  for (int y = 0; y < x.h; ++y)
    for (int xx = 0; xx < x.w; ++xx)
      for (int c = 0; c < n; ++c) s.at(y, xx, c) = x.at(y, xx, c0 + c);
  return s;
}

struct ImageRun {
  std::vector<std::int32_t> scores;
  std::vector<LayerStats> stats;
};

ImageRun run_image(const ModelBundle& b, const MappingPlan& plan,
                   const std::vector<std::vector<PassMacro>>& macros, const Tensor& image,
                   const PipelineConfig& pipe, std::uint64_t image_key, bool collect) {
  ImageRun r;
  if (collect) r.stats.resize(b.layers.size());
  Tensor x = image;
  for (std::size_t i = 0; i < b.layers.size(); ++i) {
    const auto& l = b.layers[i].config;
    if (l.kind == LayerKind::Fc && (x.h != 1 || x.w != 1)) x = Tensor{1, 1, x.h * x.w * x.c, x.data};
    const int ho = l.out_h(x.h), wo = l.out_w(x.w);
    const int mid = 1 << (l.r_out - 1);
    const int top = (1 << l.r_out) - 1;
    // Centered partial codes, summed over row passes.
    std::vector<std::int32_t> acc(static_cast<std::size_t>(ho) * wo * l.c_out, 0);
    for (std::size_t p = 0; p < macros[i].size(); ++p) {
      const auto& pm = macros[i][p];
      const Tensor in = plan.layers[i].row_passes == 1 && pm.cfg.c_in == x.c ? x : slice_channels(x, pm.c0, pm.cfg.c_in);
      const auto rep = simulate_layer(pm.cfg, in, pipe, *pm.macro, stream_key({image_key, i, p}));
      for (int y = 0; y < ho; ++y)
        for (int xx = 0; xx < wo; ++xx)
          for (int o = 0; o < pm.cfg.c_out; ++o) {
            const int v = rep.output.at(y, xx, o);
            acc[(static_cast<std::size_t>(y) * wo + xx) * l.c_out + pm.o0 + o] += l.signed_out ? v : v - mid;
          }
      if (collect) {
        auto& s = r.stats[i];
        s.cycles += rep.cycles;
        s.macro_ops += rep.macro_ops;
        s.saturated += rep.saturated;
        s.energy.merge(rep.energy);
      }
    }
    Tensor y{ho, wo, l.c_out, {}};
    y.data.resize(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) {
      const int code = std::clamp(mid + acc[k], 0, top);
      y.data[k] = l.signed_out ? code - mid : code;
    }
    x = std::move(y);
  }
  r.scores = x.data;
  return r;
}

int argmax(const std::vector<std::int32_t>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& labels) {
  int n = 0, ok = 0;
  for (std::size_t i = 0; i < labels.size() && i < pred.size(); ++i) {
    if (labels[i] < 0) continue;
    ++n;
    ok += pred[i] == labels[i];
  }
  return n ? static_cast<double>(ok) / n : -1.0;
}

}  // namespace

NetworkResult run_network(const ModelBundle& b, const std::vector<Tensor>& images,
                          const std::vector<int>& labels, const RunOptions& opt) {
  b.validate();
  if (!labels.empty() && labels.size() != images.size()) throw UsageError("labels must match images");
  for (const auto& im : images)
    if (im.h != b.input_h || im.w != b.input_w || im.c != b.input_c)
      throw UsageError("image shape does not match the bundle input");
  const MappingPlan plan = plan_mapping(b, opt.macro.geometry);
  const auto macros = build_macros(b, plan, opt.macro);
  const int n = static_cast<int>(images.size());

  NetworkResult res;
  std::vector<ImageRun> runs(n);
  detail::parallel_for(n, opt.jobs, [&](int k) {
    runs[k] = run_image(b, plan, macros, images[k], opt.pipe, static_cast<std::uint64_t>(k), true);
  });
  res.layers.resize(b.layers.size());
  for (std::size_t i = 0; i < b.layers.size(); ++i) res.layers[i].name = b.layers[i].config.name;
  for (auto& r : runs) {
    res.predictions.push_back(argmax(r.scores));
    for (std::size_t i = 0; i < r.stats.size(); ++i) {
      auto& s = res.layers[i];
      s.cycles += r.stats[i].cycles;
      s.macro_ops += r.stats[i].macro_ops;
      s.saturated += r.stats[i].saturated;
      s.energy.merge(r.stats[i].energy);
    }
    res.scores.push_back(std::move(r.scores));
  }
  for (const auto& L : b.layers) res.extrapolated = res.extrapolated || L.config.gamma > 16;
  res.accuracy = labels.empty() ? -1.0 : accuracy(res.predictions, labels);

  if (opt.with_oracle) {
    if (opt.macro.noise.any_enabled()) {
      MacroConfig ideal = opt.macro;
      ideal.noise = NonidealityConfig::ideal();
      const auto ideal_macros = build_macros(b, plan, ideal);
      res.oracle_predictions.resize(n);
      detail::parallel_for(n, opt.jobs, [&](int k) {
        res.oracle_predictions[k] =
            argmax(run_image(b, plan, ideal_macros, images[k], opt.pipe, static_cast<std::uint64_t>(k), false).scores);
      });
    } else {
      res.oracle_predictions = res.predictions;
    }
    res.oracle_accuracy = labels.empty() ? -1.0 : accuracy(res.oracle_predictions, labels);
  }
  return res;
}

// --- image files and reference networks ------------------------------------

ImageSet read_images_csv(std::istream& is, int h, int w, int c) {
  ImageSet s;
  std::string line;
  int lineno = 0;
  const std::size_t n = static_cast<std::size_t>(h) * w * c;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int label;
    if (!(ls >> label)) throw LoadError("images line " + std::to_string(lineno) + ": missing label");
    Tensor t{h, w, c, {}};
    t.data.reserve(n);
    std::int32_t v;
    while (ls >> v) t.data.push_back(v);
    if (!ls.eof()) throw LoadError("images line " + std::to_string(lineno) + ": non-integer value");
    if (t.data.size() != n)
      throw LoadError("images line " + std::to_string(lineno) + ": " + std::to_string(t.data.size()) +
                      " values, expected " + std::to_string(n));
    s.images.push_back(std::move(t));
    s.labels.push_back(label);
  }
  return s;
}

void write_images_csv(std::ostream& os, const ImageSet& s) {
  for (std::size_t i = 0; i < s.images.size(); ++i) {
    os << (i < s.labels.size() ? s.labels[i] : -1);
    for (auto v : s.images[i].data) os << ',' << v;
    os << '\n';
  }
}

ModelBundle reference_bundle(const std::string& name, std::uint64_t seed) {
  ModelBundle b;
  auto layer = [](std::string n, LayerKind kind, int c_in, int c_out, int r_in, int r_w, int r_out, int gamma) {
    BundleLayer L;
    auto& l = L.config;
    l.name = std::move(n);
    l.kind = kind;
    l.c_in = c_in;
    l.c_out = c_out;
    l.r_in = r_in;
    l.r_w = r_w;
    l.r_out = r_out;
    l.gamma = gamma;
    l.beta.assign(c_out, 0);
    return L;
  };
  if (name == "mlp") {
    b.input_h = b.input_w = 1;
    b.input_c = 64;
    b.layers.push_back(layer("fc1", LayerKind::Fc, 64, 32, 8, 2, 8, 4));
    b.layers.push_back(layer("fc2", LayerKind::Fc, 32, 10, 8, 2, 8, 4));
  } else if (name == "cnn") {
    b.input_h = b.input_w = 8;
    b.input_c = 4;
    b.layers.push_back(layer("conv1", LayerKind::Conv, 4, 8, 4, 4, 4, 2));
    auto c2 = layer("conv2", LayerKind::Conv, 8, 16, 4, 4, 4, 2);
    c2.config.stride = 2;
    b.layers.push_back(c2);
    b.layers.push_back(layer("fc", LayerKind::Fc, 4 * 4 * 16, 10, 4, 2, 4, 4));
  } else {
    throw UsageError("unknown reference network '" + name + "' (mlp, cnn)");
  }
  RngStream rng(seed, stream_key({0xb0d1eULL}));
  for (auto& L : b.layers) {
    const auto& l = L.config;
    L.weights.resize(static_cast<std::size_t>(l.rows()) * l.c_out);
    for (auto& u : L.weights) u = static_cast<std::uint8_t>(rng.uniform_int(0, (1 << l.r_w) - 1));
    for (auto& beta : L.config.beta) beta = static_cast<int>(rng.uniform_int(-3, 3));
  }
  b.validate();
  return b;
}

ImageSet random_images(const ModelBundle& b, int count, std::uint64_t seed) {
  const auto& l0 = b.layers.at(0).config;
  const int lo = l0.signed_in ? -(1 << (l0.r_in - 1)) : 0;
  const int hi = l0.signed_in ? (1 << (l0.r_in - 1)) - 1 : (1 << l0.r_in) - 1;
  ImageSet s;
  RngStream rng(seed, stream_key({0x1a6e5ULL}));
  for (int i = 0; i < count; ++i) {
    Tensor t{b.input_h, b.input_w, b.input_c, {}};
    t.data.resize(static_cast<std::size_t>(t.h) * t.w * t.c);
    for (auto& v : t.data) v = static_cast<std::int32_t>(rng.uniform_int(lo, hi));
    s.images.push_back(std::move(t));
  }
  return s;
}

}  // namespace cimsim
