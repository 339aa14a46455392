#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cimsim/characterize.hpp"
#include "cimsim/config.hpp"
#include "cimsim/dataflow.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/macro_engine.hpp"
#include "cimsim/model_runtime.hpp"

namespace py = pybind11;
using namespace cimsim;

namespace {

using Overrides = std::map<std::string, std::string>;

Settings settings_from(const Overrides& o) {
  Config c;
  for (const auto& [k, v] : o) c.set(k, v);
  return resolve(c);
}

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using I32Array = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;

// [rows, outputs] array to a flat row-major vector.
std::vector<std::uint8_t> weight_matrix(const U8Array& w, int& rows, int& outputs) {
  if (w.ndim() != 2) throw py::value_error("weights must be a 2-D [rows, outputs] array");
  rows = static_cast<int>(w.shape(0));
  outputs = static_cast<int>(w.shape(1));
  return {w.data(), w.data() + w.size()};
}

py::dict trace_dict(const TraceReport& r) {
  py::dict d;
  d["codes"] = r.codes;
  d["saturated"] = std::vector<int>(r.saturated.begin(), r.saturated.end());
  d["oracle_codes"] = r.oracle_codes;
  d["v_mbiw"] = r.v_mbiw;
  d["energy_j"] = r.energy.total();
  d["extrapolated"] = r.extrapolated;
  return d;
}

py::dict spec_dict(const HwNoiseSpec& s) {
  py::dict d;
  d["gammas"] = s.gammas;
  d["rms_lsb"] = s.rms_lsb;
  d["settling_inl_lsb"] = s.settling_inl_lsb;
  d["injection_bound_lsb"] = s.injection_bound_lsb;
  d["sa_residual_sigma_lsb"] = s.sa_residual_sigma_lsb;
  return d;
}

HwNoiseSpec spec_from(const py::dict& d) {
  HwNoiseSpec s;
  s.gammas = d["gammas"].cast<std::vector<int>>();
  s.rms_lsb = d["rms_lsb"].cast<std::vector<double>>();
  s.settling_inl_lsb = d["settling_inl_lsb"].cast<double>();
  s.injection_bound_lsb = d["injection_bound_lsb"].cast<double>();
  s.sa_residual_sigma_lsb = d["sa_residual_sigma_lsb"].cast<double>();
  s.validate();
  return s;
}

PipelineConfig pipe_from(const std::string& mode, int n_cim, int bw) {
  PipelineConfig p;
  if (mode == "serial") p.mode = PipeMode::Serial;
  else if (mode == "pipelined") p.mode = PipeMode::Pipelined;
  else throw ConfigError("mode must be serial or pipelined");
  p.n_cim = n_cim;
  p.bw = bw;
  p.validate();
  return p;
}

py::dict cycles_dict(const CyclesPerOutput& c) {
  py::dict d;
  d["t_in"] = c.t_in;
  d["t_out"] = c.t_out;
  d["n_in"] = c.n_in;
  d["n_out"] = c.n_out;
  d["cycles"] = c.cycles;
  d["row_start"] = c.row_start;
  d["regime"] = std::string(to_string(c.regime));
  return d;
}

std::vector<Tensor> images_from(const I32Array& a) {
  if (a.ndim() != 4) throw py::value_error("images must be a 4-D [n, h, w, c] array");
  const auto n = a.shape(0);
  const int h = static_cast<int>(a.shape(1)), w = static_cast<int>(a.shape(2)), c = static_cast<int>(a.shape(3));
  const std::size_t per = static_cast<std::size_t>(h) * w * c;
  std::vector<Tensor> out;
  for (py::ssize_t i = 0; i < n; ++i)
    out.push_back(Tensor{h, w, c, std::vector<std::int32_t>(a.data() + i * per, a.data() + (i + 1) * per)});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Charge-domain compute-in-memory macro simulator";
  m.attr("__version__") = CIMSIM_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_ValueError);
  py::register_exception<UnmappableError>(m, "UnmappableError", PyExc_RuntimeError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<SequencingError>(m, "SequencingError", PyExc_RuntimeError);

  m.def("default_config", [] { return dump_settings(Settings{}); },
        "Every configuration key with its built-in default, in config-file layout.");
  m.def("resolve_config", [](const Overrides& o) { return dump_settings(settings_from(o)); },
        py::arg("overrides"), "Defaults with {'section.key': 'value'} overrides applied.");
  m.def("config_hash", [](const Overrides& o) { return fnv1a64(dump_settings(settings_from(o))); },
        py::arg("overrides") = Overrides{});

  m.def(
      "integer_oracle",
      [](const std::vector<std::uint32_t>& inputs, const U8Array& weights, int r_in, int r_w, int r_out,
         int gamma, const std::vector<int>& beta) {
        int rows = 0, outputs = 0;
        CimCycleInput in{inputs, weight_matrix(weights, rows, outputs), outputs, beta};
        if (rows != static_cast<int>(inputs.size())) throw py::value_error("weights rows != len(inputs)");
        MacroConfig cfg;
        cfg.r_in = r_in;
        cfg.r_w = r_w;
        cfg.adc.r_out = r_out;
        cfg.adc.gamma = gamma;
        cfg.topology = DplTopology::serial((rows + cfg.geometry.rows_per_unit - 1) / cfg.geometry.rows_per_unit);
        cfg.validate();
        const OracleResult r = integer_oracle(in, cfg);
        return py::make_tuple(r.codes, std::vector<int>(r.saturated.begin(), r.saturated.end()));
      },
      py::arg("inputs"), py::arg("weights"), py::arg("r_in"), py::arg("r_w"), py::arg("r_out"),
      py::arg("gamma") = 1, py::arg("beta") = std::vector<int>{},
      "Exact ideal codes and saturation flags for one macro invocation.");

  py::class_<Macro>(m, "Macro")
      .def(py::init([](const Overrides& o) { return Macro(settings_from(o).macro); }),
           py::arg("overrides") = Overrides{})
      .def_property_readonly("rows", [](const Macro& mc) { return mc.config().rows(); })
      .def_property_readonly("n_outputs", [](const Macro& mc) { return mc.config().n_outputs(); })
      .def(
          "load_weights",
          [](Macro& mc, const U8Array& w) {
            int rows = 0, outputs = 0;
            const auto flat = weight_matrix(w, rows, outputs);
            mc.load_weights(flat, rows, outputs);
          },
          py::arg("weights"), "Offset-binary codes, [rows, outputs].")
      .def("set_beta", &Macro::set_beta, py::arg("beta"))
      .def("calibrate", &Macro::calibrate)
      .def("calibration",
           [](const Macro& mc) {
             std::vector<py::tuple> out;
             for (const auto& c : mc.calibration()) out.push_back(py::make_tuple(c.code, c.out_of_range, c.assist_beta));
             return out;
           })
      .def(
          "run",
          [](const Macro& mc, const std::vector<std::uint32_t>& inputs, std::uint64_t key) {
            TraceReport r;
            {
              py::gil_scoped_release nogil;
              r = mc.run(inputs, key);
            }
            return trace_dict(r);
          },
          py::arg("inputs"), py::arg("key") = 0);

  m.def(
      "alpha_eff",
      [](const std::string& topology, int units, const Overrides& o) {
        const Settings s = settings_from(o);
        const auto& g = s.macro.geometry;
        DplTopology t = topology == "baseline" ? DplTopology::baseline(g)
                        : topology == "serial" ? DplTopology::serial(units)
                        : topology == "parallel" ? DplTopology::parallel(units)
                                                 : throw ConfigError("unknown topology '" + topology + "'");
        t.validate(g);
        return alpha_eff(s.macro.electrical, g, t);
      },
      py::arg("topology"), py::arg("units") = 32, py::arg("overrides") = Overrides{});

  m.def(
      "characterize",
      [](const Overrides& o, std::vector<int> gammas, int iters, int fill_step, int cal_samples, int jobs) {
        const Settings s = settings_from(o);
        CharacterizeOptions opt = s.characterize;
        if (!gammas.empty()) opt.gammas = std::move(gammas);
        if (iters > 0) opt.iters = iters;
        if (fill_step > 0) opt.fill_step = fill_step;
        opt.jobs = jobs;
        TransferTable tt;
        CalibrationReport cal;
        {
          py::gil_scoped_release nogil;
          tt = characterize_transfer(s.macro, opt);
          cal = characterize_calibration(s.macro, cal_samples);
        }
        py::list summary;
        for (const auto& r : tt.summary) {
          py::dict d;
          d["gamma"] = r.gamma;
          d["slope"] = r.slope;
          d["mean_inl"] = r.mean_inl;
          d["peak_inl"] = r.peak_inl;
          d["max_rms"] = r.max_rms;
          d["extrapolated"] = r.extrapolated;
          summary.append(d);
        }
        py::dict out;
        out["summary"] = summary;
        out["noise_spec"] = spec_dict(make_noise_spec(tt.summary, cal, s.macro));
        out["calibration_rms_before"] = cal.rms_before;
        out["calibration_rms_after"] = cal.rms_after;
        return out;
      },
      py::arg("overrides") = Overrides{}, py::arg("gammas") = std::vector<int>{}, py::arg("iters") = 0,
      py::arg("fill_step") = 0, py::arg("cal_samples") = 200, py::arg("jobs") = 1,
      "Transfer and calibration sweeps; returns the summary and the noise spec.");

  m.def("write_noise_spec", [](const py::dict& d) {
    std::ostringstream os;
    write_noise_spec(os, spec_from(d));
    return os.str();
  });
  m.def("read_noise_spec", [](const std::string& text) {
    std::istringstream is(text);
    return spec_dict(read_noise_spec(is));
  });

  py::enum_<LayerKind>(m, "LayerKind").value("Conv", LayerKind::Conv).value("Fc", LayerKind::Fc);

  py::class_<LayerConfig>(m, "LayerConfig")
      .def(py::init<>())
      .def_readwrite("name", &LayerConfig::name)
      .def_readwrite("kind", &LayerConfig::kind)
      .def_readwrite("kernel", &LayerConfig::kernel)
      .def_readwrite("c_in", &LayerConfig::c_in)
      .def_readwrite("c_out", &LayerConfig::c_out)
      .def_readwrite("r_in", &LayerConfig::r_in)
      .def_readwrite("r_w", &LayerConfig::r_w)
      .def_readwrite("r_out", &LayerConfig::r_out)
      .def_readwrite("gamma", &LayerConfig::gamma)
      .def_readwrite("beta", &LayerConfig::beta)
      .def_readwrite("stride", &LayerConfig::stride)
      .def_readwrite("padding", &LayerConfig::padding)
      .def_readwrite("signed_in", &LayerConfig::signed_in)
      .def_readwrite("signed_out", &LayerConfig::signed_out)
      .def_property_readonly("rows", &LayerConfig::rows)
      .def("validate", &LayerConfig::validate);

  m.def(
      "cycles_per_output",
      [](const LayerConfig& l, const std::string& mode, int n_cim, int bw) {
        return cycles_dict(cycles_per_output(l, pipe_from(mode, n_cim, bw)));
      },
      py::arg("layer"), py::arg("mode") = "pipelined", py::arg("n_cim") = 1, py::arg("bw") = 128);
  m.def(
      "closed_form_cycles",
      [](const LayerConfig& l, int h, int w, const std::string& mode, int n_cim, int bw) {
        return closed_form_cycles(l, pipe_from(mode, n_cim, bw), h, w);
      },
      py::arg("layer"), py::arg("h"), py::arg("w"), py::arg("mode") = "pipelined", py::arg("n_cim") = 1,
      py::arg("bw") = 128);
  m.def(
      "simulate_timeline",
      [](const LayerConfig& l, int h, int w, const std::string& mode, int n_cim, int bw) {
        return simulate_timeline(l, pipe_from(mode, n_cim, bw), h, w).cycles;
      },
      py::arg("layer"), py::arg("h"), py::arg("w"), py::arg("mode") = "pipelined", py::arg("n_cim") = 1,
      py::arg("bw") = 128, "Cycle count from the event-stepped fetch/compute/store timeline.");

  py::class_<QuantParams>(m, "QuantParams")
      .def(py::init([](float scale, float zero) { return QuantParams{scale, zero}; }), py::arg("scale") = 1.0f,
           py::arg("zero") = 0.0f)
      .def_readwrite("scale", &QuantParams::scale)
      .def_readwrite("zero", &QuantParams::zero);

  py::class_<BundleLayer>(m, "BundleLayer")
      .def(py::init<>())
      .def_readwrite("config", &BundleLayer::config)
      .def_property(
          "weights",
          [](const BundleLayer& b) {
            const auto rows = static_cast<py::ssize_t>(b.config.rows());
            const auto cols = static_cast<py::ssize_t>(b.config.c_out);
            if (rows * cols != static_cast<py::ssize_t>(b.weights.size()))
              return py::array_t<std::uint8_t>(static_cast<py::ssize_t>(b.weights.size()), b.weights.data());
            return py::array_t<std::uint8_t>({rows, cols}, b.weights.data());
          },
          [](BundleLayer& b, const U8Array& w) { b.weights.assign(w.data(), w.data() + w.size()); },
          "Offset-binary codes, [filter_row, c_out].")
      .def_readwrite("in_q", &BundleLayer::in_q)
      .def_readwrite("w_q", &BundleLayer::w_q)
      .def_readwrite("out_q", &BundleLayer::out_q);

  py::class_<ModelBundle>(m, "ModelBundle")
      .def(py::init<>())
      .def_readwrite("input_h", &ModelBundle::input_h)
      .def_readwrite("input_w", &ModelBundle::input_w)
      .def_readwrite("input_c", &ModelBundle::input_c)
      .def_readwrite("layers", &ModelBundle::layers)
      .def_readonly("version", &ModelBundle::version)
      .def_property(
          "calibration",
          [](const ModelBundle& b) -> py::object {
            if (!b.calibration) return py::none();
            py::list l;
            for (const auto& c : *b.calibration) l.append(py::make_tuple(c.code, c.out_of_range, c.assist_beta));
            return l;
          },
          [](ModelBundle& b, const py::object& o) {
            if (o.is_none()) {
              b.calibration.reset();
              return;
            }
            std::vector<CalUnit> cal;
            for (const auto& t : o.cast<std::vector<std::tuple<int, bool, int>>>())
              cal.push_back(CalUnit{std::get<0>(t), std::get<1>(t), std::get<2>(t)});
            b.calibration = std::move(cal);
          })
      .def("validate", &ModelBundle::validate)
      .def("to_bytes",
           [](const ModelBundle& b) {
             std::ostringstream os(std::ios::binary);
             write_bundle(os, b);
             return py::bytes(os.str());
           })
      .def_static("from_bytes",
                  [](const py::bytes& data) {
                    std::istringstream is(std::string(data), std::ios::binary);
                    return read_bundle(is);
                  })
      .def("save", [](const ModelBundle& b, const std::string& path) { save_bundle(path, b); })
      .def_static("load", &load_bundle, py::arg("path"));

  m.def("reference_bundle", &reference_bundle, py::arg("name"), py::arg("seed") = 1);

  m.def(
      "run_network",
      [](const ModelBundle& b, const I32Array& images, const std::vector<int>& labels, const Overrides& o,
         bool with_oracle, int jobs) {
        const Settings s = settings_from(o);
        RunOptions opt;
        opt.macro = s.macro;
        opt.pipe = s.pipe;
        opt.with_oracle = with_oracle;
        opt.jobs = jobs;
        const auto imgs = images_from(images);
        NetworkResult r;
        {
          py::gil_scoped_release nogil;
          r = run_network(b, imgs, labels, opt);
        }
        py::dict d;
        d["scores"] = r.scores;
        d["predictions"] = r.predictions;
        d["oracle_predictions"] = r.oracle_predictions;
        d["accuracy"] = r.accuracy;
        d["oracle_accuracy"] = r.oracle_accuracy;
        d["extrapolated"] = r.extrapolated;
        py::list layers;
        for (const auto& l : r.layers) {
          py::dict ld;
          ld["name"] = l.name;
          ld["cycles"] = l.cycles;
          ld["macro_ops"] = l.macro_ops;
          ld["saturated"] = l.saturated;
          ld["energy_j"] = l.energy.total();
          layers.append(ld);
        }
        d["layers"] = layers;
        return d;
      },
      py::arg("bundle"), py::arg("images"), py::arg("labels") = std::vector<int>{},
      py::arg("overrides") = Overrides{}, py::arg("with_oracle") = true, py::arg("jobs") = 1,
      "Layer-by-layer inference over [n, h, w, c] images.");
}
