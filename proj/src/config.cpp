#include "cimsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "cimsim/errors.hpp"

namespace cimsim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Config::parse(std::istream& is, const std::string& origin, const std::string& base_dir) {
  parse_impl(is, origin, base_dir, 0);
}

void Config::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  const auto dir = std::filesystem::path(path).parent_path().string();
  parse_impl(f, path, dir.empty() ? "." : dir, 0);
}

void Config::parse_impl(std::istream& is, const std::string& origin, const std::string& base_dir, int depth) {
  if (depth > 16) throw ConfigError(origin + ": include nesting too deep");
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (key == "include" && section.empty()) {
      const auto path = std::filesystem::path(base_dir) / value;
      std::ifstream f(path);
      if (!f) throw ConfigError(where + ": cannot open include " + path.string());
      const auto dir = path.parent_path().string();
      parse_impl(f, path.string(), dir.empty() ? "." : dir, depth + 1);
      continue;
    }
    kv_[section.empty() ? key : section + "." + key] = value;
  }
}

void Config::set(const std::string& key, const std::string& value) { kv_[lower(trim(key))] = trim(value); }

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.find('.') == std::string::npos) throw ConfigError("override key '" + key + "' needs a section");
  set(key, assignment.substr(eq + 1));
}

void Config::apply_env(char** envp) {
  static const std::string prefix = "IMAGINE_SIM_";
  if (!envp) return;
  std::vector<std::pair<std::string, std::string>> found;
  for (char** e = envp; *e; ++e) {
    const std::string entry(*e);
    if (entry.rfind(prefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = lower(entry.substr(prefix.size(), eq - prefix.size()));
    const auto sep = name.find("__");
    if (sep == std::string::npos) throw ConfigError("environment override " + entry.substr(0, eq) + " needs SECTION__KEY");
    name = name.substr(0, sep) + "." + name.substr(sep + 2);
    found.emplace_back(name, entry.substr(eq + 1));
  }
  std::sort(found.begin(), found.end());  // independent of environment order
  for (const auto& [k, v] : found) set(k, v);
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return std::nullopt;
  return it->second;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : kv_) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

// --- typed binding ---------------------------------------------------------

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& v, const char* want) {
  throw ConfigError("key '" + key + "': '" + v + "' is not " + want);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto l = lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<int>(to_int(key, item)));
  }
  return out;
}

std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string fmt_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Binding {
  std::string key;
  std::function<std::string(const Settings&)> get;
  std::function<void(Settings&, const std::string&)> set;
};

#define CIMSIM_DOUBLE(k, field)                                                   \
  Binding {                                                                       \
    k, [](const Settings& s) { return fmt(s.field); },                           \
        [](Settings& s, const std::string& v) { s.field = to_double(k, v); }      \
  }
#define CIMSIM_INT(k, field)                                                          \
  Binding {                                                                           \
    k, [](const Settings& s) { return std::to_string(s.field); },                    \
        [](Settings& s, const std::string& v) { s.field = static_cast<int>(to_int(k, v)); } \
  }
#define CIMSIM_BOOL(k, field)                                                     \
  Binding {                                                                       \
    k, [](const Settings& s) { return std::string(s.field ? "true" : "false"); }, \
        [](Settings& s, const std::string& v) { s.field = to_bool(k, v); }        \
  }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      CIMSIM_INT("geometry.n_rows", macro.geometry.n_rows),
      CIMSIM_INT("geometry.n_cols", macro.geometry.n_cols),
      CIMSIM_INT("geometry.rows_per_unit", macro.geometry.rows_per_unit),
      CIMSIM_INT("geometry.units_per_col", macro.geometry.units_per_col),
      CIMSIM_INT("geometry.cols_per_block", macro.geometry.cols_per_block),
      CIMSIM_INT("geometry.n_blocks", macro.geometry.n_blocks),

      CIMSIM_DOUBLE("electrical.c_c", macro.electrical.c_c),
      CIMSIM_DOUBLE("electrical.c_p_per_unit", macro.electrical.c_p_per_unit),
      CIMSIM_DOUBLE("electrical.c_p_glob", macro.electrical.c_p_glob),
      CIMSIM_DOUBLE("electrical.c_mb", macro.electrical.c_mb),
      CIMSIM_DOUBLE("electrical.c_adc", macro.electrical.c_adc),
      CIMSIM_DOUBLE("electrical.c_acc", macro.electrical.c_acc),
      CIMSIM_DOUBLE("electrical.c_in_wire_per_cell", macro.electrical.c_in_wire_per_cell),
      CIMSIM_DOUBLE("electrical.v_ddl", macro.electrical.v_ddl),
      CIMSIM_DOUBLE("electrical.v_ddh", macro.electrical.v_ddh),

      Binding{"macro.topology",
              [](const Settings& s) {
                switch (s.macro.topology.variant) {
                  case DplVariant::Baseline: return std::string("baseline");
                  case DplVariant::SerialSplit: return std::string("serial");
                  case DplVariant::ParallelSplit: return std::string("parallel");
                }
                return std::string();
              },
              [](Settings& s, const std::string& v) {
                const auto l = lower(v);
                if (l == "baseline") s.macro.topology.variant = DplVariant::Baseline;
                else if (l == "serial") s.macro.topology.variant = DplVariant::SerialSplit;
                else if (l == "parallel") s.macro.topology.variant = DplVariant::ParallelSplit;
                else bad_value("macro.topology", v, "baseline, serial or parallel");
              }},
      CIMSIM_INT("macro.units", macro.topology.connected_units),
      CIMSIM_INT("macro.r_in", macro.r_in),
      CIMSIM_INT("macro.r_w", macro.r_w),
      CIMSIM_BOOL("macro.structural_adc", macro.structural_adc),
      Binding{"macro.injection_map", [](const Settings& s) { return s.macro.injection_map; },
              [](Settings& s, const std::string& v) { s.macro.injection_map = v; }},
      CIMSIM_INT("adc.r_out", macro.adc.r_out),
      CIMSIM_INT("adc.gamma", macro.adc.gamma),

      Binding{"noise.seed", [](const Settings& s) { return std::to_string(s.macro.noise.seed); },
              [](Settings& s, const std::string& v) {
                const auto x = to_int("noise.seed", v);
                if (x < 0) bad_value("noise.seed", v, "a non-negative integer");
                s.macro.noise.seed = static_cast<std::uint64_t>(x);
              }},
      CIMSIM_DOUBLE("noise.temperature_k", macro.noise.temperature_k),
      CIMSIM_BOOL("noise.dp_thermal", macro.noise.dp_thermal),
      CIMSIM_BOOL("noise.dpl_ktc", macro.noise.dpl_ktc),
      CIMSIM_BOOL("noise.settling", macro.noise.settling),
      Binding{"noise.corner",
              [](const Settings& s) {
                switch (s.macro.noise.corner) {
                  case Corner::SS: return std::string("SS");
                  case Corner::TT: return std::string("TT");
                  case Corner::FF: return std::string("FF");
                }
                return std::string();
              },
              [](Settings& s, const std::string& v) {
                const auto l = lower(v);
                if (l == "ss") s.macro.noise.corner = Corner::SS;
                else if (l == "tt") s.macro.noise.corner = Corner::TT;
                else if (l == "ff") s.macro.noise.corner = Corner::FF;
                else bad_value("noise.corner", v, "SS, TT or FF");
              }},
      CIMSIM_DOUBLE("noise.t_dp", macro.noise.t_dp),
      CIMSIM_DOUBLE("noise.tau_serial", macro.noise.tau_serial),
      CIMSIM_DOUBLE("noise.tau_parallel", macro.noise.tau_parallel),
      CIMSIM_DOUBLE("noise.settling_e_max", macro.noise.settling_e_max),
      CIMSIM_DOUBLE("noise.cc_mismatch_sigma", macro.noise.cc_mismatch_sigma),
      CIMSIM_BOOL("noise.injection", macro.noise.injection),
      CIMSIM_DOUBLE("noise.injection_bound", macro.noise.injection_bound),
      CIMSIM_DOUBLE("noise.injection_slope_in", macro.noise.injection_slope_in),
      CIMSIM_DOUBLE("noise.injection_slope_acc", macro.noise.injection_slope_acc),
      CIMSIM_BOOL("noise.leakage", macro.noise.leakage),
      CIMSIM_DOUBLE("noise.leak_drift_at_rail", macro.noise.leak_drift_at_rail),
      CIMSIM_DOUBLE("noise.leak_horizon", macro.noise.leak_horizon),
      CIMSIM_DOUBLE("noise.cap_imbalance_sigma", macro.noise.cap_imbalance_sigma),
      CIMSIM_BOOL("noise.sa_offset", macro.noise.sa_offset),
      CIMSIM_DOUBLE("noise.sa_sigma_prelayout", macro.noise.sa_sigma_prelayout),
      CIMSIM_DOUBLE("noise.sa_postlayout_factor", macro.noise.sa_postlayout_factor),
      CIMSIM_BOOL("noise.calibrate", macro.noise.calibrate),
      CIMSIM_BOOL("noise.abn_assist", macro.noise.abn_assist),
      CIMSIM_DOUBLE("noise.sa_noise_sigma", macro.noise.sa_noise_sigma),
      CIMSIM_DOUBLE("noise.kickback", macro.noise.kickback),
      CIMSIM_BOOL("noise.ladder_grid", macro.noise.ladder_grid),
      CIMSIM_DOUBLE("noise.ladder_mismatch_sigma", macro.noise.ladder_mismatch_sigma),
      CIMSIM_DOUBLE("noise.supply_noise_slope", macro.noise.supply_noise_slope),

      CIMSIM_DOUBLE("energy.charge_share", macro.energy.charge_share),
      CIMSIM_DOUBLE("energy.sa_decision", macro.energy.sa_decision),
      CIMSIM_DOUBLE("energy.ladder_current", macro.energy.ladder_current),
      CIMSIM_DOUBLE("energy.ladder_settle", macro.energy.ladder_settle),
      CIMSIM_DOUBLE("energy.register_bit", macro.energy.register_bit),
      CIMSIM_DOUBLE("energy.shift_sub_block", macro.energy.shift_sub_block),
      CIMSIM_DOUBLE("energy.lmem_access", macro.energy.lmem_access),
      CIMSIM_DOUBLE("energy.leakage_per_cycle", macro.energy.leakage_per_cycle),
      CIMSIM_DOUBLE("energy.dram_per_bit", macro.energy.dram_per_bit),

      Binding{"pipeline.mode", [](const Settings& s) { return std::string(to_string(s.pipe.mode)); },
              [](Settings& s, const std::string& v) {
                const auto l = lower(v);
                if (l == "serial") s.pipe.mode = PipeMode::Serial;
                else if (l == "pipelined") s.pipe.mode = PipeMode::Pipelined;
                else bad_value("pipeline.mode", v, "serial or pipelined");
              }},
      CIMSIM_INT("pipeline.n_cim", pipe.n_cim),
      CIMSIM_INT("pipeline.bw", pipe.bw),
      CIMSIM_DOUBLE("pipeline.clock_hz", pipe.clock_hz),

      Binding{"layer.name", [](const Settings& s) { return s.layer.name; },
              [](Settings& s, const std::string& v) { s.layer.name = v; }},
      Binding{"layer.kind", [](const Settings& s) { return std::string(to_string(s.layer.kind)); },
              [](Settings& s, const std::string& v) {
                const auto l = lower(v);
                if (l == "conv") s.layer.kind = LayerKind::Conv;
                else if (l == "fc") s.layer.kind = LayerKind::Fc;
                else bad_value("layer.kind", v, "conv or fc");
              }},
      CIMSIM_INT("layer.kernel", layer.kernel),
      CIMSIM_INT("layer.c_in", layer.c_in),
      CIMSIM_INT("layer.c_out", layer.c_out),
      CIMSIM_INT("layer.r_in", layer.r_in),
      CIMSIM_INT("layer.r_w", layer.r_w),
      CIMSIM_INT("layer.r_out", layer.r_out),
      CIMSIM_INT("layer.gamma", layer.gamma),
      Binding{"layer.beta", [](const Settings& s) { return fmt_list(s.layer.beta); },
              [](Settings& s, const std::string& v) { s.layer.beta = to_int_list("layer.beta", v); }},
      CIMSIM_INT("layer.stride", layer.stride),
      CIMSIM_INT("layer.padding", layer.padding),
      CIMSIM_BOOL("layer.signed_in", layer.signed_in),
      CIMSIM_BOOL("layer.signed_out", layer.signed_out),

      CIMSIM_INT("image.h", image_h),
      CIMSIM_INT("image.w", image_w),

      Binding{"characterize.gammas", [](const Settings& s) { return fmt_list(s.characterize.gammas); },
              [](Settings& s, const std::string& v) {
                s.characterize.gammas = to_int_list("characterize.gammas", v);
              }},
      CIMSIM_INT("characterize.iters", characterize.iters),
      CIMSIM_INT("characterize.fill_step", characterize.fill_step),
      CIMSIM_INT("characterize.fc_rows", characterize.fc_rows),
  };
  return table;
}

#undef CIMSIM_DOUBLE
#undef CIMSIM_INT
#undef CIMSIM_BOOL

}  // namespace

Settings resolve(const Config& c) {
  Settings s;
  const auto& table = bindings();
  // noise.ideal switches every source off before the individual keys apply.
  if (const auto v = c.get("noise.ideal"); v && to_bool("noise.ideal", *v)) {
    const auto seed = s.macro.noise.seed;
    s.macro.noise = NonidealityConfig::ideal();
    s.macro.noise.seed = seed;
  }
  for (const auto& [k, v] : c.entries()) {
    if (k == "noise.ideal") continue;
    const auto it = std::find_if(table.begin(), table.end(), [&](const Binding& b) { return b.key == k; });
    if (it == table.end()) throw ConfigError("unknown config key '" + k + "'");
    it->set(s, v);
  }
  return s;
}

std::string dump_settings(const Settings& s) {
  std::string out, section;
  for (const auto& b : bindings()) {
    const auto dot = b.key.find('.');
    const std::string sec = b.key.substr(0, dot);
    if (sec != section) {
      out += (out.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += b.key.substr(dot + 1) + " = " + b.get(s) + "\n";
  }
  return out;
}

}  // namespace cimsim
