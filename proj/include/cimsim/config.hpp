#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cimsim/characterize.hpp"
#include "cimsim/dataflow.hpp"

namespace cimsim {

/// Flat "section.key" -> value store read from sectioned key-value files.
///
///   # comment
///   include = other.cfg      (relative to the including file)
///   [noise]
///   seed = 7
class Config {
 public:
  void parse(std::istream& is, const std::string& origin, const std::string& base_dir = ".");
  void parse_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  /// "section.key=value"
  void apply_override(const std::string& assignment);
  /// IMAGINE_SIM_<SECTION>__<KEY>=value, names case-insensitive.
  void apply_env(char** envp);

  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

  /// Sorted "key=value" lines.
  std::string canonical() const;
  std::uint64_t hash() const;

 private:
  void parse_impl(std::istream& is, const std::string& origin, const std::string& base_dir, int depth);
  std::map<std::string, std::string> kv_;
};

std::uint64_t fnv1a64(const std::string& s);

struct Settings {
  MacroConfig macro;
  PipelineConfig pipe;
  LayerConfig layer;
  int image_h = 16;
  int image_w = 16;
  CharacterizeOptions characterize;
};

/// Applies every entry on top of the built-in defaults. Unknown keys and
/// malformed values raise ConfigError.
Settings resolve(const Config& c);

/// Every recognised key with its current value, in defaults-file layout.
std::string dump_settings(const Settings& s);

}  // namespace cimsim
