#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sepp/geometry.hpp"
#include "sepp/models.hpp"

namespace sepp {

// Flat `key = value` configuration with optional [section] headers; a key
// inside [section] is addressed as "section.key". Unknown keys are rejected
// against a per-command schema before a run starts, and every run echoes
// the fully resolved configuration so it can be replayed.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_size(const std::string& key, std::size_t value);
  void set_bool(const std::string& key, bool value);
  void set_doubles(const std::string& key, const std::vector<double>& values);

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  // Rejects any key not listed exactly and not under an allowed prefix.
  void check_allowed(const std::set<std::string>& keys,
                     const std::vector<std::string>& prefixes = {}) const;

  std::string serialize() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::size_t find(const std::string& key) const;  // npos when absent
};

// Domain and model (de)serialization using the `domain.` and `model.`
// key groups.
ObservationDomain domain_from_config(const Config& config);
void domain_to_config(Config& config, const ObservationDomain& domain);

IntensityModel model_from_config(const Config& config,
                                 const std::string& base_dir = "");
void model_to_config(Config& config, const IntensityModel& model);

}  // namespace sepp
