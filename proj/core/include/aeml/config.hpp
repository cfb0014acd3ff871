#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aeml/consolidate.hpp"
#include "aeml/newton.hpp"
#include "aeml/prior.hpp"
#include "aeml/wave.hpp"

namespace aeml {

/// Key-value text config with [section] headers, '#' or ';' comments.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  const std::string& get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  int get_int_or(const std::string& section, const std::string& key, int fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

  const std::string& source_text() const { return text_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string text_;
};

/// Fully resolved run description built from a config file.
struct RunSetup {
  Grid grid;
  Field density;
  TimeAxis time;
  std::vector<SourceSpec> sources;
  std::vector<int> receivers;

  double prior_alpha = 1.0;
  double prior_theta = 0.1;
  Field prior_mean;
  double c_min = 0.1;

  Field truth;       // synthetic true wavespeed
  double noise_rel = 0.01;  // sigma = noise_rel * max |d|

  NewtonConfig newton;
  Scheme scheme = Scheme::Space;
  int window = 16;
  int checkpoint_interval = 0;  // 0 = default schedule
  double quant_eta = 1e-4;

  ForwardConfig forward_config() const;
  BiLaplacianPrior make_prior() const;
};

RunSetup load_run_setup(const ConfigFile& cfg);

}  // namespace aeml
