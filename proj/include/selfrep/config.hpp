#pragma once

#include "selfrep/nonlocal_energy.hpp"
#include "selfrep/optimizer.hpp"
#include "selfrep/params.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfrep {

/// Schema violation; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentSettings {
  int n = 16;             // mesh subdivisions for builtin scenarios
  int resolution = 512;   // raster cells per axis
  std::vector<double> schedule = geometric_schedule(0.1, 0.5, 6);
  std::vector<int> bench_sizes{8, 16, 32, 64};
  double delta_cells = 2.0;  // bench layer thickness in units of h
  int bench_samples = 5;
  Vec2 shrink_center{0.5, 0.5};
  std::vector<int> shrink_js{2, 4, 8, 16, 32};
};

struct Config {
  ModelParams model;
  QuadratureSpec quadrature;
  OptimizerSettings optimizer;
  ExperimentSettings experiment;
};

/// Sections: model, quadrature, optimizer, experiment. Unknown keys are errors.
Config parse_config(const std::string& text, const std::string& origin = "<string>");
Config load_config(const std::filesystem::path& path);

/// Canonical JSON rendering of a config (used for the config echo).
std::string config_to_json(const Config& config);

}  // namespace selfrep
