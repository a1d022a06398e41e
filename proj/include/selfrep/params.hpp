#pragma once

#include "selfrep/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace selfrep {

enum class Variant { bulk, boundary_layer, surface };

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);

/// Axis-aligned confinement rectangle for the deformed configuration.
struct Box {
  Vec2 lo;
  Vec2 hi;
};

struct ModelParams {
  int d = 2;
  double p = 4.0;
  double r = 3.0;
  double q = 2.0;
  double s = 0.0;
  double epsilon = 1.0;
  Variant variant = Variant::bulk;
  std::optional<double> delta;  // boundary-layer only
  std::optional<Box> box;
  double box_stiffness = 1e4;
};

struct DerivedExponents {
  double sigma = 0.0;  // integrability of the inverse gradient
  double kappa = 0.0;  // integrability of the outer distortion
  double rho = 0.0;    // Young split exponent
};

DerivedExponents derive_exponents(const ModelParams& params);

struct Inequality {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string relation;  // ">", ">=", "<", "<="
  bool holds = false;
};

/// Sufficient bounds for the surface variant: 0 < s < 1 - d/sigma and q above
/// the larger of the two thresholds.
struct SurfaceSufficientBounds {
  double s_upper = 0.0;
  double q_lower = 0.0;
  bool met = false;
};

struct ValidationReport {
  bool core_ok = false;
  bool variant_ok = false;
  DerivedExponents derived;
  std::vector<Inequality> checks;      // every evaluated inequality
  std::vector<Inequality> violations;  // the failed subset of `checks`
  std::vector<std::string> ambiguities;
  std::optional<SurfaceSufficientBounds> surface_sufficient;

  bool valid() const { return violations.empty() && ambiguities.empty(); }
};

ValidationReport validate(const ModelParams& params);

}  // namespace selfrep
