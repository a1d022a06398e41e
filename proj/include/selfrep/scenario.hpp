#pragma once

#include "selfrep/mesh.hpp"
#include "selfrep/params.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfrep {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A reference mesh, an initial deformation and an optional confinement box.
struct Scenario {
  std::string name;
  std::string description;
  std::shared_ptr<const Mesh> mesh;
  std::vector<Vec2> initial;
  std::optional<Box> box;
};

/// Analytic maps: identity, scale:L, shear:G, fold, angle-doubling, pinch:T.
/// `fold` reflects x1 -> |x1|; `angle-doubling` sends (r, theta) to (r, 2 theta);
/// `pinch:T` squeezes the square toward the line x2 = 1/2 with waist factor T.
std::vector<Vec2> analytic_map(const Mesh& mesh, const std::string& map);

/// Names accepted by make_scenario besides file paths.
std::vector<std::string> builtin_scenarios();

/// Builds a builtin scenario (resolution n) or loads a scenario file.
///
/// Builtins: identity, scale:L, shear:G, pinch:T on the unit square; fold on
/// the mirrored strip; angle-doubling on the half annulus; pinch-box, the
/// slotted square under a box that squeezes its two arms together.
Scenario make_scenario(const std::string& name_or_path, int n);

/// Scenario file: {"name", "description", "mesh", "initial", "box"}. `mesh` is
/// "square:N", "strip:N", "half-annulus:N", "slotted:N" or a mesh file path;
/// `initial` is an analytic map name or a file with a positions block.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace selfrep
