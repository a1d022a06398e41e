#include "selfrep/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace selfrep {

namespace {

// Splits "name:value" and parses the value; nullopt when there is no colon.
std::optional<double> argument_of(const std::string& spec, const std::string& name) {
  const auto colon = spec.find(':');
  if (spec.substr(0, colon) != name) return std::nullopt;
  if (colon == std::string::npos) throw ScenarioError("map '" + name + "' needs an argument, e.g. " + name + ":2");
  try {
    std::size_t used = 0;
    const double v = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ScenarioError("bad numeric argument in '" + spec + "'");
  }
}

std::string head_of(const std::string& spec) { return spec.substr(0, spec.find(':')); }

Mesh builtin_mesh(const std::string& spec) {
  const std::string head = head_of(spec);
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ScenarioError("mesh '" + spec + "' needs a resolution, e.g. square:16");
  int n = 0;
  try {
    n = std::stoi(spec.substr(colon + 1));
  } catch (const std::exception&) {
    throw ScenarioError("bad resolution in mesh '" + spec + "'");
  }
  if (head == "square") return build_structured_square(n);
  if (head == "strip") return build_mirrored_strip(n);
  if (head == "half-annulus") return build_half_annulus(n);
  if (head == "slotted") return build_slotted_square(n);
  throw ScenarioError("unknown builtin mesh '" + head + "'");
}

bool is_builtin_mesh(const std::string& spec) {
  const std::string head = head_of(spec);
  return head == "square" || head == "strip" || head == "half-annulus" || head == "slotted";
}

}  // namespace

std::vector<Vec2> analytic_map(const Mesh& mesh, const std::string& map) {
  const auto& X = mesh.vertices();
  std::vector<Vec2> y(X.size());
  auto apply = [&](auto&& f) {
    for (std::size_t v = 0; v < X.size(); ++v) y[v] = f(X[v]);
    return y;
  };
  if (map == "identity") return X;
  if (auto lambda = argument_of(map, "scale")) {
    if (*lambda <= 0.0) throw ScenarioError("scale factor must be > 0");
    return apply([&](const Vec2& x) -> Vec2 { return *lambda * x; });
  }
  if (auto gamma = argument_of(map, "shear")) {
    return apply([&](const Vec2& x) -> Vec2 { return {x.x() + *gamma * x.y(), x.y()}; });
  }
  if (map == "fold") return apply([](const Vec2& x) -> Vec2 { return {std::abs(x.x()), x.y()}; });
  if (map == "angle-doubling") {
    return apply([](const Vec2& x) -> Vec2 {
      const double r = x.norm();
      const double theta = std::atan2(x.y(), x.x());
      return {r * std::cos(2.0 * theta), r * std::sin(2.0 * theta)};
    });
  }
  if (auto t = argument_of(map, "pinch")) {
    if (*t <= 0.0 || *t > 1.0) throw ScenarioError("pinch waist factor must be in (0, 1]");
    return apply([&](const Vec2& x) -> Vec2 {
      const double sn = std::sin(std::numbers::pi * x.x());
      const double g = 1.0 - (1.0 - *t) * sn * sn;
      return {x.x(), 0.5 + (x.y() - 0.5) * g};
    });
  }
  throw ScenarioError("unknown analytic map '" + map +
                      "' (expected identity, scale:L, shear:G, fold, angle-doubling, pinch:T)");
}

std::vector<std::string> builtin_scenarios() {
  return {"identity", "scale:L", "shear:G", "fold", "angle-doubling", "pinch:T", "pinch-box"};
}

Scenario make_scenario(const std::string& name, int n) {
  const std::string head = head_of(name);
  Scenario sc;
  sc.name = name;
  if (head == "identity" || head == "scale" || head == "shear" || head == "pinch") {
    sc.mesh = std::make_shared<const Mesh>(build_structured_square(n));
    sc.description = "unit square under the analytic map " + name;
  } else if (name == "fold") {
    sc.mesh = std::make_shared<const Mesh>(build_mirrored_strip(n));
    sc.description = "strip (-1,1)x(0,1) folded onto its right half";
  } else if (name == "angle-doubling") {
    sc.mesh = std::make_shared<const Mesh>(build_half_annulus(n));
    sc.description = "half annulus wrapped once around the full annulus; the two straight edges meet";
  } else if (name == "pinch-box") {
    sc.mesh = std::make_shared<const Mesh>(build_slotted_square(n));
    sc.box = Box{{-0.25, 0.1}, {1.25, 0.9}};
    sc.description = "slotted square squeezed vertically by a box; the two arms are pushed together";
    sc.initial = sc.mesh->vertices();
    return sc;
  } else {
    std::filesystem::path path(name);
    if (std::filesystem::exists(path)) return load_scenario(path);
    throw ScenarioError("unknown scenario '" + name + "' and no such file");
  }
  sc.initial = analytic_map(*sc.mesh, name);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ScenarioError(path.string() + ": parse error: " + e.what());
  }
  const std::string origin = path.string() + ": ";
  auto str = [&](const char* key, const std::string& fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc.at(key).is_string()) throw ScenarioError(origin + key + ": must be a string");
    return doc.at(key).get<std::string>();
  };
  for (const auto& [key, _] : doc.items())
    if (key != "name" && key != "description" && key != "mesh" && key != "initial" && key != "box")
      throw ScenarioError(origin + key + ": unknown key");
  if (!doc.contains("mesh")) throw ScenarioError(origin + "mesh: missing");

  Scenario sc;
  sc.name = str("name", path.stem().string());
  sc.description = str("description", "");
  const std::string mesh_spec = str("mesh", "");
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path rel(p);
    return rel.is_absolute() ? rel : path.parent_path() / rel;
  };
  try {
    sc.mesh = std::make_shared<const Mesh>(is_builtin_mesh(mesh_spec) ? builtin_mesh(mesh_spec)
                                                                      : load_mesh(resolve(mesh_spec)));
  } catch (const MeshError& e) {
    throw ScenarioError(origin + "mesh: " + e.what());
  }
  const std::string initial = str("initial", "identity");
  try {
    sc.initial = analytic_map(*sc.mesh, initial);
  } catch (const ScenarioError&) {
    const auto file = resolve(initial);
    if (!std::filesystem::exists(file)) throw;
    auto pos = load_positions(file);
    if (!pos) throw ScenarioError(origin + "initial: " + file.string() + " has no positions block");
    if (pos->size() != sc.mesh->num_vertices())
      throw ScenarioError(origin + "initial: positions count does not match the mesh");
    sc.initial = std::move(*pos);
  }
  if (doc.contains("box")) {
    const json& b = doc.at("box");
    auto pt = [&](const char* k) -> Vec2 {
      if (!b.is_object() || !b.contains(k) || !b.at(k).is_array() || b.at(k).size() != 2)
        throw ScenarioError(origin + "box." + k + ": must be a pair of numbers");
      return {b.at(k)[0].get<double>(), b.at(k)[1].get<double>()};
    };
    sc.box = Box{pt("lo"), pt("hi")};
  }
  return sc;
}

}  // namespace selfrep
