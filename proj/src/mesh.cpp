#include "selfrep/mesh.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace selfrep {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) { return 0.5 * cross2(b - a, c - a); }

double point_segment_distance(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (x - (a + t * ab)).norm();
}

std::string fmt_point(const Vec2& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << x.x() << ", " << x.y() << ")";
  return os.str();
}

// Chains directed single-owner edges into closed loops. Each loop starts at its
// smallest vertex index so the order is reproducible.
std::vector<Edge> chain_loops(std::vector<Edge> edges) {
  std::map<int, std::vector<std::size_t>> by_start;
  for (std::size_t i = 0; i < edges.size(); ++i) by_start[edges[i][0]].push_back(i);
  for (const auto& [v, list] : by_start) {
    if (list.size() != 1)
      throw MeshError("boundary is not a manifold loop at vertex " + std::to_string(v));
  }
  std::vector<bool> used(edges.size(), false);
  std::vector<Edge> ordered;
  ordered.reserve(edges.size());
  while (ordered.size() < edges.size()) {
    std::size_t start = edges.size();
    for (const auto& [v, list] : by_start) {
      if (!used[list.front()]) {
        start = list.front();
        break;
      }
    }
    std::size_t cur = start;
    while (!used[cur]) {
      used[cur] = true;
      ordered.push_back(edges[cur]);
      auto it = by_start.find(edges[cur][1]);
      if (it == by_start.end())
        throw MeshError("boundary loop is not closed at vertex " + std::to_string(edges[cur][1]));
      cur = it->second.front();
    }
    if (cur != start)
      throw MeshError("boundary loop is not closed at vertex " + std::to_string(edges[cur][0]));
  }
  return ordered;
}

}  // namespace

PointOutsideDomain::PointOutsideDomain(const Vec2& x, double distance)
    : MeshError("point " + fmt_point(x) + " lies outside the domain (distance " + std::to_string(distance) + ")"),
      distance_(distance) {}

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles, std::optional<std::vector<Edge>> boundary)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int nv = static_cast<int>(vertices_.size());
  if (triangles_.empty()) throw MeshError("mesh has no triangles");

  areas_.resize(triangles_.size());
  ref_inverse_.resize(triangles_.size());
  vertex_triangles_.assign(vertices_.size(), {});
  min_angle_ = std::numbers::pi;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= nv)
        throw MeshError("triangle " + std::to_string(t) + " references vertex " + std::to_string(tri[k]) + " of " +
                        std::to_string(nv) + " (dangling index)");
    }
    const Vec2& a = vertices_[tri[0]];
    const Vec2& b = vertices_[tri[1]];
    const Vec2& c = vertices_[tri[2]];
    const double area = signed_area(a, b, c);
    if (!(area > 0.0))
      throw MeshError("triangle " + std::to_string(t) + " has non-positive orientation (signed area " +
                      std::to_string(area) + ")");
    areas_[t] = area;
    Mat2 dm;
    dm.col(0) = b - a;
    dm.col(1) = c - a;
    ref_inverse_[t] = dm.inverse();
    for (int k = 0; k < 3; ++k) {
      const Vec2 e1 = vertices_[tri[(k + 1) % 3]] - vertices_[tri[k]];
      const Vec2 e2 = vertices_[tri[(k + 2) % 3]] - vertices_[tri[k]];
      const double ang = std::atan2(std::abs(cross2(e1, e2)), e1.dot(e2));
      min_angle_ = std::min(min_angle_, ang);
      vertex_triangles_[tri[k]].push_back(static_cast<int>(t));
    }
  }

  // Single-owner edges, oriented as in their triangle.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::vector<Edge> derived;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      const int count = edge_count[{std::min(a, b), std::max(a, b)}];
      if (count > 2) throw MeshError("edge (" + std::to_string(a) + "," + std::to_string(b) + ") has more than two triangles");
      if (count == 1) derived.push_back({a, b});
    }
  }
  if (boundary) {
    for (const auto& e : *boundary) {
      for (int k = 0; k < 2; ++k) {
        if (e[k] < 0 || e[k] >= nv)
          throw MeshError("boundary edge references vertex " + std::to_string(e[k]) + " of " + std::to_string(nv) +
                          " (dangling index)");
      }
      auto it = edge_count.find({std::min(e[0], e[1]), std::max(e[0], e[1])});
      if (it == edge_count.end() || it->second != 1)
        throw MeshError("boundary edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                        ") does not belong to exactly one triangle");
    }
    if (boundary->size() != derived.size())
      throw MeshError("boundary lists " + std::to_string(boundary->size()) + " edges but the triangulation has " +
                      std::to_string(derived.size()));
  }
  boundary_edges_ = chain_loops(std::move(derived));

  boundary_vertex_.assign(vertices_.size(), false);
  for (const auto& e : boundary_edges_) boundary_vertex_[e[0]] = boundary_vertex_[e[1]] = true;

  total_area_ = pairwise_sum(areas_);
  double poly = 0.0;
  for (const auto& e : boundary_edges_) poly += 0.5 * cross2(vertices_[e[0]], vertices_[e[1]]);
  if (std::abs(poly - total_area_) > 1e-12 * std::max(1.0, std::abs(poly)))
    throw MeshError("element areas sum to " + std::to_string(total_area_) + " but the boundary encloses " +
                    std::to_string(poly));

  Vec2 lo = vertices_.front(), hi = vertices_.front();
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  diameter_ = (hi - lo).norm();
}

double Mesh::boundary_length() const {
  std::vector<double> lengths(boundary_edges_.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) lengths[i] = edge_length(i);
  return pairwise_sum(lengths);
}

double Mesh::edge_length(std::size_t e) const {
  return (vertices_[boundary_edges_[e][1]] - vertices_[boundary_edges_[e][0]]).norm();
}

Vec2 Mesh::centroid(std::size_t t) const {
  const auto& tri = triangles_[t];
  return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
}

bool Mesh::triangles_share_vertex(std::size_t a, std::size_t b) const {
  for (int i : triangles_[a])
    for (int j : triangles_[b])
      if (i == j) return true;
  return false;
}

double Mesh::distance_to_boundary(const Vec2& x) const {
  double best = kInfinity;
  for (const auto& e : boundary_edges_)
    best = std::min(best, point_segment_distance(x, vertices_[e[0]], vertices_[e[1]]));
  return best;
}

bool Region::contains(int t) const { return std::binary_search(element_ids.begin(), element_ids.end(), t); }

bool Region::is_subset_of(const Region& other) const {
  return std::includes(other.element_ids.begin(), other.element_ids.end(), element_ids.begin(), element_ids.end());
}

Region full_region(const Mesh& mesh) {
  Region r;
  r.kind = RegionKind::full_domain;
  r.element_ids.resize(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) r.element_ids[t] = static_cast<int>(t);
  return r;
}

Region delta_layer(const Mesh& mesh, double delta) {
  if (!(delta > 0.0)) throw MeshError("delta_layer requires delta > 0");
  Region r;
  r.kind = RegionKind::delta_layer;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const bool touches = mesh.is_boundary_vertex(tri[0]) || mesh.is_boundary_vertex(tri[1]) ||
                         mesh.is_boundary_vertex(tri[2]);
    if (touches || mesh.distance_to_boundary(mesh.centroid(t)) < delta) r.element_ids.push_back(static_cast<int>(t));
  }
  return r;
}

std::array<double, 3> barycentric(const Mesh& mesh, std::size_t t, const Vec2& x) {
  const auto& tri = mesh.triangles()[t];
  const Vec2& a = mesh.vertices()[tri[0]];
  const Vec2& b = mesh.vertices()[tri[1]];
  const Vec2& c = mesh.vertices()[tri[2]];
  const double twice = 2.0 * mesh.element_areas()[t];
  const double l1 = cross2(c - a, x - a) / -twice;  // area(a, x, c)
  const double l2 = cross2(b - a, x - a) / twice;   // area(a, b, x)
  return {1.0 - l1 - l2, l1, l2};
}

Location point_locate(const Mesh& mesh, const Vec2& x) {
  constexpr double kTol = 1e-12;
  Location best;
  double best_min = -kInfinity;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto bary = barycentric(mesh, t, x);
    const double m = std::min({bary[0], bary[1], bary[2]});
    if (m > best_min) {
      best_min = m;
      best.triangle = static_cast<int>(t);
      best.bary = bary;
      if (m >= 0.0) break;
    }
  }
  if (best_min < 0.0) {
    // Accept points on the closed domain up to tolerance; clamp tiny negatives.
    const double dist = mesh.distance_to_boundary(x);
    if (best_min < -kTol && dist > kTol) throw PointOutsideDomain(x, dist);
    for (double& l : best.bary) l = std::max(l, 0.0);
    const double s = best.bary[0] + best.bary[1] + best.bary[2];
    for (double& l : best.bary) l /= s;
  }
  return best;
}

// Builders -------------------------------------------------------------------

namespace {

// Structured grid over [x0,x1]x[y0,y1] with optional cell mask; `mirror_left`
// flips the diagonal for cells with center x < 0.
Mesh build_grid(double x0, double y0, double x1, double y1, int nx, int ny, const std::vector<bool>* keep,
                bool mirror_left) {
  std::vector<Vec2> verts;
  verts.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      verts.emplace_back(x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny);
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Triangle> tris;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (keep && !(*keep)[static_cast<std::size_t>(j * nx + i)]) continue;
      const int v00 = id(i, j), v10 = id(i + 1, j), v11 = id(i + 1, j + 1), v01 = id(i, j + 1);
      const double cx = x0 + (x1 - x0) * (i + 0.5) / nx;
      if (mirror_left && cx < 0.0) {
        tris.push_back({v00, v10, v01});
        tris.push_back({v10, v11, v01});
      } else {
        tris.push_back({v00, v10, v11});
        tris.push_back({v00, v11, v01});
      }
    }
  }
  // Drop unreferenced vertices.
  std::vector<int> remap(verts.size(), -1);
  std::vector<Vec2> used;
  for (auto& tri : tris) {
    for (int& v : tri) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(used.size());
        used.push_back(verts[v]);
      }
      v = remap[v];
    }
  }
  return Mesh(std::move(used), std::move(tris));
}

}  // namespace

Mesh build_structured_square(int n) {
  if (n < 1) throw MeshError("build_structured_square requires n >= 1");
  // Keep the natural vertex numbering for the unmasked grid.
  std::vector<Vec2> verts;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) verts.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  std::vector<Triangle> tris;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(verts), std::move(tris));
}

Mesh build_mirrored_strip(int n) {
  if (n < 1) throw MeshError("build_mirrored_strip requires n >= 1");
  return build_grid(-1.0, 0.0, 1.0, 1.0, 2 * n, n, nullptr, true);
}

Mesh build_half_annulus(int n) {
  if (n < 1) throw MeshError("build_half_annulus requires n >= 1");
  const int m = 3 * n;
  std::vector<Vec2> verts;
  for (int j = 0; j <= m; ++j) {
    const double theta = std::numbers::pi * j / m;
    for (int i = 0; i <= n; ++i) {
      const double rho = 1.0 + static_cast<double>(i) / n;
      verts.emplace_back(rho * std::cos(theta), rho * std::sin(theta));
    }
  }
  // The endpoint angle pi must land exactly on the x1 axis.
  for (int i = 0; i <= n; ++i) verts[static_cast<std::size_t>(m * (n + 1) + i)].y() = 0.0;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<Triangle> tris;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(verts), std::move(tris));
}

Mesh build_slotted_square(int n, double slot_fraction) {
  if (n < 4 || n % 2 != 0) throw MeshError("build_slotted_square requires an even n >= 4");
  const int slot_len = static_cast<int>(std::lround(slot_fraction * n));
  if (slot_len < 1 || slot_len >= n) throw MeshError("slot_fraction must leave a connected square");
  std::vector<bool> keep(static_cast<std::size_t>(n * n), true);
  for (int j = n / 2 - 1; j <= n / 2; ++j)
    for (int i = 0; i < slot_len; ++i) keep[static_cast<std::size_t>(j * n + i)] = false;
  return build_grid(0.0, 0.0, 1.0, 1.0, n, n, &keep, false);
}

// File I/O -------------------------------------------------------------------

namespace {

using nlohmann::json;

std::string location_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw MeshError(origin + ": parse error at " + location_of(text, e.byte) + ": " + e.what());
  }
}

template <std::size_t N, typename T>
std::vector<std::array<T, N>> read_tuples(const json& doc, const char* field, const std::string& origin) {
  if (!doc.contains(field)) throw MeshError(origin + ": missing field '" + field + "'");
  const json& arr = doc.at(field);
  if (!arr.is_array()) throw MeshError(origin + ": field '" + field + "' must be an array");
  std::vector<std::array<T, N>> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& row = arr[i];
    const std::string where = origin + ": " + field + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != N)
      throw MeshError(where + " must have " + std::to_string(N) + " entries");
    std::array<T, N> tup{};
    for (std::size_t k = 0; k < N; ++k) {
      const json& v = row[k];
      if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw MeshError(where + "[" + std::to_string(k) + "] must be an integer index");
      } else {
        if (!v.is_number()) throw MeshError(where + "[" + std::to_string(k) + "] must be a number");
      }
      tup[k] = v.get<T>();
    }
    out.push_back(tup);
  }
  return out;
}

std::vector<Vec2> to_points(const std::vector<std::array<double, 2>>& raw) {
  std::vector<Vec2> pts;
  pts.reserve(raw.size());
  for (const auto& p : raw) pts.emplace_back(p[0], p[1]);
  return pts;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Mesh parse_mesh(const std::string& text, const std::string& origin) {
  const json doc = parse_json_text(text, origin);
  if (!doc.is_object()) throw MeshError(origin + ": top level must be an object");
  auto verts = to_points(read_tuples<2, double>(doc, "vertices", origin));
  auto tris = read_tuples<3, int>(doc, "triangles", origin);
  std::optional<std::vector<Edge>> boundary;
  if (doc.contains("boundary")) boundary = read_tuples<2, int>(doc, "boundary", origin);
  try {
    return Mesh(std::move(verts), std::move(tris), std::move(boundary));
  } catch (const MeshError& e) {
    throw MeshError(origin + ": " + e.what());
  }
}

Mesh load_mesh(const std::filesystem::path& path) { return parse_mesh(read_file(path), path.string()); }

std::optional<std::vector<Vec2>> load_positions(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const json doc = parse_json_text(text, path.string());
  if (!doc.contains("positions")) return std::nullopt;
  return to_points(read_tuples<2, double>(doc, "positions", path.string()));
}

void save_mesh(const std::filesystem::path& path, const Mesh& mesh, const std::vector<Vec2>* positions) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file " + path.string());
  out.precision(17);
  auto write_points = [&out](const char* name, const std::vector<Vec2>& pts) {
    out << "  \"" << name << "\": [";
    for (std::size_t i = 0; i < pts.size(); ++i)
      out << (i ? ",\n    " : "\n    ") << "[" << pts[i].x() << ", " << pts[i].y() << "]";
    out << "\n  ]";
  };
  out << "{\n";
  write_points("vertices", mesh.vertices());
  out << ",\n  \"triangles\": [";
  for (std::size_t i = 0; i < mesh.num_triangles(); ++i) {
    const auto& t = mesh.triangles()[i];
    out << (i ? ",\n    " : "\n    ") << "[" << t[0] << ", " << t[1] << ", " << t[2] << "]";
  }
  out << "\n  ],\n  \"boundary\": [";
  for (std::size_t i = 0; i < mesh.boundary_edges().size(); ++i) {
    const auto& e = mesh.boundary_edges()[i];
    out << (i ? ",\n    " : "\n    ") << "[" << e[0] << ", " << e[1] << "]";
  }
  out << "\n  ]";
  if (positions) {
    out << ",\n";
    write_points("positions", *positions);
  }
  out << "\n}\n";
}

}  // namespace selfrep
