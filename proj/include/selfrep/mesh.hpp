#pragma once

#include "selfrep/common.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfrep {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by point_locate for queries outside the closed reference domain.
class PointOutsideDomain : public MeshError {
 public:
  PointOutsideDomain(const Vec2& x, double distance);
  double distance() const { return distance_; }

 private:
  double distance_;
};

/// Immutable triangulated reference domain.
///
/// Triangles are stored with positive orientation. Boundary edges are the
/// edges owned by exactly one triangle, oriented with the domain on their
/// left and chained into closed loops (outer loop counterclockwise).
class Mesh {
 public:
  /// Validates and freezes the mesh. If `boundary` is given it must match the
  /// set of single-owner edges; otherwise it is derived.
  Mesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
       std::optional<std::vector<Edge>> boundary = std::nullopt);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& boundary_edges() const { return boundary_edges_; }
  const std::vector<double>& element_areas() const { return areas_; }
  /// Smallest interior angle over all triangles, radians.
  double min_angle() const { return min_angle_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  double total_area() const { return total_area_; }
  double boundary_length() const;
  double edge_length(std::size_t boundary_edge) const;
  double diameter() const { return diameter_; }

  Vec2 centroid(std::size_t t) const;
  /// Inverse of the reference edge matrix [X1-X0, X2-X0].
  const Mat2& reference_inverse(std::size_t t) const { return ref_inverse_[t]; }

  bool is_boundary_vertex(int v) const { return boundary_vertex_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& vertex_triangles(int v) const { return vertex_triangles_[static_cast<std::size_t>(v)]; }
  bool triangles_share_vertex(std::size_t a, std::size_t b) const;

  /// Exact Euclidean distance from x to the union of boundary segments.
  double distance_to_boundary(const Vec2& x) const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> boundary_edges_;
  std::vector<double> areas_;
  std::vector<Mat2> ref_inverse_;
  std::vector<bool> boundary_vertex_;
  std::vector<std::vector<int>> vertex_triangles_;
  double min_angle_ = 0.0;
  double total_area_ = 0.0;
  double diameter_ = 0.0;
};

enum class RegionKind { full_domain, delta_layer, custom };

struct Region {
  std::vector<int> element_ids;  // sorted, unique
  RegionKind kind = RegionKind::custom;

  std::size_t size() const { return element_ids.size(); }
  bool contains(int t) const;
  bool is_subset_of(const Region& other) const;
};

Region full_region(const Mesh& mesh);

/// Triangles whose centroid lies closer than `delta` to the boundary, plus every
/// triangle with a vertex on the boundary. Throws for delta <= 0.
Region delta_layer(const Mesh& mesh, double delta);

struct Location {
  int triangle = -1;
  std::array<double, 3> bary{};
};

Location point_locate(const Mesh& mesh, const Vec2& x);

/// Barycentric coordinates of x with respect to triangle t (may be negative).
std::array<double, 3> barycentric(const Mesh& mesh, std::size_t t, const Vec2& x);

// Builders -------------------------------------------------------------------

/// Unit square, n x n cells, each split along the (0,0)-(1,1) diagonal.
Mesh build_structured_square(int n);

/// Rectangle (-1,1)x(0,1) with n cells per unit length, diagonals mirrored
/// across x1 = 0 so that reflecting the left half reproduces the right half.
Mesh build_mirrored_strip(int n);

/// Half annulus {1 < |x| < 2, x2 > 0}; n radial and 3n angular subdivisions.
Mesh build_half_annulus(int n);

/// Unit square with a horizontal slot of height 2/n cut from the left edge
/// across the first `slot_fraction` of the width (two arms joined on the right).
Mesh build_slotted_square(int n, double slot_fraction = 0.625);

// File I/O -------------------------------------------------------------------

Mesh parse_mesh(const std::string& text, const std::string& origin = "<string>");
Mesh load_mesh(const std::filesystem::path& path);
/// Writes the mesh schema; `positions` adds a deformed-positions block for restarts.
void save_mesh(const std::filesystem::path& path, const Mesh& mesh,
               const std::vector<Vec2>* positions = nullptr);
/// Reads the optional `positions` block from a mesh file.
std::optional<std::vector<Vec2>> load_positions(const std::filesystem::path& path);

}  // namespace selfrep
