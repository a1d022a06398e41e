#pragma once

#include "selfrep/field.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

namespace selfrep {

class DegenerateImage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-cell covering counts over the bounding box of the deformed domain.
struct MultiplicityGrid {
  int resolution = 0;  // cells per axis
  Vec2 origin = Vec2::Zero();
  double cell_w = 0.0;
  double cell_h = 0.0;
  std::vector<int> counts;  // row-major, row 0 at the bottom

  int at(int i, int j) const { return counts[static_cast<std::size_t>(j) * resolution + i]; }
  double cell_area() const { return cell_w * cell_h; }
};

struct ImageArea {
  double area = 0.0;
  int max_multiplicity = 0;
  MultiplicityGrid grid;
};

/// Sum over triangles of |T| |det F_T|; does not require admissibility.
double det_integral(const Mesh& mesh, const DeformationField& field);

/// Cell-center rasterization of every deformed triangle. Shared edges follow
/// a top-left fill rule, so a cell center is never counted twice by adjacent,
/// consistently oriented triangles. Requires resolution >= 64.
ImageArea image_area(const Mesh& mesh, const DeformationField& field, int resolution, int workers = 1);

/// Exact area of the intersection of two triangles (either orientation).
double triangle_intersection_area(const std::array<Vec2, 3>& a, const std::array<Vec2, 3>& b);

/// Closed-segment intersection, including touching and collinear overlap.
bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2);

/// Euclidean distance between two closed segments.
double segment_distance(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2);

struct BoundaryInjectivity {
  bool injective = true;
  std::optional<std::array<int, 2>> witness;  // boundary edge indices
};

/// Checks the deformed boundary trace for intersections between edges that
/// share no vertex. Edges closer than 1e-12 times the image diameter count as
/// touching, so seams that coincide up to rounding are caught.
BoundaryInjectivity boundary_injectivity(const Mesh& mesh, const DeformationField& field);

/// Pairs of vertex-disjoint triangles whose deformed images overlap with
/// positive area, sorted.
std::vector<std::array<int, 2>> overlap_pairs(const Mesh& mesh, const DeformationField& field);

struct CncReport {
  double det_integral = 0.0;
  double image_area = 0.0;
  double defect = 0.0;
  int max_multiplicity = 0;
  std::vector<std::array<int, 2>> overlap_pairs;
  bool boundary_injective = true;
  std::optional<std::array<int, 2>> boundary_witness;
  int raster_resolution = 0;
  double image_perimeter = 0.0;  // length of the deformed boundary trace
  double cell_size = 0.0;
  /// 2 * perimeter * cell size; bound on the rasterization error of image_area.
  double raster_tolerance = 0.0;
  MultiplicityGrid grid;
};

CncReport cnc_defect(const Mesh& mesh, const DeformationField& field, int resolution, int workers = 1);

/// Writes the multiplicity grid as a binary greyscale PGM (top row first).
void write_pgm(const std::filesystem::path& path, const MultiplicityGrid& grid);

}  // namespace selfrep
