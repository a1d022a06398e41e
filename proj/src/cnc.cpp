#include "selfrep/cnc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace selfrep {

double det_integral(const Mesh& mesh, const DeformationField& field) {
  std::vector<double> parts(mesh.num_triangles());
  for (std::size_t t = 0; t < parts.size(); ++t) parts[t] = mesh.element_areas()[t] * std::abs(field.state()[t].det);
  return pairwise_sum(parts);
}

namespace {

bool lex_less(const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); }

// Edge function of the directed edge p->q at z, computed from canonically
// ordered endpoints so that the reversed edge yields the exact negation.
double edge_fn(const Vec2& p, const Vec2& q, const Vec2& z) {
  if (lex_less(p, q)) return cross2(q - p, z - p);
  return -cross2(p - q, z - q);
}

// Top-left rule for counterclockwise triangles in a y-up frame.
bool owns_edge(const Vec2& p, const Vec2& q) {
  const Vec2 d = q - p;
  return d.y() < 0.0 || (d.y() == 0.0 && d.x() < 0.0);
}

bool covers(const std::array<Vec2, 3>& v, const std::array<bool, 3>& own, const Vec2& z) {
  for (int k = 0; k < 3; ++k) {
    const double e = edge_fn(v[k], v[(k + 1) % 3], z);
    if (e < 0.0 || (e == 0.0 && !own[k])) return false;
  }
  return true;
}

double signed_area(const std::array<Vec2, 3>& v) { return 0.5 * cross2(v[1] - v[0], v[2] - v[0]); }

std::array<Vec2, 3> deformed(const Mesh& mesh, const DeformationField& field, std::size_t t) {
  const auto& tri = mesh.triangles()[t];
  const auto& y = field.positions();
  return {y[tri[0]], y[tri[1]], y[tri[2]]};
}

}  // namespace

ImageArea image_area(const Mesh& mesh, const DeformationField& field, int resolution, int workers) {
  if (resolution < 64) throw std::invalid_argument("image_area requires resolution >= 64");
  const auto& y = field.positions();
  Vec2 lo = y.front(), hi = y.front();
  for (const auto& p : y) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 ext = hi - lo;
  if (!(ext.x() > 0.0) || !(ext.y() > 0.0))
    throw DegenerateImage("deformed bounding box has zero width or height");

  ImageArea out;
  auto& g = out.grid;
  g.resolution = resolution;
  g.origin = lo;
  g.cell_w = ext.x() / resolution;
  g.cell_h = ext.y() / resolution;
  g.counts.assign(static_cast<std::size_t>(resolution) * resolution, 0);

  struct Prepared {
    std::array<Vec2, 3> v;
    std::array<bool, 3> own;
    int i0, i1, j0, j1;
  };
  std::vector<Prepared> tris;
  tris.reserve(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    auto v = deformed(mesh, field, t);
    const double a = signed_area(v);
    if (a == 0.0) continue;
    if (a < 0.0) std::swap(v[1], v[2]);
    Prepared p;
    p.v = v;
    for (int k = 0; k < 3; ++k) p.own[k] = owns_edge(v[k], v[(k + 1) % 3]);
    Vec2 tlo = v[0].cwiseMin(v[1]).cwiseMin(v[2]);
    Vec2 thi = v[0].cwiseMax(v[1]).cwiseMax(v[2]);
    // Cell (i,j) has center origin + (i + 0.5) * cell.
    p.i0 = std::max(0, static_cast<int>(std::floor((tlo.x() - lo.x()) / g.cell_w - 0.5)));
    p.i1 = std::min(resolution - 1, static_cast<int>(std::ceil((thi.x() - lo.x()) / g.cell_w - 0.5)));
    p.j0 = std::max(0, static_cast<int>(std::floor((tlo.y() - lo.y()) / g.cell_h - 0.5)));
    p.j1 = std::min(resolution - 1, static_cast<int>(std::ceil((thi.y() - lo.y()) / g.cell_h - 0.5)));
    tris.push_back(p);
  }

  // Each row is written by exactly one worker.
  parallel_for(static_cast<std::size_t>(resolution), workers, [&](std::size_t row) {
    const int j = static_cast<int>(row);
    const double cy = lo.y() + (j + 0.5) * g.cell_h;
    int* counts = g.counts.data() + row * static_cast<std::size_t>(resolution);
    for (const auto& p : tris) {
      if (j < p.j0 || j > p.j1) continue;
      for (int i = p.i0; i <= p.i1; ++i) {
        const Vec2 z(lo.x() + (i + 0.5) * g.cell_w, cy);
        if (covers(p.v, p.own, z)) ++counts[i];
      }
    }
  });

  std::size_t covered = 0;
  for (int c : g.counts) {
    if (c > 0) ++covered;
    out.max_multiplicity = std::max(out.max_multiplicity, c);
  }
  out.area = static_cast<double>(covered) * g.cell_area();
  return out;
}

double triangle_intersection_area(const std::array<Vec2, 3>& a_in, const std::array<Vec2, 3>& b_in) {
  auto a = a_in, b = b_in;
  if (signed_area(a) < 0.0) std::swap(a[1], a[2]);
  if (signed_area(b) < 0.0) std::swap(b[1], b[2]);
  std::vector<Vec2> poly(a.begin(), a.end());
  for (int k = 0; k < 3 && !poly.empty(); ++k) {
    const Vec2& p = b[k];
    const Vec2& q = b[(k + 1) % 3];
    std::vector<Vec2> next;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& s = poly[i];
      const Vec2& e = poly[(i + 1) % poly.size()];
      const double ds = cross2(q - p, s - p);
      const double de = cross2(q - p, e - p);
      if (ds >= 0.0) next.push_back(s);
      if ((ds >= 0.0) != (de >= 0.0)) {
        const double t = ds / (ds - de);
        next.push_back(s + t * (e - s));
      }
    }
    poly = std::move(next);
  }
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) area += cross2(poly[i], poly[(i + 1) % poly.size()]);
  return std::max(0.0, 0.5 * area);
}

namespace {

int orient_sign(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross2(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(const Vec2& p, const Vec2& q, const Vec2& z) {
  return std::min(p.x(), q.x()) <= z.x() && z.x() <= std::max(p.x(), q.x()) && std::min(p.y(), q.y()) <= z.y() &&
         z.y() <= std::max(p.y(), q.y());
}

}  // namespace

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orient_sign(p1, p2, q1);
  const int o2 = orient_sign(p1, p2, q2);
  const int o3 = orient_sign(q1, q2, p1);
  const int o4 = orient_sign(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

namespace {

double point_segment_distance(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (x - (a + t * ab)).norm();
}

}  // namespace

double segment_distance(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min({point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
                   point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)});
}

BoundaryInjectivity boundary_injectivity(const Mesh& mesh, const DeformationField& field) {
  BoundaryInjectivity out;
  const auto& edges = mesh.boundary_edges();
  const auto& y = field.positions();
  Vec2 lo = y.front(), hi = y.front();
  for (const auto& p : y) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // Contact within rounding of the image diameter counts as an intersection.
  const double tol = 1e-12 * (hi - lo).norm();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const auto& a = edges[i];
      const auto& b = edges[j];
      if (a[0] == b[0] || a[0] == b[1] || a[1] == b[0] || a[1] == b[1]) continue;
      if (segment_distance(y[a[0]], y[a[1]], y[b[0]], y[b[1]]) <= tol) {
        out.injective = false;
        out.witness = std::array<int, 2>{static_cast<int>(i), static_cast<int>(j)};
        return out;
      }
    }
  }
  return out;
}

std::vector<std::array<int, 2>> overlap_pairs(const Mesh& mesh, const DeformationField& field) {
  const std::size_t nt = mesh.num_triangles();
  std::vector<std::array<Vec2, 3>> tri(nt);
  double bin = 0.0;
  Vec2 lo = field.positions().front(), hi = lo;
  for (std::size_t t = 0; t < nt; ++t) {
    tri[t] = deformed(mesh, field, t);
    for (int k = 0; k < 3; ++k) {
      bin = std::max(bin, (tri[t][(k + 1) % 3] - tri[t][k]).norm());
      lo = lo.cwiseMin(tri[t][k]);
      hi = hi.cwiseMax(tri[t][k]);
    }
  }
  if (!(bin > 0.0)) return {};
  const int nx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / bin)));
  const int ny = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / bin)));
  std::vector<std::vector<int>> bins(static_cast<std::size_t>(nx) * ny);
  auto cell = [&](double v, double origin, int n) {
    return std::clamp(static_cast<int>(std::floor((v - origin) / bin)), 0, n - 1);
  };
  for (std::size_t t = 0; t < nt; ++t) {
    const Vec2 tlo = tri[t][0].cwiseMin(tri[t][1]).cwiseMin(tri[t][2]);
    const Vec2 thi = tri[t][0].cwiseMax(tri[t][1]).cwiseMax(tri[t][2]);
    for (int j = cell(tlo.y(), lo.y(), ny); j <= cell(thi.y(), lo.y(), ny); ++j)
      for (int i = cell(tlo.x(), lo.x(), nx); i <= cell(thi.x(), lo.x(), nx); ++i)
        bins[static_cast<std::size_t>(j) * nx + i].push_back(static_cast<int>(t));
  }
  std::vector<std::array<int, 2>> candidates;
  for (const auto& b : bins)
    for (std::size_t i = 0; i < b.size(); ++i)
      for (std::size_t j = i + 1; j < b.size(); ++j)
        candidates.push_back({std::min(b[i], b[j]), std::max(b[i], b[j])});
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<std::array<int, 2>> out;
  for (const auto& c : candidates) {
    if (mesh.triangles_share_vertex(c[0], c[1])) continue;
    const double a0 = std::abs(signed_area(tri[c[0]]));
    const double a1 = std::abs(signed_area(tri[c[1]]));
    const double inter = triangle_intersection_area(tri[c[0]], tri[c[1]]);
    if (inter > 1e-10 * std::min(a0, a1)) out.push_back(c);
  }
  return out;
}

CncReport cnc_defect(const Mesh& mesh, const DeformationField& field, int resolution, int workers) {
  CncReport rep;
  rep.det_integral = det_integral(mesh, field);
  ImageArea img = image_area(mesh, field, resolution, workers);
  rep.image_area = img.area;
  rep.defect = rep.det_integral - rep.image_area;
  rep.max_multiplicity = img.max_multiplicity;
  rep.raster_resolution = resolution;
  rep.cell_size = std::max(img.grid.cell_w, img.grid.cell_h);
  std::vector<double> lengths;
  for (const auto& e : mesh.boundary_edges())
    lengths.push_back((field.positions()[e[1]] - field.positions()[e[0]]).norm());
  rep.image_perimeter = pairwise_sum(lengths);
  rep.raster_tolerance = 2.0 * rep.image_perimeter * rep.cell_size;
  const auto inj = boundary_injectivity(mesh, field);
  rep.boundary_injective = inj.injective;
  rep.boundary_witness = inj.witness;
  rep.overlap_pairs = overlap_pairs(mesh, field);
  rep.grid = std::move(img.grid);
  return rep;
}

void write_pgm(const std::filesystem::path& path, const MultiplicityGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  int maxc = 1;
  for (int c : grid.counts) maxc = std::max(maxc, c);
  out << "P5\n" << grid.resolution << " " << grid.resolution << "\n255\n";
  for (int j = grid.resolution - 1; j >= 0; --j) {
    for (int i = 0; i < grid.resolution; ++i) {
      const auto v = static_cast<unsigned char>(std::lround(255.0 * grid.at(i, j) / maxc));
      out.put(static_cast<char>(v));
    }
  }
}

}  // namespace selfrep
