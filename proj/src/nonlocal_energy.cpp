#include "selfrep/nonlocal_energy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace selfrep {

const char* to_string(QuadratureScheme s) {
  return s == QuadratureScheme::centroid ? "centroid" : "3-point";
}

const char* to_string(DiagonalPolicy p) {
  return p == DiagonalPolicy::skip_self ? "skip-self" : "subdivide-adjacent";
}

QuadratureScheme parse_scheme(const std::string& name) {
  if (name == "centroid") return QuadratureScheme::centroid;
  if (name == "3-point") return QuadratureScheme::three_point;
  throw std::invalid_argument("unknown quadrature scheme '" + name + "' (expected centroid or 3-point)");
}

DiagonalPolicy parse_policy(const std::string& name) {
  if (name == "skip-self") return DiagonalPolicy::skip_self;
  if (name == "subdivide-adjacent") return DiagonalPolicy::subdivide_adjacent;
  throw std::invalid_argument("unknown diagonal policy '" + name + "' (expected skip-self or subdivide-adjacent)");
}

namespace {

// x^e for x > 0, with multiplication/sqrt fast paths when 2e is an integer.
class Power {
 public:
  explicit Power(double e) : e_(e) {
    const double twice = 2.0 * e;
    if (std::abs(twice - std::round(twice)) == 0.0 && std::abs(twice) <= 64.0) {
      const long k = std::lround(twice);
      negative_ = k < 0;
      const long a = std::abs(k);
      whole_ = static_cast<int>(a / 2);
      half_ = (a % 2) != 0;
      fast_ = true;
    }
  }

  double operator()(double x) const {
    if (!fast_) return std::pow(x, e_);
    double v = 1.0;
    for (int i = 0; i < whole_; ++i) v *= x;
    if (half_) v *= std::sqrt(x);
    return negative_ ? 1.0 / v : v;
  }

 private:
  double e_;
  bool fast_ = false;
  bool negative_ = false;
  bool half_ = false;
  int whole_ = 0;
};

struct NodeSet {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> w;  // absolute weights (measure included)
  std::vector<int> cell;  // sub-cell id, used to skip coincident sub-cells
  std::vector<Vec2> x;
  std::vector<Vec2> y;
  std::size_t size() const { return w.size(); }
};

struct Carrier {
  int id = -1;
  std::array<int, 3> verts{-1, -1, -1};
  double det = 1.0;
  NodeSet coarse;
  NodeSet fine;
  std::vector<int> neighbors;  // carrier indices sharing a vertex, sorted, self excluded
};

struct NodeTemplate {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> w;  // relative to the carrier measure
  std::vector<int> cell;
};

NodeTemplate triangle_base(QuadratureScheme s) {
  NodeTemplate t;
  if (s == QuadratureScheme::centroid) {
    t.bary = {{1.0 / 3, 1.0 / 3, 1.0 / 3}};
    t.w = {1.0};
  } else {
    t.bary = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};
    t.w = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  }
  t.cell.assign(t.w.size(), 0);
  return t;
}

NodeTemplate edge_base(QuadratureScheme s) {
  NodeTemplate t;
  auto add = [&t](double u, double w) {
    t.bary.push_back({1.0 - u, u, 0.0});
    t.w.push_back(w);
  };
  if (s == QuadratureScheme::centroid) {
    add(0.5, 1.0);
  } else {
    const double g = 0.5 * std::sqrt(0.6);
    add(0.5 - g, 5.0 / 18);
    add(0.5, 8.0 / 18);
    add(0.5 + g, 5.0 / 18);
  }
  t.cell.assign(t.w.size(), 0);
  return t;
}

using Bary = std::array<double, 3>;

Bary lerp_bary(const std::array<Bary, 3>& corners, const Bary& local) {
  Bary out{};
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 3; ++c) out[c] += local[k] * corners[k][c];
  return out;
}

void subdivide_triangle(const std::array<Bary, 3>& corners, int depth, const NodeTemplate& base, double scale,
                        NodeTemplate& out) {
  if (depth == 0) {
    const int cell = out.cell.empty() ? 0 : out.cell.back() + 1;
    for (std::size_t i = 0; i < base.w.size(); ++i) {
      out.bary.push_back(lerp_bary(corners, base.bary[i]));
      out.w.push_back(base.w[i] * scale);
      out.cell.push_back(cell);
    }
    return;
  }
  auto mid = [](const Bary& a, const Bary& b) { return Bary{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])}; };
  const Bary m01 = mid(corners[0], corners[1]);
  const Bary m12 = mid(corners[1], corners[2]);
  const Bary m20 = mid(corners[2], corners[0]);
  const double sub = 0.25 * scale;
  subdivide_triangle({corners[0], m01, m20}, depth - 1, base, sub, out);
  subdivide_triangle({m01, corners[1], m12}, depth - 1, base, sub, out);
  subdivide_triangle({m20, m12, corners[2]}, depth - 1, base, sub, out);
  subdivide_triangle({m01, m12, m20}, depth - 1, base, sub, out);
}

NodeTemplate refine_triangle(const NodeTemplate& base, int depth) {
  NodeTemplate out;
  subdivide_triangle({Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 1}}, depth, base, 1.0, out);
  return out;
}

NodeTemplate refine_edge(const NodeTemplate& base, int depth) {
  NodeTemplate out;
  const int pieces = 1 << depth;
  for (int k = 0; k < pieces; ++k) {
    const double u0 = static_cast<double>(k) / pieces;
    const double u1 = static_cast<double>(k + 1) / pieces;
    for (std::size_t i = 0; i < base.w.size(); ++i) {
      const double u = u0 + (u1 - u0) * base.bary[i][1];
      out.bary.push_back({1.0 - u, u, 0.0});
      out.w.push_back(base.w[i] / pieces);
      out.cell.push_back(k);
    }
  }
  return out;
}

NodeSet instantiate(const NodeTemplate& t, const std::array<int, 3>& verts, double measure,
                    const std::vector<Vec2>& ref, const std::vector<Vec2>& def) {
  NodeSet ns;
  ns.bary = t.bary;
  ns.cell = t.cell;
  ns.w.resize(t.w.size());
  ns.x.resize(t.w.size());
  ns.y.resize(t.w.size());
  for (std::size_t i = 0; i < t.w.size(); ++i) {
    ns.w[i] = t.w[i] * measure;
    Vec2 x = Vec2::Zero(), y = Vec2::Zero();
    for (int k = 0; k < 3; ++k) {
      if (verts[k] < 0 || t.bary[i][k] == 0.0) continue;
      x += t.bary[i][k] * ref[verts[k]];
      y += t.bary[i][k] * def[verts[k]];
    }
    ns.x[i] = x;
    ns.y[i] = y;
  }
  return ns;
}

struct RowOut {
  double value = 0.0;
  std::array<Vec2, 3> vgrad{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  double ddet = 0.0;  // partial of the row with respect to this carrier's det factor
  std::size_t pairs = 0;
  int coincident_with = -1;
};

struct Kernel {
  Power ref_power;  // applied to |x - x'|^2
  Power def_power;  // applied to |y - y'|^2
  double def_exponent;  // d + sq (bulk) or d - 1 + sq (surface)
  double tol2;
};

void accumulate_nodes(const NodeSet& ns, const std::vector<Vec2>& g, const Carrier& c, RowOut& out) {
  for (std::size_t i = 0; i < ns.size(); ++i)
    for (int k = 0; k < 3; ++k)
      if (c.verts[k] >= 0) out.vgrad[k] += ns.bary[i][k] * g[i];
}

RowOut compute_row(const std::vector<Carrier>& cs, std::size_t a, const Kernel& kern, DiagonalPolicy policy,
                   bool with_gradient) {
  RowOut out;
  const Carrier& A = cs[a];
  std::vector<Vec2> g_coarse(with_gradient ? A.coarse.size() : 0, Vec2::Zero());
  std::vector<Vec2> g_fine(with_gradient ? A.fine.size() : 0, Vec2::Zero());
  std::size_t nb = 0;
  const bool refine = policy == DiagonalPolicy::subdivide_adjacent;
  for (std::size_t b = 0; b < cs.size(); ++b) {
    bool adjacent = false;
    if (b == a) {
      if (!refine) continue;
      adjacent = true;
    } else if (refine) {
      while (nb < A.neighbors.size() && static_cast<std::size_t>(A.neighbors[nb]) < b) ++nb;
      adjacent = nb < A.neighbors.size() && static_cast<std::size_t>(A.neighbors[nb]) == b;
    }
    const Carrier& B = cs[b];
    const NodeSet& na = adjacent ? A.fine : A.coarse;
    const NodeSet& nbs = adjacent ? B.fine : B.coarse;
    std::vector<Vec2>& g = adjacent ? g_fine : g_coarse;
    const double detprod = A.det * B.det;
    const bool self = b == a;
    for (std::size_t i = 0; i < na.size(); ++i) {
      const Vec2& xi = na.x[i];
      const Vec2& yi = na.y[i];
      const double wi = na.w[i] * detprod;
      Vec2 gi = Vec2::Zero();
      for (std::size_t j = 0; j < nbs.size(); ++j) {
        if (self && na.cell[i] == nbs.cell[j]) continue;
        const Vec2 dy = yi - nbs.y[j];
        const double dy2 = dy.squaredNorm();
        if (dy2 <= kern.tol2) {
          out.coincident_with = static_cast<int>(b);
          return out;
        }
        const double dx2 = (xi - nbs.x[j]).squaredNorm();
        const double term = wi * nbs.w[j] * kern.ref_power(dx2) * kern.def_power(dy2);
        out.value += term;
        if (with_gradient) gi -= (kern.def_exponent * term / dy2) * dy;
      }
      if (with_gradient) g[i] += gi;
    }
    ++out.pairs;
  }
  out.ddet = out.value / A.det;
  if (with_gradient) {
    accumulate_nodes(A.coarse, g_coarse, A, out);
    if (refine) accumulate_nodes(A.fine, g_fine, A, out);
  }
  return out;
}

RepulsionResult sum_pairs(const Mesh& mesh, const DeformationField& field, std::vector<Carrier>& cs,
                          const Kernel& kern, DiagonalPolicy policy, bool with_gradient, bool det_factor, int workers) {
  RepulsionResult res;
  std::vector<RowOut> rows(cs.size());
  parallel_for(cs.size(), workers, [&](std::size_t a) { rows[a] = compute_row(cs, a, kern, policy, with_gradient); });

  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (rows[a].coincident_with >= 0) {
      res.status = EvalStatus::coincident_images;
      res.value = kInfinity;
      res.witness = {cs[a].id, cs[static_cast<std::size_t>(rows[a].coincident_with)].id};
      return res;
    }
  }
  std::vector<double> values(rows.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    values[a] = rows[a].value;
    res.pairs += rows[a].pairs;
  }
  res.value = pairwise_sum(values);
  if (!with_gradient) return res;

  // The pair sum is symmetric, so the full derivative with respect to data
  // owned by carrier a is twice the row's first-argument partial.
  res.gradient.assign(mesh.num_vertices(), Vec2::Zero());
  for (std::size_t a = 0; a < cs.size(); ++a) {
    for (int k = 0; k < 3; ++k)
      if (cs[a].verts[k] >= 0) res.gradient[cs[a].verts[k]] += 2.0 * rows[a].vgrad[k];
    if (det_factor) {
      const auto t = static_cast<std::size_t>(cs[a].id);
      const auto& st = field.state()[t];
      scatter_piola(mesh, t, cofactor(st.F), 2.0 * rows[a].ddet / mesh.element_areas()[t], res.gradient);
    }
  }
  return res;
}

RepulsionResult inadmissible_result(const DeformationField& field) {
  RepulsionResult res;
  res.status = EvalStatus::inadmissible;
  res.value = kInfinity;
  res.witness = {field.worst_element(), -1};
  return res;
}

void check_quad(const QuadratureSpec& quad) {
  if (quad.diagonal_policy == DiagonalPolicy::subdivide_adjacent && quad.subdivision_depth < 1)
    throw std::invalid_argument("subdivide-adjacent requires subdivision_depth >= 1");
}

}  // namespace

RepulsionResult bulk_repulsion(const Mesh& mesh, const DeformationField& field, double q, double s,
                               const Region& region, const QuadratureSpec& quad, bool with_gradient, int workers) {
  check_quad(quad);
  if (region.element_ids.empty()) throw std::invalid_argument("bulk_repulsion requires a nonempty region");
  if (!field.admissible()) return inadmissible_result(field);

  const double d = 2.0;
  const bool refine = quad.diagonal_policy == DiagonalPolicy::subdivide_adjacent;
  const NodeTemplate base = triangle_base(quad.scheme);
  const NodeTemplate fine = refine ? refine_triangle(base, quad.subdivision_depth) : NodeTemplate{};

  std::vector<int> slot(mesh.num_triangles(), -1);
  for (std::size_t i = 0; i < region.element_ids.size(); ++i) slot[region.element_ids[i]] = static_cast<int>(i);

  std::vector<Carrier> cs(region.element_ids.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const int t = region.element_ids[i];
    Carrier& c = cs[i];
    c.id = t;
    c.verts = mesh.triangles()[t];
    c.det = field.state()[t].det;
    const double area = mesh.element_areas()[t];
    c.coarse = instantiate(base, c.verts, area, mesh.vertices(), field.positions());
    if (refine) {
      c.fine = instantiate(fine, c.verts, area, mesh.vertices(), field.positions());
      for (int v : c.verts)
        for (int nbr : mesh.vertex_triangles(v))
          if (nbr != t && slot[nbr] >= 0) c.neighbors.push_back(slot[nbr]);
      std::sort(c.neighbors.begin(), c.neighbors.end());
      c.neighbors.erase(std::unique(c.neighbors.begin(), c.neighbors.end()), c.neighbors.end());
    }
  }
  const double tol = 1e-14 * mesh.diameter();
  const double m = d + s * q;
  const Kernel kern{Power(0.5 * q), Power(-0.5 * m), m, tol * tol};
  return sum_pairs(mesh, field, cs, kern, quad.diagonal_policy, with_gradient, true, workers);
}

RepulsionResult surface_repulsion(const Mesh& mesh, const DeformationField& field, double q, double s,
                                  const QuadratureSpec& quad, bool with_gradient, int workers) {
  check_quad(quad);
  if (!field.admissible()) return inadmissible_result(field);

  const double d = 2.0;
  const bool refine = quad.diagonal_policy == DiagonalPolicy::subdivide_adjacent;
  const NodeTemplate base = edge_base(quad.scheme);
  const NodeTemplate fine = refine ? refine_edge(base, quad.subdivision_depth) : NodeTemplate{};

  const auto& edges = mesh.boundary_edges();
  std::vector<std::vector<int>> vertex_edges(mesh.num_vertices());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    vertex_edges[edges[e][0]].push_back(static_cast<int>(e));
    vertex_edges[edges[e][1]].push_back(static_cast<int>(e));
  }
  std::vector<Carrier> cs(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    Carrier& c = cs[e];
    c.id = static_cast<int>(e);
    c.verts = {edges[e][0], edges[e][1], -1};
    const double len = mesh.edge_length(e);
    c.coarse = instantiate(base, c.verts, len, mesh.vertices(), field.positions());
    if (refine) {
      c.fine = instantiate(fine, c.verts, len, mesh.vertices(), field.positions());
      for (int k = 0; k < 2; ++k)
        for (int other : vertex_edges[edges[e][k]])
          if (other != static_cast<int>(e)) c.neighbors.push_back(other);
      std::sort(c.neighbors.begin(), c.neighbors.end());
      c.neighbors.erase(std::unique(c.neighbors.begin(), c.neighbors.end()), c.neighbors.end());
    }
  }
  const double tol = 1e-14 * mesh.diameter();
  const double m = d - 1.0 + s * q;
  const Kernel kern{Power(0.5 * q), Power(-0.5 * m), m, tol * tol};
  return sum_pairs(mesh, field, cs, kern, quad.diagonal_policy, with_gradient, false, workers);
}

Region active_region(const ModelParams& params, const Mesh& mesh) {
  if (params.variant == Variant::boundary_layer) {
    if (!params.delta) throw std::invalid_argument("boundary-layer variant requires delta");
    return delta_layer(mesh, *params.delta);
  }
  return full_region(mesh);
}

RepulsionResult repulsion_dispatch(const ModelParams& params, const Mesh& mesh, const DeformationField& field,
                                   const Region& region, const QuadratureSpec& quad, bool with_gradient,
                                   int workers) {
  if (params.variant == Variant::surface)
    return surface_repulsion(mesh, field, params.q, params.s, quad, with_gradient, workers);
  return bulk_repulsion(mesh, field, params.q, params.s, region, quad, with_gradient, workers);
}

RepulsionResult repulsion_dispatch(const ModelParams& params, const Mesh& mesh, const DeformationField& field,
                                   const QuadratureSpec& quad, bool with_gradient, int workers) {
  if (params.variant == Variant::surface)
    return surface_repulsion(mesh, field, params.q, params.s, quad, with_gradient, workers);
  return bulk_repulsion(mesh, field, params.q, params.s, active_region(params, mesh), quad, with_gradient, workers);
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog_slope needs two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

CostProfile cost_profile(const std::vector<int>& sizes, Variant variant, const ModelParams& params,
                         const QuadratureSpec& quad, double delta_cells, int workers, int samples) {
  using clock = std::chrono::steady_clock;
  CostProfile prof;
  ModelParams mp = params;
  mp.variant = variant;
  for (int n : sizes) {
    const Mesh mesh = build_structured_square(n);
    const DeformationField field = DeformationField::identity(mesh);
    const double h = 1.0 / n;
    if (variant == Variant::boundary_layer) mp.delta = delta_cells * h;
    const Region region = variant == Variant::surface ? Region{} : active_region(mp, mesh);

    // Repeat short evaluations so each sample spans at least ~20 ms.
    auto run_once = [&] { return repulsion_dispatch(mp, mesh, field, region, quad, true, workers); };
    const auto t0 = clock::now();
    const RepulsionResult first = run_once();
    const double single = std::chrono::duration<double>(clock::now() - t0).count();
    const int reps = std::max(1, static_cast<int>(std::ceil(0.02 / std::max(single, 1e-9))));

    std::vector<double> times;
    for (int k = 0; k < samples; ++k) {
      const auto s0 = clock::now();
      for (int i = 0; i < reps; ++i) (void)run_once();
      times.push_back(std::chrono::duration<double>(clock::now() - s0).count() / reps);
    }
    std::sort(times.begin(), times.end());
    prof.rows.push_back({variant, n, h, first.pairs, times[times.size() / 2]});
  }
  if (prof.rows.size() >= 2) {
    std::vector<double> hs, ts, ps;
    for (const auto& r : prof.rows) {
      hs.push_back(r.h);
      ts.push_back(r.median_seconds);
      ps.push_back(static_cast<double>(r.pairs));
    }
    prof.fitted_slope = fit_loglog_slope(hs, ts);
    prof.pair_count_slope = fit_loglog_slope(hs, ps);
  }
  return prof;
}

}  // namespace selfrep
