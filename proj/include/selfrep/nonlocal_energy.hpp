#pragma once

#include "selfrep/field.hpp"
#include "selfrep/params.hpp"

#include <array>
#include <string>
#include <vector>

namespace selfrep {

enum class QuadratureScheme { centroid, three_point };
enum class DiagonalPolicy { skip_self, subdivide_adjacent };

const char* to_string(QuadratureScheme s);
const char* to_string(DiagonalPolicy p);
QuadratureScheme parse_scheme(const std::string& name);
DiagonalPolicy parse_policy(const std::string& name);

/// How the double integrals are discretized.
///
/// `centroid` uses one node per triangle (edge midpoint on the boundary);
/// `three_point` uses the degree-2 triangle rule (3-point Gauss-Legendre on
/// edges). Under `skip_self` the diagonal pairs T = T' are omitted. Under
/// `subdivide_adjacent` every pair of carriers sharing a vertex, including the
/// diagonal pair, is integrated on a uniform refinement of depth
/// `subdivision_depth`, omitting only coincident sub-cells.
struct QuadratureSpec {
  QuadratureScheme scheme = QuadratureScheme::centroid;
  DiagonalPolicy diagonal_policy = DiagonalPolicy::skip_self;
  int subdivision_depth = 2;
};

struct RepulsionResult {
  double value = 0.0;  // +inf for the inadmissible and coincident-image sentinels
  std::vector<Vec2> gradient;
  EvalStatus status = EvalStatus::ok;
  /// Offending carrier ids: (element, -1) when inadmissible, the two carriers
  /// (triangles or boundary edges) when images coincide.
  std::array<int, 2> witness{-1, -1};
  std::size_t pairs = 0;  // ordered carrier pairs evaluated
};

/// Discrete bulk repulsion over region x region:
///   sum  w_a w_b |x_a - x_b|^q / |y(x_a) - y(x_b)|^(d+sq) * det F_a * det F_b.
RepulsionResult bulk_repulsion(const Mesh& mesh, const DeformationField& field, double q, double s,
                               const Region& region, const QuadratureSpec& quad, bool with_gradient = true,
                               int workers = 1);

/// Discrete boundary repulsion over pairs of boundary edges:
///   sum  w_a w_b |x_a - x_b|^q / |y(x_a) - y(x_b)|^(d-1+sq).
RepulsionResult surface_repulsion(const Mesh& mesh, const DeformationField& field, double q, double s,
                                  const QuadratureSpec& quad, bool with_gradient = true, int workers = 1);

/// Integration region for the bulk-type variants (full domain or delta layer).
Region active_region(const ModelParams& params, const Mesh& mesh);

RepulsionResult repulsion_dispatch(const ModelParams& params, const Mesh& mesh, const DeformationField& field,
                                   const QuadratureSpec& quad, bool with_gradient = true, int workers = 1);

/// As repulsion_dispatch, reusing a precomputed region for bulk-type variants.
RepulsionResult repulsion_dispatch(const ModelParams& params, const Mesh& mesh, const DeformationField& field,
                                   const Region& region, const QuadratureSpec& quad, bool with_gradient = true,
                                   int workers = 1);

// Cost profile ----------------------------------------------------------------

struct CostRow {
  Variant variant = Variant::bulk;
  int n = 0;
  double h = 0.0;
  std::size_t pairs = 0;
  double median_seconds = 0.0;
};

struct CostProfile {
  std::vector<CostRow> rows;
  double fitted_slope = 0.0;       // log(time) vs log(h)
  double pair_count_slope = 0.0;   // log(pairs) vs log(h)
};

/// Times value+gradient evaluation on the identity of the structured square
/// for each n. The boundary-layer variant uses delta = delta_cells * h.
CostProfile cost_profile(const std::vector<int>& sizes, Variant variant, const ModelParams& params,
                         const QuadratureSpec& quad, double delta_cells = 2.0, int workers = 1, int samples = 5);

/// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace selfrep
