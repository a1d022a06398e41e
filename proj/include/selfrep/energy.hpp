#pragma once

#include "selfrep/local_energy.hpp"
#include "selfrep/nonlocal_energy.hpp"

namespace selfrep {

/// E_eps = elastic + eps * repulsion, with every part reported separately.
struct EnergyBreakdown {
  double grad_term = 0.0;
  double det_term = 0.0;
  double nonlocal_term = 0.0;
  double total = 0.0;
  std::vector<Vec2> gradient;  // d total / d positions; empty unless requested and finite
  EvalStatus status = EvalStatus::ok;
  std::array<int, 2> witness{-1, -1};

  bool finite() const { return status == EvalStatus::ok; }
  double elastic() const { return grad_term + det_term; }
};

/// Precomputed, field-independent data for repeated evaluations on one mesh.
struct EnergyContext {
  const Mesh* mesh = nullptr;
  ModelParams params;
  QuadratureSpec quad;
  Region region;  // bulk-type variants only
  int workers = 1;

  EnergyContext(const Mesh& m, const ModelParams& p, const QuadratureSpec& q, int w = 1);
};

EnergyBreakdown evaluate_energy(const EnergyContext& ctx, const DeformationField& field, bool with_gradient = true);

}  // namespace selfrep
