#include "selfrep/energy.hpp"

namespace selfrep {

EnergyContext::EnergyContext(const Mesh& m, const ModelParams& p, const QuadratureSpec& q, int w)
    : mesh(&m), params(p), quad(q), workers(w) {
  if (params.variant != Variant::surface) region = active_region(params, m);
}

EnergyBreakdown evaluate_energy(const EnergyContext& ctx, const DeformationField& field, bool with_gradient) {
  EnergyBreakdown out;
  const Mesh& mesh = *ctx.mesh;
  const ElasticResult el = elastic_energy(mesh, field, ctx.params.p, ctx.params.r, with_gradient, ctx.workers);
  out.grad_term = el.grad_term;
  out.det_term = el.det_term;
  if (el.status != EvalStatus::ok) {
    out.status = el.status;
    out.witness = {el.worst_element, -1};
    out.nonlocal_term = out.total = kInfinity;
    return out;
  }
  // eps = 0 still reports the repulsion value as a diagnostic.
  const RepulsionResult rep = repulsion_dispatch(ctx.params, mesh, field, ctx.region, ctx.quad,
                                                 with_gradient && ctx.params.epsilon != 0.0, ctx.workers);
  out.nonlocal_term = rep.value;
  if (rep.status != EvalStatus::ok && ctx.params.epsilon != 0.0) {
    out.status = rep.status;
    out.witness = rep.witness;
    out.total = kInfinity;
    return out;
  }
  out.total = out.grad_term + out.det_term;
  if (ctx.params.epsilon != 0.0) out.total += ctx.params.epsilon * out.nonlocal_term;
  if (with_gradient) {
    out.gradient = el.gradient;
    if (ctx.params.epsilon != 0.0)
      for (std::size_t v = 0; v < out.gradient.size(); ++v) out.gradient[v] += ctx.params.epsilon * rep.gradient[v];
  }
  return out;
}

}  // namespace selfrep
