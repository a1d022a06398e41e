#include "selfrep/local_energy.hpp"

#include <cmath>

namespace selfrep {

ElasticResult elastic_energy(const Mesh& mesh, const DeformationField& field, double p, double r,
                             bool with_gradient, int workers) {
  ElasticResult res;
  if (!field.admissible()) {
    res.status = EvalStatus::inadmissible;
    res.worst_element = field.worst_element();
    res.value = res.grad_term = res.det_term = kInfinity;
    return res;
  }
  const std::size_t nt = mesh.num_triangles();
  const auto& state = field.state();
  const auto& areas = mesh.element_areas();
  std::vector<double> gterm(nt), dterm(nt);
  std::vector<Mat2> piola(with_gradient ? nt : 0);
  parallel_for(nt, workers, [&](std::size_t t) {
    const auto& st = state[t];
    const double fp = std::pow(st.frob2, 0.5 * p);
    const double dr = std::pow(st.det, -r);
    gterm[t] = areas[t] * fp;
    dterm[t] = areas[t] * dr;
    if (with_gradient) {
      // d|F|^p/dF = p |F|^{p-2} F,  d det^-r/dF = -r det^{-r-1} cof F
      piola[t] = (p * fp / st.frob2) * st.F - (r * dr / st.det) * cofactor(st.F);
    }
  });
  res.grad_term = pairwise_sum(gterm);
  res.det_term = pairwise_sum(dterm);
  res.value = res.grad_term + res.det_term;
  if (with_gradient) {
    res.gradient.assign(mesh.num_vertices(), Vec2::Zero());
    for (std::size_t t = 0; t < nt; ++t) scatter_piola(mesh, t, piola[t], 1.0, res.gradient);
  }
  return res;
}

DistortionReport distortion_diagnostic(const Mesh& mesh, const DeformationField& field, const ModelParams& params) {
  if (!field.admissible()) throw InadmissibleField(field.worst_element(), field.min_det());
  DistortionReport rep;
  rep.kappa = derive_exponents(params).kappa;
  const auto& state = field.state();
  rep.per_element.resize(state.size());
  std::vector<double> weighted(state.size());
  for (std::size_t t = 0; t < state.size(); ++t) {
    const double k = std::pow(state[t].frob2, 0.5 * params.d) / state[t].det;
    rep.per_element[t] = k;
    weighted[t] = mesh.element_areas()[t] * std::pow(k, rep.kappa);
  }
  rep.norm = std::pow(pairwise_sum(weighted), 1.0 / rep.kappa);
  return rep;
}

}  // namespace selfrep
