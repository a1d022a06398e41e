#pragma once

#include "selfrep/field.hpp"
#include "selfrep/params.hpp"

#include <vector>

namespace selfrep {

/// Neo-Hookean energy  sum_T |T| (|F_T|^p + det(F_T)^-r)  and its vertex gradient.
struct ElasticResult {
  double grad_term = 0.0;  // integral of |F|^p
  double det_term = 0.0;   // integral of det(F)^-r
  double value = 0.0;      // +inf when the field is inadmissible
  std::vector<Vec2> gradient;
  EvalStatus status = EvalStatus::ok;
  int worst_element = -1;  // set when status is inadmissible
};

ElasticResult elastic_energy(const Mesh& mesh, const DeformationField& field, double p, double r,
                             bool with_gradient = true, int workers = 1);

struct DistortionReport {
  std::vector<double> per_element;  // K^O = |F|^d / det F
  double kappa = 0.0;
  double norm = 0.0;  // L^kappa norm over the domain
};

/// Outer distortion per element and its L^kappa norm. Throws InadmissibleField.
DistortionReport distortion_diagnostic(const Mesh& mesh, const DeformationField& field, const ModelParams& params);

}  // namespace selfrep
