#pragma once

#include "selfrep/mesh.hpp"

#include <stdexcept>
#include <vector>

namespace selfrep {

/// Per-triangle state of a P1 deformation: F = grad y and its invariants.
struct ElementState {
  Mat2 F = Mat2::Identity();
  double det = 1.0;
  double frob2 = 2.0;  // |F|^2, Frobenius
};

std::vector<ElementState> element_gradients(const Mesh& mesh, std::span<const Vec2> positions);

/// Piecewise-affine deformation: deformed vertex positions plus the cached
/// per-element gradients they induce.
class DeformationField {
 public:
  DeformationField(const Mesh& mesh, std::vector<Vec2> positions);

  static DeformationField identity(const Mesh& mesh) { return {mesh, mesh.vertices()}; }

  const std::vector<Vec2>& positions() const { return positions_; }
  const std::vector<ElementState>& state() const { return state_; }

  /// det F > 0 on every triangle.
  bool admissible() const { return min_det_ > 0.0; }
  double min_det() const { return min_det_; }
  /// Triangle with the smallest determinant.
  int worst_element() const { return worst_; }

 private:
  std::vector<Vec2> positions_;
  std::vector<ElementState> state_;
  double min_det_ = 0.0;
  int worst_ = -1;
};

class InadmissibleField : public std::runtime_error {
 public:
  InadmissibleField(int element, double det);
  int element() const { return element_; }

 private:
  int element_;
};

/// Accumulates the vertex gradient of sum_T area_T * W(F_T) given P_T = dW/dF
/// for one triangle. `scale` multiplies the contribution.
void scatter_piola(const Mesh& mesh, std::size_t t, const Mat2& P, double scale, std::vector<Vec2>& gradient);

}  // namespace selfrep
