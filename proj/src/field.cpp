#include "selfrep/field.hpp"

#include <string>

namespace selfrep {

std::vector<ElementState> element_gradients(const Mesh& mesh, std::span<const Vec2> positions) {
  if (positions.size() != mesh.num_vertices())
    throw MeshError("field has " + std::to_string(positions.size()) + " positions for " +
                    std::to_string(mesh.num_vertices()) + " vertices");
  std::vector<ElementState> out(mesh.num_triangles());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const auto& tri = mesh.triangles()[t];
    Mat2 ds;
    ds.col(0) = positions[tri[1]] - positions[tri[0]];
    ds.col(1) = positions[tri[2]] - positions[tri[0]];
    auto& st = out[t];
    st.F = ds * mesh.reference_inverse(t);
    st.det = st.F.determinant();
    st.frob2 = st.F.squaredNorm();
  }
  return out;
}

DeformationField::DeformationField(const Mesh& mesh, std::vector<Vec2> positions)
    : positions_(std::move(positions)), state_(element_gradients(mesh, positions_)) {
  min_det_ = kInfinity;
  for (std::size_t t = 0; t < state_.size(); ++t) {
    if (state_[t].det < min_det_) {
      min_det_ = state_[t].det;
      worst_ = static_cast<int>(t);
    }
  }
}

InadmissibleField::InadmissibleField(int element, double det)
    : std::runtime_error("inadmissible field: det F = " + std::to_string(det) + " on triangle " + std::to_string(element)),
      element_(element) {}

void scatter_piola(const Mesh& mesh, std::size_t t, const Mat2& P, double scale, std::vector<Vec2>& gradient) {
  // F = Ds Dm^{-1}; dW/dDs = P Dm^{-T}.
  const Mat2 H = scale * mesh.element_areas()[t] * P * mesh.reference_inverse(t).transpose();
  const auto& tri = mesh.triangles()[t];
  gradient[tri[1]] += H.col(0);
  gradient[tri[2]] += H.col(1);
  gradient[tri[0]] -= H.col(0) + H.col(1);
}

}  // namespace selfrep
