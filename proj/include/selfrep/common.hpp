#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace selfrep {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Outcome of an energy evaluation. `inadmissible` means det F <= 0 on some
/// element; `coincident_images` means two distinct quadrature nodes share an image.
enum class EvalStatus { ok, inadmissible, coincident_images };

const char* to_string(EvalStatus status);

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// cof(F) = det(F) F^{-T}; the derivative of det with respect to F.
inline Mat2 cofactor(const Mat2& F) {
  Mat2 c;
  c << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
  return c;
}

/// Index-ordered pairwise summation. The association order depends only on the
/// length of the input, never on how the terms were produced.
double pairwise_sum(std::span<const double> values);

/// Runs body(i) for every i in [0, n) using `workers` threads over contiguous
/// chunks. Callers must write only to slots owned by index i.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace selfrep
