#pragma once

#include "selfrep/cnc.hpp"
#include "selfrep/energy.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfrep {

enum class Method { gradient_descent, lbfgs };

const char* to_string(Method m);
Method parse_method(const std::string& name);

struct OptimizerSettings {
  Method method = Method::lbfgs;
  int history = 8;  // L-BFGS memory
  int max_iters = 500;
  double grad_tol = 1e-6;  // on the max-norm of the objective gradient
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double feasibility_fraction = 0.9;  // tau: determinants keep >= (1 - tau) of their value
  std::uint64_t seed = 0;
};

enum class Termination { converged, max_iters, line_search_failure };

const char* to_string(Termination t);

struct TraceRecord {
  int iter = 0;
  double total = 0.0;  // minimized objective: E_eps plus box penalty
  double grad_term = 0.0;
  double det_term = 0.0;
  double nonlocal_term = 0.0;
  double box_term = 0.0;
  double grad_norm = 0.0;  // max-norm
  double step = 0.0;
  double min_det = 0.0;
};

struct OptimizerTrace {
  std::vector<TraceRecord> records;
  Termination reason = Termination::max_iters;
};

class InfeasibleStart : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PenaltyValue {
  double value = 0.0;
  std::vector<Vec2> gradient;
};

/// stiffness * sum over vertices of the squared distance of y(v) outside the box.
PenaltyValue box_penalty(std::span<const Vec2> positions, const Box& box, double stiffness);

struct MinimizeResult {
  DeformationField field;
  OptimizerTrace trace;
  EnergyBreakdown energy;
  double box_term = 0.0;
};

/// Minimizes E_eps (+ box penalty when params.box is set) from an admissible
/// start. Every accepted iterate is admissible and the objective never increases.
MinimizeResult minimize(const EnergyContext& ctx, const DeformationField& y0, const OptimizerSettings& settings);

// Shrinking maps ---------------------------------------------------------------

class NotStarShaped : public std::runtime_error {
 public:
  NotStarShaped(int vertex);
  int vertex() const { return vertex_; }

 private:
  int vertex_;
};

/// Throws NotStarShaped with the first boundary vertex not visible from center.
void require_star_shaped(const Mesh& mesh, const Vec2& center);

struct ShrinkResult {
  std::vector<Vec2> mapped;  // Psi_j at every reference vertex
  DeformationField composed;  // y o Psi_j, interpolated from the P1 base field
};

/// Psi_j(x) = center + ((j-1)/j)(x - center), composed with `base`.
ShrinkResult shrink_map(const Mesh& mesh, int j, const Vec2& center, const DeformationField& base);

// Gamma sweep ------------------------------------------------------------------

struct SweepRecord {
  double epsilon = 0.0;
  DeformationField field;
  EnergyBreakdown energy;
  CncReport cnc;
  double eps_times_nonlocal = 0.0;
  double box_term = 0.0;
  int iterations = 0;
  Termination reason = Termination::max_iters;
};

struct SweepResult {
  std::vector<SweepRecord> records;
};

/// eps0 * factor^k for k = 0..steps-1.
std::vector<double> geometric_schedule(double eps0, double factor, int steps);

/// Minimizes E_eps for each entry of a non-increasing schedule, warm-starting
/// every run from the previous minimizer.
SweepResult gamma_sweep(const Mesh& mesh, const DeformationField& y0, std::span<const double> schedule,
                        const ModelParams& params, const QuadratureSpec& quad, const OptimizerSettings& settings,
                        int resolution, int workers = 1);

}  // namespace selfrep
