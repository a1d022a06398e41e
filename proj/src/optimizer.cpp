#include "selfrep/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace selfrep {

const char* to_string(Method m) { return m == Method::lbfgs ? "lbfgs" : "gradient-descent"; }

Method parse_method(const std::string& name) {
  if (name == "lbfgs") return Method::lbfgs;
  if (name == "gradient-descent") return Method::gradient_descent;
  throw std::invalid_argument("unknown method '" + name + "' (expected lbfgs or gradient-descent)");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max-iters";
    case Termination::line_search_failure: return "line-search-failure";
  }
  return "unknown";
}

PenaltyValue box_penalty(std::span<const Vec2> positions, const Box& box, double stiffness) {
  PenaltyValue out;
  out.gradient.assign(positions.size(), Vec2::Zero());
  std::vector<double> parts(positions.size(), 0.0);
  for (std::size_t v = 0; v < positions.size(); ++v) {
    Vec2 excess = Vec2::Zero();
    for (int k = 0; k < 2; ++k) {
      if (positions[v][k] < box.lo[k]) excess[k] = positions[v][k] - box.lo[k];
      else if (positions[v][k] > box.hi[k]) excess[k] = positions[v][k] - box.hi[k];
    }
    parts[v] = stiffness * excess.squaredNorm();
    out.gradient[v] = 2.0 * stiffness * excess;
  }
  out.value = pairwise_sum(parts);
  return out;
}

namespace {

using Flat = Eigen::VectorXd;

Flat flatten(const std::vector<Vec2>& v) {
  Flat f(static_cast<Eigen::Index>(2 * v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) f.segment<2>(static_cast<Eigen::Index>(2 * i)) = v[i];
  return f;
}

std::vector<Vec2> unflatten(const Flat& f) {
  std::vector<Vec2> v(static_cast<std::size_t>(f.size() / 2));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f.segment<2>(static_cast<Eigen::Index>(2 * i));
  return v;
}

struct Evaluation {
  EnergyBreakdown energy;
  double box_term = 0.0;
  double objective = kInfinity;
  Flat gradient;
};

Evaluation evaluate(const EnergyContext& ctx, const DeformationField& field) {
  Evaluation ev;
  ev.energy = evaluate_energy(ctx, field, true);
  if (!ev.energy.finite()) return ev;
  ev.objective = ev.energy.total;
  ev.gradient = flatten(ev.energy.gradient);
  if (ctx.params.box) {
    const PenaltyValue pen = box_penalty(field.positions(), *ctx.params.box, ctx.params.box_stiffness);
    ev.box_term = pen.value;
    ev.objective += pen.value;
    ev.gradient += flatten(pen.gradient);
  }
  return ev;
}

// Largest step keeping every linearized determinant above (1 - tau) of its value.
double feasibility_cap(const Mesh& mesh, const DeformationField& field, const Flat& dir, double tau) {
  double cap = kInfinity;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    Mat2 dds;
    dds.col(0) = dir.segment<2>(2 * tri[1]) - dir.segment<2>(2 * tri[0]);
    dds.col(1) = dir.segment<2>(2 * tri[2]) - dir.segment<2>(2 * tri[0]);
    const Mat2 dF = dds * mesh.reference_inverse(t);
    const auto& st = field.state()[t];
    const double rate = cofactor(st.F).cwiseProduct(dF).sum();
    if (rate < 0.0) cap = std::min(cap, tau * st.det / -rate);
  }
  return cap;
}

TraceRecord make_record(int iter, const Evaluation& ev, const DeformationField& field, double step) {
  TraceRecord r;
  r.iter = iter;
  r.total = ev.objective;
  r.grad_term = ev.energy.grad_term;
  r.det_term = ev.energy.det_term;
  r.nonlocal_term = ev.energy.nonlocal_term;
  r.box_term = ev.box_term;
  r.grad_norm = ev.gradient.size() ? ev.gradient.cwiseAbs().maxCoeff() : 0.0;
  r.step = step;
  r.min_det = field.min_det();
  return r;
}

}  // namespace

MinimizeResult minimize(const EnergyContext& ctx, const DeformationField& y0, const OptimizerSettings& settings) {
  const Mesh& mesh = *ctx.mesh;
  if (!y0.admissible())
    throw InfeasibleStart("initial field is inadmissible (det F = " + std::to_string(y0.min_det()) + " on triangle " +
                          std::to_string(y0.worst_element()) + ")");
  DeformationField field = y0;
  Evaluation cur = evaluate(ctx, field);
  if (!std::isfinite(cur.objective))
    throw InfeasibleStart(std::string("initial energy is not finite (") + to_string(cur.energy.status) + ")");

  OptimizerTrace trace;
  trace.records.push_back(make_record(0, cur, field, 0.0));

  std::deque<std::pair<Flat, Flat>> memory;  // (s, y) pairs
  double last_step = 1.0;
  trace.reason = Termination::max_iters;

  for (int it = 1; it <= settings.max_iters; ++it) {
    if (cur.gradient.cwiseAbs().maxCoeff() <= settings.grad_tol) {
      trace.reason = Termination::converged;
      break;
    }
    Flat dir = -cur.gradient;
    if (settings.method == Method::lbfgs && !memory.empty()) {
      // Two-loop recursion.
      Flat qv = cur.gradient;
      std::vector<double> alpha(memory.size());
      for (std::size_t k = memory.size(); k-- > 0;) {
        const auto& [s, y] = memory[k];
        alpha[k] = s.dot(qv) / y.dot(s);
        qv -= alpha[k] * y;
      }
      const auto& [s_last, y_last] = memory.back();
      qv *= s_last.dot(y_last) / y_last.dot(y_last);
      for (std::size_t k = 0; k < memory.size(); ++k) {
        const auto& [s, y] = memory[k];
        const double beta = y.dot(qv) / y.dot(s);
        qv += (alpha[k] - beta) * s;
      }
      dir = -qv;
      if (dir.dot(cur.gradient) >= 0.0) {
        dir = -cur.gradient;
        memory.clear();
      }
    }
    const double slope = dir.dot(cur.gradient);
    const double cap = feasibility_cap(mesh, field, dir, settings.feasibility_fraction);
    double step;
    if (settings.method == Method::lbfgs && !memory.empty()) step = 1.0;
    else if (settings.method == Method::lbfgs) step = std::min(1.0, 1e-2 / dir.cwiseAbs().maxCoeff());
    else step = 2.0 * last_step;
    step = std::min(step, cap);

    const Flat x = flatten(field.positions());
    bool accepted = false;
    Evaluation trial;
    std::optional<DeformationField> trial_field;
    while (step > 1e-16) {
      trial_field.emplace(mesh, unflatten(x + step * dir));
      if (trial_field->admissible()) {
        trial = evaluate(ctx, *trial_field);
        if (std::isfinite(trial.objective) && trial.objective <= cur.objective + settings.armijo_c * step * slope) {
          accepted = true;
          break;
        }
      }
      step *= settings.backtrack_factor;
    }
    if (!accepted) {
      trace.reason = Termination::line_search_failure;
      break;
    }
    Flat s = step * dir;
    Flat y = trial.gradient - cur.gradient;
    if (settings.method == Method::lbfgs && s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > settings.history) memory.pop_front();
    }
    field = std::move(*trial_field);
    cur = std::move(trial);
    last_step = step;
    trace.records.push_back(make_record(it, cur, field, step));
  }
  if (trace.reason == Termination::max_iters && cur.gradient.cwiseAbs().maxCoeff() <= settings.grad_tol)
    trace.reason = Termination::converged;

  MinimizeResult res{std::move(field), std::move(trace), std::move(cur.energy), cur.box_term};
  return res;
}

// Shrinking maps ---------------------------------------------------------------

NotStarShaped::NotStarShaped(int vertex)
    : std::runtime_error("domain is not star-shaped: boundary vertex " + std::to_string(vertex) +
                         " is not visible from the center"),
      vertex_(vertex) {}

void require_star_shaped(const Mesh& mesh, const Vec2& center) {
  (void)point_locate(mesh, center);
  if (mesh.distance_to_boundary(center) <= 0.0) throw std::invalid_argument("shrink center lies on the boundary");
  const auto& X = mesh.vertices();
  const auto& edges = mesh.boundary_edges();
  for (const auto& e : edges) {
    const int v = e[0];
    for (const auto& f : edges) {
      if (f[0] == v || f[1] == v) continue;
      if (segments_intersect(center, X[v], X[f[0]], X[f[1]])) throw NotStarShaped(v);
    }
  }
}

ShrinkResult shrink_map(const Mesh& mesh, int j, const Vec2& center, const DeformationField& base) {
  if (j < 2) throw std::invalid_argument("shrink_map requires j >= 2");
  require_star_shaped(mesh, center);
  const double lambda = static_cast<double>(j - 1) / j;
  std::vector<Vec2> mapped(mesh.num_vertices());
  std::vector<Vec2> composed(mesh.num_vertices());
  const auto& y = base.positions();
  for (std::size_t v = 0; v < mapped.size(); ++v) {
    mapped[v] = center + lambda * (mesh.vertices()[v] - center);
    const Location loc = point_locate(mesh, mapped[v]);
    const auto& tri = mesh.triangles()[loc.triangle];
    composed[v] = loc.bary[0] * y[tri[0]] + loc.bary[1] * y[tri[1]] + loc.bary[2] * y[tri[2]];
  }
  return {std::move(mapped), DeformationField(mesh, std::move(composed))};
}

// Gamma sweep ------------------------------------------------------------------

std::vector<double> geometric_schedule(double eps0, double factor, int steps) {
  std::vector<double> out;
  double e = eps0;
  for (int k = 0; k < steps; ++k) {
    out.push_back(e);
    e *= factor;
  }
  return out;
}

SweepResult gamma_sweep(const Mesh& mesh, const DeformationField& y0, std::span<const double> schedule,
                        const ModelParams& params, const QuadratureSpec& quad, const OptimizerSettings& settings,
                        int resolution, int workers) {
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (schedule[k] > schedule[k - 1]) throw std::invalid_argument("epsilon schedule must be non-increasing");
  SweepResult out;
  DeformationField start = y0;
  ModelParams mp = params;
  EnergyContext ctx(mesh, mp, quad, workers);
  for (double eps : schedule) {
    ctx.params.epsilon = eps;
    MinimizeResult run = minimize(ctx, start, settings);
    SweepRecord rec{eps, run.field, run.energy, cnc_defect(mesh, run.field, resolution, workers),
                    eps * run.energy.nonlocal_term, run.box_term,
                    static_cast<int>(run.trace.records.size()) - 1, run.trace.reason};
    start = run.field;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace selfrep
