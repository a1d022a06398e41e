#include "selfrep/report.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>

namespace selfrep {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

// JSON has no infinity; sentinels are written as null.
std::string json_num(double v) { return std::isfinite(v) ? num(v) : "null"; }

std::string json_pairs(const std::vector<std::array<int, 2>>& pairs) {
  std::string out = "[";
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out += fmt::format("{}[{}, {}]", i ? ", " : "", pairs[i][0], pairs[i][1]);
  return out + "]";
}

}  // namespace

void write_trace_csv(std::ostream& out, const OptimizerTrace& trace) {
  out << "iter,total,grad_term,det_term,nonlocal_term,box_term,grad_norm,step,min_det\n";
  for (const auto& r : trace.records)
    fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", r.iter, num(r.total), num(r.grad_term), num(r.det_term),
               num(r.nonlocal_term), num(r.box_term), num(r.grad_norm), num(r.step), num(r.min_det));
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "epsilon,total,grad_term,det_term,nonlocal_term,eps_times_nonlocal,box_term,min_det,det_integral,"
         "image_area,defect,raster_tolerance,boundary_injective,overlap_pairs,iterations,termination\n";
  for (const auto& r : sweep.records)
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(r.epsilon), num(r.energy.total),
               num(r.energy.grad_term), num(r.energy.det_term), num(r.energy.nonlocal_term),
               num(r.eps_times_nonlocal), num(r.box_term), num(r.field.min_det()), num(r.cnc.det_integral),
               num(r.cnc.image_area), num(r.cnc.defect), num(r.cnc.raster_tolerance),
               r.cnc.boundary_injective ? 1 : 0, r.cnc.overlap_pairs.size(), r.iterations, to_string(r.reason));
}

void write_cost_csv(std::ostream& out, const CostProfile& profile) {
  out << "variant,n,h,pairs,median_seconds,fitted_slope\n";
  for (const auto& r : profile.rows)
    fmt::print(out, "{},{},{},{},{},{}\n", to_string(r.variant), r.n, num(r.h), r.pairs, num(r.median_seconds),
               num(profile.fitted_slope));
}

std::string validation_text(const ModelParams& params, const ValidationReport& rep) {
  std::string out = fmt::format("variant: {}\nd={} p={} r={} q={} s={}\n", to_string(params.variant), params.d,
                                num(params.p), num(params.r), num(params.q), num(params.s));
  out += fmt::format("sigma={} rho={} kappa={}\n", num(rep.derived.sigma), num(rep.derived.rho),
                     num(rep.derived.kappa));
  for (const auto& c : rep.checks)
    out += fmt::format("  [{}] {}: {} {} {}\n", c.holds ? "ok" : "FAIL", c.name, num(c.lhs), c.relation, num(c.rhs));
  if (rep.surface_sufficient)
    out += fmt::format("surface sufficient bounds: s < {}, q > {} ({})\n", num(rep.surface_sufficient->s_upper),
                       num(rep.surface_sufficient->q_lower), rep.surface_sufficient->met ? "met" : "not met");
  for (const auto& a : rep.ambiguities) out += "ambiguous: " + a + "\n";
  out += fmt::format("core_ok={} variant_ok={} valid={}\n", rep.core_ok, rep.variant_ok, rep.valid());
  return out;
}

std::string energy_json(const EnergyBreakdown& e, double epsilon) {
  return fmt::format(
      "{{\n  \"status\": \"{}\",\n  \"epsilon\": {},\n  \"grad_term\": {},\n  \"det_term\": {},\n"
      "  \"nonlocal_term\": {},\n  \"total\": {},\n  \"witness\": [{}, {}]\n}}\n",
      to_string(e.status), num(epsilon), json_num(e.grad_term), json_num(e.det_term), json_num(e.nonlocal_term),
      json_num(e.total), e.witness[0], e.witness[1]);
}

std::string cnc_json(const CncReport& c) {
  std::string witness = "null";
  if (c.boundary_witness) witness = fmt::format("[{}, {}]", (*c.boundary_witness)[0], (*c.boundary_witness)[1]);
  return fmt::format(
      "{{\n  \"det_integral\": {},\n  \"image_area\": {},\n  \"defect\": {},\n  \"raster_tolerance\": {},\n"
      "  \"raster_resolution\": {},\n  \"cell_size\": {},\n  \"image_perimeter\": {},\n  \"max_multiplicity\": {},\n"
      "  \"boundary_injective\": {},\n  \"boundary_witness\": {},\n  \"overlap_pair_count\": {},\n"
      "  \"overlap_pairs\": {}\n}}\n",
      num(c.det_integral), num(c.image_area), num(c.defect), num(c.raster_tolerance), c.raster_resolution,
      num(c.cell_size), num(c.image_perimeter), c.max_multiplicity, c.boundary_injective, witness,
      c.overlap_pairs.size(), json_pairs(c.overlap_pairs));
}

}  // namespace selfrep
