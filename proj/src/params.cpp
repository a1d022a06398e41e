#include "selfrep/params.hpp"

#include <algorithm>
#include <stdexcept>

namespace selfrep {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::bulk: return "bulk";
    case Variant::boundary_layer: return "boundary-layer";
    case Variant::surface: return "surface";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "bulk") return Variant::bulk;
  if (name == "boundary-layer") return Variant::boundary_layer;
  if (name == "surface") return Variant::surface;
  throw std::invalid_argument("unknown variant '" + name + "' (expected bulk, boundary-layer or surface)");
}

DerivedExponents derive_exponents(const ModelParams& m) {
  const double d = m.d;
  DerivedExponents e;
  e.sigma = (m.r + 1.0) * m.p / (m.r * (d - 1.0) + m.p);
  e.rho = 1.0 + m.p / (d * m.r);
  e.kappa = m.r * (1.0 - 1.0 / e.rho);
  return e;
}

namespace {

Inequality check(std::string name, double lhs, const char* rel, double rhs) {
  Inequality in{std::move(name), lhs, rhs, rel, false};
  const std::string r = rel;
  if (r == ">") in.holds = lhs > rhs;
  else if (r == ">=") in.holds = lhs >= rhs;
  else if (r == "<") in.holds = lhs < rhs;
  else in.holds = lhs <= rhs;
  return in;
}

}  // namespace

ValidationReport validate(const ModelParams& m) {
  ValidationReport rep;
  rep.derived = derive_exponents(m);
  const double d = m.d;
  const double sigma = rep.derived.sigma;

  auto add = [&rep](Inequality in) {
    if (!in.holds) rep.violations.push_back(in);
    rep.checks.push_back(std::move(in));
  };

  // Core regime.
  const std::size_t core_begin = rep.violations.size();
  add(check("p>d(d-1)", m.p, ">", d * (d - 1.0)));
  const double gap = m.p - d * (d - 1.0);
  add(check("r>p(d-1)/(p-d(d-1))", m.r, ">", gap > 0.0 ? m.p * (d - 1.0) / gap : kInfinity));
  add(check("q>=1", m.q, ">=", 1.0));
  add(check("s>=0", m.s, ">=", 0.0));
  rep.core_ok = rep.violations.size() == core_begin;

  const std::size_t var_begin = rep.violations.size();
  if (m.variant == Variant::surface) {
    // The surface regime allows s = 1 but the functional is only defined
    // for s < 1, so s == 1 is reported, not decided.
    if (m.s == 1.0) rep.ambiguities.push_back("s=1 (surface variant admits s in [0,1] but the functional uses s in [0,1))");
    else add(check("s<=1", m.s, "<=", 1.0));
    add(check("q((1-s)sigma-d)>d^2-sigma", m.q * ((1.0 - m.s) * sigma - d), ">", d * d - sigma));
    add(check("sq>=(d-1)(p+d)/(p-d)", m.s * m.q, ">=", (d - 1.0) * (m.p + d) / (m.p - d)));

    SurfaceSufficientBounds sb;
    sb.s_upper = 1.0 - d / sigma;
    const double t1 = (d * d - sigma) / ((1.0 - m.s) * sigma - d);
    const double t2 = m.s > 0.0 ? (d - 1.0) / m.s * (m.p + d) / (m.p - d) : kInfinity;
    sb.q_lower = std::max(t1, t2);
    sb.met = m.s > 0.0 && m.s < sb.s_upper && m.q > sb.q_lower;
    rep.surface_sufficient = sb;
  } else {
    add(check("s<1", m.s, "<", 1.0));
    add(check("s-d/q<=1-d/sigma", m.s - d / m.q, "<=", 1.0 - d / sigma));
    if (m.variant == Variant::boundary_layer) {
      add(check("delta>0", m.delta.value_or(0.0), ">", 0.0));
    }
  }
  rep.variant_ok = rep.violations.size() == var_begin;
  return rep;
}

}  // namespace selfrep
