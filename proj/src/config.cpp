#include "selfrep/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace selfrep {

namespace {

using nlohmann::json;

std::string location_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Reads one section, remembering which keys were consumed.
class Section {
 public:
  Section(const json& doc, std::string name, std::string origin) : name_(std::move(name)), origin_(std::move(origin)) {
    if (!doc.contains(name_)) return;
    node_ = &doc.at(name_);
    if (!node_->is_object()) fail(name_, "must be an object");
  }

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    throw ConfigError(origin_ + ": " + field + ": " + msg);
  }
  std::string path(const char* key) const { return name_ + "." + key; }

  const json* get(const char* key) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  void number(const char* key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) fail(path(key), "must be a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(path(key), "must be finite");
    }
  }
  void integer(const char* key, int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) fail(path(key), "must be an integer");
      out = v->get<int>();
    }
  }
  void text(const char* key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) fail(path(key), "must be a string");
      out = v->get<std::string>();
    }
  }
  Vec2 point(const json& v, const std::string& where) const {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail(where, "must be a pair of numbers");
    return {v[0].get<double>(), v[1].get<double>()};
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, _] : node_->items())
      if (!seen_.contains(key)) fail(name_ + "." + key, "unknown key");
  }

 private:
  std::string name_;
  std::string origin_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

template <typename F>
void require(bool ok, const Section& sec, const std::string& field, F&& msg) {
  if (!ok) sec.fail(field, msg());
}

void read_model(const json& doc, const std::string& origin, ModelParams& m) {
  Section sec(doc, "model", origin);
  sec.integer("d", m.d);
  require(m.d == 2, sec, "model.d", [&] { return "only d = 2 is implemented (got " + std::to_string(m.d) + ")"; });
  sec.number("p", m.p);
  require(m.p > 0.0, sec, "model.p", [&] { return "must be > 0 (got " + fmt_num(m.p) + ")"; });
  sec.number("r", m.r);
  require(m.r > 0.0, sec, "model.r", [&] { return "must be > 0 (got " + fmt_num(m.r) + ")"; });
  sec.number("q", m.q);
  require(m.q >= 1.0, sec, "model.q", [&] { return "must be >= 1 (got " + fmt_num(m.q) + ")"; });
  sec.number("s", m.s);
  require(m.s >= 0.0 && m.s <= 1.0, sec, "model.s", [&] { return "out of range [0, 1] (got " + fmt_num(m.s) + ")"; });
  sec.number("epsilon", m.epsilon);
  require(m.epsilon >= 0.0, sec, "model.epsilon", [&] { return "must be >= 0 (got " + fmt_num(m.epsilon) + ")"; });

  std::string variant = to_string(m.variant);
  sec.text("variant", variant);
  try {
    m.variant = parse_variant(variant);
  } catch (const std::exception& e) {
    sec.fail("model.variant", e.what());
  }

  if (const json* v = sec.get("delta")) {
    if (!v->is_number()) sec.fail("model.delta", "must be a number");
    m.delta = v->get<double>();
    require(*m.delta > 0.0, sec, "model.delta", [&] { return "must be > 0 (got " + fmt_num(*m.delta) + ")"; });
    require(m.variant == Variant::boundary_layer, sec, "model.delta",
            [] { return std::string("only allowed for the boundary-layer variant"); });
  } else if (m.variant == Variant::boundary_layer) {
    sec.fail("model.delta", "missing; required by the boundary-layer variant");
  }

  if (const json* v = sec.get("box")) {
    if (!v->is_object() || !v->contains("lo") || !v->contains("hi"))
      sec.fail("model.box", "must be an object with 'lo' and 'hi'");
    Box b{sec.point(v->at("lo"), "model.box.lo"), sec.point(v->at("hi"), "model.box.hi")};
    require(b.lo.x() < b.hi.x() && b.lo.y() < b.hi.y(), sec, "model.box",
            [] { return std::string("must satisfy lo < hi componentwise"); });
    m.box = b;
  }
  sec.number("box_stiffness", m.box_stiffness);
  require(m.box_stiffness > 0.0, sec, "model.box_stiffness", [] { return std::string("must be > 0"); });
  sec.finish();
}

void read_quadrature(const json& doc, const std::string& origin, QuadratureSpec& q) {
  Section sec(doc, "quadrature", origin);
  std::string scheme = to_string(q.scheme), policy = to_string(q.diagonal_policy);
  sec.text("scheme", scheme);
  sec.text("diagonal_policy", policy);
  try {
    q.scheme = parse_scheme(scheme);
  } catch (const std::exception& e) {
    sec.fail("quadrature.scheme", e.what());
  }
  try {
    q.diagonal_policy = parse_policy(policy);
  } catch (const std::exception& e) {
    sec.fail("quadrature.diagonal_policy", e.what());
  }
  sec.integer("subdivision_depth", q.subdivision_depth);
  require(q.subdivision_depth >= 0 && q.subdivision_depth <= 6, sec, "quadrature.subdivision_depth",
          [] { return std::string("must be in [0, 6]"); });
  require(q.diagonal_policy != DiagonalPolicy::subdivide_adjacent || q.subdivision_depth >= 1, sec,
          "quadrature.subdivision_depth", [] { return std::string("must be >= 1 for subdivide-adjacent"); });
  sec.finish();
}

void read_optimizer(const json& doc, const std::string& origin, OptimizerSettings& o) {
  Section sec(doc, "optimizer", origin);
  std::string method = to_string(o.method);
  sec.text("method", method);
  try {
    o.method = parse_method(method);
  } catch (const std::exception& e) {
    sec.fail("optimizer.method", e.what());
  }
  sec.integer("history", o.history);
  require(o.history >= 1, sec, "optimizer.history", [] { return std::string("must be >= 1"); });
  sec.integer("max_iters", o.max_iters);
  require(o.max_iters >= 0, sec, "optimizer.max_iters", [] { return std::string("must be >= 0"); });
  sec.number("grad_tol", o.grad_tol);
  require(o.grad_tol > 0.0, sec, "optimizer.grad_tol", [] { return std::string("must be > 0"); });
  sec.number("armijo_c", o.armijo_c);
  require(o.armijo_c > 0.0 && o.armijo_c < 1.0, sec, "optimizer.armijo_c", [] { return std::string("must be in (0, 1)"); });
  sec.number("backtrack_factor", o.backtrack_factor);
  require(o.backtrack_factor > 0.0 && o.backtrack_factor < 1.0, sec, "optimizer.backtrack_factor",
          [] { return std::string("must be in (0, 1)"); });
  sec.number("feasibility_fraction", o.feasibility_fraction);
  require(o.feasibility_fraction > 0.0 && o.feasibility_fraction < 1.0, sec, "optimizer.feasibility_fraction",
          [] { return std::string("must be in (0, 1)"); });
  if (const json* v = sec.get("seed")) {
    if (!v->is_number_unsigned()) sec.fail("optimizer.seed", "must be a non-negative integer");
    o.seed = v->get<std::uint64_t>();
  }
  sec.finish();
}

void read_experiment(const json& doc, const std::string& origin, ExperimentSettings& x) {
  Section sec(doc, "experiment", origin);
  sec.integer("n", x.n);
  require(x.n >= 1, sec, "experiment.n", [] { return std::string("must be >= 1"); });
  sec.integer("resolution", x.resolution);
  require(x.resolution >= 64, sec, "experiment.resolution", [] { return std::string("must be >= 64"); });
  if (const json* v = sec.get("schedule")) {
    if (v->is_object()) {
      double eps0 = 0.1, factor = 0.5;
      int steps = 6;
      for (const auto& [key, val] : v->items()) {
        if (key != "eps0" && key != "factor" && key != "steps") sec.fail("experiment.schedule." + key, "unknown key");
        if (!val.is_number()) sec.fail("experiment.schedule." + key, "must be a number");
      }
      if (v->contains("eps0")) eps0 = v->at("eps0").get<double>();
      if (v->contains("factor")) factor = v->at("factor").get<double>();
      if (v->contains("steps")) steps = v->at("steps").get<int>();
      require(eps0 > 0.0 && factor > 0.0 && factor <= 1.0 && steps >= 1, sec, "experiment.schedule",
              [] { return std::string("needs eps0 > 0, factor in (0, 1], steps >= 1"); });
      x.schedule = geometric_schedule(eps0, factor, steps);
    } else if (v->is_array()) {
      x.schedule.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) sec.fail("experiment.schedule[" + std::to_string(i) + "]", "must be a number");
        x.schedule.push_back((*v)[i].get<double>());
        if (i > 0 && x.schedule[i] > x.schedule[i - 1])
          sec.fail("experiment.schedule[" + std::to_string(i) + "]", "schedule must be non-increasing");
      }
    } else {
      sec.fail("experiment.schedule", "must be an array or {eps0, factor, steps}");
    }
  }
  if (const json* v = sec.get("bench_sizes")) {
    if (!v->is_array() || v->empty()) sec.fail("experiment.bench_sizes", "must be a non-empty array of integers");
    x.bench_sizes.clear();
    for (const auto& e : *v) {
      if (!e.is_number_integer() || e.get<int>() < 1) sec.fail("experiment.bench_sizes", "entries must be integers >= 1");
      x.bench_sizes.push_back(e.get<int>());
    }
  }
  sec.number("delta_cells", x.delta_cells);
  require(x.delta_cells > 0.0, sec, "experiment.delta_cells", [] { return std::string("must be > 0"); });
  sec.integer("bench_samples", x.bench_samples);
  require(x.bench_samples >= 1, sec, "experiment.bench_samples", [] { return std::string("must be >= 1"); });
  if (const json* v = sec.get("shrink_center")) x.shrink_center = sec.point(*v, "experiment.shrink_center");
  if (const json* v = sec.get("shrink_js")) {
    if (!v->is_array()) sec.fail("experiment.shrink_js", "must be an array of integers");
    x.shrink_js.clear();
    for (const auto& e : *v) {
      if (!e.is_number_integer() || e.get<int>() < 2) sec.fail("experiment.shrink_js", "entries must be integers >= 2");
      x.shrink_js.push_back(e.get<int>());
    }
  }
  sec.finish();
}

}  // namespace

Config parse_config(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": parse error at " + location_of(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(origin + ": top level must be an object");
  for (const auto& [key, _] : doc.items())
    if (key != "model" && key != "quadrature" && key != "optimizer" && key != "experiment")
      throw ConfigError(origin + ": " + key + ": unknown section");
  Config cfg;
  read_model(doc, origin, cfg.model);
  read_quadrature(doc, origin, cfg.quadrature);
  read_optimizer(doc, origin, cfg.optimizer);
  read_experiment(doc, origin, cfg.experiment);
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string config_to_json(const Config& c) {
  json doc;
  json& m = doc["model"];
  m["d"] = c.model.d;
  m["p"] = c.model.p;
  m["r"] = c.model.r;
  m["q"] = c.model.q;
  m["s"] = c.model.s;
  m["epsilon"] = c.model.epsilon;
  m["variant"] = to_string(c.model.variant);
  if (c.model.delta) m["delta"] = *c.model.delta;
  if (c.model.box)
    m["box"] = {{"lo", {c.model.box->lo.x(), c.model.box->lo.y()}}, {"hi", {c.model.box->hi.x(), c.model.box->hi.y()}}};
  m["box_stiffness"] = c.model.box_stiffness;
  doc["quadrature"] = {{"scheme", to_string(c.quadrature.scheme)},
                       {"diagonal_policy", to_string(c.quadrature.diagonal_policy)},
                       {"subdivision_depth", c.quadrature.subdivision_depth}};
  doc["optimizer"] = {{"method", to_string(c.optimizer.method)},
                      {"history", c.optimizer.history},
                      {"max_iters", c.optimizer.max_iters},
                      {"grad_tol", c.optimizer.grad_tol},
                      {"armijo_c", c.optimizer.armijo_c},
                      {"backtrack_factor", c.optimizer.backtrack_factor},
                      {"feasibility_fraction", c.optimizer.feasibility_fraction},
                      {"seed", c.optimizer.seed}};
  const auto& x = c.experiment;
  doc["experiment"] = {{"n", x.n},
                       {"resolution", x.resolution},
                       {"schedule", x.schedule},
                       {"bench_sizes", x.bench_sizes},
                       {"delta_cells", x.delta_cells},
                       {"bench_samples", x.bench_samples},
                       {"shrink_center", {x.shrink_center.x(), x.shrink_center.y()}},
                       {"shrink_js", x.shrink_js}};
  return doc.dump(2) + "\n";
}

}  // namespace selfrep
