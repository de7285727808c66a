#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsl/analysis.hpp"

namespace wsl {

using Json = nlohmann::ordered_json;

/// One JSON object of the config. Reads typed values with defaults, records every value actually used
/// (so defaults are written back), and rejects keys nobody asked for.
class Section {
 public:
  Section(const Json& in, std::string path) : in_(in.is_null() ? Json::object() : in), path_(std::move(path)) {
    if (!in_.is_object()) throw ConfigError(where() + " must be an object");
    out_ = Json::object();
  }

  bool has(const std::string& key) const { return in_.contains(key); }

  double num(const std::string& key, double def) {
    double v = def;
    if (in_.contains(key)) {
      const auto& x = in_.at(key);
      if (!x.is_number()) throw ConfigError(where(key) + " must be a number");
      v = x.get<double>();
      if (!std::isfinite(v)) throw ConfigError(where(key) + " must be finite");
    }
    out_[key] = v;
    return v;
  }

  double positive(const std::string& key, double def) {
    double v = num(key, def);
    if (!(v > 0)) throw ConfigError(where(key) + " must be positive");
    return v;
  }

  long integer(const std::string& key, long def, long min = 0) {
    long v = def;
    if (in_.contains(key)) {
      const auto& x = in_.at(key);
      if (!x.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
      v = x.get<long>();
    }
    if (v < min) throw ConfigError(where(key) + " must be >= " + std::to_string(min));
    out_[key] = v;
    return v;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t def) {
    std::uint64_t v = def;
    if (in_.contains(key)) {
      const auto& x = in_.at(key);
      if (!x.is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
      v = x.get<std::uint64_t>();
    }
    out_[key] = v;
    return v;
  }

  bool flag(const std::string& key, bool def) {
    bool v = def;
    if (in_.contains(key)) {
      if (!in_.at(key).is_boolean()) throw ConfigError(where(key) + " must be true or false");
      v = in_.at(key).get<bool>();
    }
    out_[key] = v;
    return v;
  }

  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    std::string v = def;
    if (in_.contains(key)) {
      if (!in_.at(key).is_string()) throw ConfigError(where(key) + " must be a string");
      v = in_.at(key).get<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(where(key) + " = \"" + v + "\" is not one of: " + list);
    }
    out_[key] = v;
    return v;
  }

  std::vector<double> nums(const std::string& key, const std::vector<double>& def) {
    std::vector<double> v = def;
    if (in_.contains(key)) {
      const auto& x = in_.at(key);
      if (!x.is_array()) throw ConfigError(where(key) + " must be an array of numbers");
      v.clear();
      for (const auto& e : x) {
        if (!e.is_number()) throw ConfigError(where(key) + " must be an array of numbers");
        v.push_back(e.get<double>());
      }
    }
    out_[key] = v;
    return v;
  }

  std::vector<Interval> intervals(const std::string& key) {
    std::vector<Interval> v;
    Json rec = Json::array();
    if (in_.contains(key)) {
      const auto& x = in_.at(key);
      if (!x.is_array()) throw ConfigError(where(key) + " must be an array of [lo, hi] pairs");
      for (const auto& e : x) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
          throw ConfigError(where(key) + " must be an array of [lo, hi] pairs");
        Interval I{e[0].get<double>(), e[1].get<double>()};
        if (!(I.hi > I.lo)) throw ConfigError(where(key) + " has an empty interval");
        v.push_back(I);
        rec.push_back({I.lo, I.hi});
      }
    }
    out_[key] = rec;
    return v;
  }

  Section child(const std::string& key) const {
    return Section(in_.contains(key) ? in_.at(key) : Json(), path_.empty() ? key : path_ + "." + key);
  }

  void put(const std::string& key, Json value) { out_[key] = std::move(value); }

  /// Resolved object; throws on keys that were never read.
  Json finish() const {
    for (const auto& [k, v] : in_.items())
      if (!out_.contains(k)) throw ConfigError("unknown key " + where(k));
    return out_;
  }

 private:
  std::string where(const std::string& key = "") const {
    std::string p = path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
    return "'" + (p.empty() ? std::string("<root>") : p) + "'";
  }

  Json in_;
  Json out_;
  std::string path_;
};

struct ProfileConfig {
  std::string kind = "zero";
  double value = 0.0, center = 0.0, width = 1.0, lo = 0.0, hi = 0.0, taper = 0.0;
  std::vector<double> s, v;

  Profile1D build() const {
    if (kind == "zero") return profile::zero();
    if (kind == "constant") return profile::constant(value);
    if (kind == "bump") return profile::bump(value, center, width);
    if (kind == "plateau") return profile::plateau(value, lo, hi, taper);
    if (kind == "decaying") return profile::decaying(value, center);
    return profile::sampled(s, v);
  }
};

inline ProfileConfig read_profile(Section sec, Section& parent, const std::string& key, const std::string& def_kind = "zero") {
  ProfileConfig p;
  p.kind = sec.choice("kind", def_kind, {"zero", "constant", "bump", "plateau", "decaying", "samples"});
  if (p.kind == "constant" || p.kind == "bump" || p.kind == "plateau" || p.kind == "decaying") p.value = sec.num("value", 1.0);
  if (p.kind == "bump" || p.kind == "decaying") p.center = sec.num("center", 0.0);
  if (p.kind == "bump") p.width = sec.positive("width", 2.0);
  if (p.kind == "plateau") {
    p.lo = sec.num("lo", -1.0);
    p.hi = sec.num("hi", 1.0);
    p.taper = sec.num("taper", 0.5);
  }
  if (p.kind == "samples") {
    p.s = sec.nums("s", {});
    p.v = sec.nums("v", {});
  }
  parent.put(key, sec.finish());
  try {
    p.build();
  } catch (const Error& e) {
    throw ConfigError("'" + key + "': " + e.what());
  }
  return p;
}

struct CurveConfig {
  std::string preset = "line";
  double kappa = 0.0, tau = 0.0, radius = 1.0, peak = 1.0, center = 0.0, width = 2.0, eps0 = 0.0, ds = 0.01;
  std::vector<double> s, kappa_samples, tau_samples;
};

struct AngleConfig {
  std::string preset = "rate";  // "rate" (theta_dot profile) or "tang"
  double theta0 = 0.0;
  ProfileConfig rate;
};

struct TubeConfig {
  CurveConfig curve;
  AngleConfig angle;
  CrossSectionShape shape = Disc{};
  double half_length = 1.0;
};

struct DiscretizationConfig {
  double h_mesh = 0.2;
  double ds = 0.1;
  double ds_far = 0.0;
  double core = 0.0;  // half-width of the fine core when ds_far > 0
  EndCondition end_condition = EndCondition::dirichlet;
};

struct HardyConfig {
  HardyMethod method = HardyMethod::eigen;
  bool has_s0 = false;
  double s0 = 0.0;
  double tol = 1e-9;
};

struct BendingConfig {
  int n_start = 8;
  int max_doublings = 10;
};

/// Everything a run needs. `resolved` holds the same data as JSON, with every default filled in.
struct ExperimentConfig {
  std::string length_unit = "1";
  TubeConfig tube;
  DiscretizationConfig disc;
  ProfileConfig alpha;
  std::vector<double> interval = {0.0, 1.0};
  std::vector<double> L_list;
  std::vector<Interval> partition;
  std::vector<double> eps_list;
  std::vector<double> eps0_list;
  int k = 4;
  int j_max = 1;
  double tol = 1e-10;
  double c_omega = -1.0;  // < 0: extracted from the cross-section
  int random_vectors = 100;
  long samples = 20000;
  std::uint64_t seed = 0x5eedULL;
  HardyConfig hardy;
  BendingConfig bending;
  std::string output = "out";
  Json resolved;
};

inline CrossSectionShape read_shape(Section sec, Section& parent) {
  auto kind = sec.choice("kind", "disc", {"disc", "annulus", "ellipse", "rectangle", "polygon"});
  auto center = [&]() {
    auto c = sec.nums("center", {0.0, 0.0});
    if (c.size() != 2) throw ConfigError("'tube.shape.center' must be [t2, t3]");
    return Vec2(c[0], c[1]);
  };
  CrossSectionShape out;
  if (kind == "disc") {
    Disc d;
    d.radius = sec.positive("radius", 1.0);
    d.center = center();
    out = d;
  } else if (kind == "annulus") {
    Annulus a;
    a.r_in = sec.positive("r_in", 0.5);
    a.r_out = sec.positive("r_out", 1.0);
    a.center = center();
    out = a;
  } else if (kind == "ellipse") {
    Ellipse e;
    e.a = sec.positive("a", 1.0);
    e.b = sec.positive("b", 0.5);
    e.center = center();
    e.tilt = sec.num("tilt", 0.0);
    out = e;
  } else if (kind == "rectangle") {
    Rectangle r;
    r.width = sec.positive("width", 1.0);
    r.height = sec.positive("height", 1.0);
    r.center = center();
    r.tilt = sec.num("tilt", 0.0);
    out = r;
  } else {
    Polygon p;
    auto xs = sec.nums("t2", {});
    auto ys = sec.nums("t3", {});
    if (xs.size() != ys.size() || xs.size() < 3) throw ConfigError("'tube.shape' polygon needs matching t2/t3 lists of >= 3 vertices");
    for (std::size_t i = 0; i < xs.size(); ++i) p.vertices.emplace_back(xs[i], ys[i]);
    out = p;
  }
  parent.put("shape", sec.finish());
  try {
    validate_shape(out);
  } catch (const Error& e) {
    throw ConfigError(std::string("'tube.shape': ") + e.what());
  }
  return out;
}

inline ExperimentConfig parse_config(const Json& root) {
  ExperimentConfig c;
  Section top(root, "");
  c.length_unit = top.choice("length_unit", "1", {});

  Section tube = top.child("tube");
  c.tube.half_length = tube.positive("half_length", 1.0);
  {
    Section cv = tube.child("curve");
    auto& k = c.tube.curve;
    k.preset = cv.choice("preset", "line", {"line", "circle", "helix", "bump", "mild", "samples"});
    k.ds = cv.positive("ds", 0.01);
    if (k.preset == "circle") k.radius = cv.positive("radius", 1.0);
    if (k.preset == "helix") {
      k.kappa = cv.num("kappa", 0.5);
      k.tau = cv.num("tau", 0.5);
    }
    if (k.preset == "bump") {
      k.peak = cv.num("peak", 1.0);
      k.center = cv.num("center", 0.0);
      k.width = cv.positive("width", 2.0);
    }
    if (k.preset == "mild") k.eps0 = cv.num("eps0", 0.1);
    if (k.preset == "samples") {
      k.s = cv.nums("s", {});
      k.kappa_samples = cv.nums("kappa", {});
      k.tau_samples = cv.nums("tau", {});
    }
    tube.put("curve", cv.finish());
  }
  {
    Section an = tube.child("angle");
    auto& a = c.tube.angle;
    a.preset = an.choice("preset", "rate", {"rate", "tang"});
    a.theta0 = an.num("theta0", 0.0);
    if (a.preset == "rate") a.rate = read_profile(an.child("rate"), an, "rate");
    tube.put("angle", an.finish());
  }
  c.tube.shape = read_shape(tube.child("shape"), tube);
  top.put("tube", tube.finish());

  Section dz = top.child("discretization");
  c.disc.h_mesh = dz.positive("h_mesh", 0.2);
  c.disc.ds = dz.positive("ds", 0.1);
  c.disc.ds_far = dz.num("ds_far", 0.0);
  c.disc.core = dz.num("core", 0.0);
  c.disc.end_condition = dz.choice("end_condition", "dirichlet", {"dirichlet", "natural"}) == "dirichlet" ? EndCondition::dirichlet
                                                                                                        : EndCondition::natural;
  if (c.disc.ds_far < 0 || c.disc.core < 0) throw ConfigError("'discretization.ds_far' and 'core' must be >= 0");
  top.put("discretization", dz.finish());

  c.alpha = read_profile(top.child("alpha"), top, "alpha");
  c.interval = top.nums("interval", {0.0, 1.0});
  if (c.interval.size() != 2 || !(c.interval[1] > c.interval[0])) throw ConfigError("'interval' must be [lo, hi] with lo < hi");
  c.L_list = top.nums("L_list", {});
  c.partition = top.intervals("partition");
  c.eps_list = top.nums("eps_list", {});
  c.eps0_list = top.nums("eps0_list", {});
  c.k = int(top.integer("k", 4, 1));
  c.j_max = int(top.integer("j_max", 1, 1));
  c.tol = top.positive("tol", 1e-10);
  c.c_omega = top.num("c_omega", -1.0);
  c.random_vectors = int(top.integer("random_vectors", 100, 0));
  c.samples = top.integer("samples", 20000, 1);
  c.seed = top.seed("seed", 0x5eedULL);

  Section hs = top.child("hardy");
  c.hardy.method = hs.choice("method", "eigen", {"eigen", "bisection"}) == "eigen" ? HardyMethod::eigen : HardyMethod::bisection;
  c.hardy.has_s0 = hs.has("s0");
  if (c.hardy.has_s0) c.hardy.s0 = hs.num("s0", 0.0);
  c.hardy.tol = hs.positive("tol", 1e-9);
  top.put("hardy", hs.finish());

  Section bs = top.child("bending");
  c.bending.n_start = int(bs.integer("n_start", 8, 1));
  c.bending.max_doublings = int(bs.integer("max_doublings", 10, 0));
  top.put("bending", bs.finish());

  c.output = top.choice("output", "out", {});
  c.resolved = top.finish();
  return c;
}

/// Reads a config file (JSON, comments allowed). A report.json written by the tool is accepted too;
/// its embedded config is used.
inline Json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str(), nullptr, true, true);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("results")) return j.at("config");
  return j;
}

inline TubeSpec build_tube_unchecked(const TubeConfig& t) {
  const double L = t.half_length;
  const auto& k = t.curve;
  TubeSpec spec;
  if (k.preset == "line") spec.curve = curves::line(-L, L, k.ds);
  if (k.preset == "circle") spec.curve = curves::circle(k.radius, -L, L, k.ds);
  if (k.preset == "helix") spec.curve = curves::helix(k.kappa, k.tau, -L, L, k.ds);
  if (k.preset == "bump") spec.curve = curves::bump(k.peak, k.center, k.width, -L, L, k.ds);
  if (k.preset == "mild") spec.curve = curves::mild(k.eps0, -L, L, k.ds);
  if (k.preset == "samples") {
    if (k.s.size() != k.kappa_samples.size() || k.s.size() != k.tau_samples.size() || k.s.size() < 2)
      throw ConfigError("'tube.curve' samples need matching s, kappa, tau lists");
    spec.curve = CurveData(k.s, k.kappa_samples, k.tau_samples);
  }
  if (t.angle.preset == "tang") {
    spec.angle = tang_frame_angle(spec.curve, t.angle.theta0);
  } else {
    auto rate = t.angle.rate.build();
    std::vector<double> r;
    for (double x : spec.curve.s_grid()) r.push_back(rate.trivial() ? 0.0 : rate(x));
    spec.angle = AngleFunction::from_rate(spec.curve.s_grid(), r, t.angle.theta0);
  }
  spec.shape = t.shape;
  spec.half_length = L;
  return spec;
}

inline TubeSpec build_tube(const TubeConfig& t) {
  try {
    return build_tube_unchecked(t);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("'tube': ") + e.what());
  }
}

/// s-grid over [lo, hi]: uniform at ds, or graded to ds_far outside [-core, core].
inline std::vector<double> build_grid(const DiscretizationConfig& d, double lo, double hi) {
  SGridSpec g;
  g.lo = lo, g.hi = hi, g.ds = d.ds;
  if (d.ds_far > 0) {
    g.ds_far = d.ds_far;
    g.core_lo = std::max(lo, -d.core);
    g.core_hi = std::min(hi, d.core);
  }
  return build_s_grid(g);
}

}  // namespace wsl
