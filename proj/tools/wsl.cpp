// wsl: config-driven experiments on twisted and bent waveguides.
//
//   wsl <command> --config <path> [--out <dir>] [--threads N]
//
// Exit codes: 0 all checks pass, 1 a checked inequality failed, 2 bad config or input, 3 numerical failure.

#include <atomic>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include <CLI11.hpp>

#include "wsl/config.hpp"
#include "wsl/effective.hpp"
#include "wsl/report.hpp"

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

using namespace wsl;
namespace fs = std::filesystem;

namespace {

struct Context {
  ExperimentConfig cfg;
  int threads = 1;
};

/// Runs f(0..n-1) on up to `threads` workers; each index writes only its own slot.
template <class F>
void parallel_for(int n, int threads, F f) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(threads, n); ++w)
    pool.emplace_back([&]() {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

Json meta_json(const DiscretizationMeta& m) {
  return {{"h_mesh", m.h_mesh},     {"mesh_nodes", m.mesh_nodes}, {"interior_nodes", m.interior_nodes},
          {"ds_min", m.ds_min},     {"ds_max", m.ds_max},         {"s_lo", m.s_lo},
          {"s_hi", m.s_hi},         {"s_nodes", m.s_nodes}};
}

Json spectrum_json(const SpectrumReport& r) {
  return {{"eigenvalues", r.eigenvalues},
          {"residuals", r.residuals},
          {"iterations", r.iterations},
          {"mesh", {{"h_mesh", r.meta.h_mesh}, {"nodes", r.meta.mesh_nodes}, {"interior_nodes", r.meta.interior_nodes}}},
          {"grid", {{"s_lo", r.meta.s_lo}, {"s_hi", r.meta.s_hi}, {"s_nodes", r.meta.s_nodes}, {"ds_min", r.meta.ds_min}, {"ds_max", r.meta.ds_max}}},
          {"end_condition", r.meta.end_condition},
          {"operator_form", r.description}};
}

Table spectrum_table(const SpectrumReport& r) {
  Table t{{"j", "lambda", "residual"}, {}};
  for (std::size_t j = 0; j < r.eigenvalues.size(); ++j) t.add({double(j + 1), r.eigenvalues[j], r.residuals[j]});
  return t;
}

Plot spectrum_plot(const std::string& title, const SpectrumReport& r, double E1) {
  Plot p{title, "j", "eigenvalue", {}, {{"E1", E1}}, false};
  Series s{"lambda_j", {}, r.eigenvalues, true};
  for (std::size_t j = 0; j < r.eigenvalues.size(); ++j) s.x.push_back(double(j + 1));
  p.series.push_back(s);
  return p;
}

std::shared_ptr<const CrossSectionFE> cross_section_fe(const ExperimentConfig& c) {
  return std::make_shared<const CrossSectionFE>(generate_mesh(c.tube.shape, c.disc.h_mesh));
}

Profile1D twist_profile(const ExperimentConfig& c) { return c.alpha.build(); }

// ---------------------------------------------------------------------------

void cross_section(Context& ctx, Report& rep) {
  const auto& c = ctx.cfg;
  auto fe = cross_section_fe(c);
  auto g = solve_ground_mode(*fe, c.tol);
  int k = std::min(c.k, fe->size());
  auto spec = lowest_eigenpairs({fe->stiffness(), fe->mass(), "cross-section Dirichlet Laplacian", fe->meta()}, k, c.tol);
  double ang = angular_norm(*fe, g.J1);
  auto C = extract_c_omega(*fe, g, c.tube.shape);
  if (!C.invariant) perturbation_estimate(*fe, g, std::min(12, fe->size()), C);

  auto& r = rep.results();
  r["E1"] = g.E1;
  r["E1_residual"] = g.residual;
  r["angular_norm_J1"] = ang;
  r["c_omega"] = {{"value", C.value},
                  {"rotationally_invariant", C.invariant},
                  {"alpha0", C.alpha0},
                  {"ratios", C.ratios},
                  {"first_order", C.first_order},
                  {"second_order_coeff", C.second_order_coeff},
                  {"perturbation_modes", C.perturbation_modes}};
  r["spectrum"] = spectrum_json(spec);
  if (C.invariant) r["flags"] = {"twist ineffective: rotationally invariant"};

  rep.check_ge("threshold positive", "E1 > 0", g.E1, std::nextafter(0.0, 1.0));
  rep.check_le("ground mode residual", "|K J1 - E1 M J1| / |M J1| <= 1e-6 E1", g.residual, 1e-6 * g.E1);
  if (C.invariant)
    rep.check_le("invariant section has no angular energy", "|d_u J1| <= 1e-6", ang, 1e-6);
  else
    rep.check_ge("twist coefficient positive", "C(omega) > 0", C.value, std::nextafter(0.0, 1.0));

  const auto& mesh = fe->mesh();
  Vec nodal = fe->to_nodal(g.J1);
  Table mode{{"node", "t2", "t3", "value"}, {}};
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) mode.add({double(i), mesh.nodes[i].x(), mesh.nodes[i].y(), nodal[Eigen::Index(i)]});
  rep.csv("mode.csv", mode);
  rep.csv("spectrum.csv", spectrum_table(spec));
  rep.svg("spectrum.svg", spectrum_plot("cross-section Dirichlet eigenvalues", spec, g.E1));
  if (!C.invariant) {
    Table t{{"alpha0", "lambda_over_alpha0_sq"}, {}};
    for (std::size_t i = 0; i < C.alpha0.size(); ++i) t.add({C.alpha0[i], C.ratios[i]});
    rep.csv("c_omega.csv", t);
    rep.svg("c_omega.svg", {"lambda(alpha0)/alpha0^2", "alpha0", "ratio", {{"ratio", t.column(0), t.column(1), true}}, {{"C(omega)", C.value}}});
  }
}

void tube_spectrum(Context& ctx, Report& rep) {
  const auto& c = ctx.cfg;
  auto spec = build_tube(c.tube);
  auto fe = cross_section_fe(c);
  auto g = solve_ground_mode(*fe, c.tol);
  const double L = c.tube.half_length;
  double margin = 1.0 - farthest_radius(spec.shape) * spec.curve.kappa_sup();
  if (!(margin > 0)) throw HypothesisViolated("a sup(kappa) >= 1: the tube is not a tube");
  TubeDiscretization d(build_grid(c.disc, -L, L), fe, c.disc.end_condition);
  auto r = lowest_eigenpairs(assemble_full_tube(spec, d), c.k, c.tol);

  int below = 0;
  for (double l : r.eigenvalues) below += l < g.E1 ? 1 : 0;
  auto& res = rep.results();
  res["E1"] = g.E1;
  res["margin"] = margin;
  res["spectrum"] = spectrum_json(r);
  res["below_E1"] = below;
  rep.results()["grid"] = meta_json(d.meta());

  double worst = *std::max_element(r.residuals.begin(), r.residuals.end());
  rep.check_le("eigenpair residuals", "max residual <= tol", worst, c.tol);
  rep.check_ge("tube hypothesis", "1 - a sup(kappa) > 0", margin, std::nextafter(0.0, 1.0));

  Table cv{{"s", "kappa", "tau", "theta", "theta_dot"}, {}};
  for (double s : d.s_nodes()) cv.add({s, spec.curve.kappa(s), spec.curve.tau(s), spec.angle.theta(s), spec.angle.theta_dot(s)});
  rep.csv("spectrum.csv", spectrum_table(r));
  rep.csv("curve.csv", cv);
  rep.svg("spectrum.svg", spectrum_plot("tube eigenvalues", r, g.E1));
  std::vector<double> w;
  for (const auto& row : cv.rows) w.push_back(row[2] - row[4]);
  rep.svg("curve.svg", {"curvature and twist", "s", "1/length", {{"kappa", cv.column(0), cv.column(1)}, {"tau - theta_dot", cv.column(0), w}}});
}

void twist_threshold(Context& ctx, Report& rep) {
  const auto& c = ctx.cfg;
  auto fe = cross_section_fe(c);
  auto g = solve_ground_mode(*fe, c.tol);
  auto alpha = twist_profile(c);
  const double lo = c.interval[0], hi = c.interval[1];
  double lam = lambda_alpha_I(alpha, lo, hi, fe, g, c.disc.ds, c.tol);
  double sup = alpha.trivial() ? 0.0 : profile::sup_norm(alpha, lo, hi);
  double lam_sup = solve_b_alpha0(*fe, g, sup, c.tol).lambda;
  bool invariant = is_rotationally_invariant(c.tube.shape);

  auto& r = rep.results();
  r["E1"] = g.E1;
  r["lambda_alpha_I"] = lam;
  r["alpha_sup"] = sup;
  r["lambda_alpha_sup"] = lam_sup;
  r["flags"] = Json::array();
  if (invariant) r["flags"].push_back("twist ineffective: rotationally invariant");

  rep.check_ge("Poincare inequality", "lambda(alpha, I) >= -1e-9", lam, -1e-9);
  rep.check_le("upper bound by the sup of alpha", "lambda(alpha, I) <= lambda(sup|alpha|) + 1e-8", lam, lam_sup + 1e-8);
  if (invariant) rep.check_le("invariant section", "|lambda(alpha, I)| <= 1e-6", std::abs(lam), 1e-6);

  if (c.alpha.kind == "constant") {
    std::vector<double> Ls = c.L_list.empty() ? std::vector<double>{2, 4, 8, 16} : c.L_list;
    const double lam0 = solve_b_alpha0(*fe, g, c.alpha.value, c.tol).lambda;
    Table t{{"L", "lambda_natural", "lambda_dirichlet", "lambda_alpha0"}, {}};
    t.rows.resize(Ls.size());
    parallel_for(int(Ls.size()), ctx.threads, [&](int i) {
      double L = Ls[i];
      auto grid = uniform_s_grid(-L, L, c.disc.ds);
      TubeDiscretization dn(grid, fe, EndCondition::natural), dd(grid, fe, EndCondition::dirichlet);
      t.rows[i] = {L, lambda_alpha_I(alpha, dn, g, c.tol), lambda_alpha_I(alpha, dd, g, c.tol), lam0};
    });
    r["lambda_alpha0"] = lam0;
    r["comparison"] = Json::array();
    for (const auto& row : t.rows) {
      r["comparison"].push_back({{"L", row[0]}, {"natural", row[1]}, {"dirichlet", row[2]}});
      rep.check_ge("Dirichlet truncation above the cross-section value at L = " + exact(row[0]),
                   "lambda^D(alpha0, (-L, L)) >= lambda(alpha0) - 1e-8", row[2], lam0 - 1e-8);
    }
    rep.csv("comparison.csv", t);
    rep.svg("comparison.svg", {"constant twist: truncation against the cross-section value", "L", "lambda",
                               {{"natural", t.column(0), t.column(1), true}, {"dirichlet", t.column(0), t.column(2), true}},
                               {{"lambda(alpha0)", lam0}}});
  }

  Table prof{{"s", "alpha"}, {}};
  for (double s : uniform_s_grid(lo, hi, c.disc.ds)) prof.add({s, alpha.trivial() ? 0.0 : alpha(s)});
  rep.csv("alpha.csv", prof);
  rep.svg("alpha.svg", {"twist profile", "s", "alpha", {{"alpha", prof.column(0), prof.column(1)}}});
}

HardyOptions hardy_options(const ExperimentConfig& c) {
  HardyOptions o;
  o.method = c.hardy.method;
  o.tol = c.hardy.tol;
  o.has_s0 = c.hardy.has_s0;
  o.s0 = c.hardy.s0;
  return o;
}

Json hardy_json(const HardyScanResult& h) {
  Json hist = Json::array();
  for (const auto& s : h.history) hist.push_back({{"c", s.c}, {"passed", s.passed}});
  return {{"c_star", h.c_star}, {"c_hi", h.c_hi},         {"s0", h.s0},         {"J", {h.j_lo, h.j_hi}},
          {"lambda_J", h.lambda_J}, {"weight", h.weight}, {"vacuous", h.vacuous}, {"factorizations", h.factorizations},
          {"history", hist}};
}

void hardy_scan_cmd(Context& ctx, Report& rep) {
  const auto& c = ctx.cfg;
  auto fe = cross_section_fe(c);
  auto g = solve_ground_mode(*fe, c.tol);
  auto alpha = twist_profile(c);
  const double L = c.tube.half_length;
  TubeDiscretization d(build_grid(c.disc, -L, L), fe, EndCondition::natural);
  auto h = hardy_scan(alpha, d, g, c.tube.shape, hardy_options(c));

  auto& r = rep.results();
  r["E1"] = g.E1;
  r["hardy"] = hardy_json(h);
  r["grid"] = meta_json(d.meta());
  if (h.vacuous) {
    r["flags"] = {"twist ineffective: rotationally invariant"};
    rep.check_le("vacuous scan", "c_star <= 1e-6", h.c_star, 1e-6);
  } else {
    rep.check_ge("Hardy constant positive", "c_star > 0", h.c_star, std::nextafter(0.0, 1.0));
  }
  rep.check("bracket", "A - E1 B - c_star W >= -tol and fails at c_hi", h.c_hi > h.c_star || h.c_star == 0.0);

  Table hist{{"step", "c", "passed"}, {}};
  for (std::size_t i = 0; i < h.history.size(); ++i) hist.add({double(i), h.history[i].c, h.history[i].passed ? 1.0 : 0.0});
  Table w{{"s", "weight", "alpha"}, {}};
  for (double s : d.s_nodes()) w.add({s, hardy_weight(s, h.s0), alpha.trivial() ? 0.0 : alpha(s)});
  rep.csv("history.csv", hist);
  rep.csv("weight.csv", w);
  std::vector<double> cw;
  for (double x : w.column(1)) cw.push_back(h.c_star * x);
  rep.svg("weight.svg", {"Hardy weight and twist", "s", "value", {{"c_star weight", w.column(0), cw}, {"alpha", w.column(0), w.column(2)}}});
}

void partition_bound(Context& ctx, Report& rep) {
  const auto& c = ctx.cfg;
  if (c.partition.empty()) throw ConfigError("'partition' needs at least one [lo, hi] interval");
  auto fe = cross_section_fe(c);
  auto g = solve_ground_mode(*fe, c.tol);
  auto alpha = twist_profile(c);
  const double L = c.tube.half_length;
  TubeDiscretization d(uniform_s_grid(-L, L, c.disc.ds), fe, EndCondition::natural);
  PartitionBound p;
  try {
    p = partition_lower_bound(alpha, d, g, c.partition, c.random_vectors, c.seed);
  } catch (const OverlappingPartition& e) {
    throw ConfigError(std::string("'partition': ") + e.what());
  } catch (const DimensionMismatch& e) {
    throw ConfigError(std::string("'partition': ") + e.what());
  }

  auto& r = rep.results();
  r["E1"] = g.E1;
  Json parts = Json::array();
  for (std::size_t j = 0; j < p.parts.size(); ++j) parts.push_back({{"I", {p.parts[j].lo, p.parts[j].hi}}, {"lambda", p.lambdas[j]}});
  r["parts"] = parts;
  r["min_slack"] = p.min_slack;
  r["ground_slack"] = p.ground_slack;
  r["ground_value"] = p.ground_value;
  r["vectors"] = p.vectors;

  for (std::size_t j = 0; j < p.lambdas.size(); ++j)
    rep.check_ge("Poincare on part " + std::to_string(j), "lambda(alpha, I_j) >= -1e-9", p.lambdas[j], -1e-9);
  if (p.vectors > 0)
    rep.check_ge("partition inequality on random vectors", "Q - E1 |psi|^2 - sum lambda_j |psi|^2_{I_j} >= -1e-8", p.min_slack, -1e-8);
  rep.check_ge("partition inequality on the ground state", "Q - E1 |psi|^2 - sum lambda_j |psi|^2_{I_j} >= -1e-8", p.ground_slack, -1e-8);

  Table t{{"lo", "hi", "lambda"}, {}};
  for (std::size_t j = 0; j < p.parts.size(); ++j) t.add({p.parts[j].lo, p.parts[j].hi, p.lambdas[j]});
  rep.csv("parts.csv", t);
  Series steps{"lambda(alpha, I_j)", {}, {}};
  for (const auto& row : t.rows) {
    steps.x.insert(steps.x.end(), {row[0], row[1]});
    steps.y.insert(steps.y.end(), {row[2], row[2]});
  }
  rep.svg("parts.svg", {"piecewise lower bound", "s", "lambda", {steps}});
}

void certify_bending_cmd(Context& ctx, Report& rep) {
  const auto& c = ctx.cfg;
  auto spec = build_tube(c.tube);
  auto fe = cross_section_fe(c);
  auto g = solve_ground_mode(*fe, c.tol);
  const double L = c.tube.half_length;
  TubeDiscretization d(build_grid(c.disc, -L, L), fe, c.disc.end_condition);
  BendingOptions opt;
  opt.n_start = c.bending.n_start;
  opt.max_doublings = c.bending.max_doublings;

  auto& r = rep.results();
  r["E1"] = g.E1;
  auto spectrum = lowest_eigenpairs(assemble_full_tube(spec, d), 1, c.tol);
  double l1 = spectrum.eigenvalues[0];
  r["lambda1"] = l1;
  r["spectrum"] = spectrum_json(spectrum);
  try {
    auto cert = certify_bending(spec, d, g, opt);
    Json hist = Json::array();
    for (const auto& h : cert.history) hist.push_back({{"n", h.n}, {"value", h.value}});
    r["certificate"] = {{"n", cert.n},           {"epsilon", cert.epsilon},   {"value", cert.value},
                        {"norm2", cert.norm2},   {"rayleigh", cert.rayleigh}, {"center", cert.center},
                        {"xi", {cert.xi_lo, cert.xi_hi}}, {"history", hist}};
    rep.check_le("certificate dominance", "lambda1 <= E1 + value / |psi|^2 + tol", l1, cert.rayleigh + c.tol);
    Table t{{"n", "value"}, {}};
    for (const auto& h : cert.history) t.add({h.n, h.value});
    rep.csv("certificate.csv", t);
    rep.svg("certificate.svg", {"Q1 along the cutoff schedule", "n", "Q1", {{"Q1", t.column(0), t.column(1), true}}, {{"0", 0.0}}});
  } catch (const NoCertificateFound& e) {
    r["certificate"] = nullptr;
    r["flags"] = {std::string("no certificate: ") + e.what()};
  }
  Table cv{{"s", "kappa"}, {}};
  for (double s : d.s_nodes()) cv.add({s, spec.curve.kappa(s)});
  rep.csv("curve.csv", cv);
}

void thin_limit(Context& ctx, Report& rep) {
  const auto& c = ctx.cfg;
  auto spec = build_tube(c.tube);
  auto mesh = generate_mesh(c.tube.shape, c.disc.h_mesh);
  double c_omega = c.c_omega;
  if (c_omega < 0) {
    CrossSectionFE fe(mesh);
    c_omega = extract_c_omega(fe, solve_ground_mode(fe, c.tol), c.tube.shape).value;
  }
  std::vector<double> eps = c.eps_list.empty() ? std::vector<double>{0.2, 0.1, 0.05} : c.eps_list;
  const double L = c.tube.half_length;
  auto grid = build_grid(c.disc, -L, L);
  std::vector<ThinLimitStudy> parts(eps.size());
  parallel_for(int(eps.size()), ctx.threads, [&](int i) { parts[i] = thin_limit_study(spec, mesh, {eps[i]}, c.j_max, grid, c_omega, c.tol); });
  ThinLimitStudy st = parts.front();
  st.rows.clear();
  st.warnings.clear();
  for (const auto& p : parts) {
    st.rows.insert(st.rows.end(), p.rows.begin(), p.rows.end());
    st.warnings.insert(st.warnings.end(), p.warnings.begin(), p.warnings.end());
  }

  auto& r = rep.results();
  double free = std::numbers::pi * std::numbers::pi / (4.0 * L * L);
  r["E1"] = st.E1;
  r["c_omega"] = c_omega;
  r["mu"] = st.mu;
  r["free_dirichlet_mu1"] = free;
  r["warnings"] = st.warnings;
  Table t{{"eps", "j", "lambda", "E1_over_eps2", "mu", "d"}, {}};
  for (const auto& row : st.rows) t.add({row.eps, double(row.j), row.lambda, row.threshold, row.mu, row.d});
  Json rows = Json::array();
  for (const auto& row : st.rows)
    rows.push_back({{"eps", row.eps}, {"j", row.j}, {"lambda", row.lambda}, {"threshold", row.threshold}, {"mu", row.mu}, {"d", row.d}});
  r["rows"] = rows;

  for (int j = 1; j <= c.j_max; ++j) {
    auto d = st.abs_defect(j);
    for (std::size_t i = 1; i < d.size(); ++i)
      rep.check_le("thin-limit defect shrinks, j = " + std::to_string(j) + ", eps = " + exact(eps[i]),
                   "|d_j(eps_i)| < |d_j(eps_{i-1})|", d[i], std::nextafter(d[i - 1], 0.0));
  }

  auto op = effective_operator(spec, c_omega, grid);
  Table v{{"s", "V"}, {}};
  for (std::size_t i = 0; i < grid.size(); ++i) v.add({grid[i], op.V[i]});
  rep.csv("thin_limit.csv", t);
  rep.csv("potential.csv", v);
  rep.svg("potential.svg", {"effective potential -kappa^2/4 + C (tau - theta_dot)^2", "s", "V", {{"V", v.column(0), v.column(1)}}, {{"0", 0.0}}});
  Plot dp{"thin-limit defect", "eps", "|d_j|", {}, {}, true};
  for (int j = 1; j <= c.j_max; ++j) {
    Series s{"j = " + std::to_string(j), {}, {}, true};
    for (const auto& row : st.rows)
      if (row.j == j) s.x.push_back(row.eps), s.y.push_back(std::abs(row.d));
    dp.series.push_back(s);
  }
  rep.svg("defect.svg", dp);
}

void mild_bending(Context& ctx, Report& rep) {
  const auto& c = ctx.cfg;
  auto fe = cross_section_fe(c);
  auto g = solve_ground_mode(*fe, c.tol);
  auto alpha = twist_profile(c);
  const double L = c.tube.half_length;
  auto grid = build_grid(c.disc, -L, L);
  TubeDiscretization dn(grid, fe, EndCondition::natural);
  auto h = hardy_scan(alpha, dn, g, c.tube.shape, hardy_options(c));
  const double a = farthest_radius(c.tube.shape);
  double eps0_star = certified_eps0(a, g.E1, h.c_star, h.s0, grid);

  std::vector<double> eps0 = c.eps0_list.empty() ? std::vector<double>{0.5 * eps0_star} : c.eps0_list;
  std::vector<double> Ls = c.L_list.empty() ? std::vector<double>{L, 2 * L} : c.L_list;
  // alpha = tau - theta_dot with a planar centreline, so the twist rate is -alpha
  auto rate = alpha.trivial() ? profile::zero() : profile::scaled(alpha, -1.0);
  struct Job {
    double eps0, L;
    bool twisted;
  };
  std::vector<Job> jobs;
  for (double e : eps0)
    for (double l : Ls)
      for (bool tw : {true, false}) jobs.push_back({e, l, tw});
  std::vector<MildBendingRow> rows(jobs.size());
  parallel_for(int(jobs.size()), ctx.threads, [&](int i) {
    const auto& j = jobs[i];
    rows[i] = mild_bending_eigen(j.eps0, j.twisted ? rate : profile::zero(), c.tube.shape, fe, g, build_grid(c.disc, -j.L, j.L), c.tol);
  });

  auto& r = rep.results();
  r["E1"] = g.E1;
  r["a"] = a;
  r["hardy"] = hardy_json(h);
  r["eps0_star"] = eps0_star;
  Json out = Json::array();
  Table t{{"eps0", "L", "twisted", "lambda1", "E1", "above_threshold"}, {}};
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& row = rows[i];
    out.push_back({{"eps0", row.eps0}, {"L", row.half_length}, {"twisted", jobs[i].twisted}, {"lambda1", row.lambda1},
                   {"above_threshold", row.above_threshold}});
    t.add({row.eps0, row.half_length, jobs[i].twisted ? 1.0 : 0.0, row.lambda1, row.E1, row.above_threshold ? 1.0 : 0.0});
    if (jobs[i].twisted && row.eps0 <= eps0_star)
      rep.check_ge("no spectrum below E1 at certified strength eps0 = " + exact(row.eps0) + ", L = " + exact(row.half_length),
                   "lambda1 >= E1 - 10 tol", row.lambda1, g.E1 - 10.0 * c.tol);
  }
  r["rows"] = out;
  for (double e : eps0) {
    double m = mild_g_decay(e, a, grid);
    rep.check_le("decay of the comparison function at eps0 = " + exact(e), "|g| (1 + s^2) <= a eps0 (4 + 3 a eps0 + (a eps0)^2)", m,
                 mild_g_bound(e, a) * (1 + 1e-12));
  }
  if (!h.vacuous) rep.check_ge("Hardy constant positive", "c_star > 0", h.c_star, std::nextafter(0.0, 1.0));

  Table cond{{"s", "condition"}, {}};
  auto cv = mild_condition(eps0_star, a, g.E1, h.c_star, h.s0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) cond.add({grid[i], cv[i]});
  rep.csv("mild_bending.csv", t);
  rep.csv("condition.csv", cond);
  rep.svg("condition.svg", {"pointwise sufficient condition at eps0*", "s", "value", {{"condition", cond.column(0), cond.column(1)}}, {{"0", 0.0}}});
}

void geometry_check(Context& ctx, Report& rep) {
  const auto& c = ctx.cfg;
  auto spec = build_tube(c.tube);
  Tube tube(spec);
  auto& r = rep.results();
  HypothesisReport hyp;
  hyp.a = tube.a();
  hyp.kappa_sup = spec.curve.kappa_sup();
  hyp.margin = 1.0 - hyp.a * hyp.kappa_sup;
  try {
    hyp = check_hypotheses(tube, c.samples, c.seed);
  } catch (const HypothesisViolated& e) {
    hyp.passed = false;
    r["flags"] = {e.what()};
  }
  r["a"] = hyp.a;
  r["kappa_sup"] = hyp.kappa_sup;
  r["margin"] = hyp.margin;
  r["pairs_checked"] = hyp.pairs_checked;
  r["min_image_ratio"] = hyp.min_image_ratio;
  r["injective_on_samples"] = hyp.passed;
  rep.check_ge("tube hypothesis", "1 - a sup(kappa) > 0", hyp.margin, std::nextafter(0.0, 1.0));
  rep.check("self-intersection", "no sampled pair maps closer than 1e-9 tube diameters", hyp.passed);
  if (!hyp.passed || !(hyp.margin > 0)) return;

  auto rt = frame_roundtrip(tube);
  r["roundtrip"] = {{"kappa_error", rt.kappa_error}, {"tau_error", rt.tau_error}};

  std::mt19937_64 rng(c.seed);
  const double L = c.tube.half_length, a = tube.a();
  std::uniform_real_distribution<double> us(-L, L), ut(-a, a);
  Table met{{"s", "t2", "t3", "h", "h2", "h3"}, {}};
  double det_err = 0.0, inv_err = 0.0;
  while (met.rows.size() < 1000) {
    double s = us(rng);
    Vec2 t(ut(rng), ut(rng));
    if (!contains(spec.shape, t)) continue;
    auto m = metric_at(spec, s, t);
    det_err = std::max(det_err, std::abs(m.G.determinant() - m.h * m.h) / (m.h * m.h));
    inv_err = std::max(inv_err, (m.G * m.Ginv - Mat3::Identity()).cwiseAbs().maxCoeff());
    met.add({s, t.x(), t.y(), m.h, m.h2, m.h3});
  }
  r["metric_det_error"] = det_err;
  r["metric_inverse_error"] = inv_err;
  rep.check_le("metric determinant", "|det G - h^2| / h^2 <= 1e-12", det_err, 1e-12);
  rep.check_le("metric inverse", "|G G^-1 - I| <= 1e-12", inv_err, 1e-12);

  const auto& fr = tube.frames();
  Table frames{{"s", "e1x", "e1y", "e1z", "e2x", "e2y", "e2z", "e3x", "e3y", "e3z"}, {}};
  for (std::size_t i = 0; i < fr.s.size(); ++i) {
    std::vector<double> row = {fr.s[i]};
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) row.push_back(fr.frames[i](k, l));
    frames.add(row);
  }
  rep.csv("frames.csv", frames);
  rep.csv("metric.csv", met);
  Table cv{{"s", "kappa", "tau_minus_theta_dot"}, {}};
  for (double s : fr.s) cv.add({s, spec.curve.kappa(s), spec.curve.tau(s) - spec.angle.theta_dot(s)});
  rep.svg("curve.svg", {"curvature and twist", "s", "1/length", {{"kappa", cv.column(0), cv.column(1)}, {"tau - theta_dot", cv.column(0), cv.column(2)}}});
}

using Command = void (*)(Context&, Report&);

const std::vector<std::tuple<std::string, std::string, Command>>& commands() {
  static const std::vector<std::tuple<std::string, std::string, Command>> list = {
      {"cross-section", "threshold E1, ground mode, angular norm and C(omega) of the cross-section", cross_section},
      {"tube-spectrum", "lowest eigenvalues of the full tube", tube_spectrum},
      {"twist-threshold", "lambda(alpha, I), lambda(sup alpha) and the constant-twist comparison", twist_threshold},
      {"hardy-scan", "largest c with H - E1 >= c / (1 + (s - s0)^2)", hardy_scan_cmd},
      {"partition-bound", "piecewise lower bound from a partition of the axis", partition_bound},
      {"certify-bending", "trial-function certificate of spectrum below E1", certify_bending_cmd},
      {"thin-limit", "full-tube eigenvalues against the effective 1D operator as eps -> 0", thin_limit},
      {"mild-bending", "certified bending strength and eigenvalues of mildly bent twisted tubes", mild_bending},
      {"geometry-check", "tube hypotheses, frame round trip and metric identities", geometry_check},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wsl: spectral experiments on twisted and bent waveguides"};
  app.require_subcommand(1);
  std::string config, out;
  int threads = 1;
  std::map<CLI::App*, std::pair<std::string, Command>> subs;
  for (const auto& [name, help, fn] : commands()) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("--config", config, "experiment config (JSON, comments allowed; a report.json works too)")->required();
    sc->add_option("--out", out, "output directory (default: 'output' from the config)");
    sc->add_option("--threads", threads, "worker threads for independent list entries")->check(CLI::PositiveNumber);
    subs[sc] = {name, fn};
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (openblas_set_num_threads) openblas_set_num_threads(1);

  try {
    Context ctx;
    ctx.cfg = parse_config(load_config_json(config));
    ctx.threads = threads;
    for (auto* sc : app.get_subcommands()) {
      const auto& [name, fn] = subs.at(sc);
      Report rep(name, ctx.cfg, out.empty() ? fs::path(ctx.cfg.output) : fs::path(out));
      fn(ctx, rep);
      rep.write();
      std::cout << name << ": report written to " << (out.empty() ? ctx.cfg.output : out) << "/report.json\n";
      if (!rep.passed()) {
        for (const auto& ch : rep.checks())
          if (!ch.passed)
            std::cerr << "check failed: " << ch.name << ": " << ch.inequality << " (lhs " << exact(ch.lhs) << ", rhs " << exact(ch.rhs) << ")\n";
        return 1;
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const HypothesisViolated& e) {
    std::cerr << "input violates the tube hypotheses: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
