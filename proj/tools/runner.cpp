#include "runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "polyharm/errors.hpp"

namespace polyharm::cli {

using nlohmann::ordered_json;

namespace {

ordered_json optional_rational(const std::optional<Rational>& r) {
  return r ? ordered_json(to_string(*r)) : ordered_json(nullptr);
}

template <class T>
ordered_json optional_value(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json ledger_json(const ExponentLedger& l, const std::optional<Rational>& q) {
  ordered_json j;
  j["N"] = l.dimension;
  j["m"] = l.order;
  j["p"] = to_string(l.p);
  j["q"] = optional_rational(q);
  j["critical"] = to_string(l.critical);
  ordered_json chain = ordered_json::array();
  ordered_json branches = ordered_json::array();
  for (const auto& e : l.chain) {
    chain.push_back(to_string(e.q));
    branches.push_back(std::string(to_string(e.branch)));
  }
  j["chain"] = chain;
  j["branches"] = branches;
  j["k0"] = l.k0;
  ordered_json checks = ordered_json::array();
  for (const auto& c : l.closed_form) {
    ordered_json x;
    x["index"] = c.index;
    x["iterated_inverse"] = to_string(c.iterated_inverse);
    x["closed_form_inverse"] = to_string(c.closed_form_inverse);
    x["agrees"] = c.agrees;
    checks.push_back(x);
  }
  j["closed_form"] = checks;
  j["gamma_paper"] = optional_rational(l.gamma_paper);
  j["gamma_iterated"] = to_string(l.gamma_iterated);
  j["nu_lower"] = to_string(l.nu_lower);
  j["beta_paper"] = optional_rational(l.beta_paper);
  return j;
}

ordered_json truncation_json(const TruncationParams& t) {
  ordered_json j;
  j["lambda1"] = t.lambda1;
  j["L_estimate"] = t.L_estimate;
  j["nu"] = t.nu;
  j["C1"] = t.C1;
  j["eps0"] = t.eps0;
  j["s0_prime"] = t.s0p;
  return j;
}

ordered_json path_json(const PathResult& r) {
  ordered_json j;
  j["status"] = to_string(r.status);
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["energy"] = r.energy;
  j["form"] = r.form;
  j["gradient_norm"] = r.gradient_norm;
  j["nehari_residual"] = r.nehari_residual;
  j["residual_sup"] = r.residual_sup;
  j["sup_u"] = r.sup_u;
  j["b0"] = r.b0;
  j["initial_path_max"] = r.initial_path_max;
  j["path_max_history"] = r.history;
  return j;
}

ordered_json identity_json(const IdentityReport& r) {
  ordered_json j;
  j["a"] = r.a;
  j["y"] = r.y;
  j["nodes"] = r.nodes;
  j["interior_coefficient"] = r.interior_coefficient;
  j["interior_term"] = r.interior_term;
  j["boundary_term"] = r.boundary_term;
  j["residual"] = r.residual;
  j["foufou"] = optional_value(r.foufou);
  j["foufou_scale"] = r.foufou_scale;
  j["verdict"] = to_string(r.verdict);
  return j;
}

ordered_json existence_json(const ExistenceReport& r) {
  ordered_json j;
  j["outcome"] = to_string(r.outcome);
  j["alpha"] = r.solve.alpha;
  j["lambda"] = r.solve.lambda;
  j["lambda1"] = r.lambda1;
  j["truncation"] = truncation_json(r.truncation);
  j["path"] = path_json(r.solve.path);
  j["sup_v"] = r.solve.sup_v;
  j["detruncated"] = r.detruncated;
  j["sup_below_one"] = r.sup_below_one;
  j["untruncated_residual_sup"] = r.residual_sup;
  j["untruncated_residual_tolerance"] = r.residual_tolerance;
  ordered_json bounds;
  bounds["nu"] = r.solve.nu;
  bounds["energy_times_alpha_nu"] = r.solve.za_constant;
  bounds["form_times_alpha_nu"] = r.solve.eg_constant;
  bounds["sup_u_times_alpha_gamma_nu"] = optional_value(r.main_constant);
  j["bound_constants"] = bounds;
  j["exponents"] = r.exponents ? ledger_json(*r.exponents, std::nullopt) : ordered_json(nullptr);
  return j;
}

bool has_trace(const RunConfig& c) { return c.order == 1 || c.bc == BoundaryCondition::Dirichlet; }

// Identity on the certified v with the untruncated nonlinearity.
std::optional<IdentityReport> certified_identity(const RunConfig& c, const ExistenceReport& r) {
  if (r.outcome != ExistenceOutcome::Certified || !has_trace(c)) return std::nullopt;
  const auto op = build_operator(c.domain(), c.order, c.bc);
  const GridField v(op->grid(), r.v.values);
  return pucci_serrin(*op, v, untruncated(c.nonlinearity(), r.solve.lambda, to_double(c.p)), c.identity_a);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

RunResult run_exponents(const RunConfig& c) {
  RunResult out;
  const ProblemExponents pe(c.dimension, c.order, c.p, c.q);
  const PClass cls = classify_p(pe);
  out.report["p_class"] = std::string(to_string(cls));
  out.report["critical"] = to_string(critical_exponent(pe));
  if (c.q && *c.q > c.p && c.p > 1) out.report["delta"] = to_string(nonexistence_delta(c.p, *c.q));
  if (cls != PClass::StrictSubcritical) {
    // The chain needs 1 < p < critical.
    out.report["ledger"] = nullptr;
    out.summary = "p is " + std::string(to_string(cls)) + ", no bootstrap chain";
    return out;
  }
  const ExponentLedger l = bootstrap_chain(pe);
  out.report["ledger"] = ledger_json(l, c.q);

  std::ostringstream table;
  table << "k  q_k  branch\n";
  for (std::size_t k = 0; k < l.chain.size(); ++k)
    table << k + 1 << "  " << to_string(l.chain[k].q) << "  " << to_string(l.chain[k].branch) << "\n";
  table << "k0 = " << l.k0 << "\n";
  table << "gamma_paper = " << (l.gamma_paper ? to_string(*l.gamma_paper) : "n/a") << "\n";
  table << "gamma_iterated = " << to_string(l.gamma_iterated) << "\n";
  table << "nu_lower = " << to_string(l.nu_lower) << "\n";
  out.files.emplace_back("ledger.txt", table.str());
  out.summary = "chain of " + std::to_string(l.chain.size()) + " exponents, k0 = " + std::to_string(l.k0);
  return out;
}

RunResult run_truncate(const RunConfig& c) {
  RunResult out;
  const auto op = build_operator(c.domain(), c.order, c.bc);
  const Eigenpair eig = principal_eigenpair(*op);
  const NonlinearitySpec f = c.nonlinearity();
  const TruncationParams params = calibrate_truncation(f, eig.lambda1, c.probe());
  const double p = to_double(c.p);
  const TruncatedNonlinearity tn = truncate(f, params, c.alpha, p);

  out.report["truncation"] = truncation_json(params);
  out.report["alpha"] = c.alpha;
  out.report["lambda"] = scaling_lambda(c.alpha, c.p);
  out.report["pure_power_beyond"] = params.s0p / c.alpha;
  if (c.q) {
    const H1Report h1 = check_H1(f, to_double(*c.q), c.sweep.h1_s0, c.probe());
    ordered_json j;
    j["q"] = to_string(*c.q);
    j["s0"] = h1.s0;
    j["pass"] = h1.pass();
    j["growth_ok"] = h1.growth_ok;
    j["small_ok"] = h1.small_ok;
    j["c0"] = h1.c0;
    j["global_ok"] = h1.global_ok;
    out.report["H1"] = j;
  }

  const double range = c.sample_range.value_or(2 * params.s0p / c.alpha);
  std::ostringstream csv;
  csv << "s,f_alpha,F_alpha,g_alpha,G_alpha\n";
  for (int i = 0; i < c.samples; ++i) {
    const double s = -range + 2 * range * i / (c.samples - 1);
    csv << fmt(s) << "," << fmt(tn.f_alpha(s)) << "," << fmt(tn.F_alpha(s)) << "," << fmt(tn.g(s)) << ","
        << fmt(tn.G(s)) << "\n";
  }
  out.files.emplace_back("g_alpha.csv", csv.str());
  out.summary = "s0' = " + fmt(params.s0p) + ", eps0 = " + fmt(params.eps0);
  return out;
}

RunResult run_solve(const RunConfig& c) {
  RunResult out;
  const ExistenceReport r = solve_existence(c.problem(), c.alpha, c.solve, c.probe());
  out.report = existence_json(r);
  const auto id = certified_identity(c, r);
  out.report["identity"] = id ? identity_json(*id) : ordered_json(nullptr);
  out.fields.emplace_back("u_alpha.csv", r.solve.path.u);
  out.fields.emplace_back("v.csv", r.v);
  const bool ok = r.outcome == ExistenceOutcome::Certified || r.outcome == ExistenceOutcome::AlphaTooLarge;
  out.status = ok ? kOk : kNumerical;
  out.summary = "outcome " + to_string(r.outcome) + ", sup|v| = " + fmt(r.solve.sup_v);
  return out;
}

RunResult run_two_solutions(const RunConfig& c) {
  RunResult out;
  const TwoSignedReport r = solve_two_signed(c.problem(), c.alpha, c.solve, c.probe());
  out.report["plus"] = existence_json(r.plus);
  out.report["minus"] = existence_json(r.minus);
  out.report["plus_positive"] = r.plus_positive;
  out.report["minus_negative"] = r.minus_negative;
  out.report["plus_full_residual"] = r.plus_full_residual;
  out.report["minus_full_residual"] = r.minus_full_residual;
  out.report["antisymmetry_gap"] = r.antisymmetry_gap;
  out.fields.emplace_back("u_plus.csv", r.plus.solve.path.u);
  out.fields.emplace_back("u_minus.csv", r.minus.solve.path.u);
  const bool converged = r.plus.solve.path.converged && r.minus.solve.path.converged;
  out.status = converged && r.plus_positive && r.minus_negative ? kOk : kNumerical;
  out.summary = std::string("u+ ") + (r.plus_positive ? "> 0" : "NOT > 0") + ", u- " +
                (r.minus_negative ? "< 0" : "NOT < 0") + ", outcomes " + to_string(r.plus.outcome) + "/" +
                to_string(r.minus.outcome);
  return out;
}

RunResult run_identity(const RunConfig& c) {
  RunResult out;
  const auto op = build_operator(c.domain(), c.order, c.bc);
  if (c.identity_field == IdentityField::Manufactured) {
    // u = R^2 - r^2 solves -Delta u = 2N; both sides equal -2 omega R^{N+2}.
    const int n = c.dimension;
    const double radius = c.length;
    const auto u = GridField::from_function(
        op->grid(), [radius](const std::array<double, 2>& x) { return radius * radius - x[0] * x[0]; });
    const double g = 2.0 * n;
    const Nonlinearity constant{[g](double) { return g; }, [g](double s) { return g * s; }};
    const IdentityReport r = pucci_serrin(*op, u, constant, c.identity_a);
    const double omega = 2 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0);
    out.report["field"] = "manufactured";
    out.report["identity"] = identity_json(r);
    out.report["analytic_interior"] = -2 * omega * std::pow(radius, n + 2);
    out.report["analytic_boundary"] = -2 * omega * std::pow(radius, n + 2);
    out.fields.emplace_back("u.csv", u);
    out.summary = "interior " + fmt(r.interior_term) + ", boundary " + fmt(r.boundary_term);
    return out;
  }
  const ExistenceReport e = solve_existence(c.problem(), c.alpha, c.solve, c.probe());
  out.report["solve"] = existence_json(e);
  if (!e.solve.path.converged) {
    out.report["identity"] = nullptr;
    out.status = kNumerical;
    out.summary = "solver did not converge";
    return out;
  }
  IdentityReport r;
  if (e.outcome == ExistenceOutcome::Certified) {
    out.report["field"] = "v";
    r = *certified_identity(c, e);
    out.fields.emplace_back("v.csv", e.v);
  } else {
    // u_alpha solves the truncated problem exactly as well.
    out.report["field"] = "u_alpha";
    const auto params = calibrate_truncation(c.nonlinearity(), e.lambda1, c.probe());
    const auto tn = truncate(c.nonlinearity(), params, c.alpha, to_double(c.p));
    const GridField u(op->grid(), e.solve.path.u.values);
    r = pucci_serrin(*op, u, tn.full(), c.identity_a);
    out.fields.emplace_back("u_alpha.csv", u);
  }
  out.report["identity"] = identity_json(r);
  out.summary = "residual " + fmt(r.residual) + ", " + to_string(r.verdict);
  return out;
}

RunResult run_sweep(const RunConfig& c) {
  RunResult out;
  const ThresholdReport r = nonexistence_sweep(c.problem(), c.sweep, c.probe());
  ordered_json rows = ordered_json::array();
  std::ostringstream csv;
  csv << "lambda,outcome,amplitude,raw_amplitude,residual,power_integral,form,foufou,theorem_A,solver_status\n";
  for (const auto& row : r.rows) {
    ordered_json j;
    j["lambda"] = row.lambda;
    j["outcome"] = to_string(row.outcome);
    j["amplitude"] = row.amplitude;
    j["raw_amplitude"] = row.raw_amplitude;
    j["residual"] = row.residual;
    j["power_integral"] = row.power_integral;
    j["form"] = row.form;
    j["foufou"] = optional_value(row.foufou);
    j["theorem_A"] = to_string(row.theorem_a);
    j["solver_status"] = row.solver_status;
    j["iterations"] = row.iterations;
    rows.push_back(j);
    csv << fmt(row.lambda) << "," << to_string(row.outcome) << "," << fmt(row.amplitude) << ","
        << fmt(row.raw_amplitude) << "," << fmt(row.residual) << "," << fmt(row.power_integral) << ","
        << fmt(row.form) << "," << (row.foufou ? fmt(*row.foufou) : "") << "," << to_string(row.theorem_a) << ","
        << "\"" << row.solver_status << "\"\n";
  }
  out.report["rows"] = rows;
  out.report["lambda_star"] = optional_value(r.lambda_star);
  out.report["expected_slope"] = r.expected_slope;
  out.report["fitted_slope"] = optional_value(r.fitted_slope);
  out.report["fit_points"] = r.fit_points;
  out.report["C1"] = optional_value(r.c1);
  out.report["C2"] = optional_value(r.c2);
  out.report["sobolev_constant"] = optional_value(r.sobolev_constant);
  out.report["load_constant"] = optional_value(r.load_constant);
  out.report["klm"] = optional_value(r.klm);
  out.report["lambda_lower_empirical"] = optional_value(r.lambda_lower_empirical);
  out.report["delta"] = optional_rational(r.delta);
  out.report["all_below_collapse"] = r.all_below_collapse;
  ordered_json h1;
  h1["q"] = r.h1.q;
  h1["s0"] = r.h1.s0;
  h1["c0"] = r.h1.c0;
  h1["global_c"] = r.h1.global_c;
  out.report["H1"] = h1;
  out.files.emplace_back("threshold.csv", csv.str());
  out.summary = r.lambda_star ? "lambda* = " + fmt(*r.lambda_star) : "no candidate on the grid";
  return out;
}

RunResult run_spectrum(const RunConfig& c) {
  RunResult out;
  const auto op = build_operator(c.domain(), c.order, c.bc);
  const Eigenpair eig = principal_eigenpair(*op);
  out.report["lambda1"] = eig.lambda1;
  out.report["iterations"] = eig.iterations;
  out.report["unknowns"] = op->size();
  out.fields.emplace_back("w0.csv", eig.w0);
  out.summary = "lambda1 = " + fmt(eig.lambda1);
  return out;
}

}  // namespace

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

RunResult execute(const RunConfig& cfg) {
  RunResult out;
  switch (cfg.subcommand) {
    case Subcommand::Exponents: out = run_exponents(cfg); break;
    case Subcommand::Truncate: out = run_truncate(cfg); break;
    case Subcommand::Solve: out = run_solve(cfg); break;
    case Subcommand::TwoSolutions: out = run_two_solutions(cfg); break;
    case Subcommand::Identity: out = run_identity(cfg); break;
    case Subcommand::Sweep: out = run_sweep(cfg); break;
    case Subcommand::Spectrum: out = run_spectrum(cfg); break;
  }
  ordered_json report;
  report["subcommand"] = to_string(cfg.subcommand);
  report["version"] = kVersion;
  report["config"] = config_echo(cfg);
  report["exit_status"] = out.status;
  for (auto& [k, v] : out.report.items()) report[k] = v;
  out.report = std::move(report);
  return out;
}

std::filesystem::path make_run_directory(const std::filesystem::path& out, const std::string& subcommand) {
  std::filesystem::create_directories(out);
  for (int k = 1; k < 100000; ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "%s-%03d", subcommand.c_str(), k);
    const auto dir = out / name;
    if (std::filesystem::create_directory(dir)) return dir;
  }
  throw ValidationError("no free run directory under " + out.string());
}

std::vector<std::string> write_run(const std::filesystem::path& dir, const RunResult& result) {
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    if (!f) throw ValidationError("cannot write " + (dir / name).string());
    written.push_back(name);
  };
  put("report.json", dump(result.report));
  for (const auto& [name, field] : result.fields) {
    write_field_csv(dir / name, field);
    written.push_back(name);
  }
  for (const auto& [name, text] : result.files) put(name, text);
  return written;
}

}  // namespace polyharm::cli
