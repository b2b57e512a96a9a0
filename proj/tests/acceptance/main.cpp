// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run all criteria
//   acceptance 3 6        run the listed criteria
//
// Exit status is 0 when every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "polyharm/identity.hpp"
#include "runner.hpp"
#include "support/shooting.hpp"

using namespace polyharm;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> failed;

  // Records a sub-check; failed ones are listed after the detail line.
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failed.push_back(what);
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. exponent ledger

// 1/q_{k+1} = p^k (1/q_1 - c) + c with c = 2mp/(N(p-1)), evaluated afresh.
Rational closed_form_inverse(int n, int m, const Rational& p, std::size_t k) {
  const Rational c = Rational(2 * m) * p / (Rational(n) * (p - 1));
  const Rational q1 = Rational(2 * n) / (p * (n - 2 * m));
  return pow(p, static_cast<unsigned>(k)) * (1 / q1 - c) + c;
}

void criterion_1(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemExponents pe(7, 1, Rational(3, 2));
  const ExponentLedger l = bootstrap_chain(pe);
  const std::vector<Rational> chain = {Rational(28, 15), Rational(8, 3), Rational(112, 15)};
  bool same = l.chain.size() == chain.size();
  for (std::size_t i = 0; same && i < chain.size(); ++i) same = l.chain[i].q == chain[i];
  v.check(same, "chain [28/15, 8/3, 112/15]");
  v.check(l.k0 == 2, "k0 = 2");
  v.check(l.gamma_paper && *l.gamma_paper == 9, "gamma_paper = 9");
  v.check(l.nu_lower <= Rational(1, 9), "nu_lower <= 1/9");
  const double t_example = seconds_since(t0);
  v.check(t_example < 1.0, "runtime < 1 s");

  std::mt19937 rng(20260101);
  int checked = 0, subconformal = 0;
  bool all_agree = true;
  while (checked < 200) {
    const int m = std::uniform_int_distribution<int>(1, 4)(rng);
    const int n = std::uniform_int_distribution<int>(2 * m + 1, 2 * m + 16)(rng);
    const long long den = std::uniform_int_distribution<int>(2, 24)(rng);
    const long long num_hi = (static_cast<long long>(n + 2 * m) * den - 1) / (n - 2 * m);
    if (num_hi <= den) continue;
    const Rational p(std::uniform_int_distribution<long long>(den + 1, num_hi)(rng), den);
    const ExponentLedger r = bootstrap_chain(ProblemExponents(n, m, p));
    for (std::size_t k = 0; k + 1 < r.chain.size(); ++k) {
      if (r.chain[k].branch != Branch::Subconformal) continue;
      ++subconformal;
      all_agree = all_agree && 1 / r.chain[k + 1].q == closed_form_inverse(n, m, p, k + 1);
    }
    for (const auto& c : r.closed_form) all_agree = all_agree && c.agrees;
    all_agree = all_agree && r.chain.back().branch == Branch::Terminal;
    ++checked;
  }
  v.check(all_agree, "closed form agreement on random chains");
  v.detail << "chain " << to_string(l.chain[0].q) << ", " << to_string(l.chain[1].q) << ", "
           << to_string(l.chain[2].q) << "; k0 " << l.k0 << "; gamma_paper "
           << (l.gamma_paper ? to_string(*l.gamma_paper) : "none") << "; nu_lower " << to_string(l.nu_lower)
           << "; " << checked << " random chains, " << subconformal << " subconformal steps exact; "
           << num(t_example) << " s";
}

// ---------------------------------------------------------------------------
// 2. truncation invariants

void criterion_2(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto op = build_operator(DomainSpec::radial_ball(1.0, 3, 400), 1, BoundaryCondition::Dirichlet);
  const double lambda1 = principal_eigenpair(*op).lambda1;
  const double p = 3.0;
  const std::vector<std::pair<std::string, NonlinearitySpec>> builtins = {
      {"zero", NonlinearitySpec::zero()},
      {"pure-power", NonlinearitySpec::pure_power(7)},
      {"power-exp", NonlinearitySpec::power_exp(7, 1)},
      {"linear-exp", NonlinearitySpec::linear_exp(2, 1)},
  };
  const std::vector<double> alphas = {1.0, 0.5, 0.125, 1.0 / 64};
  std::mt19937_64 rng(7);

  for (const auto& [name, f] : builtins) {
    const TruncationParams params = calibrate_truncation(f, lambda1, probe_grid());
    const double quad = (params.lambda1 - params.eps0) / 2;
    bool kt = true, beyond = true, kt0 = true;
    std::array<double, 3> c{};  // fitted at alpha = 1 for |f_a|, |f_a s|, |F_a|
    double worst_ratio = 0;
    for (double alpha : alphas) {
      const TruncatedNonlinearity tn = truncate(f, params, alpha, p);
      std::uniform_real_distribution<double> sample(-10 / alpha, 10 / alpha);
      std::array<double, 3> sup{};
      for (int i = 0; i < 10000; ++i) {
        const double s = sample(rng);
        const double fa = tn.f_alpha(s), Fa = tn.F_alpha(s);
        kt = kt && Fa >= 0 && Fa <= quad * s * s;
        sup[0] = std::max(sup[0], std::abs(fa));
        sup[1] = std::max(sup[1], std::abs(fa * s));
        sup[2] = std::max(sup[2], std::abs(Fa));
        if (std::abs(s) >= params.s0p / alpha) beyond = beyond && tn.g(s) == signed_power(s, p);
      }
      if (alpha == 1.0) c = sup;
      for (int k = 0; k < 3; ++k) {
        const double bound = c[k] * std::pow(alpha, -params.nu);
        if (sup[k] > bound) kt0 = false;
        if (bound > 0) worst_ratio = std::max(worst_ratio, sup[k] / bound);
      }
    }
    v.check(kt, name + " 0 <= F_alpha <= (lambda1 - eps0) s^2 / 2");
    v.check(beyond, name + " pure power beyond s0'/alpha");
    v.check(kt0, name + " sup bounds C alpha^-nu (worst ratio " + num(worst_ratio) + ", nu " + num(params.nu) + ")");
  }
  const double t = seconds_since(t0);
  v.check(t < 10, "runtime < 10 s");
  v.detail << builtins.size() << " nonlinearities x " << alphas.size() << " alphas x 10^4 samples; " << num(t)
           << " s";
}

// ---------------------------------------------------------------------------
// 3. operator spectra

void criterion_3(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    std::string name;
    std::function<DomainSpec(int)> domain;
    int order;
    BoundaryCondition bc;
    double exact;
    double tolerance;
  };
  const std::vector<Case> cases = {
      {"interval m=1 dirichlet", [](int n) { return DomainSpec::interval(1.0, n); }, 1,
       BoundaryCondition::Dirichlet, kPi * kPi, 1e-3},
      {"interval m=2 navier", [](int n) { return DomainSpec::interval(1.0, n); }, 2, BoundaryCondition::Navier,
       std::pow(kPi, 4), 0.1},
      {"ball N=3 m=1 dirichlet", [](int n) { return DomainSpec::radial_ball(1.0, 3, n); }, 1,
       BoundaryCondition::Dirichlet, kPi * kPi, 1e-2},
  };
  for (const auto& c : cases) {
    auto lambda1 = [&](int n) { return principal_eigenpair(*build_operator(c.domain(n), c.order, c.bc)).lambda1; };
    const double err = std::abs(lambda1(2000) - c.exact);
    v.check(err < c.tolerance, c.name + " error " + num(err));
    double e[3];
    for (int k = 0; k < 3; ++k) e[k] = std::abs(lambda1(250 << k) - c.exact);
    const double o1 = std::log2(e[0] / e[1]), o2 = std::log2(e[1] / e[2]);
    v.check(o1 >= 1.8 && o2 >= 1.8, c.name + " order");
    v.detail << c.name << ": error " << num(err) << ", orders " << num(o1) << ", " << num(o2) << "; ";
  }
  const double t = seconds_since(t0);
  v.check(t < 30, "runtime < 30 s");
  v.detail << num(t) << " s";
}

// ---------------------------------------------------------------------------
// 4. mountain pass against the shooting oracle

struct OracleRun {
  OperatorPtr op;
  PathResult path;
};

OracleRun oracle_solution() {
  OracleRun run;
  run.op = build_operator(DomainSpec::radial_ball(1.0, 3, 2000), 1, BoundaryCondition::Dirichlet);
  SolveConfig cfg;
  cfg.gradient_tolerance = 1e-8;
  const Nonlinearity cubic = untruncated(NonlinearitySpec::zero(), 1.0, 3.0);
  run.path = mountain_pass(*run.op, cubic, principal_eigenpair(*run.op).w0.values, cfg);
  return run;
}

void criterion_4(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const OracleRun run = oracle_solution();
  std::vector<double> radii;
  for (const auto& x : run.op->grid()->coordinates()) radii.push_back(x[0]);
  const auto profile = polyharm::testing::RadialShooting(3, 3.0).profile(radii);
  double err = 0;
  for (std::size_t i = 0; i < radii.size(); ++i)
    err = std::max(err, std::abs(profile[i] - run.path.u.values[static_cast<Eigen::Index>(i)]));
  const double t = seconds_since(t0);
  v.check(run.path.converged, "solver converged");
  v.check(err < 1e-4, "sup error < 1e-4");
  v.check(std::abs(run.path.nehari_residual) < 1e-5, "Nehari residual < 1e-5");
  v.check(t < 60, "runtime < 60 s");
  v.detail << "2000 nodes, gradient tolerance 1e-8: sup error " << num(err) << ", Nehari "
           << num(run.path.nehari_residual) << ", u(0) " << num(run.path.u.values[0]) << " vs "
           << num(profile[0]) << "; " << num(t) << " s";
}

// ---------------------------------------------------------------------------
// 5. existence pipeline

Problem supercritical_problem() {
  Problem pr;
  pr.domain = DomainSpec::radial_ball(1.0, 3, 2000);
  pr.p = Rational(3);
  pr.q = Rational(7);
  pr.f = NonlinearitySpec::power_exp(7, 1);
  return pr;
}

void criterion_5(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const Problem pr = supercritical_problem();
  const ExistenceReport r = solve_existence(pr, 1.0 / 64);
  const double relative = r.residual_sup / (r.residual_tolerance / 1e-4);
  v.check(r.outcome == ExistenceOutcome::Certified, "certified (got " + to_string(r.outcome) + ")");
  v.check(r.solve.sup_v < 1, "sup|v| < 1");
  v.check(relative < 1e-4, "relative residual < 1e-4");
  v.check(std::abs(r.solve.lambda - 4096) < 1e-9, "lambda = 4096");
  const TwoSignedReport two = solve_two_signed(pr, 1.0 / 64);
  v.check(two.plus_positive && two.minus_negative, "u+ > 0 > u-");
  const double t = seconds_since(t0);
  v.check(t < 300, "runtime < 5 min");
  v.detail << "lambda " << num(r.solve.lambda) << ", sup|v| " << num(r.solve.sup_v) << ", relative residual "
           << num(relative) << ", min u+ " << num(two.plus.solve.path.u.values.minCoeff()) << ", max u- "
           << num(two.minus.solve.path.u.values.maxCoeff()) << "; " << num(t) << " s";
}

// ---------------------------------------------------------------------------
// 6. identity machinery

IdentityReport manufactured(int nodes) {
  const auto op = build_operator(DomainSpec::radial_ball(1.0, 3, nodes), 1, BoundaryCondition::Dirichlet);
  const auto u = GridField::from_function(op->grid(), [](const std::array<double, 2>& x) { return 1 - x[0] * x[0]; });
  const Nonlinearity six{[](double) { return 6.0; }, [](double s) { return 6.0 * s; }};
  return pucci_serrin(*op, u, six, 0.5);
}

void criterion_6(Verdict& v) {
  const IdentityReport m = manufactured(2000);
  const double ei = std::abs(m.interior_term + 8 * kPi), eb = std::abs(m.boundary_term + 8 * kPi);
  v.check(ei < 1e-3, "interior term within 1e-3 of -8 pi");
  v.check(eb < 1e-3, "boundary term within 1e-3 of -8 pi");
  double res[3];
  for (int k = 0; k < 3; ++k) res[k] = std::abs(manufactured(500 << k).residual);
  const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
  v.check(o1 >= 1.8 && o2 >= 1.8, "residual order >= 1.8");
  v.detail << "interior error " << num(ei) << ", boundary error " << num(eb) << ", residual orders " << num(o1)
           << ", " << num(o2);

  // Certified Dirichlet solutions from criteria 4 and 5.
  std::vector<std::pair<std::string, IdentityReport>> solutions;
  const OracleRun run = oracle_solution();
  solutions.emplace_back("cubic", pucci_serrin(*run.op, run.path.u, untruncated(NonlinearitySpec::zero(), 1, 3)));
  const Problem pr = supercritical_problem();
  const auto op = build_operator(pr.domain, 1, BoundaryCondition::Dirichlet);
  const ExistenceReport e = solve_existence(pr, 1.0 / 64);
  const TwoSignedReport two = solve_two_signed(pr, 1.0 / 64);
  for (const auto& [name, rep] : {std::pair<std::string, const ExistenceReport*>{"v", &e}, {"v+", &two.plus},
                                  {"v-", &two.minus}}) {
    if (rep->outcome != ExistenceOutcome::Certified) continue;
    const GridField field(op->grid(), rep->v.values);
    solutions.emplace_back(name, pucci_serrin(*op, field, untruncated(pr.f, rep->solve.lambda, 3.0)));
  }
  v.check(solutions.size() == 4, "all solutions from criteria 4-5 certified");
  for (const auto& [name, rep] : solutions) {
    const double normalized = *rep.foufou / rep.foufou_scale;
    v.check(rep.verdict == FoufouVerdict::Consistent, name + " foufou <= 1e-6 normalized");
    v.detail << "; " << name << " foufou/scale " << num(normalized);
  }
}

// ---------------------------------------------------------------------------
// 7. nonexistence sweep

void criterion_7(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const cli::RunConfig cfg = cli::parse_config(
      "[problem]\nN = 3\np = 3\nq = 7\nf = pure-power\nf_q = 7\n[sweep]\njobs = 4\n", cli::Subcommand::Sweep);
  const ThresholdReport r = nonexistence_sweep(cfg.problem(), cfg.sweep, cfg.probe());
  const SweepRow* zero = nullptr;
  for (const auto& row : r.rows)
    if (row.lambda == 0) zero = &row;
  v.check(r.rows.size() == 12, "12-point grid");
  v.check(zero && zero->outcome == RowOutcome::Collapse && zero->amplitude < 1e-3, "lambda = 0 collapses");
  v.check(r.lambda_star && *r.lambda_star > 0, "positive lambda*");
  const bool slope_ok = r.fitted_slope && std::abs(*r.fitted_slope - r.expected_slope) <= 0.25 * r.expected_slope;
  v.check(slope_ok, "fitted slope within 25% of " + num(r.expected_slope));
  const double t = seconds_since(t0);
  v.check(t < 900, "runtime < 15 min");
  v.detail << "lambda = 0: " << (zero ? to_string(zero->outcome) + " (" + zero->solver_status + ", amplitude " +
                                            num(zero->amplitude) + ", solver stopped at sup|u| " +
                                            num(zero->raw_amplitude) + ")"
                                      : "missing")
           << "; lambda* " << (r.lambda_star ? num(*r.lambda_star) : "none") << "; slope "
           << (r.fitted_slope ? num(*r.fitted_slope) : "none") << " over " << r.fit_points
           << " points vs expected " << num(r.expected_slope) << "; " << num(t) << " s";
}

// ---------------------------------------------------------------------------
// 8. determinism of JSON reports

void criterion_8(Verdict& v) {
  const std::vector<std::pair<std::string, cli::RunConfig>> runs = {
      {"exponents", cli::parse_config("[problem]\nN = 7\nm = 1\np = 3/2\n", cli::Subcommand::Exponents)},
      {"spectrum interval m=1",
       cli::parse_config("[problem]\ndomain = interval\nnodes = 2000\n", cli::Subcommand::Spectrum)},
      {"spectrum interval m=2",
       cli::parse_config("[problem]\ndomain = interval\nm = 2\nbc = navier\nnodes = 2000\n", cli::Subcommand::Spectrum)},
      {"spectrum ball", cli::parse_config("[problem]\nN = 3\nnodes = 2000\n", cli::Subcommand::Spectrum)},
      {"identity manufactured",
       cli::parse_config("[problem]\nN = 3\nnodes = 2000\n[identity]\nfield = manufactured\na = 0.5\n",
                         cli::Subcommand::Identity)},
      {"identity solution", cli::parse_config("[problem]\nN = 3\np = 3\nnodes = 2000\n[solver]\n"
                                              "gradient_tolerance = 1e-8\n",
                                              cli::Subcommand::Identity)},
  };
  for (const auto& [name, cfg] : runs) {
    const std::string first = cli::dump(cli::execute(cfg).report);
    const std::string second = cli::dump(cli::execute(cfg).report);
    v.check(first == second, name + " byte-identical");
    v.detail << name << " " << first.size() << " bytes; ";
  }
  v.detail << "each run twice";
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {1, {"exponent ledger exactness", criterion_1}},  {2, {"truncation invariants", criterion_2}},
      {3, {"operator spectra", criterion_3}},           {4, {"mountain pass vs shooting oracle", criterion_4}},
      {5, {"existence pipeline", criterion_5}},         {6, {"identity machinery", criterion_6}},
      {7, {"nonexistence behavior", criterion_7}},      {8, {"determinism", criterion_8}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& [k, _] : criteria) selected.push_back(k);

  int failures = 0;
  for (int k : selected) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::printf("criterion %d: unknown\n", k);
      ++failures;
      continue;
    }
    Verdict v;
    try {
      it->second.second(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    std::string line = v.detail.str();
    for (const auto& f : v.failed) line += " | failed: " + f;
    std::printf("criterion %d (%s): %s  %s\n", k, it->second.first.c_str(), v.pass ? "PASS" : "FAIL", line.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
