#include <cmath>
#include <random>

#include "doctest.h"
#include "polyharm/errors.hpp"
#include "polyharm/operators.hpp"

using namespace polyharm;

namespace {

const double kPi = M_PI;

Eigen::VectorXd random_field(int n, std::mt19937& rng, bool nonnegative = false) {
  std::uniform_real_distribution<double> dist(nonnegative ? 0.0 : -1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

std::vector<OperatorPtr> operator_zoo() {
  return {
      build_operator(DomainSpec::interval(1.0, 40), 1, BoundaryCondition::Dirichlet),
      build_operator(DomainSpec::interval(1.0, 40), 2, BoundaryCondition::Dirichlet),
      build_operator(DomainSpec::interval(1.0, 40), 3, BoundaryCondition::Navier),
      build_operator(DomainSpec::rectangle(1.0, 2.0, 16, 24), 1, BoundaryCondition::Dirichlet),
      build_operator(DomainSpec::rectangle(1.0, 2.0, 16, 24), 2, BoundaryCondition::Dirichlet),
      build_operator(DomainSpec::rectangle(1.0, 2.0, 16, 24), 2, BoundaryCondition::Navier),
      build_operator(DomainSpec::radial_ball(1.0, 3, 50), 1, BoundaryCondition::Dirichlet),
      build_operator(DomainSpec::radial_ball(1.0, 5, 50), 2, BoundaryCondition::Dirichlet),
      build_operator(DomainSpec::radial_ball(1.0, 7, 50), 3, BoundaryCondition::Navier),
  };
}

}  // namespace

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(DomainSpec::interval(1.0, 8), ValidationError);
  CHECK_THROWS_AS(DomainSpec::rectangle(1.0, 1.0, 20, 10), ValidationError);
  CHECK_THROWS_AS(DomainSpec::radial_ball(1.0, 1, 50), ValidationError);
  CHECK_THROWS_AS(DomainSpec::interval(-1.0, 20), ValidationError);
  CHECK_THROWS_WITH_AS(build_operator(DomainSpec::interval(1.0, 20), 3, BoundaryCondition::Dirichlet),
                       doctest::Contains("Dirichlet supported for m <= 2"), ValidationError);
}

TEST_CASE("apply on analytic fields") {
  SUBCASE("interval sine") {
    double previous = 0;
    for (int n : {99, 199}) {
      auto op = build_operator(DomainSpec::interval(1.0, n), 1, BoundaryCondition::Dirichlet);
      auto u = GridField::from_function(op->grid(), [](const auto& x) { return std::sin(kPi * x[0]); });
      const double err = (op->apply(u.values) - kPi * kPi * u.values).cwiseAbs().maxCoeff();
      if (previous > 0) CHECK(previous / err > 3.5);
      previous = err;
      CHECK(err < 1e-2);
    }
  }
  SUBCASE("radial ball, 1 - r^2") {
    for (int dim : {2, 3, 5}) {
      auto op = build_operator(DomainSpec::radial_ball(1.0, dim, 64), 1, BoundaryCondition::Dirichlet);
      auto u = GridField::from_function(op->grid(), [](const auto& x) { return 1 - x[0] * x[0]; });
      const Eigen::VectorXd au = op->apply(u.values);
      for (int i = 0; i < au.size(); ++i) CHECK(au[i] == doctest::Approx(2.0 * dim).epsilon(1e-10));
    }
  }
  SUBCASE("interval Navier m = 2 form") {
    auto op = build_operator(DomainSpec::interval(1.0, 2000), 2, BoundaryCondition::Navier);
    auto u = GridField::from_function(op->grid(), [](const auto& x) { return std::sin(kPi * x[0]); });
    CHECK(op->form(u) == doctest::Approx(std::pow(kPi, 4) / 2).epsilon(1e-5));
  }
  SUBCASE("Dirichlet m = 2 interval matches the ghost-node five-point stencil") {
    auto op = build_operator(DomainSpec::interval(1.0, 20), 2, BoundaryCondition::Dirichlet);
    const int n = 20;
    const double h = 1.0 / 21;
    std::mt19937 rng(3);
    const Eigen::VectorXd u = random_field(n, rng);
    auto at = [&](int i) {
      if (i == -1) return 0.0;
      if (i == n) return 0.0;
      if (i == -2) return u[0];
      if (i == n + 1) return u[n - 1];
      return u[i];
    };
    const Eigen::VectorXd au = op->apply(u);
    for (int i = 0; i < n; ++i) {
      const double stencil = (at(i - 2) - 4 * at(i - 1) + 6 * at(i) - 4 * at(i + 1) + at(i + 2)) / std::pow(h, 4);
      CHECK(au[i] == doctest::Approx(stencil).epsilon(1e-9));
    }
  }
  SUBCASE("Dirichlet m = 2 rectangle matches the ghost-node thirteen-point stencil") {
    const int nx = 16, ny = 18;
    auto op = build_operator(DomainSpec::rectangle(1.0, 1.5, nx, ny), 2, BoundaryCondition::Dirichlet);
    const double hx = 1.0 / (nx + 1), hy = 1.5 / (ny + 1);
    std::mt19937 rng(5);
    const Eigen::VectorXd u = random_field(nx * ny, rng);
    // Extended values with boundary zeros and reflected ghosts.
    auto at = [&](int i, int j) -> double {
      if (i == -1 || i == nx || j == -1 || j == ny) return 0.0;
      if (i == -2) i = 0;
      if (i == nx + 1) i = nx - 1;
      if (j == -2) j = 0;
      if (j == ny + 1) j = ny - 1;
      return u[i + nx * j];
    };
    auto lap = [&](int i, int j) {
      return (at(i - 1, j) - 2 * at(i, j) + at(i + 1, j)) / (hx * hx) +
             (at(i, j - 1) - 2 * at(i, j) + at(i, j + 1)) / (hy * hy);
    };
    // Laplacian at extended points, with Delta u on the boundary from the ghosts.
    auto lap_ext = [&](int i, int j) -> double {
      const bool bx = i == -1 || i == nx, by = j == -1 || j == ny;
      if (bx && by) return 0.0;
      if (bx) return 2.0 * at(i == -1 ? 0 : nx - 1, j) / (hx * hx);
      if (by) return 2.0 * at(i, j == -1 ? 0 : ny - 1) / (hy * hy);
      return lap(i, j);
    };
    const Eigen::VectorXd au = op->apply(u);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double bih = (lap_ext(i - 1, j) - 2 * lap_ext(i, j) + lap_ext(i + 1, j)) / (hx * hx) +
                           (lap_ext(i, j - 1) - 2 * lap_ext(i, j) + lap_ext(i, j + 1)) / (hy * hy);
        CHECK(au[i + nx * j] == doctest::Approx(bih).epsilon(1e-9));
      }
  }
}

TEST_CASE("symmetry, positivity and solve") {
  std::mt19937 rng(7);
  for (const auto& op : operator_zoo()) {
    CAPTURE(to_string(op->grid()->spec().shape));
    CAPTURE(op->order());
    const int n = op->size();
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd u = random_field(n, rng), v = random_field(n, rng);
      const double lhs = op->l2_inner(op->apply(u), v);
      const double rhs = op->l2_inner(u, op->apply(v));
      const double scale = std::sqrt(op->l2_inner(op->apply(u), op->apply(u)) * op->l2_inner(v, v)) +
                           std::sqrt(op->l2_inner(u, u) * op->l2_inner(op->apply(v), op->apply(v)));
      CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
      const Eigen::VectorXd back = op->solve(op->apply(u));
      CHECK((back - u).norm() <= 1e-8 * u.norm());
    }
    for (int k = 0; k < 100; ++k) CHECK(op->form(random_field(n, rng)) > 0);
  }
}

TEST_CASE("Navier solves preserve positivity") {
  std::mt19937 rng(11);
  std::vector<OperatorPtr> ops = {
      build_operator(DomainSpec::interval(1.0, 60), 2, BoundaryCondition::Navier),
      build_operator(DomainSpec::interval(1.0, 60), 3, BoundaryCondition::Navier),
      build_operator(DomainSpec::rectangle(1.0, 1.0, 20, 20), 2, BoundaryCondition::Navier),
      build_operator(DomainSpec::radial_ball(1.0, 5, 60), 2, BoundaryCondition::Navier),
  };
  for (const auto& op : ops) {
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd rhs = random_field(op->size(), rng, true);
      rhs[0] += 0.1;
      CHECK(op->solve(rhs).minCoeff() > 0);
    }
  }
}

TEST_CASE("principal eigenpairs") {
  auto lam = [](const DomainSpec& d, int m, BoundaryCondition bc) {
    auto op = build_operator(d, m, bc);
    const auto ep = principal_eigenpair(*op);
    CHECK(ep.w0.values.minCoeff() > 0);
    CHECK(op->form(ep.w0) == doctest::Approx(1.0));
    return ep.lambda1;
  };
  CHECK(std::abs(lam(DomainSpec::interval(1.0, 2000), 1, BoundaryCondition::Dirichlet) - kPi * kPi) < 1e-3);
  CHECK(std::abs(lam(DomainSpec::interval(1.0, 2000), 2, BoundaryCondition::Navier) - std::pow(kPi, 4)) < 0.1);
  CHECK(std::abs(lam(DomainSpec::radial_ball(1.0, 3, 2000), 1, BoundaryCondition::Dirichlet) - kPi * kPi) < 1e-2);
  // Clamped beam: first eigenvalue (4.730040745)^4.
  CHECK(lam(DomainSpec::interval(1.0, 800), 2, BoundaryCondition::Dirichlet) ==
        doctest::Approx(std::pow(4.730040744862704, 4)).epsilon(1e-3));
  // Unit square: 2 pi^2.
  CHECK(lam(DomainSpec::rectangle(1.0, 1.0, 63, 63), 1, BoundaryCondition::Dirichlet) ==
        doctest::Approx(2 * kPi * kPi).epsilon(2e-3));

  // Observed order of convergence on the radial ball.
  std::vector<double> errors;
  for (int n : {100, 200, 400})
    errors.push_back(std::abs(lam(DomainSpec::radial_ball(1.0, 3, n), 1, BoundaryCondition::Dirichlet) - kPi * kPi));
  CHECK(std::log2(errors[0] / errors[1]) >= 1.8);
  CHECK(std::log2(errors[1] / errors[2]) >= 1.8);
}

TEST_CASE("quadrature") {
  auto ball = std::make_shared<const Grid>(DomainSpec::radial_ball(1.0, 3, 2000));
  auto u = GridField::from_function(ball, [](const auto& x) { return 1 - x[0] * x[0]; });
  CHECK(integrate(u) == doctest::Approx(8 * kPi / 15).epsilon(1e-4));

  auto line = std::make_shared<const Grid>(DomainSpec::interval(1.0, 1000));
  auto s = GridField::from_function(line, [](const auto& x) { return std::sin(kPi * x[0]); });
  CHECK(integrate(s, [](double v) { return v * v; }) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(sup_norm(GridField(line, Eigen::VectorXd::Zero(1000))) == 0.0);
  CHECK_THROWS_AS(GridField(line, Eigen::VectorXd::Zero(10)), ValidationError);
  auto other = std::make_shared<const Grid>(DomainSpec::interval(2.0, 1000));
  CHECK_THROWS_AS(require_same_grid(s, GridField(other, s.values)), ValidationError);
}

TEST_CASE("boundary traces") {
  auto ball = build_operator(DomainSpec::radial_ball(1.0, 3, 400), 1, BoundaryCondition::Dirichlet);
  auto u = GridField::from_function(ball->grid(), [](const auto& x) { return 1 - x[0] * x[0]; });
  const auto tr = ball->boundary_trace(u);
  REQUIRE(tr.size() == 1);
  CHECK(tr[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(ball->grid()->boundary()[0].weight == doctest::Approx(4 * kPi));

  auto line = build_operator(DomainSpec::interval(1.0, 999), 1, BoundaryCondition::Dirichlet);
  auto s = GridField::from_function(line->grid(), [](const auto& x) { return std::sin(kPi * x[0]); });
  for (double t : line->boundary_trace(s)) CHECK(t == doctest::Approx(kPi).epsilon(1e-5));

  auto zero = GridField(line->grid(), Eigen::VectorXd::Zero(999));
  for (double t : line->boundary_trace(zero)) CHECK(t == 0.0);

  auto bad = s;
  bad.boundary_values = {0.0, 1e-3};
  CHECK_THROWS_AS(line->boundary_trace(bad), ValidationError);

  // m = 2 Dirichlet: u = x^2 (1-x)^2 has u'' = 2 at both ends.
  auto beam = build_operator(DomainSpec::interval(1.0, 999), 2, BoundaryCondition::Dirichlet);
  auto b = GridField::from_function(beam->grid(), [](const auto& x) { return x[0] * x[0] * (1 - x[0]) * (1 - x[0]); });
  for (double t : beam->boundary_trace(b)) CHECK(t == doctest::Approx(2.0).epsilon(1e-5));

  auto nav = build_operator(DomainSpec::interval(1.0, 99), 2, BoundaryCondition::Navier);
  CHECK_THROWS_AS(nav->boundary_trace(GridField(nav->grid(), Eigen::VectorXd::Zero(99))), ValidationError);
}
