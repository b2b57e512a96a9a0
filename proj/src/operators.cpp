#include "polyharm/operators.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <boost/math/constants/constants.hpp>

#include "polyharm/errors.hpp"

namespace polyharm {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kBoundaryTolerance = 1e-6;

// Surface measure of the unit sphere in R^N.
double sphere_measure(int n) {
  const double pi = boost::math::constants::pi<double>();
  return 2.0 * std::pow(pi, n / 2.0) / std::tgamma(n / 2.0);
}

}  // namespace

std::string to_string(Shape shape) {
  switch (shape) {
    case Shape::Interval: return "interval";
    case Shape::Rectangle: return "rectangle";
    case Shape::RadialBall: return "radial-ball";
  }
  return "?";
}

std::string to_string(BoundaryCondition bc) { return bc == BoundaryCondition::Dirichlet ? "dirichlet" : "navier"; }

Shape parse_shape(const std::string& id) {
  for (auto s : {Shape::Interval, Shape::Rectangle, Shape::RadialBall})
    if (to_string(s) == id) return s;
  throw ValidationError("unknown domain shape '" + id + "'");
}

BoundaryCondition parse_boundary_condition(const std::string& id) {
  if (id == "dirichlet") return BoundaryCondition::Dirichlet;
  if (id == "navier") return BoundaryCondition::Navier;
  throw ValidationError("unknown boundary condition '" + id + "'");
}

// ---------------------------------------------------------------------------
// Domains and grids

DomainSpec DomainSpec::interval(double length, int nodes) {
  DomainSpec d;
  d.shape = Shape::Interval;
  d.length = length;
  d.dimension = 1;
  d.nx = nodes;
  d.validate();
  return d;
}

DomainSpec DomainSpec::rectangle(double lx, double ly, int nx, int ny) {
  DomainSpec d;
  d.shape = Shape::Rectangle;
  d.length = lx;
  d.width = ly;
  d.dimension = 2;
  d.nx = nx;
  d.ny = ny;
  d.validate();
  return d;
}

DomainSpec DomainSpec::radial_ball(double radius, int dimension, int nodes) {
  DomainSpec d;
  d.shape = Shape::RadialBall;
  d.length = radius;
  d.dimension = dimension;
  d.nx = nodes;
  d.validate();
  return d;
}

void DomainSpec::validate() const {
  if (!(length > 0)) throw ValidationError("domain size must be positive");
  if (nx < 16) throw ValidationError("resolution must be at least 16 nodes per axis");
  switch (shape) {
    case Shape::Interval:
      if (dimension != 1) throw ValidationError("an interval has dimension 1");
      break;
    case Shape::Rectangle:
      if (dimension != 2) throw ValidationError("a rectangle has dimension 2");
      if (!(width > 0)) throw ValidationError("domain size must be positive");
      if (ny < 16) throw ValidationError("resolution must be at least 16 nodes per axis");
      break;
    case Shape::RadialBall:
      if (dimension < 2) throw ValidationError("radial ball requires N >= 2");
      break;
  }
}

Grid::Grid(DomainSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  switch (spec_.shape) {
    case Shape::Interval: {
      const int n = spec_.nx;
      hx_ = spec_.length / (n + 1);
      weights_ = Eigen::VectorXd::Constant(n, hx_);
      for (int i = 0; i < n; ++i) coords_.push_back({(i + 1) * hx_, 0.0});
      boundary_.push_back({{0.0, 0.0}, {-1.0, 0.0}, 1.0});
      boundary_.push_back({{spec_.length, 0.0}, {1.0, 0.0}, 1.0});
      break;
    }
    case Shape::Rectangle: {
      const int nx = spec_.nx, ny = spec_.ny;
      hx_ = spec_.length / (nx + 1);
      hy_ = spec_.width / (ny + 1);
      weights_ = Eigen::VectorXd::Constant(nx * ny, hx_ * hy_);
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) coords_.push_back({(i + 1) * hx_, (j + 1) * hy_});
      // Edge midpoints between corners; the trace vanishes at the corners.
      for (int i = 0; i < nx; ++i) boundary_.push_back({{(i + 1) * hx_, 0.0}, {0.0, -1.0}, hx_});
      for (int i = 0; i < nx; ++i) boundary_.push_back({{(i + 1) * hx_, spec_.width}, {0.0, 1.0}, hx_});
      for (int j = 0; j < ny; ++j) boundary_.push_back({{0.0, (j + 1) * hy_}, {-1.0, 0.0}, hy_});
      for (int j = 0; j < ny; ++j) boundary_.push_back({{spec_.length, (j + 1) * hy_}, {1.0, 0.0}, hy_});
      break;
    }
    case Shape::RadialBall: {
      const int n = spec_.nx, dim = spec_.dimension;
      hx_ = spec_.length / n;
      const double omega = sphere_measure(dim);
      weights_.resize(n);
      for (int i = 0; i < n; ++i) {
        const double lo = i == 0 ? 0.0 : (i - 0.5) * hx_;
        const double hi = (i + 0.5) * hx_;
        weights_[i] = omega * (std::pow(hi, dim) - std::pow(lo, dim)) / dim;
        coords_.push_back({i * hx_, 0.0});
      }
      boundary_.push_back({{spec_.length, 0.0}, {1.0, 0.0}, omega * std::pow(spec_.length, dim - 1)});
      break;
    }
  }
}

std::vector<std::string> Grid::coordinate_names() const {
  switch (spec_.shape) {
    case Shape::Interval: return {"x"};
    case Shape::Rectangle: return {"x", "y"};
    case Shape::RadialBall: return {"r"};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Fields

GridField::GridField(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw ValidationError("field without a grid");
  if (values.size() != grid->size())
    throw ValidationError("field length " + std::to_string(values.size()) + " does not match grid size " +
                          std::to_string(grid->size()));
  if (!values.allFinite()) throw NumericalFailure("field has non-finite values");
}

GridField GridField::from_function(GridPtr g, const std::function<double(const std::array<double, 2>&)>& fn) {
  Eigen::VectorXd v(g->size());
  const auto& c = g->coordinates();
  for (int i = 0; i < g->size(); ++i) v[i] = fn(c[static_cast<std::size_t>(i)]);
  return GridField(std::move(g), std::move(v));
}

void require_same_grid(const GridField& a, const GridField& b) {
  if (!a.grid || !b.grid || !(a.grid == b.grid || a.grid->spec() == b.grid->spec()))
    throw ValidationError("fields live on different domains");
}

double integrate(const GridField& u) {
  return integrate(u, [](double s) { return s; });
}

double integrate(const GridField& u, const std::function<double(double)>& integrand) {
  if (!u.grid || u.values.size() != u.grid->size()) throw ValidationError("field does not match its domain");
  const auto& w = u.grid->weights();
  long double sum = 0.0L;
  for (Eigen::Index i = 0; i < u.values.size(); ++i) sum += static_cast<long double>(w[i]) * integrand(u.values[i]);
  return static_cast<double>(sum);
}

double sup_norm(const GridField& u) { return u.values.size() == 0 ? 0.0 : u.values.cwiseAbs().maxCoeff(); }

void write_field_csv(const std::filesystem::path& path, const GridField& u, const std::string& value_name) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const auto names = u.grid->coordinate_names();
  for (const auto& n : names) out << n << ',';
  out << value_name << '\n';
  char buf[64];
  const auto& c = u.grid->coordinates();
  for (int i = 0; i < u.grid->size(); ++i) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.16e,", c[static_cast<std::size_t>(i)][k]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.16e\n", u.values[i]);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Operators

struct PolyharmonicOperator::Impl {
  SparseMatrix S;                   // W * (-Delta), symmetric positive definite
  Eigen::VectorXd w;                // quadrature weights
  Eigen::VectorXd boundary_penalty; // Dirichlet m = 2: w_b |Delta u|^2 at boundary rows
  SparseMatrix K;                   // W * A for Dirichlet m = 2
  Eigen::SimplicialLDLT<SparseMatrix> laplacian;
  Eigen::SimplicialLDLT<SparseMatrix> biharmonic;

  Eigen::VectorXd apply_laplacian(const Eigen::VectorXd& u) const { return (S * u).cwiseQuotient(w); }
  Eigen::VectorXd solve_laplacian(const Eigen::VectorXd& b) const { return laplacian.solve(b.cwiseProduct(w)); }
};

namespace {

SparseMatrix weighted_laplacian(const Grid& grid) {
  const auto& spec = grid.spec();
  std::vector<Triplet> t;
  const int n = grid.size();
  switch (spec.shape) {
    case Shape::Interval: {
      const double c = 1.0 / grid.step();  // h * (1/h^2)
      for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 2.0 * c);
        if (i > 0) t.emplace_back(i, i - 1, -c);
        if (i + 1 < n) t.emplace_back(i, i + 1, -c);
      }
      break;
    }
    case Shape::Rectangle: {
      const int nx = spec.nx, ny = spec.ny;
      const double hx = grid.step(), hy = grid.step_y();
      const double cx = hy / hx, cy = hx / hy;
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const int k = i + nx * j;
          t.emplace_back(k, k, 2.0 * cx + 2.0 * cy);
          if (i > 0) t.emplace_back(k, k - 1, -cx);
          if (i + 1 < nx) t.emplace_back(k, k + 1, -cx);
          if (j > 0) t.emplace_back(k, k - nx, -cy);
          if (j + 1 < ny) t.emplace_back(k, k + nx, -cy);
        }
      break;
    }
    case Shape::RadialBall: {
      const double h = grid.step();
      const double omega = sphere_measure(spec.dimension);
      for (int i = 0; i < n; ++i) {
        // Flux through the outer face of cell i; the last face touches r = R.
        const double c = omega * std::pow((i + 0.5) * h, spec.dimension - 1) / h;
        t.emplace_back(i, i, c);
        if (i + 1 < n) {
          t.emplace_back(i + 1, i + 1, c);
          t.emplace_back(i, i + 1, -c);
          t.emplace_back(i + 1, i, -c);
        }
      }
      break;
    }
  }
  SparseMatrix S(n, n);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

// Ghost reflection for du/dnu = 0 turns -Delta u at a boundary node into
// -2 u_neighbor / h^2. Each boundary node adds w_b (2 u_neighbor / h^2)^2 to
// the form; the neighbor is always a single interior node, so the penalty is
// diagonal.
Eigen::VectorXd dirichlet_boundary_penalty(const Grid& grid) {
  const auto& spec = grid.spec();
  Eigen::VectorXd pen = Eigen::VectorXd::Zero(grid.size());
  switch (spec.shape) {
    case Shape::Interval: {
      const double h = grid.step();
      const double v = (grid.step() / 2.0) * 4.0 / std::pow(h, 4);
      pen[0] += v;
      pen[grid.size() - 1] += v;
      break;
    }
    case Shape::Rectangle: {
      const int nx = spec.nx, ny = spec.ny;
      const double hx = grid.step(), hy = grid.step_y();
      const double wb = hx * hy / 2.0;
      for (int j = 0; j < ny; ++j) {
        pen[0 + nx * j] += wb * 4.0 / std::pow(hx, 4);
        pen[nx - 1 + nx * j] += wb * 4.0 / std::pow(hx, 4);
      }
      for (int i = 0; i < nx; ++i) {
        pen[i] += wb * 4.0 / std::pow(hy, 4);
        pen[i + nx * (ny - 1)] += wb * 4.0 / std::pow(hy, 4);
      }
      break;
    }
    case Shape::RadialBall: {
      const double h = grid.step();
      const double wb = sphere_measure(spec.dimension) * std::pow(spec.length, spec.dimension - 1) * h / 2.0;
      pen[grid.size() - 1] += wb * 4.0 / std::pow(h, 4);
      break;
    }
  }
  return pen;
}

}  // namespace

PolyharmonicOperator::PolyharmonicOperator(GridPtr grid, int order, BoundaryCondition bc)
    : grid_(std::move(grid)), order_(order), bc_(bc), impl_(std::make_unique<Impl>()) {
  if (!grid_) throw ValidationError("operator without a grid");
  if (order_ < 1) throw ValidationError("operator order m must be >= 1");
  if (bc_ == BoundaryCondition::Dirichlet && order_ > 2)
    throw ValidationError("Dirichlet supported for m <= 2 (got m=" + std::to_string(order_) + ")");

  impl_->w = grid_->weights();
  impl_->S = weighted_laplacian(*grid_);
  impl_->laplacian.compute(impl_->S);
  if (impl_->laplacian.info() != Eigen::Success) throw NumericalFailure("Laplacian factorization failed");

  if (bc_ == BoundaryCondition::Dirichlet && order_ == 2) {
    impl_->boundary_penalty = dirichlet_boundary_penalty(*grid_);
    const Eigen::VectorXd winv = impl_->w.cwiseInverse();
    SparseMatrix K = impl_->S * winv.asDiagonal() * impl_->S;
    K += SparseMatrix(impl_->boundary_penalty.asDiagonal());
    impl_->K = K;
    impl_->biharmonic.compute(impl_->K);
    if (impl_->biharmonic.info() != Eigen::Success) throw NumericalFailure("biharmonic factorization failed");
  }
}

PolyharmonicOperator::~PolyharmonicOperator() = default;

Eigen::VectorXd PolyharmonicOperator::apply(const Eigen::VectorXd& u) const {
  if (u.size() != size()) throw ValidationError("field does not match operator domain");
  if (bc_ == BoundaryCondition::Dirichlet && order_ == 2)
    return (impl_->K * u).cwiseQuotient(impl_->w);
  Eigen::VectorXd v = u;
  for (int k = 0; k < order_; ++k) v = impl_->apply_laplacian(v);
  return v;
}

Eigen::VectorXd PolyharmonicOperator::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != size()) throw ValidationError("field does not match operator domain");
  if (bc_ == BoundaryCondition::Dirichlet && order_ == 2) return impl_->biharmonic.solve(rhs.cwiseProduct(impl_->w));
  Eigen::VectorXd v = rhs;
  for (int k = 0; k < order_; ++k) v = impl_->solve_laplacian(v);
  return v;
}

double PolyharmonicOperator::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return l2_inner(u, apply(v));
}

double PolyharmonicOperator::l2_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  if (u.size() != size() || v.size() != size()) throw ValidationError("field does not match operator domain");
  long double sum = 0.0L;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    sum += static_cast<long double>(impl_->w[i]) * u[i] * v[i];
  return static_cast<double>(sum);
}

double PolyharmonicOperator::form(const Eigen::VectorXd& u) const { return inner(u, u); }

GridField PolyharmonicOperator::apply(const GridField& u) const {
  if (!(u.grid == grid_ || (u.grid && u.grid->spec() == grid_->spec())))
    throw ValidationError("field does not match operator domain");
  return GridField(grid_, apply(u.values));
}

GridField PolyharmonicOperator::solve(const GridField& rhs) const {
  if (!(rhs.grid == grid_ || (rhs.grid && rhs.grid->spec() == grid_->spec())))
    throw ValidationError("field does not match operator domain");
  return GridField(grid_, solve(rhs.values));
}

double PolyharmonicOperator::form(const GridField& u) const {
  if (!(u.grid == grid_ || (u.grid && u.grid->spec() == grid_->spec())))
    throw ValidationError("field does not match operator domain");
  return form(u.values);
}

std::vector<double> PolyharmonicOperator::boundary_trace(const GridField& u) const {
  if (!(u.grid == grid_ || (u.grid && u.grid->spec() == grid_->spec())))
    throw ValidationError("field does not match operator domain");
  for (double b : u.boundary_values)
    if (std::abs(b) > kBoundaryTolerance)
      throw ValidationError("field violates the boundary condition (boundary value " + std::to_string(b) + ")");
  const bool first_order = order_ == 1;
  const bool dirichlet_second = order_ == 2 && bc_ == BoundaryCondition::Dirichlet;
  if (!first_order && !dirichlet_second)
    throw ValidationError("boundary trace of D^m u is available for m = 1 and for Dirichlet m = 2");

  // Values along the inward normal at distance h and 2h; boundary value is 0.
  // m = 1: |du/dnu| = |4 u1 - u2| / (2h); m = 2 with du/dnu = 0: |u''| = |8 u1 - u2| / (2h^2).
  auto trace = [&](double u1, double u2, double h) {
    return first_order ? std::abs(4.0 * u1 - u2) / (2.0 * h) : std::abs(8.0 * u1 - u2) / (2.0 * h * h);
  };
  const auto& spec = grid_->spec();
  const Eigen::VectorXd& v = u.values;
  std::vector<double> out;
  switch (spec.shape) {
    case Shape::Interval: {
      const int n = spec.nx;
      const double h = grid_->step();
      out.push_back(trace(v[0], v[1], h));
      out.push_back(trace(v[n - 1], v[n - 2], h));
      break;
    }
    case Shape::Rectangle: {
      const int nx = spec.nx, ny = spec.ny;
      const double hx = grid_->step(), hy = grid_->step_y();
      for (int i = 0; i < nx; ++i) out.push_back(trace(v[i], v[i + nx], hy));
      for (int i = 0; i < nx; ++i) out.push_back(trace(v[i + nx * (ny - 1)], v[i + nx * (ny - 2)], hy));
      for (int j = 0; j < ny; ++j) out.push_back(trace(v[nx * j], v[1 + nx * j], hx));
      for (int j = 0; j < ny; ++j) out.push_back(trace(v[nx - 1 + nx * j], v[nx - 2 + nx * j], hx));
      break;
    }
    case Shape::RadialBall: {
      const int n = spec.nx;
      out.push_back(trace(v[n - 1], v[n - 2], grid_->step()));
      break;
    }
  }
  return out;
}

OperatorPtr build_operator(const DomainSpec& domain, int order, BoundaryCondition bc) {
  return std::make_shared<const PolyharmonicOperator>(std::make_shared<const Grid>(domain), order, bc);
}

Eigenpair principal_eigenpair(const PolyharmonicOperator& op, double tolerance) {
  constexpr int kMaxIterations = 10000;
  auto wnorm = [&op](const Eigen::VectorXd& x) { return std::sqrt(op.l2_inner(x, x)); };
  Eigen::VectorXd x = Eigen::VectorXd::Ones(op.size());
  x /= wnorm(x);
  for (int it = 1; it <= kMaxIterations; ++it) {
    Eigen::VectorXd y = op.solve(x);
    y /= wnorm(y);
    const double change = wnorm(y - x);
    x = std::move(y);
    if (change <= tolerance) {
      if (x.sum() < 0) x = -x;
      const double lambda = op.form(x) / op.l2_inner(x, x);
      x /= std::sqrt(op.form(x));
      return {lambda, GridField(op.grid(), x), it};
    }
  }
  throw NumericalFailure("inverse power iteration did not converge in 10^4 iterations");
}

}  // namespace polyharm
