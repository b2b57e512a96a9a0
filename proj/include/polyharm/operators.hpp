#pragma once

// Finite-difference (-Delta)^m on intervals, rectangles and radial balls.
//
// Unknowns live at interior nodes; boundary values are zero. The radial ball
// keeps the origin as an unknown and uses a finite-volume Laplacian whose cell
// volumes double as quadrature weights, which makes the operator symmetric in
// the weighted inner product <u, v>_W = sum_i w_i u_i v_i.

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace polyharm {

enum class Shape { Interval, Rectangle, RadialBall };
enum class BoundaryCondition { Dirichlet, Navier };

std::string to_string(Shape shape);
std::string to_string(BoundaryCondition bc);
Shape parse_shape(const std::string& id);
BoundaryCondition parse_boundary_condition(const std::string& id);

struct DomainSpec {
  Shape shape = Shape::Interval;
  double length = 1.0;  // interval length, rectangle side along x, ball radius
  double width = 1.0;   // rectangle side along y
  int dimension = 1;    // ambient dimension N (1 and 2 for interval and rectangle)
  int nx = 0;           // interior nodes (interval, rectangle x) or radial unknowns
  int ny = 0;           // rectangle y

  static DomainSpec interval(double length, int nodes);
  static DomainSpec rectangle(double lx, double ly, int nx, int ny);
  static DomainSpec radial_ball(double radius, int dimension, int nodes);

  /// Throws ValidationError on fewer than 16 nodes per axis, non-positive
  /// sizes, or a radial ball with N < 2.
  void validate() const;
  bool operator==(const DomainSpec&) const = default;
};

/// A boundary sample: position, outward unit normal, and surface measure.
/// The radial ball has a single sample standing for the whole sphere.
struct BoundaryPoint {
  std::array<double, 2> x{};
  std::array<double, 2> normal{};
  double weight = 0.0;
};

class Grid {
 public:
  explicit Grid(DomainSpec spec);

  const DomainSpec& spec() const { return spec_; }
  int size() const { return static_cast<int>(weights_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  /// Node coordinates: x for intervals, (x, y) for rectangles, r for balls.
  const std::vector<std::array<double, 2>>& coordinates() const { return coords_; }
  const std::vector<BoundaryPoint>& boundary() const { return boundary_; }
  double step() const { return hx_; }
  double step_y() const { return hy_; }
  /// Column names for CSV output.
  std::vector<std::string> coordinate_names() const;

 private:
  DomainSpec spec_;
  double hx_ = 0.0;
  double hy_ = 0.0;
  Eigen::VectorXd weights_;
  std::vector<std::array<double, 2>> coords_;
  std::vector<BoundaryPoint> boundary_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Values at interior nodes of a grid. Boundary values are implicit zeros
/// unless set explicitly (only used to exercise boundary-condition checks).
struct GridField {
  GridPtr grid;
  Eigen::VectorXd values;
  std::vector<double> boundary_values;

  GridField() = default;
  GridField(GridPtr g, Eigen::VectorXd v);
  static GridField from_function(GridPtr g, const std::function<double(const std::array<double, 2>&)>& fn);
};

/// Weighted sum over the grid; throws ValidationError on a grid mismatch.
double integrate(const GridField& u);
double integrate(const GridField& u, const std::function<double(double)>& integrand);
double sup_norm(const GridField& u);
/// Throws ValidationError unless both fields live on the same grid.
void require_same_grid(const GridField& a, const GridField& b);

/// CSV with coordinate columns and a value column, "%.16e" formatting.
void write_field_csv(const std::filesystem::path& path, const GridField& u, const std::string& value_name = "u");

class PolyharmonicOperator {
 public:
  PolyharmonicOperator(GridPtr grid, int order, BoundaryCondition bc);
  ~PolyharmonicOperator();
  PolyharmonicOperator(const PolyharmonicOperator&) = delete;
  PolyharmonicOperator& operator=(const PolyharmonicOperator&) = delete;

  const GridPtr& grid() const { return grid_; }
  int order() const { return order_; }
  BoundaryCondition bc() const { return bc_; }
  int size() const { return grid_->size(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// Discrete integral of |D^m u|^2, i.e. <u, A u>_W.
  double form(const Eigen::VectorXd& u) const;
  /// H_m scalar product <u, A v>_W.
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  /// Weighted L^2 product.
  double l2_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

  GridField apply(const GridField& u) const;
  GridField solve(const GridField& rhs) const;
  double form(const GridField& u) const;

  /// |D^m u| at each grid boundary point: |du/dnu| for m = 1, |Delta u| for
  /// m = 2 with Dirichlet conditions. Throws ValidationError for other
  /// settings or when u carries boundary values above 1e-6.
  std::vector<double> boundary_trace(const GridField& u) const;

 private:
  struct Impl;
  GridPtr grid_;
  int order_;
  BoundaryCondition bc_;
  std::unique_ptr<Impl> impl_;
};

using OperatorPtr = std::shared_ptr<const PolyharmonicOperator>;

/// Dirichlet needs m in {1, 2}; Navier takes any m >= 1.
OperatorPtr build_operator(const DomainSpec& domain, int order, BoundaryCondition bc);

struct Eigenpair {
  double lambda1 = 0.0;
  GridField w0;  // positive, form(w0) = 1
  int iterations = 0;
};

/// Inverse power iteration; throws NumericalFailure after 10^4 iterations.
Eigenpair principal_eigenpair(const PolyharmonicOperator& op, double tolerance = 1e-10);

}  // namespace polyharm
