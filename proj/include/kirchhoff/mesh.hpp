// Rectangular-domain discretization: uniform interior grids, nodal fields
// with implicit zero Dirichlet boundary, discrete norms and energies.
#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace kirchhoff::mesh {

class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Interior nodes of (a,b) or (a,b)x(c,d); boundary values are identically
// zero and never stored. 2D node layout is row major: index = j*nx + i.
class Mesh {
public:
  static Mesh interval(double a, double b, int n);
  static Mesh rectangle(double ax, double bx, double ay, double by, int nx, int ny);

  int dimension() const { return dim_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int interior_count() const { return dim_ == 1 ? nx_ : nx_ * ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double cell_measure() const { return dim_ == 1 ? hx_ : hx_ * hy_; }

  double xmin() const { return ax_; }
  double xmax() const { return bx_; }
  double ymin() const { return ay_; }
  double ymax() const { return by_; }

  double node_x(int idx) const;
  double node_y(int idx) const;

  bool same_grid(const Mesh& other) const;

private:
  Mesh() = default;
  int dim_ = 1;
  int nx_ = 0, ny_ = 0;
  double ax_ = 0, bx_ = 1, ay_ = 0, by_ = 1;
  double hx_ = 0, hy_ = 0;
};

// Nodal values on the interior of a mesh. Value type; library operations
// treat fields as immutable and return new ones.
class Field {
public:
  explicit Field(Mesh m);
  Field(Mesh m, std::vector<double> values);

  const Mesh& grid() const { return mesh_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(values_.size()); }

private:
  Mesh mesh_;
  std::vector<double> values_;
};

// Fills a field from a callable of the node coordinates (x) or (x, y).
Field sample(const Mesh& m, const std::function<double(double, double)>& fn);

// Discrete Dirichlet energy: sum over grid edges (including edges to the
// zero boundary) of (difference/h)^2 times the cell measure. Equals
// cell_measure * <A u, u> for the assembled Laplacian A.
double gradient_energy(const Field& u);

// Mixed form: sum over edges of (du/h)(dv/h) * cell measure
// = cell_measure * <A u, v>.
double mixed_gradient_energy(const Field& u, const Field& v);

// Composite trapezoid L2 quadrature (boundary terms vanish) and exact
// maximum of nodal absolute values.
double l2_norm(const Field& u);
double linf_norm(const Field& u);

// Nodal composition; map domain errors are rethrown with the node index.
Field apply_pointwise(const Field& u, const std::function<double(double)>& map);

// max |coarse_i - I(fine)(x_i)| where I is piecewise (bi)linear interpolation
// of the fine field with zero boundary. Grids must cover the same domain.
double linf_gap_interpolated(const Field& coarse, const Field& fine);

// CSV rows "x,value" (1D) or "x,y,value" (2D) with a header line.
void write_csv(const Field& u, std::ostream& os);

}  // namespace kirchhoff::mesh
