#include "kirchhoff/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace kirchhoff::mesh {

Mesh Mesh::interval(double a, double b, int n) {
  if (!(b > a)) throw MeshError("interval: requires b > a");
  if (n < 2) throw MeshError("interval: requires at least 2 interior nodes");
  Mesh m;
  m.dim_ = 1;
  m.ax_ = a;
  m.bx_ = b;
  m.nx_ = n;
  m.ny_ = 1;
  m.hx_ = (b - a) / (n + 1);
  m.hy_ = 0.0;
  return m;
}

Mesh Mesh::rectangle(double ax, double bx, double ay, double by, int nx, int ny) {
  if (!(bx > ax) || !(by > ay)) throw MeshError("rectangle: requires positive side lengths");
  if (nx < 2 || ny < 2) throw MeshError("rectangle: requires at least 2 interior nodes per axis");
  Mesh m;
  m.dim_ = 2;
  m.ax_ = ax;
  m.bx_ = bx;
  m.ay_ = ay;
  m.by_ = by;
  m.nx_ = nx;
  m.ny_ = ny;
  m.hx_ = (bx - ax) / (nx + 1);
  m.hy_ = (by - ay) / (ny + 1);
  return m;
}

double Mesh::node_x(int idx) const {
  int i = dim_ == 1 ? idx : idx % nx_;
  return ax_ + hx_ * (i + 1);
}

double Mesh::node_y(int idx) const {
  if (dim_ == 1) return 0.0;
  int j = idx / nx_;
  return ay_ + hy_ * (j + 1);
}

bool Mesh::same_grid(const Mesh& other) const {
  return dim_ == other.dim_ && nx_ == other.nx_ && ny_ == other.ny_ && ax_ == other.ax_ &&
         bx_ == other.bx_ && ay_ == other.ay_ && by_ == other.by_;
}

Field::Field(Mesh m) : mesh_(m), values_(static_cast<std::size_t>(m.interior_count()), 0.0) {}

Field::Field(Mesh m, std::vector<double> values) : mesh_(m), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != mesh_.interior_count()) {
    throw MeshError("field: value count does not match interior node count");
  }
}

Field sample(const Mesh& m, const std::function<double(double, double)>& fn) {
  Field f(m);
  for (int i = 0; i < f.size(); ++i) f[i] = fn(m.node_x(i), m.node_y(i));
  return f;
}

double gradient_energy(const Field& u) { return mixed_gradient_energy(u, u); }

double mixed_gradient_energy(const Field& u, const Field& v) {
  const Mesh& m = u.grid();
  if (!m.same_grid(v.grid())) throw MeshError("mixed_gradient_energy: mismatched grids");
  const double cell = m.cell_measure();
  double acc = 0.0;
  if (m.dimension() == 1) {
    const double w = cell / (m.hx() * m.hx());
    double up = 0.0, vp = 0.0;  // boundary value
    for (int i = 0; i < m.nx(); ++i) {
      acc += (u[i] - up) * (v[i] - vp) * w;
      up = u[i];
      vp = v[i];
    }
    acc += up * vp * w;  // edge to the right boundary
    return acc;
  }
  const int nx = m.nx(), ny = m.ny();
  const double wx = cell / (m.hx() * m.hx());
  const double wy = cell / (m.hy() * m.hy());
  for (int j = 0; j < ny; ++j) {
    double up = 0.0, vp = 0.0;
    for (int i = 0; i < nx; ++i) {
      const int k = j * nx + i;
      acc += (u[k] - up) * (v[k] - vp) * wx;
      up = u[k];
      vp = v[k];
    }
    acc += up * vp * wx;
  }
  for (int i = 0; i < nx; ++i) {
    double up = 0.0, vp = 0.0;
    for (int j = 0; j < ny; ++j) {
      const int k = j * nx + i;
      acc += (u[k] - up) * (v[k] - vp) * wy;
      up = u[k];
      vp = v[k];
    }
    acc += up * vp * wy;
  }
  return acc;
}

double l2_norm(const Field& u) {
  double acc = 0.0;
  for (int i = 0; i < u.size(); ++i) acc += u[i] * u[i];
  return std::sqrt(acc * u.grid().cell_measure());
}

double linf_norm(const Field& u) {
  double m = 0.0;
  for (int i = 0; i < u.size(); ++i) m = std::max(m, std::fabs(u[i]));
  return m;
}

Field apply_pointwise(const Field& u, const std::function<double(double)>& map) {
  Field out(u.grid());
  for (int i = 0; i < u.size(); ++i) {
    try {
      out[i] = map(u[i]);
    } catch (const std::exception& e) {
      throw MeshError("apply_pointwise at node " + std::to_string(i) + ": " + e.what());
    }
    if (!std::isfinite(out[i])) {
      throw MeshError("apply_pointwise at node " + std::to_string(i) + ": non-finite value");
    }
  }
  return out;
}

namespace {

// Piecewise (bi)linear interpolation of a field extended by zero on the
// boundary, evaluated at (x [, y]).
double interpolate(const Field& f, double x, double y) {
  const Mesh& m = f.grid();
  auto value_at_1d = [&](int i) -> double {
    if (i < 0 || i >= m.nx()) return 0.0;
    return f[i];
  };
  if (m.dimension() == 1) {
    double s = (x - m.xmin()) / m.hx() - 1.0;  // node i sits at s == i
    int i0 = static_cast<int>(std::floor(s));
    double w = s - i0;
    return (1.0 - w) * value_at_1d(i0) + w * value_at_1d(i0 + 1);
  }
  auto value_at_2d = [&](int i, int j) -> double {
    if (i < 0 || i >= m.nx() || j < 0 || j >= m.ny()) return 0.0;
    return f[j * m.nx() + i];
  };
  double sx = (x - m.xmin()) / m.hx() - 1.0;
  double sy = (y - m.ymin()) / m.hy() - 1.0;
  int i0 = static_cast<int>(std::floor(sx));
  int j0 = static_cast<int>(std::floor(sy));
  double wx = sx - i0, wy = sy - j0;
  return (1.0 - wx) * (1.0 - wy) * value_at_2d(i0, j0) + wx * (1.0 - wy) * value_at_2d(i0 + 1, j0) +
         (1.0 - wx) * wy * value_at_2d(i0, j0 + 1) + wx * wy * value_at_2d(i0 + 1, j0 + 1);
}

}  // namespace

double linf_gap_interpolated(const Field& coarse, const Field& fine) {
  const Mesh& mc = coarse.grid();
  double gap = 0.0;
  for (int i = 0; i < coarse.size(); ++i) {
    double fi = interpolate(fine, mc.node_x(i), mc.node_y(i));
    gap = std::max(gap, std::fabs(coarse[i] - fi));
  }
  return gap;
}

void write_csv(const Field& u, std::ostream& os) {
  char buf[96];
  const Mesh& m = u.grid();
  if (m.dimension() == 1) {
    os << "x,value\n";
    for (int i = 0; i < u.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", m.node_x(i), u[i]);
      os << buf;
    }
    return;
  }
  os << "x,y,value\n";
  for (int i = 0; i < u.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", m.node_x(i), m.node_y(i), u[i]);
    os << buf;
  }
}

}  // namespace kirchhoff::mesh
