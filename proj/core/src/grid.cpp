#include "fdlab/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fdlab/errors.hpp"

namespace fdlab {

std::size_t Domain::cell_count() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(cells_per_dim);
  return n;
}

double Domain::cell_measure() const {
  double m = 1.0;
  for (int a = 0; a < dim; ++a) m *= spacing;
  return m;
}

std::array<int, 3> Domain::unflatten(std::size_t idx) const {
  std::array<int, 3> c{0, 0, 0};
  const auto n = static_cast<std::size_t>(cells_per_dim);
  for (int a = 0; a < dim; ++a) {
    c[a] = static_cast<int>(idx % n);
    idx /= n;
  }
  return c;
}

std::size_t Domain::flatten(const std::array<int, 3>& c) const {
  const int n = cells_per_dim;
  std::size_t idx = 0;
  for (int a = dim - 1; a >= 0; --a) {
    int w = c[a] % n;
    if (w < 0) w += n;
    idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(w);
  }
  return idx;
}

std::size_t Domain::neighbor(std::size_t idx, int axis, int step) const {
  auto c = unflatten(idx);
  c[axis] += step;
  return flatten(c);
}

std::array<double, 3> Domain::cell_center(std::size_t idx) const {
  const auto c = unflatten(idx);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) x[a] = coord(c[a]);
  return x;
}

double Domain::wrap(double d) const {
  const double box = 2.0 * extent;
  double w = d - box * std::floor((d + extent) / box);
  // guard against roundoff landing exactly on +extent
  if (w >= extent) w -= box;
  if (w < -extent) w += box;
  return w;
}

Domain make_domain(int dim, double extent, int cells_per_dim) {
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("make_domain: dim must be in {1, 2, 3}, got " + std::to_string(dim));
  if (!(extent > 0.0)) throw std::invalid_argument("make_domain: extent must be > 0");
  if (cells_per_dim < 8 || cells_per_dim % 2 != 0)
    throw std::invalid_argument("make_domain: cells_per_dim must be even and >= 8, got " +
                                std::to_string(cells_per_dim));
  Domain d;
  d.dim = dim;
  d.extent = extent;
  d.cells_per_dim = cells_per_dim;
  d.spacing = 2.0 * extent / static_cast<double>(cells_per_dim);
  return d;
}

NeighborTable build_neighbors(const Domain& d) {
  NeighborTable t;
  const std::size_t n = d.cell_count();
  for (int a = 0; a < d.dim; ++a) {
    t.plus[a].resize(n);
    t.minus[a].resize(n);
  }
  std::array<int, 3> c{0, 0, 0};
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < d.dim; ++a) {
      auto cp = c;
      cp[a] = (c[a] + 1 == d.cells_per_dim) ? 0 : c[a] + 1;
      t.plus[a][idx] = static_cast<std::uint32_t>(d.flatten(cp));
      cp[a] = (c[a] == 0) ? d.cells_per_dim - 1 : c[a] - 1;
      t.minus[a][idx] = static_cast<std::uint32_t>(d.flatten(cp));
    }
    // odometer increment
    for (int a = 0; a < d.dim; ++a) {
      if (++c[a] < d.cells_per_dim) break;
      c[a] = 0;
    }
  }
  return t;
}

ScalarField make_field(const Domain& d, double time, double fill) {
  ScalarField f;
  f.domain = d;
  f.values.assign(d.cell_count(), fill);
  f.time = time;
  return f;
}

void FieldSeries::push(ScalarField f) {
  if (!snapshots.empty()) {
    if (!(f.domain == snapshots.front().domain))
      throw std::invalid_argument("FieldSeries::push: snapshot domain mismatch");
    if (!(f.time > snapshots.back().time))
      throw std::invalid_argument("FieldSeries::push: snapshot times must be strictly increasing");
  }
  snapshots.push_back(std::move(f));
}

std::vector<std::size_t> cube_cells(const Domain& d, const Cube& c) {
  if (!(c.radius > 0.0)) throw std::invalid_argument("cube_cells: radius must be > 0");
  if (c.radius > d.extent * (1.0 + 1e-12))
    throw std::invalid_argument("cube_cells: radius exceeds domain extent");
  std::vector<std::size_t> out;
  const std::size_t n = d.cell_count();
  std::array<int, 3> ci{0, 0, 0};
  for (std::size_t idx = 0; idx < n; ++idx) {
    bool inside = true;
    for (int a = 0; a < d.dim && inside; ++a) {
      const double disp = d.wrap(d.coord(ci[a]) - c.center[a]);
      inside = (disp >= -c.radius) && (disp < c.radius);
    }
    if (inside) out.push_back(idx);
    for (int a = 0; a < d.dim; ++a) {
      if (++ci[a] < d.cells_per_dim) break;
      ci[a] = 0;
    }
  }
  return out;
}

double cube_measure(const Domain& d, const Cube& c) {
  return static_cast<double>(cube_cells(d, c).size()) * d.cell_measure();
}

CubeFaces cube_interior_faces(const Domain& d, const std::vector<std::size_t>& cells) {
  std::vector<char> member(d.cell_count(), 0);
  for (std::size_t i : cells) member[i] = 1;
  CubeFaces f;
  for (std::size_t i : cells) {
    for (int a = 0; a < d.dim; ++a) {
      if (member[d.neighbor(i, a, +1)]) f.lower_cell[a].push_back(i);
    }
  }
  return f;
}

CylinderSlices cylinder_slices(const FieldSeries& s, const IntrinsicCylinder& cyl) {
  if (s.snapshots.empty()) throw std::invalid_argument("cylinder_slices: empty series");
  const Domain& d = s.domain();
  const double t0 = cyl.t_end;
  const double ts = cyl.t_start();
  const double tol = 1e-12 * std::max({1.0, std::abs(t0), std::abs(ts)});

  CylinderSlices out;
  out.cells = cube_cells(d, cyl.cube);
  for (std::size_t k = 0; k < s.snapshots.size(); ++k) {
    const double t = s.snapshots[k].time;
    if (t - ts > tol && t - t0 <= tol) {
      out.times.push_back(t);
      out.snapshot_index.push_back(k);
      std::vector<double> v(out.cells.size());
      const auto& field = s.snapshots[k].values;
      for (std::size_t j = 0; j < out.cells.size(); ++j) v[j] = field[out.cells[j]];
      out.values.push_back(std::move(v));
    }
  }
  if (out.times.empty())
    throw cadence_error("cylinder_slices: no snapshot inside the cylinder time window (" +
                        std::to_string(ts) + ", " + std::to_string(t0) + "]");
  return out;
}

double time_trapezoid(const std::vector<double>& times, const std::vector<double>& per_slice) {
  if (times.size() != per_slice.size())
    throw std::invalid_argument("time_trapezoid: size mismatch");
  if (times.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    acc += 0.5 * (per_slice[i] + per_slice[i + 1]) * (times[i + 1] - times[i]);
  return acc;
}

}  // namespace fdlab
