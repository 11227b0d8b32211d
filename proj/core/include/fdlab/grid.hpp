#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace fdlab {

/// Uniform cell-centered grid on the periodic box [-extent, extent)^dim.
/// Axis 0 is contiguous in the flat cell index (row-major).
struct Domain {
  int dim = 1;
  double extent = 1.0;    // half-width L of the box
  int cells_per_dim = 8;  // even, >= 8
  double spacing = 0.25;  // h = 2*extent / cells_per_dim

  std::size_t cell_count() const;
  double cell_measure() const;  // h^dim

  // center coordinate of cell i along one axis
  double coord(int i) const { return -extent + (static_cast<double>(i) + 0.5) * spacing; }

  std::array<int, 3> unflatten(std::size_t idx) const;
  std::size_t flatten(const std::array<int, 3>& c) const;  // wraps indices periodically
  std::size_t neighbor(std::size_t idx, int axis, int step) const;
  std::array<double, 3> cell_center(std::size_t idx) const;

  // signed displacement wrapped into [-extent, extent)
  double wrap(double d) const;

  bool operator==(const Domain&) const = default;
};

Domain make_domain(int dim, double extent, int cells_per_dim);

/// Precomputed periodic +1/-1 neighbor indices per axis. Built once per hot
/// loop; both the operators and the solver use it so index arithmetic is
/// identical everywhere.
struct NeighborTable {
  std::array<std::vector<std::uint32_t>, 3> plus;
  std::array<std::vector<std::uint32_t>, 3> minus;
};
NeighborTable build_neighbors(const Domain& d);

struct ScalarField {
  Domain domain;
  std::vector<double> values;  // one per cell, axis 0 fastest
  double time = 0.0;
};

ScalarField make_field(const Domain& d, double time = 0.0, double fill = 0.0);

/// Time-ordered snapshots sharing one Domain.
struct FieldSeries {
  std::vector<ScalarField> snapshots;
  std::vector<double> dt_history;  // accepted step sizes of the producing run

  const Domain& domain() const { return snapshots.front().domain; }
  double first_time() const { return snapshots.front().time; }
  double last_time() const { return snapshots.back().time; }
  // enforces shared domain and strictly increasing times
  void push(ScalarField f);
};

/// Axis-aligned cube K_R(x0): per-axis wrapped displacement in [-R, R).
struct Cube {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double radius = 0.0;
};

/// K_R(x0) x (t_end - theta*R^2, t_end]
struct IntrinsicCylinder {
  Cube cube;
  double t_end = 0.0;
  double theta = 1.0;

  double duration() const { return theta * cube.radius * cube.radius; }
  double t_start() const { return t_end - duration(); }
};

/// Indices of cells whose centers lie in the cube (periodic wrap).
std::vector<std::size_t> cube_cells(const Domain& d, const Cube& c);

/// Counting measure: |cube_cells| * h^dim.
double cube_measure(const Domain& d, const Cube& c);

/// Faces with both adjacent cells inside the cube, identified by the lower
/// cell index per axis. Gradient quadratures over a cube sum these faces.
struct CubeFaces {
  std::array<std::vector<std::size_t>, 3> lower_cell;
};
CubeFaces cube_interior_faces(const Domain& d, const std::vector<std::size_t>& cells);

/// Snapshots falling in the half-open window (t_start, t_end], restricted to
/// the cube. Time integrals over the cylinder use these slices with the
/// trapezoid rule.
struct CylinderSlices {
  std::vector<std::size_t> cells;                // cube cell indices
  std::vector<double> times;                     // ascending
  std::vector<std::size_t> snapshot_index;       // into the source series
  std::vector<std::vector<double>> values;       // values[i][j]: slice i, cell j
};
CylinderSlices cylinder_slices(const FieldSeries& s, const IntrinsicCylinder& cyl);

/// Trapezoid rule on per-slice scalars; 0 or 1 slices integrate to 0.
double time_trapezoid(const std::vector<double>& times, const std::vector<double>& per_slice);

}  // namespace fdlab
