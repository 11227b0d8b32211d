#include <doctest.h>

#include <cmath>

#include "fdlab/errors.hpp"
#include "fdlab/grid.hpp"

using namespace fdlab;

TEST_CASE("make_domain basics") {
  const Domain d = make_domain(1, 1.0, 8);
  CHECK(d.spacing == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(d.spacing * d.cells_per_dim == 2.0 * d.extent);  // exact
  CHECK(d.cell_count() == 8);

  const Domain d2 = make_domain(2, 2.0, 64);
  CHECK(d2.cell_count() == 4096);

  CHECK_THROWS_AS(make_domain(1, 1.0, 7), std::invalid_argument);   // odd
  CHECK_THROWS_AS(make_domain(1, 1.0, 6), std::invalid_argument);   // tiny
  CHECK_THROWS_AS(make_domain(4, 1.0, 8), std::invalid_argument);   // dim
  CHECK_THROWS_AS(make_domain(1, -1.0, 8), std::invalid_argument);  // extent
}

TEST_CASE("cube_cells 1D hand case") {
  // h = 0.25, cube center 0 radius 0.5 -> centers in [-0.5, 0.5)
  const Domain d = make_domain(1, 1.0, 8);
  const Cube c{{0.0, 0.0, 0.0}, 0.5};
  const auto cells = cube_cells(d, c);

  // independent enumeration of cell centers
  std::size_t expected = 0;
  for (int i = 0; i < 8; ++i) {
    const double x = -1.0 + (i + 0.5) * 0.25;
    if (x >= -0.5 && x < 0.5) ++expected;
  }
  CHECK(cells.size() == expected);
  CHECK(cells.size() == 4);
  CHECK(cube_measure(d, c) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cube_cells edge radii") {
  const Domain d = make_domain(1, 1.0, 16);
  CHECK(cube_cells(d, Cube{{0.0, 0.0, 0.0}, 1.0}).size() == 16);  // whole box
  // radius below h/2 around a cell center captures exactly that cell
  const double x0 = d.coord(5);
  CHECK(cube_cells(d, Cube{{x0, 0.0, 0.0}, 0.4 * d.spacing}).size() == 1);
  CHECK_THROWS_AS(cube_cells(d, Cube{{0.0, 0.0, 0.0}, 1.5}), std::invalid_argument);
}

TEST_CASE("cube measure converges with rel error <= 2Nh/R") {
  for (int dim : {1, 2}) {
    for (int cells : {16, 32, 64}) {
      const Domain d = make_domain(dim, 1.0, cells);
      const Cube c{{0.1, -0.2, 0.0}, 0.37};
      const double exact = std::pow(2.0 * c.radius, dim);
      const double meas = cube_measure(d, c);
      const double bound = 2.0 * dim * d.spacing / c.radius;
      CHECK(std::abs(meas - exact) / exact <= bound);
    }
  }
}

TEST_CASE("cube_cells invariant under integer-cell translations") {
  const Domain d = make_domain(2, 1.0, 16);
  const Cube base{{0.05, -0.1, 0.0}, 0.3};
  const auto cells0 = cube_cells(d, base);
  for (int shift : {1, 3, 7, 16, -5}) {
    Cube moved = base;
    moved.center[0] += shift * d.spacing;
    moved.center[1] -= 2 * shift * d.spacing;
    CHECK(cube_cells(d, moved).size() == cells0.size());
  }
}

TEST_CASE("cylinder_slices window conventions") {
  const Domain d = make_domain(1, 1.0, 8);
  FieldSeries s;
  for (int k = 0; k <= 5; ++k) s.push(make_field(d, 0.1 * k, static_cast<double>(k)));

  IntrinsicCylinder cyl;
  cyl.cube = Cube{{0.0, 0.0, 0.0}, 0.5};
  cyl.t_end = 0.5;
  cyl.theta = 0.25 / (0.5 * 0.5);  // duration 0.25 -> window (0.25, 0.5]

  const auto slices = cylinder_slices(s, cyl);
  REQUIRE(slices.times.size() == 3);  // 0.3, 0.4, 0.5
  CHECK(slices.times.front() == doctest::Approx(0.3));
  CHECK(slices.times.back() == 0.5);  // t0 aligned with a snapshot is included
  CHECK(slices.cells.size() == 4);
  CHECK(slices.values[0][0] == 3.0);

  // half-open on the left: a snapshot exactly at t_start is excluded
  IntrinsicCylinder left = cyl;
  left.t_end = 0.4;
  left.theta = 0.2 / 0.25;  // window (0.2, 0.4]
  CHECK(cylinder_slices(s, left).times.size() == 2);

  // window before the first snapshot
  IntrinsicCylinder bad = cyl;
  bad.t_end = -1.0;
  CHECK_THROWS_AS(cylinder_slices(s, bad), cadence_error);
}

TEST_CASE("time_trapezoid") {
  CHECK(time_trapezoid({1.0}, {5.0}) == 0.0);
  CHECK(time_trapezoid({0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}) == doctest::Approx(2.0));
  CHECK(time_trapezoid({0.0, 2.0}, {0.0, 2.0}) == doctest::Approx(2.0));
}

TEST_CASE("FieldSeries push enforces ordering") {
  const Domain d = make_domain(1, 1.0, 8);
  FieldSeries s;
  s.push(make_field(d, 0.0));
  CHECK_THROWS_AS(s.push(make_field(d, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(s.push(make_field(make_domain(1, 1.0, 16), 1.0)), std::invalid_argument);
  s.push(make_field(d, 0.5));
  CHECK(s.snapshots.size() == 2);
}
