#include <doctest.h>

#include <cmath>

#include "fdlab/errors.hpp"
#include "fdlab/holder.hpp"
#include "fdlab/solver.hpp"

using namespace fdlab;

namespace {

FieldSeries static_series(const Domain& d, double (*f)(double)) {
  FieldSeries s;
  ScalarField field = make_field(d, 1.0);
  for (std::size_t i = 0; i < field.values.size(); ++i)
    field.values[i] = f(d.cell_center(i)[0]);
  s.push(std::move(field));
  return s;
}

}  // namespace

TEST_CASE("intrinsic distance basics") {
  const Domain d = make_domain(1, 1.0, 32);
  SpaceTimePoint p1{{0.2, 0.0, 0.0}, 0.5};
  CHECK(intrinsic_distance(p1, p1, 1.0, 0.5, d) == 0.0);

  SpaceTimePoint p2{{0.5, 0.0, 0.0}, 0.9};
  // M = 1 -> weight 1 for every m
  for (double m : {0.3, 0.5, 0.9}) {
    CHECK(intrinsic_distance(p1, p2, 1.0, m, d) ==
          doctest::Approx(0.3 + std::sqrt(0.4)).epsilon(1e-13));
  }
  // m -> 1 recovers the classical parabolic distance for any M
  CHECK(intrinsic_distance(p1, p2, 7.3, 1.0 - 1e-14, d) ==
        doctest::Approx(0.3 + std::sqrt(0.4)).epsilon(1e-10));

  // periodic-minimal spatial part
  SpaceTimePoint a{{-0.9, 0.0, 0.0}, 0.0};
  SpaceTimePoint b{{0.9, 0.0, 0.0}, 0.0};
  CHECK(intrinsic_distance(a, b, 1.0, 0.5, d) == doctest::Approx(0.2).epsilon(1e-13));

  // M = 0 falls back to unit time weight
  CHECK(intrinsic_distance(p1, p2, 0.0, 0.5, d) ==
        doctest::Approx(0.3 + std::sqrt(0.4)).epsilon(1e-13));
}

TEST_CASE("holder fit: |x|^{1/2} recovers alpha = 0.5") {
  const Domain d = make_domain(1, 1.0, 1024);
  const FieldSeries s = static_series(d, [](double x) { return std::sqrt(std::abs(x)); });
  SamplerConfig cfg;
  cfg.seed = 17;
  cfg.pair_count = 20000;
  cfg.bin_count = 24;
  const auto fit = holder_fit(s, Cube{{0.0, 0.0, 0.0}, 0.5}, 0.5, 0.5, cfg);
  CHECK(fit.holder_exponent == doctest::Approx(0.5).epsilon(0.1));
  CHECK(std::abs(fit.holder_exponent - 0.5) < 0.05);
  CHECK(fit.sample_count >= 200);
  CHECK(fit.usable_bins >= 5);
}

TEST_CASE("holder fit: linear field is Lipschitz (alpha >= 0.95, capped at 1)") {
  const Domain d = make_domain(1, 1.0, 1024);
  const FieldSeries s = static_series(d, [](double x) { return x; });
  SamplerConfig cfg;
  cfg.seed = 29;
  cfg.pair_count = 20000;
  const auto fit = holder_fit(s, Cube{{0.0, 0.0, 0.0}, 0.5}, 0.5, 0.5, cfg);
  CHECK(fit.holder_exponent >= 0.95);
  CHECK(fit.holder_exponent <= 1.0);
}

TEST_CASE("holder fit: exact-constant flag") {
  const Domain d = make_domain(1, 1.0, 256);
  const FieldSeries s = static_series(d, [](double) { return 3.0; });
  SamplerConfig cfg;
  cfg.seed = 5;
  cfg.pair_count = 2000;
  const auto fit = holder_fit(s, Cube{{0.0, 0.0, 0.0}, 0.5}, 0.5, 0.5, cfg);
  CHECK(fit.exact_constant);
}

TEST_CASE("holder fit: stability under sample doubling") {
  const Domain d = make_domain(1, 1.0, 1024);
  const FieldSeries s = static_series(d, [](double x) { return std::sqrt(std::abs(x)); });
  SamplerConfig cfg;
  cfg.seed = 101;
  cfg.pair_count = 10000;
  const auto fit1 = holder_fit(s, Cube{{0.0, 0.0, 0.0}, 0.5}, 0.5, 0.5, cfg);
  cfg.pair_count = 20000;
  const auto fit2 = holder_fit(s, Cube{{0.0, 0.0, 0.0}, 0.5}, 0.5, 0.5, cfg);
  CHECK(std::abs(fit1.holder_exponent - fit2.holder_exponent) < 0.05);
}

TEST_CASE("holder fit: scaling covariance on a static series") {
  const Domain d = make_domain(1, 1.0, 512);
  const FieldSeries s = static_series(d, [](double x) { return std::sqrt(std::abs(x)); });
  FieldSeries scaled;
  {
    ScalarField f = s.snapshots.front();
    for (double& v : f.values) v *= 4.0;
    scaled.push(std::move(f));
  }
  SamplerConfig cfg;
  cfg.seed = 7;
  cfg.pair_count = 12000;
  const auto f1 = holder_fit(s, Cube{{0.0, 0.0, 0.0}, 0.5}, 0.5, 0.5, cfg);
  const auto f2 = holder_fit(scaled, Cube{{0.0, 0.0, 0.0}, 0.5}, 0.5, 0.5, cfg);
  // single-snapshot series: purely spatial distances, exact covariance
  CHECK(f2.holder_exponent == doctest::Approx(f1.holder_exponent).epsilon(1e-12));
  CHECK(f2.prefactor == doctest::Approx(4.0 * f1.prefactor).epsilon(1e-9));
  CHECK(f2.sup_norm == doctest::Approx(4.0 * f1.sup_norm).epsilon(1e-13));
}

TEST_CASE("holder fit: refinement does not erode the exponent on solver output") {
  SolverConfig scfg;
  scfg.params.dim = 1;
  scfg.params.m = 0.6;
  scfg.params.q_exp = 1.2;
  scfg.params.chi = 0.5;
  scfg.u_floor = 0.0;
  scfg.t_end = 0.02;
  scfg.snapshot_interval = 0.002;

  double alphas[2];
  int idx = 0;
  for (int cells : {128, 256}) {
    const Domain d = make_domain(1, 2.0, cells);
    ScalarField u0 = make_field(d);
    for (std::size_t i = 0; i < u0.values.size(); ++i) {
      const double x = d.cell_center(i)[0];
      u0.values[i] = std::exp(-x * x / (2.0 * 0.45 * 0.45));
    }
    const auto res = run(u0, make_field(d), scfg);
    SamplerConfig cfg;
    cfg.seed = 23;
    cfg.pair_count = 12000;
    const auto fit = holder_fit(res.u, Cube{{0.0, 0.0, 0.0}, 0.8}, 0.004, 0.6, cfg);
    alphas[idx++] = fit.holder_exponent;
  }
  CHECK(alphas[1] >= alphas[0] - 0.1);
}

TEST_CASE("holder fit error paths") {
  const Domain d = make_domain(1, 1.0, 256);
  const FieldSeries s = static_series(d, [](double x) { return x; });
  SamplerConfig cfg;
  cfg.seed = 3;
  cfg.pair_count = 100;  // below the 200-pair floor
  CHECK_THROWS_AS(holder_fit(s, Cube{{0.0, 0.0, 0.0}, 0.5}, 0.5, 0.5, cfg),
                  std::invalid_argument);
  cfg.pair_count = 2000;
  // region must be strictly interior
  CHECK_THROWS_AS(holder_fit(s, Cube{{0.0, 0.0, 0.0}, 1.0}, 0.5, 0.5, cfg),
                  std::invalid_argument);
}
