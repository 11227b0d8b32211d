#include "fdlab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fdlab/errors.hpp"
#include "fdlab/operators.hpp"

namespace fdlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double integrate_tanh_sinh(double (*f)(double, const void*), const void* ctx, double a, double b,
                           int levels) {
  // map (a,b) -> (-1,1), nodes x = tanh(pi/2 sinh(t))
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const double tmax = 3.8;  // |x| within ~1e-16 of 1 beyond this
  auto eval = [&](double t) {
    const double s = std::sinh(t);
    const double x = std::tanh(0.5 * M_PI * s);
    const double w = 0.5 * M_PI * std::cosh(t) / std::pow(std::cosh(0.5 * M_PI * s), 2);
    const double y = mid + half * x;
    if (y <= a || y >= b) return 0.0;  // node collapsed onto an endpoint
    return w * f(y, ctx);
  };
  double h = 1.0;
  double sum = eval(0.0);
  for (double t = h; t <= tmax; t += h) sum += eval(t) + eval(-t);
  double integral = sum * h * half;
  for (int level = 1; level <= levels; ++level) {
    h *= 0.5;
    double add = 0.0;
    for (double t = h; t <= tmax; t += 2.0 * h) add += eval(t) + eval(-t);
    sum += add;
    const double cur = sum * h * half;
    if (level > 3 && std::abs(cur - integral) <= 1e-13 * std::abs(cur)) return cur;
    integral = cur;
  }
  return integral;
}

BarenblattExponents barenblatt_exponents(double m, int dim) {
  const double N = dim;
  BarenblattExponents e;
  e.alpha = N / (N * (m - 1.0) + 2.0);
  e.beta = e.alpha / N;
  e.k = (1.0 - m) * e.alpha / (2.0 * m * N);
  return e;
}

namespace {

double sphere_area(int N) {
  // |S^{N-1}|: 2, 2*pi, 4*pi
  switch (N) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
    default: throw std::invalid_argument("sphere_area: dim must be 1..3");
  }
}

}  // namespace

double barenblatt_profile_constant(const BarenblattParams& prm) {
  const int N = prm.dim;
  const double m = prm.m;
  const double lo = std::max(0.0, static_cast<double>(N - 2)) / static_cast<double>(N);
  if (!(m > lo && m < 1.0))
    throw std::invalid_argument("barenblatt: m outside the finite-mass window ((N-2)_+/N, 1)");
  if (!(prm.mass > 0.0)) throw std::invalid_argument("barenblatt: mass must be > 0");
  if (!(prm.t_offset > 0.0)) throw std::invalid_argument("barenblatt: t_offset must be > 0");

  // mass = C^{N/2 - p} k^{-N/2} A with A = |S^{N-1}| B(N/2, p - N/2) / 2,
  // the Beta integral of the radial profile (tests cross-check by quadrature)
  const double p = 1.0 / (1.0 - m);
  const double logB =
      std::lgamma(0.5 * N) + std::lgamma(p - 0.5 * N) - std::lgamma(p);
  const double A = sphere_area(N) * 0.5 * std::exp(logB);
  const auto e = barenblatt_exponents(m, N);
  const double expo = 0.5 * N - p;  // negative in the admissible window
  return std::pow(prm.mass * std::pow(e.k, 0.5 * N) / A, 1.0 / expo);
}

double barenblatt_value(const BarenblattParams& prm, const std::array<double, 3>& x, double t,
                        double profile_constant) {
  const double tau = t + prm.t_offset;
  if (!(tau > 0.0)) throw std::invalid_argument("barenblatt: t + t_offset must be > 0");
  const auto e = barenblatt_exponents(prm.m, prm.dim);
  double r2 = 0.0;
  for (int a = 0; a < prm.dim; ++a) r2 += x[a] * x[a];
  const double core = profile_constant + e.k * r2 * std::pow(tau, -2.0 * e.beta);
  return std::pow(tau, -e.alpha) * std::pow(core, -1.0 / (1.0 - prm.m));
}

ScalarField barenblatt_field(const Domain& d, const BarenblattParams& prm, double t) {
  const double C = barenblatt_profile_constant(prm);
  ScalarField f = make_field(d, t);
  for (std::size_t i = 0; i < f.values.size(); ++i)
    f.values[i] = barenblatt_value(prm, d.cell_center(i), t, C);
  return f;
}

// ---------------------------------------------------------------------------

double lp_norm_cells(const std::vector<double>& values, double cell_measure, double p) {
  if (p == kInf) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 or infinity");
  double s = 0.0;
  for (double v : values) s += std::pow(std::abs(v), p);
  return std::pow(s * cell_measure, 1.0 / p);
}

double lp_norm(const ScalarField& w, double p) {
  return lp_norm_cells(w.values, w.domain.cell_measure(), p);
}

double lqr_norm(const FieldSeries& s, const IntrinsicCylinder& cyl, double q, double r) {
  const auto slices = cylinder_slices(s, cyl);
  const double meas = s.domain().cell_measure();
  std::vector<double> sq(slices.times.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = lp_norm_cells(slices.values[i], meas, q);
  if (r == kInf) {
    double m = 0.0;
    for (double v : sq) m = std::max(m, v);
    return m;
  }
  if (!(r >= 1.0)) throw std::invalid_argument("lqr_norm: r must be >= 1 or infinity");
  std::vector<double> powed(sq.size());
  for (std::size_t i = 0; i < sq.size(); ++i) powed[i] = std::pow(sq[i], r);
  return std::pow(time_trapezoid(slices.times, powed), 1.0 / r);
}

double vp_norm(const FieldSeries& s, const IntrinsicCylinder& cyl, double p) {
  const auto slices = cylinder_slices(s, cyl);
  const double meas = s.domain().cell_measure();
  double sup = 0.0;
  std::vector<double> grad_slice(slices.times.size());
  for (std::size_t i = 0; i < slices.times.size(); ++i) {
    sup = std::max(sup, lp_norm_cells(slices.values[i], meas, p));
    const auto mag = cell_gradient_magnitude(s.snapshots[slices.snapshot_index[i]]);
    double acc = 0.0;
    for (std::size_t j : slices.cells) acc += std::pow(mag[j], p);
    grad_slice[i] = acc * meas;
  }
  const double grad_term = std::pow(time_trapezoid(slices.times, grad_slice), 1.0 / p);
  return sup + grad_term;
}

ParabolicNorms make_exponents(double l, double r, double kappa, double p, double s, int dim) {
  if (!(l > 1.0 && r > 1.0)) throw std::invalid_argument("make_exponents: l, r must be > 1");
  if (!(kappa > 0.0)) throw std::invalid_argument("make_exponents: kappa must be > 0");
  ParabolicNorms n;
  n.l = l;
  n.r = r;
  n.kappa = kappa;
  n.l_tilde = 2.0 * (1.0 + kappa) * l / (l - 1.0);
  n.r_tilde = 2.0 * (1.0 + kappa) * r / (r - 1.0);
  n.p = p;
  n.s = s;
  n.dim = dim;
  n.q_embed = p * (dim + s) / dim;
  return n;
}

std::pair<double, double> exponents_from_tilde(double l_tilde, double r_tilde, double kappa) {
  const double c = 2.0 * (1.0 + kappa);
  return {l_tilde / (l_tilde - c), r_tilde / (r_tilde - c)};
}

EmbeddingReport embedding_check(const FieldSeries& s, const IntrinsicCylinder& cyl, double p,
                                double s_exp) {
  const auto slices = cylinder_slices(s, cyl);
  const Domain& d = s.domain();
  const double meas = d.cell_measure();
  const double q = p * (d.dim + s_exp) / d.dim;

  std::vector<double> lhs_slice(slices.times.size());
  std::vector<double> grad_slice(slices.times.size());
  double sup_s = 0.0;
  for (std::size_t i = 0; i < slices.times.size(); ++i) {
    double lq = 0.0, ls = 0.0;
    for (double v : slices.values[i]) {
      lq += std::pow(std::abs(v), q);
      ls += std::pow(std::abs(v), s_exp);
    }
    lhs_slice[i] = lq * meas;
    sup_s = std::max(sup_s, ls * meas);
    const auto mag = cell_gradient_magnitude(s.snapshots[slices.snapshot_index[i]]);
    double gp = 0.0;
    for (std::size_t j : slices.cells) gp += std::pow(mag[j], p);
    grad_slice[i] = gp * meas;
  }

  EmbeddingReport rep;
  rep.q = q;
  rep.lhs = time_trapezoid(slices.times, lhs_slice);
  const double grad_int = time_trapezoid(slices.times, grad_slice);
  rep.rhs_product = grad_int * std::pow(sup_s, p / d.dim);
  if (rep.rhs_product > 0.0)
    rep.gamma_estimate = std::pow(rep.lhs / rep.rhs_product, 1.0 / q);
  else if (rep.lhs > 0.0)
    rep.cutoff_violation = true;
  return rep;
}

namespace {

HeatEstimateReport heat_fit(const std::vector<double>& times, const std::vector<double>& lhs,
                            double v0_norm, double w_sup) {
  HeatEstimateReport rep;
  rep.times = times;
  rep.lhs = lhs;
  rep.v0_norm = v0_norm;
  rep.w_sup_norm = w_sup;
  double excess = 0.0;
  for (double l : lhs) excess = std::max(excess, l - v0_norm);
  if (w_sup > 0.0) {
    rep.fitted_C0 = std::max(0.0, excess) / w_sup;
    rep.satisfied = true;
  } else {
    rep.fitted_C0 = 0.0;
    rep.satisfied = excess <= 1e-12 * std::max(1.0, v0_norm);
  }
  return rep;
}

}  // namespace

HeatEstimateReport heat_estimate_check(const FieldSeries& v, const FieldSeries& u, double p,
                                       double p0) {
  const int N = v.domain().dim;
  const double gap = (p0 == kInf ? 0.0 : 1.0 / p0) - (p == kInf ? 0.0 : 1.0 / p);
  if (!(gap < 1.0 / N))
    throw std::invalid_argument("heat_estimate_check: exponents violate 1/p0 - 1/p < 1/N");

  std::vector<double> times, lhs;
  for (const auto& snap : v.snapshots) {
    times.push_back(snap.time);
    lhs.push_back(lp_norm(snap, p));
  }
  double w_sup = 0.0;
  for (const auto& snap : u.snapshots) w_sup = std::max(w_sup, lp_norm(snap, p0));
  return heat_fit(times, lhs, lhs.front(), w_sup);
}

HeatEstimateReport heat_gradient_check(const FieldSeries& v, const FieldSeries& u, double p0) {
  const Domain& d = v.domain();
  const double meas = d.cell_measure();
  auto grad_l2 = [&](const ScalarField& f) {
    const FluxField g = gradient(f);
    double s = 0.0;
    for (int a = 0; a < d.dim; ++a)
      for (double x : g.face[a]) s += x * x;
    return std::sqrt(s * meas);
  };
  std::vector<double> times, lhs;
  for (const auto& snap : v.snapshots) {
    times.push_back(snap.time);
    lhs.push_back(grad_l2(snap));
  }
  double w_sup = 0.0;
  for (const auto& snap : u.snapshots) w_sup = std::max(w_sup, lp_norm(snap, p0));
  return heat_fit(times, lhs, lhs.front(), w_sup);
}

}  // namespace fdlab
