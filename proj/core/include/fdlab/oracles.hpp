#pragma once

#include <optional>
#include <vector>

#include "fdlab/grid.hpp"

namespace fdlab {

/// Self-similar source solution of u_t = lap(u^m), the chi = 0 oracle.
struct BarenblattParams {
  double m = 0.5;
  int dim = 1;
  double mass = 1.0;      // total integral over R^N
  double t_offset = 0.01; // profile evaluated at tau = t + t_offset
};

struct BarenblattExponents {
  double alpha;  // N / (N(m-1) + 2)
  double beta;   // alpha / N
  double k;      // (1-m) alpha / (2 m N)
};
BarenblattExponents barenblatt_exponents(double m, int dim);

/// Profile constant C such that the mass equals params.mass, calibrated by
/// radial quadrature to 1e-10 relative.
double barenblatt_profile_constant(const BarenblattParams& p);

/// U(x, t) = tau^{-a} (C + k |x|^2 tau^{-2b})^{-1/(1-m)}, tau = t + t_offset.
double barenblatt_value(const BarenblattParams& p, const std::array<double, 3>& x, double t,
                        double profile_constant);

/// Profile sampled at cell centers.
ScalarField barenblatt_field(const Domain& d, const BarenblattParams& p, double t);

// ---------------------------------------------------------------------------
// Parabolic norms

/// L^p over the box; p = infinity gives max |w|.
double lp_norm(const ScalarField& w, double p);
/// L^p over a slice restricted to cube cells (values paired with h^N weights).
double lp_norm_cells(const std::vector<double>& values, double cell_measure, double p);

/// || w ||_{L^{q,r}} over a cylinder: spatial L^q per slice, L^r in time by
/// trapezoid; q or r = infinity takes the sup.
double lqr_norm(const FieldSeries& s, const IntrinsicCylinder& cyl, double q, double r);

/// || w ||_{V^p}: ess sup_t ||w||_p (max over stored slices) + ||grad w||_{L^p}.
double vp_norm(const FieldSeries& s, const IntrinsicCylinder& cyl, double p);

/// Exponent bookkeeping: 1 - 1/l = 2(1+kappa)/l_tilde and the same for r.
/// kappa defaults to 2/N, the value used by the iteration lemmas.
struct ParabolicNorms {
  double l = 1.5;
  double r = 1.5;
  double kappa = 2.0;
  double l_tilde = 0.0;
  double r_tilde = 0.0;
  double p = 2.0;
  double s = 2.0;
  double q_embed = 0.0;  // p (N + s) / N
  int dim = 1;
};
ParabolicNorms make_exponents(double l, double r, double kappa, double p, double s, int dim);
/// Inverse map: recover (l, r) from (l_tilde, r_tilde, kappa).
std::pair<double, double> exponents_from_tilde(double l_tilde, double r_tilde, double kappa);

// ---------------------------------------------------------------------------
// Inequality checks

struct EmbeddingReport {
  double lhs = 0.0;          // integral of |w|^q over the cylinder
  double rhs_product = 0.0;  // (integral |grad w|^p) * (ess sup integral |w|^s)^{p/N}
  double q = 0.0;
  std::optional<double> gamma_estimate;  // (lhs/rhs)^{1/q}; null when lhs = rhs = 0
  bool cutoff_violation = false;         // rhs = 0 with lhs > 0
};
/// Both sides of the parabolic embedding for a field vanishing on the cube
/// boundary (callers multiply by a cutoff first).
EmbeddingReport embedding_check(const FieldSeries& s, const IntrinsicCylinder& cyl, double p,
                                double s_exp);

struct HeatEstimateReport {
  std::vector<double> times;
  std::vector<double> lhs;     // ||v(t)||_p per snapshot (or gradient norm)
  double v0_norm = 0.0;
  double w_sup_norm = 0.0;     // sup_t ||u(t)||_{p0}
  double fitted_C0 = 0.0;      // smallest constant making the bound hold
  bool satisfied = false;
};
/// Value line of the heat estimate: ||v(t)||_p <= ||v0||_p + C0 sup ||u||_{p0},
/// with C0 fitted, not assumed. Requires 1/p0 - 1/p < 1/N.
HeatEstimateReport heat_estimate_check(const FieldSeries& v, const FieldSeries& u, double p,
                                       double p0);
/// Gradient line at p = 2 (face-based gradient L2 norm), same fitting scheme.
HeatEstimateReport heat_gradient_check(const FieldSeries& v, const FieldSeries& u, double p0);

// ---------------------------------------------------------------------------
// Quadrature helper (exposed for tests)

/// tanh-sinh quadrature on (a, b); handles integrable endpoint singularities.
double integrate_tanh_sinh(double (*f)(double, const void*), const void* ctx, double a, double b,
                           int levels = 10);

}  // namespace fdlab
