#pragma once

#include <optional>
#include <vector>

#include "fdlab/grid.hpp"
#include "fdlab/operators.hpp"
#include "fdlab/oracles.hpp"

namespace fdlab {

enum class LevelSetMode { Below, Above };  // {u < k} vs {u > k}

/// Product cutoff eta(x, t) = eta1(x) * eta2(t): eta1 is 1 on the inner cube,
/// ramps linearly to 0 at the outer cube boundary (sup-norm distance); eta2
/// ramps from 0 at t_far to 1 at t_ramp_end. A default-constructed-like
/// all_one() cutoff is identically 1 (no spatial or temporal decay).
struct CutoffFunction {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  int dim = 1;
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  double t_far = 0.0;
  double t_ramp_end = 0.0;
  double declared_grad_bound = 0.0;  // 2^{n+1} / R
  double declared_dt_bound = 0.0;    // 2^{2(n+1)} / (theta R^2)
  bool constant_one = false;

  double eta1(const std::array<double, 3>& x, const Domain& d) const;
  double eta2(double t) const;
  double eta2_dt(double t) const;  // |d eta2 / dt|, piecewise constant
  ScalarField spatial_field(const Domain& d) const;

  static CutoffFunction all_one();
};

/// Level-n cutoff of the shrinking family: eta1 = 1 on K_{R_{n+1}}, 0 outside
/// K_{R_n}, with R_n = R + R/2^n; eta2 ramps over the matching time collars.
/// Throws when the spatial ramp is below one cell or the inner cube holds
/// fewer than 2 cells.
CutoffFunction make_cutoff(const Domain& d, const std::array<double, 3>& center, double t_end,
                           int level_index, double R, double theta);

/// Forward Steklov average u^h(., t) = (1/h) int_t^{t+h} u, trapezoid rule
/// with linear interpolation at the window end. Output snapshot carries the
/// window's left endpoint as its time.
FieldSeries steklov_average(const FieldSeries& s, double h_avg);

/// h^N * #{cube cells with u < k} (Below) or {u > k} (Above); the power map
/// s -> s^m is strictly increasing, so {k^m - u^m > 0} = {u < k} exactly.
double level_set_measure(const ScalarField& f, double k, const Cube& cube, LevelSetMode mode);

struct LevelSetReport {
  double k = 0.0;
  std::vector<double> times;
  std::vector<double> slice_measures;
  double total = 0.0;                 // trapezoid of slice measures
  double drift_time_integral = 0.0;   // trapezoid of |A(t)|^{r_tilde / l_tilde}
};
LevelSetReport level_set_report(const FieldSeries& s, const IntrinsicCylinder& cyl, double k,
                                LevelSetMode mode, const ParabolicNorms& norms);

/// Truncations: cellwise positive parts.
ScalarField truncate_below(const ScalarField& u, double k);  // (k - u)_+
ScalarField truncate_above(const ScalarField& u, double k);  // (u - k)_+

/// Drift constant I_d = [C0 sup_t (int_K u^{m+1})^{1/(m+1)} + (int_K |grad
/// v0|^{2l})^{1/(2l)}]^2. Requires 1/(m+1) - 1/(2l) < 1/N.
double compute_Id(const FieldSeries& u, const ScalarField& v0, const IntrinsicCylinder& cyl,
                  double l_exp, double m, double C0);

struct BudgetExponents {
  ParabolicNorms norms;
  double I_d = 0.0;
  double C0 = 0.0;  // recorded for traceability
};

/// Itemized sides of the truncation energy inequalities. Quadrature
/// conventions: cell terms sum cube cells; gradient terms sum faces interior
/// to the cube of the cellwise product (multiply first, then difference); the
/// initial term is evaluated on the earliest stored slice of the window; ess
/// sup in time is the max over stored slices.
struct EnergyBudget {
  double lhs_sup = 0.0;
  double lhs_grad = 0.0;
  double grad_eta_term = 0.0;
  double drift_term = 0.0;
  double initial_term = 0.0;
  double time_term = 0.0;
  std::optional<double> fitted_constant;  // (lhs_sup + lhs_grad) / sum(rhs); null if rhs = 0
};

/// Mode k > u: lhs_sup = ess sup int eta^2 (k-u)_+^2, lhs_grad = (m k^{m-1}/2)
/// int int |grad((k-u)_+ eta)|^2; rhs terms m k^{m+1} |grad eta|^2, drift
/// I_d k^{2q-m-1} (int |A|^{rt/lt})^{2(1+kappa)/rt}, initial, k^2 |eta eta_t|.
EnergyBudget energy_budget_below(const FieldSeries& u, double k, const IntrinsicCylinder& cyl,
                                 const CutoffFunction& cutoff, const BudgetExponents& ex,
                                 const ModelParams& params);

/// Mode u > k, with u^{m-1} weights evaluated at max(u, u_floor) (the floor
/// convention is recorded by the caller); drift weighted by mu_plus^{2q-m-1}.
EnergyBudget energy_budget_above(const FieldSeries& u, double k, const IntrinsicCylinder& cyl,
                                 const CutoffFunction& cutoff, const BudgetExponents& ex,
                                 const ModelParams& params, double mu_plus, double u_floor);

struct LogFunctionalReport {
  double H = 0.0;   // ess sup of (u - k)_+ over the cylinder
  double c = 0.0;
  double k = 0.0;   // mu_plus - omega / 4
  double mu_plus = 0.0;
  double lhs_sup = 0.0;
  double initial_term = 0.0;
  double drift_term = 0.0;
  double grad_term = 0.0;
  std::optional<double> fitted_gamma;
  double max_psi = 0.0;
  double psi_cap = 0.0;    // log(H / c)
  double max_slope = 0.0;  // max |d psi / d u| over adjacent cells
  double slope_cap = 0.0;  // 1 / c
  bool mu_is_ambient_sup = true;  // mu in the drift term taken as mu_plus
};

/// Logarithmic estimate budget with psi = log^+(H / (H - (u-k)_+ + c)) and a
/// time-independent spatial cutoff zeta. H = 0 yields a null-gamma report.
LogFunctionalReport log_budget(const FieldSeries& u, const IntrinsicCylinder& cyl,
                               const CutoffFunction& zeta, const BudgetExponents& ex,
                               const ModelParams& params, double omega, double mu_plus, double c,
                               double u_floor);

}  // namespace fdlab
