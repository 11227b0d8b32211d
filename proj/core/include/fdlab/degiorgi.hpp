#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fdlab/functionals.hpp"
#include "fdlab/grid.hpp"
#include "fdlab/oracles.hpp"

namespace fdlab {

// ---------------------------------------------------------------------------
// Fast geometric convergence

struct GeoIterParams {
  double c = 2.0;
  double b = 2.0;
  double alpha = 1.0;
  double kappa = 1.0;

  double sigma() const { return std::min(kappa, alpha); }
  /// Smallness threshold nu0 = (2c)^{-(1+kappa)/sigma} * b^{-(1+kappa)/sigma^2}.
  double threshold() const;
};

struct GeoIterResult {
  bool converged = false;
  bool overflowed = false;
  std::vector<std::array<double, 2>> trajectory;  // (X_n, Y_n)
};

/// Iterates the recursion WITH EQUALITY (the extremal majorant):
///   X_{n+1} = c b^n (X^{1+alpha} + X^alpha Y^{1+kappa}),
///   Y_{n+1} = c b^n (X + Y^{1+kappa}).
/// converged means both sequences fell below 1e-10 within n_max steps.
GeoIterResult fast_geometric_iterate(const GeoIterParams& p, double X0, double Y0, int n_max);

// ---------------------------------------------------------------------------
// Isoperimetric inequality (classical divided form)

struct IsoperimetricReport {
  double lhs = 0.0;               // (l - k) |{w < k}|
  double below_measure = 0.0;
  double above_measure = 0.0;     // |{w > l}|
  double transition_integral = 0.0;  // int_{k < w < l} |Dw|
  double rhs_over_gamma = 0.0;    // R^{N+1} / |{w > l}| * transition_integral
  std::optional<double> gamma_fit;   // null when |{w > l}| = 0
};

/// (l - k)|{w < k}| <= gamma_D R^{N+1} / |{w > l}| * int_{k<w<l} |Dw| dx,
/// with R the cube edge length (2 * Cube::radius). The division by |{w > l}|
/// is the classical form, which is also the one the shrinking-measure
/// argument consumes.
IsoperimetricReport isoperimetric_check(const ScalarField& w, const Cube& cube, double k_low,
                                        double k_high);

// ---------------------------------------------------------------------------
// Nested level/cylinder families and their normalized measures

/// Levels k_n = mu -+ xi_n * omega with xi_n = a xi + (1-a) xi / 2^n and radii
/// R_n = R + R / 2^n shrinking onto R.
struct ShrinkingFamily {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double t_end = 0.0;
  double base_radius = 0.0;  // R; level-n radius is R + R/2^n
  double theta = 1.0;
  LevelSetMode mode = LevelSetMode::Below;
  double mu = 0.0;     // mu^- (Below) or mu^+ (Above)
  double omega = 1.0;
  double xi = 0.5;
  double a = 0.5;
  int n_levels = 4;

  double radius(int n) const { return base_radius * (1.0 + std::pow(2.0, -n)); }
  double xi_n(int n) const { return a * xi + (1.0 - a) * xi * std::pow(2.0, -n); }
  double level(int n) const {
    return mode == LevelSetMode::Below ? mu + xi_n(n) * omega : mu - xi_n(n) * omega;
  }
  IntrinsicCylinder cylinder(int n) const {
    return IntrinsicCylinder{Cube{center, radius(n)}, t_end, theta};
  }
};

/// X_n = |A_n| / |Q_n| and Y_n = (int |A_n(t)|^{rt/lt} dt)^{2/rt} / |Q_n|^{N/(N+2)}
/// with A_n = {u <> k_n} within Q_n. Both |A_n| and |Q_n| use the same slice
/// trapezoid so a full level set gives X_n = 1 exactly; a single-slice window
/// degenerates to X_n = Y_n = 0.
std::pair<std::vector<double>, std::vector<double>> measure_sequences(
    const FieldSeries& u, const ShrinkingFamily& family, const ParabolicNorms& norms);

// ---------------------------------------------------------------------------
// De Giorgi lemmas

struct DeGiorgiConfig {
  double xi = 0.5;
  double a = 0.5;
  std::optional<double> nu;  // explicit smallness threshold
  std::optional<double> C3;  // else derived: nu = (2 C3)^{-(1+2/N)/sigma} 16^{-(1+2/N)/sigma^2}
  double conclusion_radius_factor = 0.5;  // conclusion checked on this fraction of the radius
};

/// nu from the proof formula with sigma = 2/(N+2), kappa = 2/N.
double nu_from_C3(double C3, int dim);

struct DeGiorgiLemmaReport {
  bool applicable = true;        // above mode: mu_plus <= (13/12) omega
  double mu_plus = 0.0;
  double mu_minus = 0.0;
  double omega = 0.0;
  double level = 0.0;            // hypothesis level mu -+ xi omega
  double hypothesis_measure = 0.0;
  double cylinder_measure = 0.0;
  double nu_used = 0.0;
  bool fired = false;            // hypothesis_measure <= nu * cylinder_measure
  bool conclusion_verified = false;
  std::optional<std::size_t> violating_cell;
  std::optional<double> violating_time;
};

/// Hypothesis |{u < mu^- + xi omega} cap Q_2R| <= nu |Q_2R| implies
/// u > mu^- + a xi omega on the concentric smaller cylinder; the conclusion is
/// checked grid-pointwise. mu/omega are measured over Q_2R unless supplied.
DeGiorgiLemmaReport degiorgi_lemma_below(const FieldSeries& u, const IntrinsicCylinder& Q2R,
                                         const DeGiorgiConfig& cfg,
                                         std::optional<double> mu_minus = std::nullopt,
                                         std::optional<double> omega = std::nullopt);

/// Mirror statement for u > k, applicable only when mu_plus <= (13/12) omega.
DeGiorgiLemmaReport degiorgi_lemma_above(const FieldSeries& u, const IntrinsicCylinder& Q2R,
                                         const DeGiorgiConfig& cfg, double mu_plus, double omega);

// ---------------------------------------------------------------------------
// Oscillation decay engine

struct AlternativeConfig {
  double xi = 0.5;
  double a = 0.5;
  std::optional<double> nu;  // default: fitted from De Giorgi sweeps on the run
  int n_star = 4;
  int q_star = 6;
  double lambda = 2.0;       // the R < omega^2 / lambda check
  double ratio_tolerance = 0.05;
  int n_levels = 4;

  double delta() const { return 1.0 - std::pow(2.0, -(q_star + n_star + 1)); }
  static double b_of(double nu) { return std::sqrt(32.0 / nu); }
};

struct DecayLevel {
  int n = 0;
  double radius = 0.0;
  double omega = 0.0;   // induction bound omega_n
  double theta = 0.0;   // omega_n^{1-m}
  double mu_plus = 0.0;
  double mu_minus = 0.0;
  double measured_osc = 0.0;
  std::string alternative;      // "first" or "second"
  bool conclusion_verified = false;  // first alternative only
  double predicted_factor = 0.0;     // 3/4 or delta
  double measured_ratio = 0.0;       // osc(Q_{n+1}) / osc(Q_n), 0 when osc(Q_n) = 0
  bool nesting_ok = false;
  bool passed = false;
};

struct DecayTrace {
  std::vector<DecayLevel> levels;
  double omega0 = 0.0;
  double nu_used = 0.0;
  bool nu_was_fitted = false;
  double b = 0.0;
  double delta = 0.0;
  bool lambda_check = false;  // R < omega0^2 / lambda (recorded, not enforced)
  bool truncated = false;     // series exhausted before n_levels
  bool passed = false;
};

/// Runs the nested-cylinder induction R_{n+1} = R_n / b, omega_{n+1} =
/// factor * omega_n with theta_n = omega_n^{1-m}, recording per level which
/// alternative fired and the measured contraction. A level passes when the
/// measured ratio is <= max(delta, 3/4) + ratio_tolerance.
DecayTrace oscillation_decay(const FieldSeries& u, const IntrinsicCylinder& start,
                             const AlternativeConfig& cfg, double m);

// ---------------------------------------------------------------------------
// Second-alternative machinery

struct PropagationConfig {
  double nu = 0.5;
  int n_star = 4;
  std::optional<double> mu_plus;   // measured over the cylinder when absent
  std::optional<double> mu_minus;
  std::optional<double> omega;
};

struct PropagationReport {
  bool applicable = false;  // a seed slice satisfying the measure bound exists
  double seed_time = 0.0;
  double seed_measure = 0.0;
  double seed_threshold = 0.0;
  bool passed = false;
  std::optional<double> violation_time;
  std::optional<double> violation_measure;
  double bound = 0.0;  // (1 - nu^2/4) |K_{R/2}|
};

/// Seeds at a stored slice s in (-theta (R/2)^2, -nu/2 theta (R/2)^2) where
/// |{u(s) < mu^- + omega/2} cap K_{R/2}| > nu/2 |K_{R/2}|, then requires
/// |{u(t) > mu^+ - omega/2^{n*}} cap K_{R/2}| <= (1 - nu^2/4)|K_{R/2}| at
/// every later stored slice. Throws cadence_error when no slice lies in the
/// seed window.
PropagationReport time_propagation_check(const FieldSeries& u, const IntrinsicCylinder& cyl,
                                         const PropagationConfig& cfg);

struct ShrinkConfig {
  double nu = 0.5;
  int n_star = 4;
  int q_star = 6;  // must be >= 3
  double gamma_D = 1.0;
  std::optional<double> mu_plus;
  std::optional<double> omega;
  double m = 0.5;
  double u_floor = 1e-8;  // unused placeholder for symmetry with budgets
};

struct ShrinkReport {
  double theta_star = 0.0;
  double cylinder_measure = 0.0;
  std::vector<double> gradient_integrals;  // per level j = n*..n*+q*
  double gamma_bar = 0.0;                  // fitted gradient-bound constant
  double gamma2 = 0.0;                     // gamma_bar (4 gamma_D)^2
  double nu_bar_star = 0.0;                // sqrt(gamma2 / ((q*-2) nu^5))
  double final_measure = 0.0;              // |A_{n*+q*}|
  bool satisfied = false;                  // final_measure <= nu_bar_star * |Q*|
};

/// Gradient bound over Q_{R/2}(theta*) for the truncation ladder k_j =
/// mu^+ - omega/2^j, then the measure-shrinking conclusion.
ShrinkReport shrinking_measure_check(const FieldSeries& u, const IntrinsicCylinder& cyl,
                                     const ShrinkConfig& cfg);

}  // namespace fdlab
