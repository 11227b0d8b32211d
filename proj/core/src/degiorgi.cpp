#include "fdlab/degiorgi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fdlab/errors.hpp"
#include "fdlab/operators.hpp"

namespace fdlab {

double GeoIterParams::threshold() const {
  const double s = sigma();
  return std::pow(2.0 * c, -(1.0 + kappa) / s) * std::pow(b, -(1.0 + kappa) / (s * s));
}

GeoIterResult fast_geometric_iterate(const GeoIterParams& p, double X0, double Y0, int n_max) {
  if (!(p.c >= 1.0 && p.b > 1.0 && p.alpha > 0.0 && p.kappa > 0.0))
    throw std::invalid_argument("fast_geometric_iterate: need c >= 1, b > 1, alpha, kappa > 0");
  if (!(X0 >= 0.0 && Y0 >= 0.0))
    throw std::invalid_argument("fast_geometric_iterate: X0, Y0 must be >= 0");

  GeoIterResult res;
  double X = X0, Y = Y0;
  res.trajectory.push_back({X, Y});
  double bn = 1.0;
  for (int n = 0; n < n_max; ++n) {
    if (X < 1e-10 && Y < 1e-10) {
      res.converged = true;
      return res;
    }
    const double Xn = p.c * bn * (std::pow(X, 1.0 + p.alpha) + std::pow(X, p.alpha) * std::pow(Y, 1.0 + p.kappa));
    const double Yn = p.c * bn * (X + std::pow(Y, 1.0 + p.kappa));
    X = Xn;
    Y = Yn;
    bn *= p.b;
    if (!std::isfinite(X) || !std::isfinite(Y) || X > 1e100 || Y > 1e100) {
      res.overflowed = true;
      res.trajectory.push_back({X, Y});
      return res;
    }
    res.trajectory.push_back({X, Y});
  }
  res.converged = (X < 1e-10 && Y < 1e-10);
  return res;
}

IsoperimetricReport isoperimetric_check(const ScalarField& w, const Cube& cube, double k_low,
                                        double k_high) {
  if (!(k_low < k_high)) throw std::invalid_argument("isoperimetric_check: need k < l");
  const Domain& d = w.domain;
  const auto cells = cube_cells(d, cube);
  const double meas = d.cell_measure();
  const auto mag = cell_gradient_magnitude(w);

  IsoperimetricReport rep;
  std::size_t below = 0, above = 0;
  double trans = 0.0;
  for (std::size_t i : cells) {
    const double v = w.values[i];
    if (v < k_low) ++below;
    if (v > k_high) ++above;
    if (v > k_low && v < k_high) trans += mag[i];
  }
  rep.below_measure = static_cast<double>(below) * meas;
  rep.above_measure = static_cast<double>(above) * meas;
  rep.transition_integral = trans * meas;
  rep.lhs = (k_high - k_low) * rep.below_measure;
  if (rep.above_measure == 0.0) return rep;  // null report

  // R here is the cube edge length (2 * radius)
  const double rn1 = std::pow(2.0 * cube.radius, d.dim + 1);
  rep.rhs_over_gamma = rn1 / rep.above_measure * rep.transition_integral;
  if (rep.transition_integral > 0.0)
    rep.gamma_fit = rep.lhs * rep.above_measure / (rn1 * rep.transition_integral);
  else
    rep.gamma_fit = rep.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return rep;
}

std::pair<std::vector<double>, std::vector<double>> measure_sequences(
    const FieldSeries& u, const ShrinkingFamily& family, const ParabolicNorms& norms) {
  std::vector<double> X(family.n_levels, 0.0), Y(family.n_levels, 0.0);
  const double meas = u.domain().cell_measure();
  const double exponent = norms.r_tilde / norms.l_tilde;
  const int N = u.domain().dim;

  for (int n = 0; n < family.n_levels; ++n) {
    const auto cyl = family.cylinder(n);
    const auto slices = cylinder_slices(u, cyl);
    const double k = family.level(n);
    std::vector<double> a_t(slices.times.size()), a_pow(slices.times.size()),
        ones(slices.times.size(), 1.0);
    for (std::size_t si = 0; si < slices.times.size(); ++si) {
      std::size_t count = 0;
      for (double v : slices.values[si])
        if (family.mode == LevelSetMode::Below ? (v < k) : (v > k)) ++count;
      a_t[si] = static_cast<double>(count) * meas;
      a_pow[si] = std::pow(a_t[si], exponent);
    }
    const double cube_meas = static_cast<double>(slices.cells.size()) * meas;
    const double window = time_trapezoid(slices.times, ones);  // empirical time depth
    const double q_meas = cube_meas * window;
    if (q_meas > 0.0) {
      X[n] = time_trapezoid(slices.times, a_t) / q_meas;
      Y[n] = std::pow(time_trapezoid(slices.times, a_pow), 2.0 / norms.r_tilde) /
             std::pow(q_meas, static_cast<double>(N) / (N + 2));
    }
  }
  return {X, Y};
}

double nu_from_C3(double C3, int dim) {
  const double kappa = 2.0 / dim;
  const double sigma = 2.0 / (dim + 2);
  return std::pow(2.0 * C3, -(1.0 + kappa) / sigma) *
         std::pow(16.0, -(1.0 + kappa) / (sigma * sigma));
}

namespace {

struct CylStats {
  double mu_plus;
  double mu_minus;
};

CylStats cylinder_extrema(const FieldSeries& u, const IntrinsicCylinder& cyl) {
  const auto slices = cylinder_slices(u, cyl);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& vals : slices.values)
    for (double v : vals) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return {hi, lo};
}

DeGiorgiLemmaReport lemma_impl(const FieldSeries& u, const IntrinsicCylinder& Q2R,
                               const DeGiorgiConfig& cfg, LevelSetMode mode, double mu,
                               double omega) {
  DeGiorgiLemmaReport rep;
  const auto stats = cylinder_extrema(u, Q2R);
  rep.mu_plus = stats.mu_plus;
  rep.mu_minus = stats.mu_minus;
  rep.omega = omega;

  if (!(omega > 0.0)) throw std::invalid_argument("degiorgi lemma: omega must be > 0");
  double nu;
  if (cfg.nu)
    nu = *cfg.nu;
  else if (cfg.C3)
    nu = nu_from_C3(*cfg.C3, u.domain().dim);
  else
    throw std::invalid_argument("degiorgi lemma: neither nu nor C3 configured");
  rep.nu_used = nu;

  const double level = mode == LevelSetMode::Below ? mu + cfg.xi * omega : mu - cfg.xi * omega;
  const double conclusion_level =
      mode == LevelSetMode::Below ? mu + cfg.a * cfg.xi * omega : mu - cfg.a * cfg.xi * omega;
  rep.level = level;

  const auto slices = cylinder_slices(u, Q2R);
  const double meas = u.domain().cell_measure();
  std::vector<double> a_t(slices.times.size()), ones(slices.times.size(), 1.0);
  for (std::size_t si = 0; si < slices.times.size(); ++si) {
    std::size_t count = 0;
    for (double v : slices.values[si])
      if (mode == LevelSetMode::Below ? (v < level) : (v > level)) ++count;
    a_t[si] = static_cast<double>(count) * meas;
  }
  rep.hypothesis_measure = time_trapezoid(slices.times, a_t);
  rep.cylinder_measure = static_cast<double>(slices.cells.size()) * meas *
                         time_trapezoid(slices.times, ones);
  rep.fired = rep.hypothesis_measure <= nu * rep.cylinder_measure;
  if (!rep.fired) return rep;

  IntrinsicCylinder inner = Q2R;
  inner.cube.radius = Q2R.cube.radius * cfg.conclusion_radius_factor;
  const auto inner_slices = cylinder_slices(u, inner);
  rep.conclusion_verified = true;
  for (std::size_t si = 0; si < inner_slices.times.size() && rep.conclusion_verified; ++si) {
    for (std::size_t ci = 0; ci < inner_slices.cells.size(); ++ci) {
      const double v = inner_slices.values[si][ci];
      const bool ok =
          mode == LevelSetMode::Below ? (v > conclusion_level) : (v < conclusion_level);
      if (!ok) {
        rep.conclusion_verified = false;
        rep.violating_cell = inner_slices.cells[ci];
        rep.violating_time = inner_slices.times[si];
        break;
      }
    }
  }
  return rep;
}

}  // namespace

DeGiorgiLemmaReport degiorgi_lemma_below(const FieldSeries& u, const IntrinsicCylinder& Q2R,
                                         const DeGiorgiConfig& cfg, std::optional<double> mu_minus,
                                         std::optional<double> omega) {
  const auto stats = cylinder_extrema(u, Q2R);
  const double mu = mu_minus.value_or(stats.mu_minus);
  const double om = omega.value_or(stats.mu_plus - stats.mu_minus);
  return lemma_impl(u, Q2R, cfg, LevelSetMode::Below, mu, om);
}

DeGiorgiLemmaReport degiorgi_lemma_above(const FieldSeries& u, const IntrinsicCylinder& Q2R,
                                         const DeGiorgiConfig& cfg, double mu_plus, double omega) {
  if (!(mu_plus <= 13.0 / 12.0 * omega)) {
    DeGiorgiLemmaReport rep;
    const auto stats = cylinder_extrema(u, Q2R);
    rep.mu_plus = stats.mu_plus;
    rep.mu_minus = stats.mu_minus;
    rep.omega = omega;
    rep.applicable = false;
    return rep;
  }
  return lemma_impl(u, Q2R, cfg, LevelSetMode::Above, mu_plus, omega);
}

namespace {

// measured oscillation over a cylinder; empty windows are reported by throw
double measured_osc(const FieldSeries& u, const IntrinsicCylinder& cyl) {
  const auto stats = cylinder_extrema(u, cyl);
  return stats.mu_plus - stats.mu_minus;
}

// hypothesis fraction of the first alternative on Q_{R/2}(theta), counting
// u <= level (the driver's test set is closed)
double first_alternative_fraction(const FieldSeries& u, const IntrinsicCylinder& half,
                                  double level) {
  const auto slices = cylinder_slices(u, half);
  const double meas = u.domain().cell_measure();
  std::vector<double> a_t(slices.times.size()), ones(slices.times.size(), 1.0);
  for (std::size_t si = 0; si < slices.times.size(); ++si) {
    std::size_t count = 0;
    for (double v : slices.values[si])
      if (v <= level) ++count;
    a_t[si] = static_cast<double>(count) * meas;
  }
  const double q = static_cast<double>(slices.cells.size()) * meas *
                   time_trapezoid(slices.times, ones);
  if (q <= 0.0) return 0.0;  // single-slice window: treat as vacuously small
  return time_trapezoid(slices.times, a_t) / q;
}

// deterministic nu fit: sweep a few sub-cylinders, take the largest hypothesis
// fraction for which the pointwise conclusion held
double fit_nu(const FieldSeries& u, const IntrinsicCylinder& start, const AlternativeConfig& cfg,
              double m) {
  const auto stats = cylinder_extrema(u, start);
  const double omega = stats.mu_plus - stats.mu_minus;
  if (!(omega > 0.0)) return 0.5;
  double best = 0.0;
  bool any = false;
  for (double frac : {0.6, 0.45, 0.3}) {
    IntrinsicCylinder q = start;
    q.cube.radius = start.cube.radius * frac;
    q.theta = std::pow(omega, 1.0 - m);
    if (q.t_start() < u.first_time() - 1e-12) continue;
    DeGiorgiConfig dg;
    dg.xi = cfg.xi;
    dg.a = cfg.a;
    dg.nu = 1.0;  // force firing so the conclusion is always checked
    const auto rep = degiorgi_lemma_below(u, q, dg, stats.mu_minus, omega);
    const double frac_measured =
        rep.cylinder_measure > 0.0 ? rep.hypothesis_measure / rep.cylinder_measure : 0.0;
    if (rep.conclusion_verified) {
      best = std::max(best, frac_measured);
      any = true;
    }
  }
  if (!any) return 0.5;
  return std::clamp(best, 0.05, 0.95);
}

}  // namespace

DecayTrace oscillation_decay(const FieldSeries& u, const IntrinsicCylinder& start,
                             const AlternativeConfig& cfg, double m) {
  DecayTrace trace;
  trace.delta = cfg.delta();

  const double osc0 = measured_osc(u, start);
  trace.omega0 = osc0;
  if (cfg.nu) {
    trace.nu_used = *cfg.nu;
  } else {
    trace.nu_used = fit_nu(u, start, cfg, m);
    trace.nu_was_fitted = true;
  }
  trace.b = AlternativeConfig::b_of(trace.nu_used);
  trace.lambda_check = start.cube.radius < osc0 * osc0 / cfg.lambda;

  if (osc0 == 0.0) {
    DecayLevel lvl;
    lvl.n = 0;
    lvl.radius = start.cube.radius;
    lvl.omega = 0.0;
    lvl.theta = 0.0;
    lvl.measured_osc = 0.0;
    lvl.alternative = "first";
    lvl.predicted_factor = 0.75;
    lvl.measured_ratio = 0.0;
    lvl.nesting_ok = true;
    lvl.passed = true;
    trace.levels.push_back(lvl);
    trace.passed = true;
    return trace;
  }

  // build cylinders Q_0 .. Q_{n_levels} so each level has a measured ratio
  const int total = cfg.n_levels + 1;
  std::vector<IntrinsicCylinder> cyls;
  std::vector<double> omegas, oscs;
  std::vector<DecayLevel> levels;
  double omega_n = osc0;
  double radius_n = start.cube.radius;
  const double bound = std::max(trace.delta, 0.75);

  for (int n = 0; n < total; ++n) {
    IntrinsicCylinder q;
    q.cube = Cube{start.cube.center, radius_n};
    q.t_end = start.t_end;
    q.theta = std::pow(omega_n, 1.0 - m);
    if (q.t_start() < u.first_time() - 1e-12 * std::max(1.0, std::abs(u.first_time()))) {
      trace.truncated = true;
      break;
    }
    double osc;
    try {
      osc = measured_osc(u, q);
    } catch (const cadence_error&) {
      trace.truncated = true;
      break;
    }
    cyls.push_back(q);
    omegas.push_back(omega_n);
    oscs.push_back(osc);

    if (n == cfg.n_levels) break;  // extra cylinder only supplies the last ratio

    DecayLevel lvl;
    lvl.n = n;
    lvl.radius = radius_n;
    lvl.omega = omega_n;
    lvl.theta = q.theta;
    lvl.measured_osc = osc;
    const auto stats = cylinder_extrema(u, q);
    lvl.mu_plus = stats.mu_plus;
    lvl.mu_minus = stats.mu_minus;

    // first alternative on Q_{R_n/2}(theta_n) with xi = a = 1/2
    IntrinsicCylinder half = q;
    half.cube.radius = radius_n * 0.5;
    const double level_value = stats.mu_minus + 0.5 * omega_n;
    const double fraction = first_alternative_fraction(u, half, level_value);
    if (fraction <= trace.nu_used) {
      lvl.alternative = "first";
      lvl.predicted_factor = 0.75;
      // conclusion u >= mu_n^- + omega_n / 4 on Q_{R_n/4}
      IntrinsicCylinder quarter = q;
      quarter.cube.radius = radius_n * 0.25;
      const auto qs = cylinder_slices(u, quarter);
      lvl.conclusion_verified = true;
      const double conclusion = stats.mu_minus + 0.25 * omega_n;
      for (const auto& vals : qs.values)
        for (double v : vals)
          if (!(v >= conclusion)) {
            lvl.conclusion_verified = false;
            break;
          }
    } else {
      lvl.alternative = "second";
      lvl.predicted_factor = trace.delta;
    }

    omega_n *= lvl.predicted_factor;
    radius_n /= trace.b;
    levels.push_back(lvl);
  }

  // ratios and nesting from consecutive cylinders
  trace.passed = !levels.empty();
  for (std::size_t n = 0; n < levels.size(); ++n) {
    auto& lvl = levels[n];
    if (n + 1 < cyls.size()) {
      lvl.measured_ratio = oscs[n] > 0.0 ? oscs[n + 1] / oscs[n] : 0.0;
      lvl.nesting_ok = cyls[n + 1].cube.radius <= cyls[n].cube.radius &&
                       cyls[n + 1].duration() <= cyls[n].duration() + 1e-15;
    } else {
      trace.truncated = true;
      lvl.measured_ratio = 0.0;
      lvl.nesting_ok = false;
    }
    lvl.passed = lvl.nesting_ok && lvl.measured_ratio <= bound + cfg.ratio_tolerance;
    trace.passed = trace.passed && lvl.passed;
  }
  if (trace.truncated) trace.passed = false;
  trace.levels = std::move(levels);
  return trace;
}

PropagationReport time_propagation_check(const FieldSeries& u, const IntrinsicCylinder& cyl,
                                         const PropagationConfig& cfg) {
  PropagationReport rep;
  const auto stats = cylinder_extrema(u, cyl);
  const double mu_plus = cfg.mu_plus.value_or(stats.mu_plus);
  const double mu_minus = cfg.mu_minus.value_or(stats.mu_minus);
  const double omega = cfg.omega.value_or(mu_plus - mu_minus);
  const double R_half = cyl.cube.radius * 0.5;
  const double theta = cyl.theta;
  const double t0 = cyl.t_end;
  const double nu = cfg.nu;

  const double win_lo = t0 - theta * R_half * R_half;
  const double win_hi = t0 - 0.5 * nu * theta * R_half * R_half;

  const Cube half_cube{cyl.cube.center, R_half};
  const auto cells = cube_cells(u.domain(), half_cube);
  const double meas = u.domain().cell_measure();
  const double cube_meas = static_cast<double>(cells.size()) * meas;
  rep.seed_threshold = 0.5 * nu * cube_meas;
  rep.bound = (1.0 - nu * nu / 4.0) * cube_meas;

  const double seed_level = mu_minus + 0.5 * omega;
  const double prop_level = mu_plus - omega / std::pow(2.0, cfg.n_star);

  // find a seed slice in the stated window
  bool window_hit = false;
  std::size_t seed_idx = 0;
  for (std::size_t k = 0; k < u.snapshots.size(); ++k) {
    const double t = u.snapshots[k].time;
    if (t > win_lo && t < win_hi) {
      window_hit = true;
      std::size_t count = 0;
      for (std::size_t i : cells)
        if (u.snapshots[k].values[i] < seed_level) ++count;
      const double measure = static_cast<double>(count) * meas;
      if (measure > rep.seed_threshold) {
        rep.applicable = true;
        rep.seed_time = t;
        rep.seed_measure = measure;
        seed_idx = k;
        break;
      }
    }
  }
  if (!window_hit)
    throw cadence_error("time_propagation_check: no stored slice in the seed window (" +
                        std::to_string(win_lo) + ", " + std::to_string(win_hi) + ")");
  if (!rep.applicable) return rep;

  rep.passed = true;
  for (std::size_t k = seed_idx + 1; k < u.snapshots.size(); ++k) {
    const double t = u.snapshots[k].time;
    if (t > t0 + 1e-12) break;
    std::size_t count = 0;
    for (std::size_t i : cells)
      if (u.snapshots[k].values[i] > prop_level) ++count;
    const double measure = static_cast<double>(count) * meas;
    if (measure > rep.bound) {
      rep.passed = false;
      rep.violation_time = t;
      rep.violation_measure = measure;
      break;
    }
  }
  return rep;
}

ShrinkReport shrinking_measure_check(const FieldSeries& u, const IntrinsicCylinder& cyl,
                                     const ShrinkConfig& cfg) {
  if (cfg.q_star < 3)
    throw std::invalid_argument("shrinking_measure_check: q_star must be >= 3 (q*-2 >= 1)");
  const auto stats = cylinder_extrema(u, cyl);
  const double mu_plus = cfg.mu_plus.value_or(stats.mu_plus);
  const double omega = cfg.omega.value_or(stats.mu_plus - stats.mu_minus);

  ShrinkReport rep;
  const double R_half = cyl.cube.radius * 0.5;
  rep.theta_star = 0.5 * cfg.nu * std::pow(omega, 1.0 - cfg.m);

  IntrinsicCylinder qstar;
  qstar.cube = Cube{cyl.cube.center, R_half};
  qstar.t_end = cyl.t_end;
  qstar.theta = rep.theta_star;
  const auto slices = cylinder_slices(u, qstar);
  const auto faces = cube_interior_faces(u.domain(), slices.cells);
  const Domain& d = u.domain();
  const double meas = d.cell_measure();
  const double inv_h = 1.0 / d.spacing;

  std::vector<double> ones(slices.times.size(), 1.0);
  rep.cylinder_measure = static_cast<double>(slices.cells.size()) * meas *
                         time_trapezoid(slices.times, ones);

  if (!(omega > 0.0)) {  // flat field: every truncation vanishes
    rep.gamma_bar = 0.0;
    rep.gamma2 = 0.0;
    rep.nu_bar_star = 0.0;
    rep.final_measure = 0.0;
    rep.satisfied = true;
    return rep;
  }

  double gamma_bar = 0.0;
  for (int j = cfg.n_star; j <= cfg.n_star + cfg.q_star; ++j) {
    const double kj = mu_plus - omega / std::pow(2.0, j);
    std::vector<double> grad_slice(slices.times.size(), 0.0);
    for (std::size_t si = 0; si < slices.times.size(); ++si) {
      const auto& full = u.snapshots[slices.snapshot_index[si]].values;
      double acc = 0.0;
      for (int a = 0; a < d.dim; ++a) {
        for (std::size_t i : faces.lower_cell[a]) {
          const std::size_t jj = d.neighbor(i, a, +1);
          const double diff =
              (std::max(full[jj] - kj, 0.0) - std::max(full[i] - kj, 0.0)) * inv_h;
          acc += diff * diff;
        }
      }
      grad_slice[si] = acc * meas;
    }
    const double G = time_trapezoid(slices.times, grad_slice);
    rep.gradient_integrals.push_back(G);
    const double scale = (omega / std::pow(2.0, j));
    if (rep.cylinder_measure > 0.0 && scale > 0.0) {
      const double fitted = G * cfg.nu * R_half * R_half / (scale * scale * rep.cylinder_measure);
      gamma_bar = std::max(gamma_bar, fitted);
    }
  }
  rep.gamma_bar = gamma_bar;
  rep.gamma2 = gamma_bar * std::pow(4.0 * cfg.gamma_D, 2);
  rep.nu_bar_star = std::sqrt(rep.gamma2 / ((cfg.q_star - 2) * std::pow(cfg.nu, 5)));

  const double k_final = mu_plus - omega / std::pow(2.0, cfg.n_star + cfg.q_star);
  std::vector<double> a_t(slices.times.size());
  for (std::size_t si = 0; si < slices.times.size(); ++si) {
    std::size_t count = 0;
    for (double v : slices.values[si])
      if (v > k_final) ++count;
    a_t[si] = static_cast<double>(count) * meas;
  }
  rep.final_measure = time_trapezoid(slices.times, a_t);
  rep.satisfied = rep.final_measure <= rep.nu_bar_star * rep.cylinder_measure;
  return rep;
}

}  // namespace fdlab
