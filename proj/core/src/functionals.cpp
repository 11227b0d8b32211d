#include "fdlab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdlab/errors.hpp"

namespace fdlab {

namespace {

double positive_power(double u, double e) {
  if (e == 0.5) return std::sqrt(u);
  if (e == 1.0) return u;
  return std::pow(u, e);
}

}  // namespace

double CutoffFunction::eta1(const std::array<double, 3>& x, const Domain& d) const {
  if (constant_one) return 1.0;
  double dist = 0.0;
  for (int a = 0; a < dim; ++a) dist = std::max(dist, std::abs(d.wrap(x[a] - center[a])));
  if (dist <= inner_radius) return 1.0;
  if (dist >= outer_radius) return 0.0;
  return (outer_radius - dist) / (outer_radius - inner_radius);
}

double CutoffFunction::eta2(double t) const {
  if (constant_one || t_ramp_end <= t_far) return 1.0;
  if (t <= t_far) return 0.0;
  if (t >= t_ramp_end) return 1.0;
  return (t - t_far) / (t_ramp_end - t_far);
}

double CutoffFunction::eta2_dt(double t) const {
  if (constant_one || t_ramp_end <= t_far) return 0.0;
  if (t <= t_far || t >= t_ramp_end) return 0.0;
  return 1.0 / (t_ramp_end - t_far);
}

ScalarField CutoffFunction::spatial_field(const Domain& d) const {
  ScalarField f = make_field(d);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = eta1(d.cell_center(i), d);
  return f;
}

CutoffFunction CutoffFunction::all_one() {
  CutoffFunction c;
  c.constant_one = true;
  return c;
}

CutoffFunction make_cutoff(const Domain& d, const std::array<double, 3>& center, double t_end,
                           int level_index, double R, double theta) {
  if (level_index < 0) throw std::invalid_argument("make_cutoff: level index must be >= 0");
  if (!(R > 0.0 && theta > 0.0)) throw std::invalid_argument("make_cutoff: R, theta must be > 0");
  const double pow_n = std::pow(2.0, -level_index);
  const double r_outer = R + R * pow_n;
  const double r_inner = R + R * 0.5 * pow_n;
  if (r_outer - r_inner < d.spacing)
    throw std::invalid_argument("make_cutoff: spatial ramp narrower than one cell");

  Cube inner{center, r_inner};
  if (cube_cells(d, inner).size() < 2)
    throw std::invalid_argument("make_cutoff: inner cube collapsed below 2 cells");

  CutoffFunction c;
  c.center = center;
  c.dim = d.dim;
  c.inner_radius = r_inner;
  c.outer_radius = r_outer;
  c.t_far = t_end - theta * r_outer * r_outer;
  c.t_ramp_end = t_end - theta * r_inner * r_inner;
  c.declared_grad_bound = std::pow(2.0, level_index + 1) / R;
  c.declared_dt_bound = std::pow(2.0, 2 * (level_index + 1)) / (theta * R * R);
  return c;
}

FieldSeries steklov_average(const FieldSeries& s, double h_avg) {
  if (s.snapshots.size() < 2)
    throw std::invalid_argument("steklov_average: need at least two snapshots");
  double min_gap = s.snapshots[1].time - s.snapshots[0].time;
  for (std::size_t i = 1; i + 1 < s.snapshots.size(); ++i)
    min_gap = std::min(min_gap, s.snapshots[i + 1].time - s.snapshots[i].time);
  if (h_avg < min_gap * (1.0 - 1e-12))
    throw std::invalid_argument("steklov_average: window below snapshot spacing");

  const double t_last = s.last_time();
  const std::size_t n = s.domain().cell_count();
  FieldSeries out;
  for (std::size_t i = 0; i < s.snapshots.size(); ++i) {
    const double t0 = s.snapshots[i].time;
    const double t1 = t0 + h_avg;
    if (t1 > t_last * (1.0 + 1e-12) + 1e-300) break;
    ScalarField avg = make_field(s.domain(), t0);
    std::size_t j = i;
    double t_prev = t0;
    std::vector<double> prev = s.snapshots[i].values;
    while (t_prev < t1) {
      const auto& next_snap = s.snapshots[j + 1];
      const double t_next = std::min(next_snap.time, t1);
      std::vector<double> next(n);
      if (next_snap.time <= t1) {
        next = next_snap.values;
      } else {
        // interpolate linearly at the window end
        const double t_a = s.snapshots[j].time, t_b = next_snap.time;
        const double w = (t1 - t_a) / (t_b - t_a);
        for (std::size_t cidx = 0; cidx < n; ++cidx)
          next[cidx] = (1.0 - w) * s.snapshots[j].values[cidx] + w * next_snap.values[cidx];
      }
      const double seg = t_next - t_prev;
      for (std::size_t cidx = 0; cidx < n; ++cidx)
        avg.values[cidx] += 0.5 * (prev[cidx] + next[cidx]) * seg;
      prev = std::move(next);
      t_prev = t_next;
      ++j;
    }
    for (double& v : avg.values) v /= h_avg;
    out.push(std::move(avg));
  }
  if (out.snapshots.empty())
    throw std::invalid_argument("steklov_average: window exceeds the series");
  return out;
}

double level_set_measure(const ScalarField& f, double k, const Cube& cube, LevelSetMode mode) {
  if (!(k > 0.0)) throw std::invalid_argument("level_set_measure: level k must be > 0");
  const auto cells = cube_cells(f.domain, cube);
  std::size_t count = 0;
  for (std::size_t i : cells) {
    const double u = f.values[i];
    if (mode == LevelSetMode::Below ? (u < k) : (u > k)) ++count;
  }
  return static_cast<double>(count) * f.domain.cell_measure();
}

LevelSetReport level_set_report(const FieldSeries& s, const IntrinsicCylinder& cyl, double k,
                                LevelSetMode mode, const ParabolicNorms& norms) {
  const auto slices = cylinder_slices(s, cyl);
  const double meas = s.domain().cell_measure();
  LevelSetReport rep;
  rep.k = k;
  rep.times = slices.times;
  std::vector<double> powed(slices.times.size());
  for (std::size_t i = 0; i < slices.times.size(); ++i) {
    std::size_t count = 0;
    for (double u : slices.values[i])
      if (mode == LevelSetMode::Below ? (u < k) : (u > k)) ++count;
    rep.slice_measures.push_back(static_cast<double>(count) * meas);
    powed[i] = std::pow(rep.slice_measures.back(), norms.r_tilde / norms.l_tilde);
  }
  rep.total = time_trapezoid(rep.times, rep.slice_measures);
  rep.drift_time_integral = time_trapezoid(rep.times, powed);
  return rep;
}

ScalarField truncate_below(const ScalarField& u, double k) {
  ScalarField out = u;
  for (double& v : out.values) v = std::max(k - v, 0.0);
  return out;
}

ScalarField truncate_above(const ScalarField& u, double k) {
  ScalarField out = u;
  for (double& v : out.values) v = std::max(v - k, 0.0);
  return out;
}

double compute_Id(const FieldSeries& u, const ScalarField& v0, const IntrinsicCylinder& cyl,
                  double l_exp, double m, double C0) {
  const int N = u.domain().dim;
  if (!(1.0 / (m + 1.0) - 1.0 / (2.0 * l_exp) < 1.0 / N))
    throw std::invalid_argument("compute_Id: exponents violate 1/(m+1) - 1/(2l) < 1/N");
  const auto slices = cylinder_slices(u, cyl);
  const double meas = u.domain().cell_measure();

  double sup = 0.0;
  for (const auto& vals : slices.values) {
    double acc = 0.0;
    for (double x : vals) acc += std::pow(std::abs(x), m + 1.0);
    sup = std::max(sup, std::pow(acc * meas, 1.0 / (m + 1.0)));
  }
  const auto mag = cell_gradient_magnitude(v0);
  double acc = 0.0;
  for (std::size_t i : slices.cells) acc += std::pow(mag[i], 2.0 * l_exp);
  const double grad_term = std::pow(acc * meas, 1.0 / (2.0 * l_exp));

  const double bracket = C0 * sup + grad_term;
  return bracket * bracket;
}

namespace {

struct BudgetGeometry {
  CylinderSlices slices;
  CubeFaces faces;
  std::vector<double> eta1;        // spatial cutoff at cube cells' full-grid index
  std::vector<double> eta1_grad2;  // cellwise |grad eta1|^2 at cube cells
  double meas;
  double inv_h;
};

BudgetGeometry budget_geometry(const FieldSeries& u, const IntrinsicCylinder& cyl,
                               const CutoffFunction& cutoff) {
  const Domain& d = u.domain();
  BudgetGeometry g;
  g.slices = cylinder_slices(u, cyl);
  g.faces = cube_interior_faces(d, g.slices.cells);
  g.meas = d.cell_measure();
  g.inv_h = 1.0 / d.spacing;
  g.eta1.assign(d.cell_count(), 0.0);
  const ScalarField eta_field = cutoff.spatial_field(d);
  g.eta1 = eta_field.values;
  const auto mag = cell_gradient_magnitude(eta_field);
  g.eta1_grad2.assign(d.cell_count(), 0.0);
  for (std::size_t i = 0; i < mag.size(); ++i) g.eta1_grad2[i] = mag[i] * mag[i];
  return g;
}

// sum over cube-interior faces of ((w_+ - w_-)/h)^2 * h^N, optionally weighted
// by the face average of a cellwise weight
double face_gradient_sq(const BudgetGeometry& g, const Domain& d, const std::vector<double>& w,
                        const std::vector<double>* weight) {
  double acc = 0.0;
  for (int a = 0; a < d.dim; ++a) {
    for (std::size_t i : g.faces.lower_cell[a]) {
      const std::size_t j = d.neighbor(i, a, +1);
      const double diff = (w[j] - w[i]) * g.inv_h;
      const double wt = weight ? 0.5 * ((*weight)[i] + (*weight)[j]) : 1.0;
      acc += wt * diff * diff;
    }
  }
  return acc * g.meas;
}

}  // namespace

EnergyBudget energy_budget_below(const FieldSeries& u, double k, const IntrinsicCylinder& cyl,
                                 const CutoffFunction& cutoff, const BudgetExponents& ex,
                                 const ModelParams& params) {
  if (!(k > 0.0)) throw std::invalid_argument("energy_budget_below: level k must be > 0");
  const Domain& d = u.domain();
  const BudgetGeometry g = budget_geometry(u, cyl, cutoff);
  const double m = params.m;
  const std::size_t nslices = g.slices.times.size();

  EnergyBudget b;
  std::vector<double> grad_slice(nslices), eta_grad_slice(nslices), time_slice(nslices),
      level_slice(nslices);
  std::vector<double> w(d.cell_count(), 0.0);

  for (std::size_t si = 0; si < nslices; ++si) {
    const double t = g.slices.times[si];
    const double e2 = cutoff.eta2(t);
    const auto& full = u.snapshots[g.slices.snapshot_index[si]].values;

    double sup_acc = 0.0;
    std::size_t below_count = 0;
    for (std::size_t ci = 0; ci < g.slices.cells.size(); ++ci) {
      const std::size_t i = g.slices.cells[ci];
      const double trunc = std::max(k - full[i], 0.0);
      const double eta = g.eta1[i] * e2;
      w[i] = trunc * eta;
      sup_acc += eta * eta * trunc * trunc;
      if (full[i] < k) ++below_count;
    }
    b.lhs_sup = std::max(b.lhs_sup, sup_acc * g.meas);
    grad_slice[si] = face_gradient_sq(g, d, w, nullptr);

    double eta_sq = 0.0, eta1_sq = 0.0;
    for (std::size_t i : g.slices.cells) {
      eta_sq += g.eta1_grad2[i];
      eta1_sq += g.eta1[i] * g.eta1[i];
    }
    eta_grad_slice[si] = e2 * e2 * eta_sq * g.meas;
    time_slice[si] = eta1_sq * g.meas * e2 * cutoff.eta2_dt(t);
    level_slice[si] =
        std::pow(static_cast<double>(below_count) * g.meas, ex.norms.r_tilde / ex.norms.l_tilde);

    for (std::size_t i : g.slices.cells) w[i] = 0.0;  // reset for next slice
  }

  b.lhs_grad = 0.5 * m * positive_power(k, m - 1.0) * time_trapezoid(g.slices.times, grad_slice);
  b.grad_eta_term = m * positive_power(k, m + 1.0) * time_trapezoid(g.slices.times, eta_grad_slice);
  const double drift_int = time_trapezoid(g.slices.times, level_slice);
  b.drift_term = ex.I_d * positive_power(k, 2.0 * params.q_exp - m - 1.0) *
                 std::pow(drift_int, 2.0 * (1.0 + ex.norms.kappa) / ex.norms.r_tilde);

  {
    // earliest stored slice stands in for the far-time section
    const double t0 = g.slices.times.front();
    const double e2 = cutoff.eta2(t0);
    const auto& full = u.snapshots[g.slices.snapshot_index.front()].values;
    double acc = 0.0;
    for (std::size_t i : g.slices.cells) {
      const double eta = g.eta1[i] * e2;
      acc += eta * eta * std::max(k - full[i], 0.0);
    }
    b.initial_term = k * acc * g.meas;
  }
  b.time_term = k * k * time_trapezoid(g.slices.times, time_slice);

  const double rhs = b.grad_eta_term + b.drift_term + b.initial_term + b.time_term;
  if (rhs > 0.0) b.fitted_constant = (b.lhs_sup + b.lhs_grad) / rhs;
  return b;
}

EnergyBudget energy_budget_above(const FieldSeries& u, double k, const IntrinsicCylinder& cyl,
                                 const CutoffFunction& cutoff, const BudgetExponents& ex,
                                 const ModelParams& params, double mu_plus, double u_floor) {
  if (!(k > 0.0)) throw std::invalid_argument("energy_budget_above: level k must be > 0");
  if (!(u_floor > 0.0)) throw std::invalid_argument("energy_budget_above: u_floor must be > 0");
  const Domain& d = u.domain();
  const BudgetGeometry g = budget_geometry(u, cyl, cutoff);
  const double m = params.m;
  const std::size_t nslices = g.slices.times.size();

  EnergyBudget b;
  std::vector<double> grad_slice(nslices), eta_grad_slice(nslices), time_slice(nslices),
      level_slice(nslices);
  std::vector<double> w(d.cell_count(), 0.0), um1(d.cell_count(), 0.0);

  for (std::size_t si = 0; si < nslices; ++si) {
    const double t = g.slices.times[si];
    const double e2 = cutoff.eta2(t);
    const auto& full = u.snapshots[g.slices.snapshot_index[si]].values;

    double sup_acc = 0.0, eta_acc = 0.0, time_acc = 0.0;
    std::size_t above_count = 0;
    for (std::size_t ci = 0; ci < g.slices.cells.size(); ++ci) {
      const std::size_t i = g.slices.cells[ci];
      const double trunc = std::max(full[i] - k, 0.0);
      const double eta = g.eta1[i] * e2;
      w[i] = trunc * eta;
      um1[i] = positive_power(std::max(full[i], u_floor), m - 1.0);
      sup_acc += trunc * trunc * eta * eta;
      eta_acc += um1[i] * trunc * trunc * g.eta1_grad2[i] * e2 * e2;
      time_acc += trunc * trunc * g.eta1[i] * g.eta1[i];
      if (full[i] > k) ++above_count;
    }
    b.lhs_sup = std::max(b.lhs_sup, sup_acc * g.meas);
    grad_slice[si] = face_gradient_sq(g, d, w, &um1);
    eta_grad_slice[si] = eta_acc * g.meas;
    time_slice[si] = time_acc * g.meas * e2 * cutoff.eta2_dt(t);
    level_slice[si] =
        std::pow(static_cast<double>(above_count) * g.meas, ex.norms.r_tilde / ex.norms.l_tilde);

    for (std::size_t i : g.slices.cells) {
      w[i] = 0.0;
      um1[i] = 0.0;
    }
  }

  b.lhs_grad = time_trapezoid(g.slices.times, grad_slice);
  b.grad_eta_term = time_trapezoid(g.slices.times, eta_grad_slice);
  const double drift_int = time_trapezoid(g.slices.times, level_slice);
  b.drift_term = ex.I_d * positive_power(mu_plus, 2.0 * params.q_exp - m - 1.0) *
                 std::pow(drift_int, 2.0 * (1.0 + ex.norms.kappa) / ex.norms.r_tilde);

  {
    const double t0 = g.slices.times.front();
    const double e2 = cutoff.eta2(t0);
    const auto& full = u.snapshots[g.slices.snapshot_index.front()].values;
    double acc = 0.0;
    for (std::size_t i : g.slices.cells) {
      const double trunc = std::max(full[i] - k, 0.0);
      const double eta = g.eta1[i] * e2;
      acc += trunc * trunc * eta * eta;
    }
    b.initial_term = acc * g.meas;
  }
  b.time_term = time_trapezoid(g.slices.times, time_slice);

  const double rhs = b.grad_eta_term + b.drift_term + b.initial_term + b.time_term;
  if (rhs > 0.0) b.fitted_constant = (b.lhs_sup + b.lhs_grad) / rhs;
  return b;
}

LogFunctionalReport log_budget(const FieldSeries& u, const IntrinsicCylinder& cyl,
                               const CutoffFunction& zeta, const BudgetExponents& ex,
                               const ModelParams& params, double omega, double mu_plus, double c,
                               double u_floor) {
  const Domain& d = u.domain();
  const auto slices = cylinder_slices(u, cyl);
  const auto faces = cube_interior_faces(d, slices.cells);
  const double meas = d.cell_measure();
  const double k = mu_plus - omega / 4.0;

  LogFunctionalReport rep;
  rep.k = k;
  rep.mu_plus = mu_plus;
  rep.c = c;

  double H = 0.0;
  for (const auto& vals : slices.values)
    for (double x : vals) H = std::max(H, x - k);
  rep.H = H;
  if (H <= 0.0) return rep;  // no excursion above k: null gamma

  if (!(c > 0.0 && c < std::min(1.0, H)))
    throw std::invalid_argument("log_budget: need 0 < c < min(1, H)");
  rep.psi_cap = std::log(H / c);
  rep.slope_cap = 1.0 / c;

  const ScalarField zeta_field = zeta.spatial_field(d);
  const auto zeta_mag = cell_gradient_magnitude(zeta_field);

  auto psi_of = [&](double uval) {
    const double excursion = std::max(uval - k, 0.0);
    const double denom = H - excursion + c;
    if (denom <= 0.0) return rep.psi_cap;  // roundoff guard; psi is capped anyway
    const double arg = H / denom;
    return arg > 1.0 ? std::log(arg) : 0.0;
  };

  std::vector<double> grad_slice(slices.times.size());
  for (std::size_t si = 0; si < slices.times.size(); ++si) {
    const auto& full = u.snapshots[slices.snapshot_index[si]].values;
    double lhs_acc = 0.0, grad_acc = 0.0;
    for (std::size_t i : slices.cells) {
      const double psi = psi_of(full[i]);
      rep.max_psi = std::max(rep.max_psi, psi);
      const double z = zeta_field.values[i];
      lhs_acc += psi * psi * z * z;
      grad_acc += positive_power(std::max(full[i], u_floor), params.m - 1.0) * zeta_mag[i] *
                  zeta_mag[i];
    }
    const double lhs = lhs_acc * meas;
    rep.lhs_sup = std::max(rep.lhs_sup, lhs);
    if (si == 0) rep.initial_term = lhs;
    grad_slice[si] = grad_acc * meas;

    // discrete slope of psi in u across adjacent cells
    for (int a = 0; a < d.dim; ++a) {
      for (std::size_t i : faces.lower_cell[a]) {
        const std::size_t j = d.neighbor(i, a, +1);
        const double du = full[j] - full[i];
        if (du != 0.0)
          rep.max_slope = std::max(rep.max_slope, std::abs(psi_of(full[j]) - psi_of(full[i])) /
                                                      std::abs(du));
      }
    }
  }

  const double cube_meas = static_cast<double>(slices.cells.size()) * meas;
  rep.drift_term = (1.0 / (c * c)) * (1.0 + rep.psi_cap) * ex.I_d *
                   positive_power(mu_plus, 2.0 * params.q_exp - params.m - 1.0) * cube_meas;
  rep.grad_term = rep.psi_cap * time_trapezoid(slices.times, grad_slice);

  const double rhs = rep.drift_term + rep.grad_term;
  if (rhs > 0.0) rep.fitted_gamma = std::max(0.0, rep.lhs_sup - rep.initial_term) / rhs;
  return rep;
}

}  // namespace fdlab
