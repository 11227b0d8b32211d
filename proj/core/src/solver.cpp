#include "fdlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fdlab/errors.hpp"

namespace fdlab {

namespace {

double positive_power(double u, double e) {
  if (e == 0.5) return std::sqrt(u);
  if (e == 1.0) return u;
  return std::pow(u, e);
}

// Chunked parallel loop over [0, n). Each chunk writes disjoint output slots,
// so the result is bitwise independent of the thread count.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  if (threads <= 1 || n < 4096) {
    body(std::size_t{0}, n);
    return;
  }
  const int nt = std::min<std::size_t>(threads, (n + 4095) / 4096);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const std::size_t chunk = (n + nt - 1) / nt;
  for (int k = 0; k < nt; ++k) {
    const std::size_t lo = k * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

struct Workspace {
  NeighborTable nb;
  std::vector<double> upow;    // u^m, then reused
  std::vector<double> uq;      // u^{q-1}
  std::array<std::vector<double>, 3> flux;
  std::vector<double> cg_r, cg_p, cg_ap;

  explicit Workspace(const Domain& d) : nb(build_neighbors(d)) {
    const std::size_t n = d.cell_count();
    upow.resize(n);
    uq.resize(n);
    for (int a = 0; a < d.dim; ++a) flux[a].assign(n, 0.0);
    cg_r.resize(n);
    cg_p.resize(n);
    cg_ap.resize(n);
  }
};

double serial_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// combined flux faces: diffusive - drift, written into ws.flux
void compute_total_flux(const ScalarField& u, const ScalarField& v, const SolverConfig& cfg,
                        Workspace& ws) {
  const Domain& d = u.domain;
  const std::size_t n = d.cell_count();
  const double inv_h = 1.0 / d.spacing;
  const ModelParams& p = cfg.params;
  const bool with_drift = p.chi != 0.0;

  parallel_for(n, cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) ws.upow[i] = positive_power(u.values[i], p.m);
  });
  if (with_drift) {
    const double e = p.q_exp - 1.0;
    parallel_for(n, cfg.threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) ws.uq[i] = positive_power(u.values[i], e);
    });
  }

  for (int a = 0; a < d.dim; ++a) {
    const auto& plus = ws.nb.plus[a];
    auto& face = ws.flux[a];
    if (with_drift) {
      parallel_for(n, cfg.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          const std::size_t j = plus[i];
          const double diff = (ws.upow[j] - ws.upow[i]) * inv_h;
          const double g = (v.values[j] - v.values[i]) * inv_h;
          double drift = 0.0;
          if (g > 0.0)
            drift = p.chi * (ws.uq[i] * g);
          else if (g < 0.0)
            drift = p.chi * (ws.uq[j] * g);
          face[i] = diff - drift;
        }
      });
    } else {
      parallel_for(n, cfg.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) face[i] = (ws.upow[plus[i]] - ws.upow[i]) * inv_h;
      });
    }
  }
}

ScalarField step_u_impl(const ScalarField& u, const ScalarField& v, double dt,
                        const SolverConfig& cfg, Workspace& ws, std::size_t* clamped) {
  const Domain& d = u.domain;
  const std::size_t n = d.cell_count();
  compute_total_flux(u, v, cfg, ws);

  ScalarField out = u;
  out.time = u.time + dt;
  const double inv_h = 1.0 / d.spacing;
  for (int a = 0; a < d.dim; ++a) {
    const auto& minus = ws.nb.minus[a];
    const auto& face = ws.flux[a];
    const bool first = (a == 0);
    parallel_for(n, cfg.threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const double div = (face[i] - face[minus[i]]) * inv_h;
        out.values[i] = (first ? u.values[i] : out.values[i]) + dt * div;
      }
    });
  }

  double max_u = 0.0;
  for (double x : u.values) max_u = std::max(max_u, x);
  const double clamp_floor = -1e-13 * max_u;
  std::size_t nclamp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = out.values[i];
    if (x < 0.0) {
      if (x < clamp_floor) {
        std::ostringstream os;
        os << "step_u: positivity violated beyond roundoff at cell " << i << " (u_new = " << x
           << ", tolerance " << clamp_floor << "); CFL breach or flux bug";
        throw numeric_error(os.str());
      }
      out.values[i] = 0.0;
      ++nclamp;
    }
    if (!std::isfinite(x)) throw numeric_error("step_u: non-finite value produced");
  }
  if (clamped) *clamped = nclamp;

  // divergence-form telescoping: cell sums must agree to roundoff
  const double mass_before = serial_sum(u.values);
  const double mass_after = serial_sum(out.values);
  const double tol = 1e-12 * std::max(mass_before, 1e-300) + 1e-300;
  if (mass_before > 0.0 && std::abs(mass_after - mass_before) > tol * 1e3) {
    // 1e3 slack: clamping may add up to ncells * 1e-13 * max_u of mass
    std::ostringstream os;
    os << "step_u: mass drift " << (mass_after - mass_before) << " exceeds tolerance";
    throw numeric_error(os.str());
  }
  return out;
}

// A x = (1 + dt*alpha) x - dt * lap x
void apply_helmholtz(const Domain& d, const NeighborTable& nb, double dt, double alpha,
                     const std::vector<double>& x, std::vector<double>& out, int threads) {
  const std::size_t n = x.size();
  const double diag = 1.0 + dt * alpha;
  const double w = dt / (d.spacing * d.spacing);
  parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double lap = 0.0;
      for (int a = 0; a < d.dim; ++a)
        lap += x[nb.plus[a][i]] - 2.0 * x[i] + x[nb.minus[a][i]];
      out[i] = diag * x[i] - w * lap;
    }
  });
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

ScalarField step_v_impl(const ScalarField& v, const ScalarField& u, double dt,
                        const SolverConfig& cfg, Workspace& ws, int* iterations) {
  const Domain& d = v.domain;
  const std::size_t n = d.cell_count();
  const double alpha = cfg.params.decay_rate;

  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = v.values[i] + dt * u.values[i];
  const double rhs_norm = std::sqrt(dot(rhs, rhs));
  const double target = cfg.v_solver_tol * rhs_norm;

  ScalarField out = v;
  out.time = v.time + dt;
  auto& x = out.values;

  apply_helmholtz(d, ws.nb, dt, alpha, x, ws.cg_ap, cfg.threads);
  for (std::size_t i = 0; i < n; ++i) ws.cg_r[i] = rhs[i] - ws.cg_ap[i];
  ws.cg_p = ws.cg_r;
  double rs = dot(ws.cg_r, ws.cg_r);

  int it = 0;
  while (std::sqrt(rs) > target && it < cfg.cg_max_iters) {
    apply_helmholtz(d, ws.nb, dt, alpha, ws.cg_p, ws.cg_ap, cfg.threads);
    const double denom = dot(ws.cg_p, ws.cg_ap);
    if (denom <= 0.0) break;  // A is SPD; zero direction means converged
    const double a = rs / denom;
    for (std::size_t i = 0; i < n; ++i) x[i] += a * ws.cg_p[i];
    for (std::size_t i = 0; i < n; ++i) ws.cg_r[i] -= a * ws.cg_ap[i];
    const double rs_new = dot(ws.cg_r, ws.cg_r);
    const double beta = rs_new / rs;
    for (std::size_t i = 0; i < n; ++i) ws.cg_p[i] = ws.cg_r[i] + beta * ws.cg_p[i];
    rs = rs_new;
    ++it;
  }
  if (std::sqrt(rs) > target && rhs_norm > 0.0)
    throw numeric_error("step_v: conjugate gradients failed to reach tolerance after " +
                        std::to_string(it) + " iterations");
  if (iterations) *iterations = it;
  return out;
}

double cfl_dt_impl(const ScalarField& u, const ScalarField& v, const SolverConfig& cfg,
                   Workspace& ws) {
  const Domain& d = u.domain;
  const ModelParams& p = cfg.params;
  if (!(cfg.u_floor > 0.0)) throw std::invalid_argument("cfl_dt: u_floor must be > 0");

  double min_ueff = std::numeric_limits<double>::infinity();
  double max_u = 0.0;
  for (double x : u.values) {
    if (!(x >= 0.0)) throw numeric_error("cfl_dt: negative u value");
    min_ueff = std::min(min_ueff, std::max(cfg.u_floor, x));
    max_u = std::max(max_u, x);
  }
  const double diffusivity = p.m * positive_power(min_ueff, p.m - 1.0);
  const double diff_term = 2.0 * p.dim * diffusivity;

  double drift_term = 0.0;
  if (p.chi != 0.0 && max_u > 0.0) {
    double max_grad_v = 0.0;
    const double inv_h = 1.0 / d.spacing;
    for (int a = 0; a < d.dim; ++a) {
      const auto& plus = ws.nb.plus[a];
      for (std::size_t i = 0; i < v.values.size(); ++i)
        max_grad_v = std::max(max_grad_v, std::abs((v.values[plus[i]] - v.values[i]) * inv_h));
    }
    drift_term = d.spacing * max_grad_v * p.chi * positive_power(max_u, p.q_exp - 1.0) * p.dim;
  }
  return cfg.cfl_safety * d.spacing * d.spacing / (diff_term + drift_term);
}

double max_abs_gradient(const ScalarField& w, const NeighborTable& nb) {
  const Domain& d = w.domain;
  const double inv_h = 1.0 / d.spacing;
  double m = 0.0;
  for (int a = 0; a < d.dim; ++a) {
    const auto& plus = nb.plus[a];
    for (std::size_t i = 0; i < w.values.size(); ++i)
      m = std::max(m, std::abs((w.values[plus[i]] - w.values[i]) * inv_h));
  }
  return m;
}

}  // namespace

double cfl_dt(const ScalarField& u, const ScalarField& v, const SolverConfig& cfg) {
  Workspace ws(u.domain);
  return cfl_dt_impl(u, v, cfg, ws);
}

ScalarField step_u(const ScalarField& u, const ScalarField& v, double dt, const SolverConfig& cfg,
                   std::size_t* clamped) {
  Workspace ws(u.domain);
  return step_u_impl(u, v, dt, cfg, ws, clamped);
}

ScalarField step_v(const ScalarField& v, const ScalarField& u, double dt, const SolverConfig& cfg,
                   int* iterations) {
  Workspace ws(v.domain);
  return step_v_impl(v, u, dt, cfg, ws, iterations);
}

RunResult run(const ScalarField& u0, const ScalarField& v0, SolverConfig cfg) {
  const Domain& d = u0.domain;
  if (!(v0.domain == d)) throw std::invalid_argument("run: u0/v0 domain mismatch");
  validate_params(cfg.params);
  if (cfg.params.dim != d.dim) throw config_error("run: params.dim disagrees with domain dim");
  if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0))
    throw config_error("cfl_safety violates 0 < cfl_safety <= 1");
  if (!(cfg.t_end >= 0.0)) throw config_error("t_end violates t_end >= 0");

  double max_u0 = 0.0;
  for (double x : u0.values) {
    if (!std::isfinite(x) || x < 0.0) throw numeric_error("run: u0 must be finite and >= 0");
    max_u0 = std::max(max_u0, x);
  }
  for (double x : v0.values)
    if (!std::isfinite(x) || x < 0.0) throw numeric_error("run: v0 must be finite and >= 0");
  if (cfg.u_floor <= 0.0) {
    if (max_u0 <= 0.0) throw numeric_error("run: cannot derive u_floor from identically zero u0");
    cfg.u_floor = 1e-4 * max_u0;
  }

  // snapshot targets: 0, k*interval, ..., t_end (exact values, no fp drift)
  std::vector<double> targets;
  targets.push_back(0.0);
  if (cfg.snapshot_interval > 0.0) {
    for (int k = 1;; ++k) {
      const double t = k * cfg.snapshot_interval;
      if (t >= cfg.t_end * (1.0 - 1e-12)) break;
      targets.push_back(t);
    }
  }
  if (cfg.t_end > 0.0) targets.push_back(cfg.t_end);

  Workspace ws(d);
  RunResult res;
  ScalarField u = u0;
  ScalarField v = v0;
  u.time = 0.0;
  v.time = 0.0;
  res.u.push(u);
  res.v.push(v);

  double t = 0.0;
  std::size_t target_idx = 1;
  int step = 0;
  const double h_meas = d.cell_measure();

  while (target_idx < targets.size()) {
    const double dt_stable = cfl_dt_impl(u, v, cfg, ws);
    if (dt_stable < cfg.dt_min)
      throw numeric_error("run: stable dt " + std::to_string(dt_stable) +
                          " fell below dt_min; explicit scheme effectively degenerate");
    const double next_target = targets[target_idx];
    double dt = dt_stable;
    bool hits_target = false;
    if (t + dt >= next_target - 1e-15 * std::max(1.0, next_target)) {
      dt = next_target - t;
      hits_target = true;
    }

    std::size_t clamped = 0;
    u = step_u_impl(u, v, dt, cfg, ws, &clamped);
    v = step_v_impl(v, u, dt, cfg, ws, nullptr);
    t = hits_target ? next_target : t + dt;
    u.time = t;
    v.time = t;
    ++step;
    res.u.dt_history.push_back(dt);
    res.v.dt_history.push_back(dt);

    StepReport rep;
    rep.step = step;
    rep.t = t;
    rep.dt_used = dt;
    rep.mass_u = serial_sum(u.values) * h_meas;
    rep.mass_v = serial_sum(v.values) * h_meas;
    double mn = u.values[0], mx = u.values[0];
    for (double x : u.values) {
      mn = std::min(mn, x);
      mx = std::max(mx, x);
    }
    rep.min_u = mn;
    rep.max_u = mx;
    rep.max_v_grad = max_abs_gradient(v, ws.nb);
    rep.clamped_cells = clamped;
    res.reports.push_back(rep);

    if (hits_target) {
      res.u.push(u);
      res.v.push(v);
      ++target_idx;
    }
  }
  return res;
}

}  // namespace fdlab
