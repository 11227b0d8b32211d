#pragma once

#include <cstddef>
#include <vector>

#include "fdlab/grid.hpp"
#include "fdlab/operators.hpp"

namespace fdlab {

struct SolverConfig {
  ModelParams params;
  double u_floor = 0.0;           // <= 0 requests auto: 1e-4 * max(u0); used ONLY in cfl_dt
  double cfl_safety = 0.4;        // in (0, 1]
  double t_end = 0.1;
  double snapshot_interval = 0.0; // <= 0: snapshot only at t = 0 and t_end
  double v_solver_tol = 1e-10;    // CG residual bound relative to ||rhs||_2
  double dt_min = 1e-13;          // cfl_dt below this aborts the run
  int cg_max_iters = 100000;
  int threads = 1;                // write-disjoint loops only; results are thread-count invariant
};

struct StepReport {
  int step = 0;
  double t = 0.0;
  double dt_used = 0.0;
  double mass_u = 0.0;  // sum(u) * h^N
  double mass_v = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double max_v_grad = 0.0;
  std::size_t clamped_cells = 0;  // roundoff negatives clamped to 0 this step
};

/// Stability bound for the explicit u-update:
///   dt = cfl_safety * h^2 / (2 N max_cells(m u_eff^{m-1})
///                            + h * max|grad v| * chi * max(u)^{q-1} * N),
/// with u_eff = max(u_floor, u) cellwise. The floor enters only here, never
/// the fluxes. Requires cfg.u_floor > 0 (run() resolves the auto default).
double cfl_dt(const ScalarField& u, const ScalarField& v, const SolverConfig& cfg);

/// Explicit conservative update u + dt*div(diffusive - drift). Preserves the
/// cell sum to roundoff; negatives in [-1e-13*max(u), 0) are clamped to zero
/// (count reported via `clamped`), anything lower throws numeric_error.
ScalarField step_u(const ScalarField& u, const ScalarField& v, double dt, const SolverConfig& cfg,
                   std::size_t* clamped = nullptr);

/// Backward-Euler solve of (I - dt*lap + dt*alpha) v_new = v + dt*u by
/// conjugate gradients to residual <= v_solver_tol * ||rhs||_2.
ScalarField step_v(const ScalarField& v, const ScalarField& u, double dt, const SolverConfig& cfg,
                   int* iterations = nullptr);

struct RunResult {
  FieldSeries u;
  FieldSeries v;
  std::vector<StepReport> reports;
};

/// Alternating step_u / step_v with shared dt from cfl_dt. Snapshots are
/// aligned by shrinking the last dt before each target; t = 0 and t_end are
/// always included. Snapshot times in the output are exact target values.
RunResult run(const ScalarField& u0, const ScalarField& v0, SolverConfig cfg);

}  // namespace fdlab
