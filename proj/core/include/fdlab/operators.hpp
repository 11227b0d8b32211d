#pragma once

#include "fdlab/grid.hpp"

namespace fdlab {

/// PDE constants of the coupled system
///   u_t = div(grad u^m) - div(chi u^{q_exp-1} grad v),
///   v_t = lap v - decay_rate * v + u.
struct ModelParams {
  double m = 0.5;          // diffusion exponent, (N-2)_+/(N+2) < m < 1
  double q_exp = 1.2;      // drift exponent, 1 < q_exp < (m+1)(N+2)/(2N)
  double chi = 0.0;        // drift strength (chi = 0 decouples u from v)
  double decay_rate = 1.0; // v-equation damping
  int dim = 1;
};

/// Throws config_error naming the violated inequality verbatim.
/// chi = 0 is admitted as the decoupled oracle mode.
void validate_params(const ModelParams& p);

/// Face-centered values, one per cell face per axis; face[a][i] sits between
/// cell i and its +1 neighbor along axis a (each face stored once).
struct FluxField {
  Domain domain;
  std::array<std::vector<double>, 3> face;
};

FluxField make_flux(const Domain& d);

/// face[a][i] = (w[i+e_a] - w[i]) / h, periodic wrap.
FluxField gradient(const ScalarField& w);

/// Singular diffusion flux computed as differences of powers,
/// face = ((u_+)^m - (u_-)^m)/h; u^{m-1} never appears.
FluxField diffusive_flux(const ScalarField& u, double m);

/// Donor-cell upwind chemotactic flux chi * u_up^{q-1} * (face gradient of v).
/// The donor is the cell mass leaves, i.e. the lower-v side of the face;
/// a zero face gradient gives zero flux regardless of donor.
FluxField drift_flux(const ScalarField& u, const ScalarField& v, const ModelParams& p);

/// cell = sum over axes of (F_right - F_left)/h. Telescopes to a zero global
/// sum on the periodic box up to roundoff.
ScalarField divergence(const FluxField& f);

double max_abs_face(const FluxField& f);

/// a.face -= b.face
void flux_sub_inplace(FluxField& a, const FluxField& b);

/// Cellwise gradient magnitude |grad w| from per-axis face averages
/// (second-order centered). Used by norm and level-set quadratures.
std::vector<double> cell_gradient_magnitude(const ScalarField& w);

}  // namespace fdlab
