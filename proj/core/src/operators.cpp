#include "fdlab/operators.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fdlab/errors.hpp"

namespace fdlab {

namespace {

double positive_power(double u, double e) {
  if (e == 0.5) return std::sqrt(u);  // hot path for the m = 1/2 runs
  if (e == 1.0) return u;
  return std::pow(u, e);
}

}  // namespace

void validate_params(const ModelParams& p) {
  const int N = p.dim;
  if (N < 1 || N > 3) throw config_error("dim must be in {1, 2, 3}");
  const double m_lo = std::max(0.0, static_cast<double>(N - 2)) / static_cast<double>(N + 2);
  if (!(p.m > m_lo && p.m < 1.0)) {
    std::ostringstream os;
    os << "m = " << p.m << " violates (N-2)_+/(N+2) < m < 1 (window (" << m_lo << ", 1) for N=" << N
       << ")";
    throw config_error(os.str());
  }
  const double q_hi = (p.m + 1.0) * static_cast<double>(N + 2) / (2.0 * N);
  if (!(p.q_exp > 1.0 && p.q_exp < q_hi)) {
    std::ostringstream os;
    os << "q_exp = " << p.q_exp << " violates 1 < q_exp < (m+1)(N+2)/(2N) (window (1, " << q_hi
       << ") for m=" << p.m << ", N=" << N << ")";
    throw config_error(os.str());
  }
  if (!(p.chi >= 0.0)) throw config_error("chi violates chi >= 0");
  if (!(p.decay_rate > 0.0)) throw config_error("decay_rate violates decay_rate > 0");
}

FluxField make_flux(const Domain& d) {
  FluxField f;
  f.domain = d;
  for (int a = 0; a < d.dim; ++a) f.face[a].assign(d.cell_count(), 0.0);
  return f;
}

FluxField gradient(const ScalarField& w) {
  const Domain& d = w.domain;
  const NeighborTable nb = build_neighbors(d);
  FluxField g = make_flux(d);
  const double inv_h = 1.0 / d.spacing;
  for (int a = 0; a < d.dim; ++a) {
    const auto& plus = nb.plus[a];
    auto& face = g.face[a];
    for (std::size_t i = 0; i < face.size(); ++i)
      face[i] = (w.values[plus[i]] - w.values[i]) * inv_h;
  }
  return g;
}

FluxField diffusive_flux(const ScalarField& u, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("diffusive_flux: m must be > 0");
  for (double v : u.values)
    if (!(v >= 0.0)) throw numeric_error("diffusive_flux: negative u value");
  ScalarField powered = u;
  for (double& v : powered.values) v = positive_power(v, m);
  return gradient(powered);
}

FluxField drift_flux(const ScalarField& u, const ScalarField& v, const ModelParams& p) {
  const Domain& d = u.domain;
  if (!(v.domain == d)) throw std::invalid_argument("drift_flux: domain mismatch");
  for (double x : u.values)
    if (!(x >= 0.0)) throw numeric_error("drift_flux: negative u value");

  std::vector<double> upow(u.values.size());
  const double e = p.q_exp - 1.0;
  for (std::size_t i = 0; i < upow.size(); ++i) upow[i] = positive_power(u.values[i], e);

  const NeighborTable nb = build_neighbors(d);
  FluxField f = make_flux(d);
  const double inv_h = 1.0 / d.spacing;
  for (int a = 0; a < d.dim; ++a) {
    const auto& plus = nb.plus[a];
    auto& face = f.face[a];
    for (std::size_t i = 0; i < face.size(); ++i) {
      const double g = (v.values[plus[i]] - v.values[i]) * inv_h;
      // chi multiplies last so the flux is exactly linear in chi
      if (g > 0.0)
        face[i] = p.chi * (upow[i] * g);
      else if (g < 0.0)
        face[i] = p.chi * (upow[plus[i]] * g);
      // g == 0 -> zero flux, donor irrelevant
    }
  }
  return f;
}

ScalarField divergence(const FluxField& f) {
  const Domain& d = f.domain;
  const NeighborTable nb = build_neighbors(d);
  ScalarField out = make_field(d);
  const double inv_h = 1.0 / d.spacing;
  for (int a = 0; a < d.dim; ++a) {
    const auto& minus = nb.minus[a];
    const auto& face = f.face[a];
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] += (face[i] - face[minus[i]]) * inv_h;
  }
  return out;
}

double max_abs_face(const FluxField& f) {
  double m = 0.0;
  for (int a = 0; a < f.domain.dim; ++a)
    for (double v : f.face[a]) m = std::max(m, std::abs(v));
  return m;
}

void flux_sub_inplace(FluxField& a, const FluxField& b) {
  for (int ax = 0; ax < a.domain.dim; ++ax)
    for (std::size_t i = 0; i < a.face[ax].size(); ++i) a.face[ax][i] -= b.face[ax][i];
}

std::vector<double> cell_gradient_magnitude(const ScalarField& w) {
  const Domain& d = w.domain;
  const FluxField g = gradient(w);
  const NeighborTable nb = build_neighbors(d);
  std::vector<double> mag(d.cell_count(), 0.0);
  for (std::size_t i = 0; i < mag.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < d.dim; ++a) {
      const double c = 0.5 * (g.face[a][i] + g.face[a][nb.minus[a][i]]);
      s += c * c;
    }
    mag[i] = std::sqrt(s);
  }
  return mag;
}

}  // namespace fdlab
