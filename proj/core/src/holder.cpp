#include "fdlab/holder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "fdlab/errors.hpp"

namespace fdlab {

namespace {

double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace

double intrinsic_distance(const SpaceTimePoint& p1, const SpaceTimePoint& p2, double M, double m,
                          const Domain& d) {
  double r2 = 0.0;
  for (int a = 0; a < d.dim; ++a) {
    const double dx = d.wrap(p1.x[a] - p2.x[a]);
    r2 += dx * dx;
  }
  const double weight = M > 0.0 ? std::pow(M, 0.5 * (m - 1.0)) : 1.0;
  return std::sqrt(r2) + weight * std::sqrt(std::abs(p1.t - p2.t));
}

HolderFit holder_fit(const FieldSeries& u, const Cube& region, double t_min, double m,
                     const SamplerConfig& cfg) {
  const Domain& d = u.domain();
  if (!(region.radius < d.extent))
    throw std::invalid_argument("holder_fit: region must be strictly interior in space");
  if (!(t_min > 0.0) && u.snapshots.size() > 1)
    throw std::invalid_argument("holder_fit: region must be bounded away from t = 0");
  if (cfg.pair_count < 200)
    throw std::invalid_argument("holder_fit: need at least 200 sample pairs");

  const auto cells = cube_cells(d, region);
  std::vector<std::size_t> snaps;
  for (std::size_t k = 0; k < u.snapshots.size(); ++k)
    if (u.snapshots.size() == 1 || u.snapshots[k].time >= t_min) snaps.push_back(k);
  if (snaps.empty()) throw std::invalid_argument("holder_fit: no snapshots at or after t_min");

  HolderFit fit;
  fit.seed = cfg.seed;

  double M = 0.0;
  for (std::size_t k : snaps)
    for (std::size_t i : cells) M = std::max(M, std::abs(u.snapshots[k].values[i]));
  fit.sup_norm = M;
  fit.degenerate_time_weight = (M == 0.0);

  // sub-resolution floors
  double snap_gap = 0.0;
  if (snaps.size() > 1) {
    snap_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < snaps.size(); ++i)
      snap_gap = std::min(snap_gap, u.snapshots[snaps[i + 1]].time - u.snapshots[snaps[i]].time);
  }
  const double time_weight = M > 0.0 ? std::pow(M, 0.5 * (m - 1.0)) : 1.0;
  const double d_floor = std::max(3.0 * d.spacing, snap_gap > 0.0 ? std::sqrt(snap_gap) * time_weight : 0.0);

  std::mt19937_64 rng(cfg.seed);
  auto pick_point = [&](SpaceTimePoint& p, std::size_t& snap_idx, std::size_t& cell_idx) {
    cell_idx = cells[static_cast<std::size_t>(uniform01(rng) * cells.size()) % cells.size()];
    snap_idx = snaps[static_cast<std::size_t>(uniform01(rng) * snaps.size()) % snaps.size()];
    const auto x = d.cell_center(cell_idx);
    p.x = x;
    p.t = u.snapshots[snap_idx].time;
  };

  std::vector<double> log_d, log_du;
  log_d.reserve(cfg.pair_count);
  log_du.reserve(cfg.pair_count);
  bool any_nonzero = false;
  for (int n = 0; n < cfg.pair_count; ++n) {
    SpaceTimePoint p1, p2;
    std::size_t s1, c1, s2, c2;
    pick_point(p1, s1, c1);
    pick_point(p2, s2, c2);
    if (s1 == s2 && c1 == c2) continue;
    const double dist = intrinsic_distance(p1, p2, M, m, d);
    if (dist < d_floor) continue;
    const double du = std::abs(u.snapshots[s1].values[c1] - u.snapshots[s2].values[c2]);
    fit.sample_count++;
    if (du == 0.0) continue;  // never enters the upper envelope
    any_nonzero = true;
    log_d.push_back(std::log(dist));
    log_du.push_back(std::log(du));
  }

  if (!any_nonzero) {
    fit.exact_constant = true;
    return fit;
  }

  const double lo = *std::min_element(log_d.begin(), log_d.end());
  const double hi = *std::max_element(log_d.begin(), log_d.end());
  const int nb = cfg.bin_count;
  const double width = (hi - lo) / nb;
  std::vector<double> bin_max(nb, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < log_d.size(); ++i) {
    int b = width > 0.0 ? static_cast<int>((log_d[i] - lo) / width) : 0;
    b = std::clamp(b, 0, nb - 1);
    bin_max[b] = std::max(bin_max[b], log_du[i]);
  }

  std::vector<double> xs, ys;
  for (int b = 0; b < nb; ++b) {
    if (std::isfinite(bin_max[b])) {
      xs.push_back(lo + (b + 0.5) * width);
      ys.push_back(bin_max[b]);
    }
  }
  fit.usable_bins = static_cast<int>(xs.size());
  if (fit.usable_bins < 5)
    throw numeric_error("holder_fit: fewer than 5 usable distance bins (" +
                        std::to_string(fit.usable_bins) + ")");

  // least squares on the bin envelope
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / n);
  fit.holder_exponent = std::min(slope, 1.0);
  fit.prefactor = std::exp(intercept);
  return fit;
}

}  // namespace fdlab
