#pragma once

#include <cstdint>
#include <optional>

#include "fdlab/grid.hpp"

namespace fdlab {

struct SpaceTimePoint {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  double t = 0.0;
};

/// Intrinsic parabolic distance |x1 - x2| + M^{(m-1)/2} |t1 - t2|^{1/2}
/// (spatial part is the periodic-minimal Euclidean norm). M = 0 falls back to
/// a unit time weight; callers should treat the fit as flagged then.
double intrinsic_distance(const SpaceTimePoint& p1, const SpaceTimePoint& p2, double M, double m,
                          const Domain& d);

struct SamplerConfig {
  std::uint64_t seed = 0;  // required for reproducibility; recorded in the fit
  int pair_count = 4000;
  int bin_count = 24;
};

struct HolderFit {
  double holder_exponent = 0.0;  // capped at 1
  double prefactor = 0.0;
  double sup_norm = 0.0;         // max |u| over the sampled window
  int sample_count = 0;
  int usable_bins = 0;
  double residual_rms = 0.0;
  bool exact_constant = false;         // every sampled increment was zero
  bool degenerate_time_weight = false; // M = 0: time weight set to 1
  std::uint64_t seed = 0;
};

/// Upper-envelope regression of log|du| against log(intrinsic distance):
/// random point pairs inside the region (cube cells, snapshots with t >=
/// t_min), binned by log d, per-bin max of log|du|, least-squares line through
/// the bin maxima. Bins below 3h or below the time resolution are dropped.
/// Throws when fewer than 5 usable bins remain.
HolderFit holder_fit(const FieldSeries& u, const Cube& region, double t_min, double m,
                     const SamplerConfig& cfg);

}  // namespace fdlab
