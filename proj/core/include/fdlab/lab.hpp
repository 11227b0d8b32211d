#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdlab/io.hpp"
#include "fdlab/solver.hpp"

namespace fdlab {

/// Runs the solver for a parsed config and persists checkpoints, the step CSV
/// and a snapshot manifest under out_dir. The original config bytes are
/// copied verbatim so the run directory is self-describing.
void simulate_to_dir(const RunConfig& cfg, const std::string& config_bytes,
                     const std::filesystem::path& out_dir);

struct LoadedRun {
  RunConfig config;
  FieldSeries u;
  FieldSeries v;
};
LoadedRun load_run(const std::filesystem::path& run_dir);

/// Flat key=value diagnostic request; every record in the NDJSON stream is
/// tagged with its type, parameters and fitted constants.
struct DiagnoseConfig {
  std::vector<std::string> diagnostics;  // ordered
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double radius = 0.25;
  std::optional<double> t_end;   // default: last snapshot time
  std::optional<double> theta;   // default: omega^{1-m} measured over the cube
  std::vector<double> k_fracs{0.3, 0.5, 0.7};
  std::vector<double> cylinder_scales{1.0, 0.75, 0.5};
  int cutoff_level = 0;
  double l_exp = 1.5;
  double r_exp = 1.5;
  double c_log = 0.05;
  std::optional<double> nu;
  int n_star = 4;
  int q_star = 6;
  double lambda = 2.0;
  int n_levels = 4;
  double gamma_D = 1.0;
  std::uint64_t holder_seed = 0;
  int holder_pairs = 4000;
  int holder_bins = 24;
  std::optional<double> holder_radius;
  std::optional<double> holder_t_min;
};
DiagnoseConfig parse_diagnose_config(std::istream& in);
DiagnoseConfig parse_diagnose_config_file(const std::filesystem::path& path);

/// One NDJSON record per requested diagnostic, in request order.
void diagnose(const LoadedRun& run, const DiagnoseConfig& cfg, std::ostream& out);

// ---------------------------------------------------------------------------
// Randomized lemma sweeps (the `lemmas` subcommand)

struct LemmaSweepSummary {
  int geo_count = 0;
  int geo_converged = 0;
  bool geo_worked_instance = false;
  int iso_count = 0;
  int iso_checked = 0;   // non-null reports
  int iso_finite = 0;
  double iso_worst_gamma = 0.0;
  int embed_count = 0;
  int embed_finite = 0;
  double embed_worst_gamma = 0.0;
  double embed_scaling_error = 0.0;   // worst |gamma(lw)/gamma(w) - 1|
  double embed_refine_factor = 1.0;   // worst gamma ratio under h -> h/2
  bool passed = false;
};

LemmaSweepSummary run_lemma_sweeps(std::uint64_t seed, int geo_count, int iso_count,
                                   int embed_count);
void print_lemma_summary(const LemmaSweepSummary& s, std::ostream& out);

// ---------------------------------------------------------------------------
// Barenblatt refinement study (the `convergence` subcommand)

struct ConvergenceRow {
  double h = 0.0;
  double l1_error = 0.0;
  std::optional<double> observed_order;
};

/// Requires chi = 0 and a Barenblatt initial condition; doubles
/// cells_per_dim per level. Writes the CSV "h,l1_error,observed_order".
std::vector<ConvergenceRow> convergence_study(const RunConfig& base, int n_refinements);
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);

}  // namespace fdlab
