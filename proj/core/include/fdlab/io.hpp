#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fdlab/grid.hpp"
#include "fdlab/solver.hpp"

namespace fdlab {

struct InitialCondition {
  enum class Kind { Gaussian, Barenblatt, File };
  Kind kind = Kind::Gaussian;
  // gaussian
  double amplitude = 1.0;
  double width = 0.5;
  std::array<double, 3> center{0.0, 0.0, 0.0};
  // barenblatt
  double mass = 1.0;
  double t_offset = 0.01;
  // file
  std::string path;
};

/// Flat key=value run configuration. Unknown keys are errors; every
/// ModelParams window is enforced at parse time with the violated inequality
/// named in the message.
struct RunConfig {
  int dim = 1;
  double extent = 1.0;
  int cells_per_dim = 64;
  SolverConfig solver;  // params + stepping knobs
  InitialCondition ic_u;
  InitialCondition ic_v;
  std::string out_dir;
  std::uint64_t seed = 0;
};

RunConfig parse_run_config(std::istream& in);
RunConfig parse_run_config_file(const std::filesystem::path& path);

Domain domain_from_config(const RunConfig& cfg);
/// Barenblatt initial data uses the model's diffusion exponent m.
ScalarField build_initial_condition(const Domain& d, const InitialCondition& ic, double m);

/// Binary checkpoint: u32 little-endian header length, one JSON header line
/// (dim, cells_per_dim, extent, time, field, endianness "LE", type "f64"),
/// then the raw little-endian f64 array, row-major. Round-trips bit-exactly.
void write_checkpoint(const std::filesystem::path& path, const ScalarField& f,
                      const std::string& field_name);
ScalarField read_checkpoint(const std::filesystem::path& path, std::string* field_name = nullptr);

/// %.17g with a fixed C locale; all CSV/NDJSON numbers go through this.
std::string format_g17(double v);

/// step-report CSV, header "step,t,dt,mass_u,mass_v,min_u,max_u".
std::string step_csv(const std::vector<StepReport>& reports);

}  // namespace fdlab
