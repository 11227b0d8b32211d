#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "fdlab/errors.hpp"
#include "fdlab/io.hpp"

using namespace fdlab;
namespace fs = std::filesystem;

namespace {

const char* kValidConfig = R"(
# minimal valid run
dim = 1
extent = 2.0
cells_per_dim = 128
m = 0.6
q_exp = 1.2
chi = 0.5
decay_rate = 1.0
t_end = 0.01
snapshot_interval = 0.005
ic_u = gaussian
ic_u.amplitude = 1.0
ic_u.width = 0.6
ic_v = gaussian
ic_v.amplitude = 0.0
seed = 42
)";

RunConfig parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

}  // namespace

TEST_CASE("run config: valid file parses") {
  const RunConfig cfg = parse_string(kValidConfig);
  CHECK(cfg.dim == 1);
  CHECK(cfg.cells_per_dim == 128);
  CHECK(cfg.solver.params.m == 0.6);
  CHECK(cfg.solver.params.chi == 0.5);
  CHECK(cfg.ic_u.kind == InitialCondition::Kind::Gaussian);
  CHECK(cfg.seed == 42);
}

TEST_CASE("run config: unknown keys are errors") {
  try {
    parse_string(std::string(kValidConfig) + "\nmystery_knob = 3\n");
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("mystery_knob") != std::string::npos);
  }
}

TEST_CASE("run config: m = 1.5 names the violated inequality") {
  std::string bad = kValidConfig;
  bad.replace(bad.find("m = 0.6"), 7, "m = 1.5");
  try {
    parse_string(bad);
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("m < 1") != std::string::npos);
  }
}

TEST_CASE("run config: window checks name their inequality") {
  std::string bad = kValidConfig;
  bad.replace(bad.find("cells_per_dim = 128"), 19, "cells_per_dim = 7  ");
  try {
    parse_string(bad);
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("cells_per_dim >= 8") != std::string::npos);
  }

  std::string badq = kValidConfig;
  badq.replace(badq.find("q_exp = 1.2"), 11, "q_exp = 9.0");
  try {
    parse_string(badq);
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("(m+1)(N+2)/(2N)") != std::string::npos);
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  const Domain d = make_domain(2, 1.5, 16);
  ScalarField f = make_field(d, 0.375);
  std::mt19937_64 rng(12345);
  for (double& v : f.values) {
    const std::uint64_t bits = rng();
    // random finite doubles, including tiny and denormal-ish values
    v = static_cast<double>(bits >> 11) * 0x1.0p-53 * std::pow(10.0, (bits % 19) - 9.0);
  }
  const fs::path path = fs::temp_directory_path() / "fdlab_test_ckpt.bin";
  write_checkpoint(path, f, "u");
  std::string name;
  const ScalarField g = read_checkpoint(path, &name);
  CHECK(name == "u");
  CHECK(g.domain == d);
  CHECK(g.time == f.time);
  REQUIRE(g.values.size() == f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(g.values[i] == f.values[i]);

  // second write produces identical bytes
  const fs::path path2 = fs::temp_directory_path() / "fdlab_test_ckpt2.bin";
  write_checkpoint(path2, f, "u");
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("format_g17 and step CSV are deterministic") {
  CHECK(format_g17(0.1) == "0.10000000000000001");
  CHECK(format_g17(1.0) == "1");
  CHECK(format_g17(1e-300) == "1.0000000000000001e-300");

  StepReport r;
  r.step = 3;
  r.t = 0.125;
  r.dt_used = 1e-6;
  r.mass_u = 0.5;
  r.mass_v = 0.25;
  r.min_u = 0.0;
  r.max_u = 1.75;
  const std::string csv = step_csv({r});
  CHECK(csv == "step,t,dt,mass_u,mass_v,min_u,max_u\n"
               "3,0.125,9.9999999999999995e-07,0.5,0.25,0,1.75\n");
  const std::string csv2 = step_csv({r});
  CHECK(csv == csv2);
}

TEST_CASE("initial conditions: gaussian, barenblatt mass, file mismatch") {
  const Domain d = make_domain(1, 2.0, 256);

  InitialCondition g;
  g.kind = InitialCondition::Kind::Gaussian;
  g.amplitude = 2.0;
  g.width = 0.5;
  const ScalarField fg = build_initial_condition(d, g, 0.5);
  double max_v = 0.0;
  for (double v : fg.values) max_v = std::max(max_v, v);
  CHECK(max_v <= 2.0);
  CHECK(max_v >= 2.0 * std::exp(-d.spacing * d.spacing / 2.0) * 0.99);

  InitialCondition b;
  b.kind = InitialCondition::Kind::Barenblatt;
  b.mass = 0.5;
  b.t_offset = 0.1;
  const ScalarField fb = build_initial_condition(d, b, 0.5);
  double mass = 0.0;
  for (double v : fb.values) mass += v;
  mass *= d.cell_measure();
  CHECK(mass == doctest::Approx(0.5).epsilon(2e-3));  // box-truncated tail

  // file IC with mismatched domain is rejected
  const fs::path path = fs::temp_directory_path() / "fdlab_test_ic.bin";
  write_checkpoint(path, make_field(make_domain(1, 2.0, 128), 0.0, 1.0), "u");
  InitialCondition fic;
  fic.kind = InitialCondition::Kind::File;
  fic.path = path.string();
  CHECK_THROWS_AS(build_initial_condition(d, fic, 0.5), config_error);
  fs::remove(path);
}
