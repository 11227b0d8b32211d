#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fdlab/errors.hpp"
#include "fdlab/lab.hpp"

using namespace fdlab;
namespace fs = std::filesystem;

namespace {

const char* kRunConfig = R"(
dim = 1
extent = 2.0
cells_per_dim = 128
m = 0.6
q_exp = 1.2
chi = 0.5
decay_rate = 1.0
t_end = 0.02
snapshot_interval = 0.002
ic_u = gaussian
ic_u.amplitude = 1.0
ic_u.width = 0.65
ic_v = gaussian
ic_v.amplitude = 0.0
)";

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LoadedRun make_run(const fs::path& dir) {
  std::istringstream in(kRunConfig);
  const RunConfig cfg = parse_run_config(in);
  simulate_to_dir(cfg, kRunConfig, dir);
  return load_run(dir);
}

}  // namespace

TEST_CASE("simulate writes a loadable, deterministic run directory") {
  const fs::path dir1 = fresh_dir("fdlab_run_a");
  const fs::path dir2 = fresh_dir("fdlab_run_b");
  std::istringstream in(kRunConfig);
  const RunConfig cfg = parse_run_config(in);
  simulate_to_dir(cfg, kRunConfig, dir1);
  simulate_to_dir(cfg, kRunConfig, dir2);

  CHECK(fs::exists(dir1 / "config.txt"));
  CHECK(fs::exists(dir1 / "steps.csv"));
  CHECK(fs::exists(dir1 / "snapshots.csv"));
  CHECK(fs::exists(dir1 / "u_000000.bin"));
  CHECK(fs::exists(dir1 / "v_000000.bin"));

  // byte-identical reruns
  CHECK(slurp(dir1 / "steps.csv") == slurp(dir2 / "steps.csv"));
  CHECK(slurp(dir1 / "snapshots.csv") == slurp(dir2 / "snapshots.csv"));
  CHECK(slurp(dir1 / "u_000005.bin") == slurp(dir2 / "u_000005.bin"));

  const LoadedRun run = load_run(dir1);
  CHECK(run.u.snapshots.size() == 11);  // 0, 0.002, ..., 0.02
  CHECK(run.u.last_time() == 0.02);
  CHECK(run.config.solver.params.chi == 0.5);

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("simulate with t_end = 0 writes exactly one snapshot pair") {
  const fs::path dir = fresh_dir("fdlab_run_t0");
  std::string text = kRunConfig;
  text.replace(text.find("t_end = 0.02"), 12, "t_end = 0.0 ");
  std::istringstream in(text);
  const RunConfig cfg = parse_run_config(in);
  simulate_to_dir(cfg, text, dir);
  const LoadedRun run = load_run(dir);
  CHECK(run.u.snapshots.size() == 1);
  CHECK(run.v.snapshots.size() == 1);
  CHECK(!fs::exists(dir / "u_000001.bin"));
  fs::remove_all(dir);
}

TEST_CASE("diagnose: empty list, NDJSON validity, deterministic replay") {
  const fs::path dir = fresh_dir("fdlab_run_diag");
  const LoadedRun run = make_run(dir);

  DiagnoseConfig empty;
  std::ostringstream out_empty;
  diagnose(run, empty, out_empty);
  CHECK(out_empty.str().empty());

  const char* diag_text = R"(
diagnostics = heat,embedding,energy_below,energy_above,log,levels,degiorgi_below,degiorgi_above,decay,propagation,shrinking,holder
center = 0.0
radius = 0.5
k_fracs = 0.3,0.5,0.7
cylinder_scales = 1.0,0.75,0.5
nu = 0.5
holder_seed = 1234
holder_pairs = 4000
holder_radius = 0.8
)";
  std::istringstream din(diag_text);
  const DiagnoseConfig dcfg = parse_diagnose_config(din);

  std::ostringstream out1, out2;
  diagnose(run, dcfg, out1);
  diagnose(run, dcfg, out2);
  CHECK(out1.str() == out2.str());  // byte-identical replay
  CHECK(!out1.str().empty());

  // every line parses as JSON with a type tag
  std::istringstream lines(out1.str());
  std::string line;
  int n_records = 0, n_energy = 0, n_decay_levels = 0;
  bool holder_has_seed = false;
  while (std::getline(lines, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec.contains("type"));
    ++n_records;
    if (rec["type"] == "energy_budget") {
      ++n_energy;
      CHECK(rec.contains("fitted_constant"));
      CHECK(rec.contains("I_d"));
    }
    if (rec["type"] == "decay_level") ++n_decay_levels;
    if (rec["type"] == "holder_fit") holder_has_seed = rec.contains("seed") &&
                                                       rec["seed"].get<std::uint64_t>() == 1234;
  }
  CHECK(n_records > 10);
  CHECK(n_energy == 18);  // 2 modes x 3 scales x 3 fractions
  CHECK(n_decay_levels >= 1);
  CHECK(holder_has_seed);

  fs::remove_all(dir);
}

TEST_CASE("diagnose: unknown diagnostic and unknown keys rejected") {
  std::istringstream bad1("diagnostics = zebra\n");
  CHECK_THROWS_AS(parse_diagnose_config(bad1), config_error);
  std::istringstream bad2("diagnostics = heat\nwhat = 1\n");
  CHECK_THROWS_AS(parse_diagnose_config(bad2), config_error);
}

TEST_CASE("diagnose: decay on a single-snapshot run emits a truncated trace") {
  const fs::path dir = fresh_dir("fdlab_run_single");
  std::string text = kRunConfig;
  text.replace(text.find("t_end = 0.02"), 12, "t_end = 0.0 ");
  std::istringstream in(text);
  const RunConfig cfg = parse_run_config(in);
  simulate_to_dir(cfg, text, dir);
  const LoadedRun run = load_run(dir);

  std::istringstream din("diagnostics = decay\nradius = 0.5\nnu = 0.5\n");
  const DiagnoseConfig dcfg = parse_diagnose_config(din);
  std::ostringstream out;
  diagnose(run, dcfg, out);
  bool saw_truncated = false;
  std::istringstream lines(out.str());
  std::string line;
  while (std::getline(lines, line)) {
    const auto rec = nlohmann::json::parse(line);
    if (rec["type"] == "decay_summary") saw_truncated = rec["truncated"].get<bool>();
  }
  CHECK(saw_truncated);
  fs::remove_all(dir);
}

TEST_CASE("lemma sweeps: zero counts pass vacuously, same seed same summary") {
  const auto zero = run_lemma_sweeps(7, 0, 0, 0);
  CHECK(zero.passed);

  const auto s1 = run_lemma_sweeps(42, 20, 50, 4);
  const auto s2 = run_lemma_sweeps(42, 20, 50, 4);
  CHECK(s1.passed);
  CHECK(s1.geo_converged == s2.geo_converged);
  CHECK(s1.iso_worst_gamma == s2.iso_worst_gamma);
  CHECK(s1.embed_worst_gamma == s2.embed_worst_gamma);

  std::ostringstream o1, o2;
  print_lemma_summary(s1, o1);
  print_lemma_summary(s2, o2);
  CHECK(o1.str() == o2.str());
}

TEST_CASE("convergence study: guards and a 2-level run") {
  const char* conv_config = R"(
dim = 1
extent = 4.0
cells_per_dim = 128
m = 0.5
q_exp = 1.2
chi = 0.0
decay_rate = 1.0
u_floor = 5e-5
t_end = 0.02
ic_u = barenblatt
ic_u.mass = 1.0
ic_u.t_offset = 0.05
ic_v = gaussian
ic_v.amplitude = 0.0
)";
  std::istringstream in(conv_config);
  RunConfig cfg = parse_run_config(in);

  RunConfig with_chi = cfg;
  with_chi.solver.params.chi = 0.1;
  CHECK_THROWS_AS(convergence_study(with_chi, 2), config_error);

  RunConfig wrong_ic = cfg;
  wrong_ic.ic_u.kind = InitialCondition::Kind::Gaussian;
  CHECK_THROWS_AS(convergence_study(wrong_ic, 2), config_error);

  const auto rows = convergence_study(cfg, 2);
  REQUIRE(rows.size() == 2);
  CHECK(!rows[0].observed_order.has_value());
  REQUIRE(rows[1].observed_order.has_value());
  CHECK(rows[1].l1_error < rows[0].l1_error);
  CHECK(*rows[1].observed_order >= 0.7);

  const std::string csv = convergence_csv(rows);
  CHECK(csv.substr(0, 26) == "h,l1_error,observed_order\n");
}
