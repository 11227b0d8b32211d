// fdlab: simulate the fast-diffusion chemotaxis system and run the
// regularity diagnostics over stored runs.
//
// Exit codes: 0 ok, 1 config error, 2 io/data error, 3 numeric error.

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fdlab/errors.hpp"
#include "fdlab/lab.hpp"

namespace {

int guarded(int (*body)(void*), void* ctx) {
  try {
    return body(ctx);
  } catch (const fdlab::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const fdlab::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const fdlab::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fdlab::io_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SimulateArgs {
  std::string config;
  std::string out;
  int threads = 1;
  long long seed = -1;
};

struct DiagnoseArgs {
  std::string run_dir;
  std::string config;
  std::string out;
};

struct LemmasArgs {
  unsigned long long seed = 0;
  int counts = -1;
};

struct ConvergenceArgs {
  std::string config;
  int levels = 3;
  std::string out;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fdlab: conservative solver for the fast-diffusion chemotaxis system plus\n"
      "De Giorgi-style regularity diagnostics (energy budgets, level-set\n"
      "iteration drivers, oscillation decay traces, Holder fits).\n\n"
      "Exit codes: 0 ok, 1 config error, 2 io error, 3 numeric error."};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "run the solver and write checkpoints + step CSV");
  sim_cmd->add_option("--config", sim.config, "run configuration (key = value)")->required();
  sim_cmd->add_option("--out", sim.out, "output directory")->required();
  sim_cmd->add_option("--threads", sim.threads, "worker threads for the update loops");
  sim_cmd->add_option("--seed", sim.seed, "override the config seed");

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "emit NDJSON diagnostics over a stored run");
  diag_cmd->add_option("--run", diag.run_dir, "directory written by simulate")->required();
  diag_cmd->add_option("--config", diag.config, "diagnostic request (key = value)")->required();
  diag_cmd->add_option("--out", diag.out, "write the NDJSON stream here instead of stdout");

  LemmasArgs lem;
  auto* lem_cmd = app.add_subcommand("lemmas", "randomized sweeps of the iteration lemmas");
  lem_cmd->add_option("--seed", lem.seed, "RNG seed");
  lem_cmd->add_option("--counts", lem.counts,
                      "case count scale (default: 100 geometric, 1000 isoperimetric, 40 embedding)");

  ConvergenceArgs conv;
  auto* conv_cmd =
      app.add_subcommand("convergence", "Barenblatt refinement study (requires chi = 0)");
  conv_cmd->add_option("--config", conv.config, "base run configuration")->required();
  conv_cmd->add_option("--levels", conv.levels, "number of refinement levels");
  conv_cmd->add_option("--out", conv.out, "write the CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (sim_cmd->parsed()) {
    return guarded(
        [](void* p) {
          auto& a = *static_cast<SimulateArgs*>(p);
          const std::string bytes = slurp(a.config);
          std::istringstream in(bytes);
          fdlab::RunConfig cfg = fdlab::parse_run_config(in);
          cfg.solver.threads = a.threads;
          if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
          fdlab::simulate_to_dir(cfg, bytes, a.out);
          return 0;
        },
        &sim);
  }
  if (diag_cmd->parsed()) {
    return guarded(
        [](void* p) {
          auto& a = *static_cast<DiagnoseArgs*>(p);
          const fdlab::LoadedRun run = fdlab::load_run(a.run_dir);
          const fdlab::DiagnoseConfig cfg = fdlab::parse_diagnose_config_file(a.config);
          if (a.out.empty()) {
            fdlab::diagnose(run, cfg, std::cout);
          } else {
            std::ofstream out(a.out, std::ios::binary);
            if (!out) throw fdlab::io_error("cannot open " + a.out);
            fdlab::diagnose(run, cfg, out);
          }
          return 0;
        },
        &diag);
  }
  if (lem_cmd->parsed()) {
    return guarded(
        [](void* p) {
          auto& a = *static_cast<LemmasArgs*>(p);
          int geo = 100, iso = 1000, embed = 40;
          if (a.counts >= 0) {
            geo = a.counts;
            iso = a.counts;
            embed = std::min(a.counts, 40);
          }
          const auto sum = fdlab::run_lemma_sweeps(a.seed, geo, iso, embed);
          fdlab::print_lemma_summary(sum, std::cout);
          return sum.passed ? 0 : 3;
        },
        &lem);
  }
  if (conv_cmd->parsed()) {
    return guarded(
        [](void* p) {
          auto& a = *static_cast<ConvergenceArgs*>(p);
          const fdlab::RunConfig cfg = fdlab::parse_run_config_file(a.config);
          const auto rows = fdlab::convergence_study(cfg, a.levels);
          const std::string csv = fdlab::convergence_csv(rows);
          if (a.out.empty()) {
            std::cout << csv;
          } else {
            std::ofstream out(a.out, std::ios::binary);
            if (!out) throw fdlab::io_error("cannot open " + a.out);
            out << csv;
          }
          return 0;
        },
        &conv);
  }
  return 0;
}
