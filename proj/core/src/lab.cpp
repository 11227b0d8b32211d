#include "fdlab/lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fdlab/degiorgi.hpp"
#include "fdlab/errors.hpp"
#include "fdlab/functionals.hpp"
#include "fdlab/holder.hpp"
#include "fdlab/operators.hpp"
#include "fdlab/oracles.hpp"
#include "kv_file.hpp"

namespace fdlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using detail::KvFile;
using detail::read_kv;

// ---------------------------------------------------------------------------
// simulate / load

void simulate_to_dir(const RunConfig& cfg, const std::string& config_bytes,
                     const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory " + out_dir.string());

  const Domain d = domain_from_config(cfg);
  const ScalarField u0 = build_initial_condition(d, cfg.ic_u, cfg.solver.params.m);
  const ScalarField v0 = build_initial_condition(d, cfg.ic_v, cfg.solver.params.m);
  const RunResult res = run(u0, v0, cfg.solver);

  {
    std::ofstream out(out_dir / "config.txt", std::ios::binary);
    if (!out) throw io_error("cannot write config copy");
    out.write(config_bytes.data(), static_cast<std::streamsize>(config_bytes.size()));
  }
  std::string manifest = "index,t,u_file,v_file\n";
  char name[32];
  for (std::size_t i = 0; i < res.u.snapshots.size(); ++i) {
    std::snprintf(name, sizeof(name), "u_%06zu.bin", i);
    const std::string uf = name;
    std::snprintf(name, sizeof(name), "v_%06zu.bin", i);
    const std::string vf = name;
    write_checkpoint(out_dir / uf, res.u.snapshots[i], "u");
    write_checkpoint(out_dir / vf, res.v.snapshots[i], "v");
    manifest += std::to_string(i) + "," + format_g17(res.u.snapshots[i].time) + "," + uf + "," +
                vf + "\n";
  }
  {
    std::ofstream out(out_dir / "snapshots.csv", std::ios::binary);
    out << manifest;
  }
  {
    std::ofstream out(out_dir / "steps.csv", std::ios::binary);
    out << step_csv(res.reports);
  }
}

LoadedRun load_run(const fs::path& run_dir) {
  LoadedRun lr;
  lr.config = parse_run_config_file(run_dir / "config.txt");

  std::ifstream manifest(run_dir / "snapshots.csv");
  if (!manifest) throw io_error("run directory missing snapshots.csv: " + run_dir.string());
  std::string line;
  std::getline(manifest, line);  // header
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string idx, t, uf, vf;
    std::getline(ss, idx, ',');
    std::getline(ss, t, ',');
    std::getline(ss, uf, ',');
    std::getline(ss, vf, ',');
    lr.u.push(read_checkpoint(run_dir / uf));
    lr.v.push(read_checkpoint(run_dir / vf));
  }
  if (lr.u.snapshots.empty()) throw io_error("run directory holds no snapshots");
  return lr;
}

// ---------------------------------------------------------------------------
// diagnose

namespace {

const std::set<std::string> kKnownDiagnostics = {
    "heat",    "embedding",      "energy_below", "energy_above", "log",     "levels",
    "degiorgi_below", "degiorgi_above", "decay",  "propagation",  "shrinking", "holder"};

}  // namespace

DiagnoseConfig parse_diagnose_config(std::istream& in) {
  KvFile f = read_kv(in);
  DiagnoseConfig cfg;
  {
    const std::string list = f.get_string("diagnostics", "");
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (item.empty()) continue;
      if (!kKnownDiagnostics.count(item))
        throw config_error("unknown diagnostic '" + item + "'");
      cfg.diagnostics.push_back(item);
    }
  }
  const auto center = f.get_double_list("center", {0.0});
  for (std::size_t i = 0; i < center.size() && i < 3; ++i) cfg.center[i] = center[i];
  cfg.radius = f.get_double("radius", cfg.radius);
  if (f.has("t_end")) cfg.t_end = f.get_double("t_end", 0.0);
  if (f.has("theta")) cfg.theta = f.get_double("theta", 0.0);
  cfg.k_fracs = f.get_double_list("k_fracs", cfg.k_fracs);
  cfg.cylinder_scales = f.get_double_list("cylinder_scales", cfg.cylinder_scales);
  cfg.cutoff_level = static_cast<int>(f.get_int("cutoff_level", cfg.cutoff_level));
  cfg.l_exp = f.get_double("l_exp", cfg.l_exp);
  cfg.r_exp = f.get_double("r_exp", cfg.r_exp);
  cfg.c_log = f.get_double("c_log", cfg.c_log);
  if (f.has("nu")) cfg.nu = f.get_double("nu", 0.0);
  cfg.n_star = static_cast<int>(f.get_int("n_star", cfg.n_star));
  cfg.q_star = static_cast<int>(f.get_int("q_star", cfg.q_star));
  cfg.lambda = f.get_double("lambda", cfg.lambda);
  cfg.n_levels = static_cast<int>(f.get_int("n_levels", cfg.n_levels));
  cfg.gamma_D = f.get_double("gamma_D", cfg.gamma_D);
  cfg.holder_seed = static_cast<std::uint64_t>(f.get_int("holder_seed", 0));
  cfg.holder_pairs = static_cast<int>(f.get_int("holder_pairs", cfg.holder_pairs));
  cfg.holder_bins = static_cast<int>(f.get_int("holder_bins", cfg.holder_bins));
  if (f.has("holder_radius")) cfg.holder_radius = f.get_double("holder_radius", 0.0);
  if (f.has("holder_t_min")) cfg.holder_t_min = f.get_double("holder_t_min", 0.0);
  f.reject_unknown();
  return cfg;
}

DiagnoseConfig parse_diagnose_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open diagnostic config " + path.string());
  return parse_diagnose_config(in);
}

namespace {

struct CubeStats {
  double mu_plus;
  double mu_minus;
  double omega;
};

CubeStats cube_stats_all_time(const FieldSeries& s, const Cube& cube) {
  const auto cells = cube_cells(s.domain(), cube);
  double lo = s.snapshots.front().values[cells.front()];
  double hi = lo;
  for (const auto& snap : s.snapshots)
    for (std::size_t i : cells) {
      lo = std::min(lo, snap.values[i]);
      hi = std::max(hi, snap.values[i]);
    }
  return {hi, lo, hi - lo};
}

CubeStats window_stats(const FieldSeries& s, const IntrinsicCylinder& cyl) {
  const auto slices = cylinder_slices(s, cyl);
  double lo = slices.values.front().front(), hi = lo;
  for (const auto& vals : slices.values)
    for (double v : vals) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return {hi, lo, hi - lo};
}

// theta = omega^{1-m} over the cube, clamped so the window stays inside the
// stored series; an explicit config theta wins.
IntrinsicCylinder resolve_cylinder(const LoadedRun& run, const DiagnoseConfig& cfg, double scale) {
  IntrinsicCylinder cyl;
  cyl.cube = Cube{cfg.center, cfg.radius * scale};
  cyl.t_end = cfg.t_end.value_or(run.u.last_time());
  if (cfg.theta) {
    cyl.theta = *cfg.theta;
    return cyl;
  }
  const double m = run.config.solver.params.m;
  const auto stats = cube_stats_all_time(run.u, cyl.cube);
  double theta = stats.omega > 0.0 ? std::pow(stats.omega, 1.0 - m) : 1.0;
  const double max_theta =
      (cyl.t_end - run.u.first_time()) / (cyl.cube.radius * cyl.cube.radius);
  theta = std::min(theta, max_theta);
  cyl.theta = theta;
  return cyl;
}

void add_cylinder(json& rec, const IntrinsicCylinder& cyl, int dim) {
  json c = json::array();
  for (int a = 0; a < dim; ++a) c.push_back(cyl.cube.center[a]);
  rec["center"] = c;
  rec["radius"] = cyl.cube.radius;
  rec["t_end"] = cyl.t_end;
  rec["theta"] = cyl.theta;
}

void set_optional(json& rec, const char* key, const std::optional<double>& v) {
  if (v && std::isfinite(*v))
    rec[key] = *v;
  else
    rec[key] = nullptr;
}

double resolved_u_floor(const LoadedRun& run) {
  if (run.config.solver.u_floor > 0.0) return run.config.solver.u_floor;
  double max_u0 = 0.0;
  for (double x : run.u.snapshots.front().values) max_u0 = std::max(max_u0, x);
  return 1e-4 * std::max(max_u0, 1e-300);
}

}  // namespace

void diagnose(const LoadedRun& run, const DiagnoseConfig& cfg, std::ostream& out) {
  const Domain& d = run.u.domain();
  const ModelParams& params = run.config.solver.params;
  const double m = params.m;
  const double u_floor = resolved_u_floor(run);

  // shared exponent bookkeeping; kappa = 2/N throughout
  const ParabolicNorms norms = make_exponents(cfg.l_exp, cfg.r_exp, 2.0 / d.dim, 2.0, 2.0, d.dim);

  // C0 fitted once from the heat estimate with p0 = m+1, p = 2l
  const double p_heat = 2.0 * cfg.l_exp;
  const double p0_heat = m + 1.0;
  const double C0 = heat_estimate_check(run.v, run.u, p_heat, p0_heat).fitted_C0;

  auto emit = [&out](const json& rec) { out << rec.dump() << "\n"; };

  for (const std::string& diag : cfg.diagnostics) {
    if (diag == "heat") {
      const auto rep = heat_estimate_check(run.v, run.u, p_heat, p0_heat);
      const auto grad = heat_gradient_check(run.v, run.u, p0_heat);
      json rec;
      rec["type"] = "heat_estimate";
      rec["p"] = p_heat;
      rec["p0"] = p0_heat;
      rec["v0_norm"] = rep.v0_norm;
      rec["w_sup_norm"] = rep.w_sup_norm;
      rec["fitted_C0"] = rep.fitted_C0;
      rec["satisfied"] = rep.satisfied;
      rec["gradient_fitted_C0"] = grad.fitted_C0;
      rec["gradient_satisfied"] = grad.satisfied;
      emit(rec);
    } else if (diag == "embedding") {
      const auto cyl = resolve_cylinder(run, cfg, 1.0);
      const auto cutoff =
          make_cutoff(d, cfg.center, cyl.t_end, cfg.cutoff_level, cyl.cube.radius * 0.5, cyl.theta);
      const ScalarField eta = cutoff.spatial_field(d);
      FieldSeries w;
      for (const auto& snap : run.u.snapshots) {
        ScalarField prod = snap;
        for (std::size_t i = 0; i < prod.values.size(); ++i) prod.values[i] *= eta.values[i];
        w.push(std::move(prod));
      }
      const auto rep = embedding_check(w, cyl, 2.0, 2.0);
      json rec;
      rec["type"] = "embedding";
      add_cylinder(rec, cyl, d.dim);
      rec["p"] = 2.0;
      rec["s"] = 2.0;
      rec["q"] = rep.q;
      rec["lhs"] = rep.lhs;
      rec["rhs_product"] = rep.rhs_product;
      set_optional(rec, "gamma_estimate", rep.gamma_estimate);
      rec["cutoff_violation"] = rep.cutoff_violation;
      emit(rec);
    } else if (diag == "energy_below" || diag == "energy_above") {
      for (double scale : cfg.cylinder_scales) {
        const auto cyl = resolve_cylinder(run, cfg, scale);
        const auto stats = window_stats(run.u, cyl);
        const auto cutoff = make_cutoff(d, cfg.center, cyl.t_end, cfg.cutoff_level,
                                        cyl.cube.radius * 0.5, cyl.theta);
        BudgetExponents ex;
        ex.norms = norms;
        ex.C0 = C0;
        ex.I_d = compute_Id(run.u, run.v.snapshots.front(), cyl, cfg.l_exp, m, C0);
        for (double frac : cfg.k_fracs) {
          json rec;
          rec["type"] = "energy_budget";
          rec["mode"] = diag == "energy_below" ? "below" : "above";
          add_cylinder(rec, cyl, d.dim);
          rec["cutoff_level"] = cfg.cutoff_level;
          rec["l"] = norms.l;
          rec["r"] = norms.r;
          rec["kappa"] = norms.kappa;
          rec["C0"] = ex.C0;
          rec["I_d"] = ex.I_d;
          rec["mu_plus"] = stats.mu_plus;
          rec["mu_minus"] = stats.mu_minus;
          rec["omega"] = stats.omega;
          rec["k_frac"] = frac;
          EnergyBudget b;
          double k;
          if (diag == "energy_below") {
            k = stats.mu_minus + frac * stats.omega;
            rec["k"] = k;
            b = energy_budget_below(run.u, k, cyl, cutoff, ex, params);
          } else {
            k = stats.mu_plus - frac * stats.omega;
            rec["k"] = k;
            rec["u_floor"] = u_floor;
            b = energy_budget_above(run.u, k, cyl, cutoff, ex, params, stats.mu_plus, u_floor);
          }
          rec["lhs_sup"] = b.lhs_sup;
          rec["lhs_grad"] = b.lhs_grad;
          rec["grad_eta_term"] = b.grad_eta_term;
          rec["drift_term"] = b.drift_term;
          rec["initial_term"] = b.initial_term;
          rec["time_term"] = b.time_term;
          set_optional(rec, "fitted_constant", b.fitted_constant);
          emit(rec);
        }
      }
    } else if (diag == "log") {
      const auto cyl = resolve_cylinder(run, cfg, 1.0);
      const auto stats = window_stats(run.u, cyl);
      const auto cutoff =
          make_cutoff(d, cfg.center, cyl.t_end, cfg.cutoff_level, cyl.cube.radius * 0.5, cyl.theta);
      BudgetExponents ex;
      ex.norms = norms;
      ex.C0 = C0;
      ex.I_d = compute_Id(run.u, run.v.snapshots.front(), cyl, cfg.l_exp, m, C0);
      json rec;
      rec["type"] = "log_budget";
      add_cylinder(rec, cyl, d.dim);
      rec["I_d"] = ex.I_d;
      rec["omega"] = stats.omega;
      rec["mu_plus"] = stats.mu_plus;
      rec["mu_is_ambient_sup"] = true;
      double c = cfg.c_log;
      const double k = stats.mu_plus - stats.omega / 4.0;
      // clamp c into the admissible window (0, min(1, H)) before evaluation
      double H = 0.0;
      {
        const auto slices = cylinder_slices(run.u, cyl);
        for (const auto& vals : slices.values)
          for (double v : vals) H = std::max(H, v - k);
      }
      if (H > 0.0) c = std::min(c, 0.5 * std::min(1.0, H));
      rec["c"] = c;
      const auto rep = log_budget(run.u, cyl, cutoff, ex, params, stats.omega, stats.mu_plus, c,
                                  u_floor);
      rec["H"] = rep.H;
      rec["k"] = rep.k;
      rec["lhs_sup"] = rep.lhs_sup;
      rec["initial_term"] = rep.initial_term;
      rec["drift_term"] = rep.drift_term;
      rec["grad_term"] = rep.grad_term;
      set_optional(rec, "fitted_gamma", rep.fitted_gamma);
      rec["max_psi"] = rep.max_psi;
      rec["psi_cap"] = rep.psi_cap;
      rec["max_slope"] = rep.max_slope;
      rec["slope_cap"] = rep.slope_cap;
      emit(rec);
    } else if (diag == "levels") {
      const auto cyl = resolve_cylinder(run, cfg, 1.0);
      const auto stats = window_stats(run.u, cyl);
      for (double frac : cfg.k_fracs) {
        const double k = stats.mu_minus + frac * stats.omega;
        if (!(k > 0.0)) continue;
        const auto rep = level_set_report(run.u, cyl, k, LevelSetMode::Below, norms);
        json rec;
        rec["type"] = "level_sweep";
        rec["mode"] = "below";
        add_cylinder(rec, cyl, d.dim);
        rec["k"] = k;
        rec["k_frac"] = frac;
        rec["slice_times"] = rep.times;
        rec["slice_measures"] = rep.slice_measures;
        rec["total"] = rep.total;
        rec["drift_time_integral"] = rep.drift_time_integral;
        emit(rec);
      }
    } else if (diag == "degiorgi_below" || diag == "degiorgi_above") {
      const auto cyl = resolve_cylinder(run, cfg, 1.0);
      DeGiorgiConfig dg;
      dg.nu = cfg.nu.value_or(0.5);
      const auto stats = window_stats(run.u, cyl);
      const auto rep = diag == "degiorgi_below"
                           ? degiorgi_lemma_below(run.u, cyl, dg)
                           : degiorgi_lemma_above(run.u, cyl, dg, stats.mu_plus, stats.omega);
      json rec;
      rec["type"] = "degiorgi_lemma";
      rec["mode"] = diag == "degiorgi_below" ? "below" : "above";
      add_cylinder(rec, cyl, d.dim);
      rec["applicable"] = rep.applicable;
      rec["mu_plus"] = rep.mu_plus;
      rec["mu_minus"] = rep.mu_minus;
      rec["omega"] = rep.omega;
      rec["level"] = rep.level;
      rec["hypothesis_measure"] = rep.hypothesis_measure;
      rec["cylinder_measure"] = rep.cylinder_measure;
      rec["nu"] = rep.nu_used;
      rec["fired"] = rep.fired;
      rec["conclusion_verified"] = rep.conclusion_verified;
      emit(rec);
    } else if (diag == "decay") {
      IntrinsicCylinder start;
      start.cube = Cube{cfg.center, cfg.radius};
      start.t_end = cfg.t_end.value_or(run.u.last_time());
      start.theta = cfg.theta.value_or(1.0);
      AlternativeConfig ac;
      ac.nu = cfg.nu;
      ac.n_star = cfg.n_star;
      ac.q_star = cfg.q_star;
      ac.lambda = cfg.lambda;
      ac.n_levels = cfg.n_levels;
      const auto trace = oscillation_decay(run.u, start, ac, m);
      for (const auto& lvl : trace.levels) {
        json rec;
        rec["type"] = "decay_level";
        rec["n"] = lvl.n;
        rec["radius"] = lvl.radius;
        rec["omega"] = lvl.omega;
        rec["theta"] = lvl.theta;
        rec["mu_plus"] = lvl.mu_plus;
        rec["mu_minus"] = lvl.mu_minus;
        rec["measured_osc"] = lvl.measured_osc;
        rec["alternative"] = lvl.alternative;
        rec["conclusion_verified"] = lvl.conclusion_verified;
        rec["predicted_factor"] = lvl.predicted_factor;
        rec["measured_ratio"] = lvl.measured_ratio;
        rec["nesting_ok"] = lvl.nesting_ok;
        rec["passed"] = lvl.passed;
        emit(rec);
      }
      json rec;
      rec["type"] = "decay_summary";
      add_cylinder(rec, start, d.dim);
      rec["omega0"] = trace.omega0;
      rec["nu"] = trace.nu_used;
      rec["nu_was_fitted"] = trace.nu_was_fitted;
      rec["b"] = trace.b;
      rec["delta"] = trace.delta;
      rec["lambda"] = cfg.lambda;
      rec["lambda_check"] = trace.lambda_check;
      rec["truncated"] = trace.truncated;
      rec["levels"] = trace.levels.size();
      rec["passed"] = trace.passed;
      emit(rec);
    } else if (diag == "propagation") {
      const auto cyl = resolve_cylinder(run, cfg, 1.0);
      PropagationConfig pc;
      pc.nu = cfg.nu.value_or(0.5);
      pc.n_star = cfg.n_star;
      const auto rep = time_propagation_check(run.u, cyl, pc);
      json rec;
      rec["type"] = "propagation";
      add_cylinder(rec, cyl, d.dim);
      rec["nu"] = pc.nu;
      rec["n_star"] = pc.n_star;
      rec["applicable"] = rep.applicable;
      rec["seed_time"] = rep.seed_time;
      rec["seed_measure"] = rep.seed_measure;
      rec["seed_threshold"] = rep.seed_threshold;
      rec["bound"] = rep.bound;
      rec["passed"] = rep.passed;
      set_optional(rec, "violation_time", rep.violation_time);
      emit(rec);
    } else if (diag == "shrinking") {
      const auto cyl = resolve_cylinder(run, cfg, 1.0);
      ShrinkConfig sc;
      sc.nu = cfg.nu.value_or(0.5);
      sc.n_star = cfg.n_star;
      sc.q_star = cfg.q_star;
      sc.gamma_D = cfg.gamma_D;
      sc.m = m;
      const auto rep = shrinking_measure_check(run.u, cyl, sc);
      json rec;
      rec["type"] = "shrinking";
      add_cylinder(rec, cyl, d.dim);
      rec["nu"] = sc.nu;
      rec["n_star"] = sc.n_star;
      rec["q_star"] = sc.q_star;
      rec["gamma_D"] = sc.gamma_D;
      rec["theta_star"] = rep.theta_star;
      rec["gamma_bar"] = rep.gamma_bar;
      rec["gamma2"] = rep.gamma2;
      rec["nu_bar_star"] = rep.nu_bar_star;
      rec["final_measure"] = rep.final_measure;
      rec["cylinder_measure"] = rep.cylinder_measure;
      rec["satisfied"] = rep.satisfied;
      emit(rec);
    } else if (diag == "holder") {
      Cube region{cfg.center, cfg.holder_radius.value_or(cfg.radius)};
      double t_min = cfg.holder_t_min.value_or(0.0);
      if (t_min <= 0.0) {
        // bounded away from t = 0: first positive snapshot time
        for (const auto& snap : run.u.snapshots)
          if (snap.time > 0.0) {
            t_min = snap.time;
            break;
          }
      }
      SamplerConfig sampler;
      sampler.seed = cfg.holder_seed;
      sampler.pair_count = cfg.holder_pairs;
      sampler.bin_count = cfg.holder_bins;
      const auto fit = holder_fit(run.u, region, t_min, m, sampler);
      json rec;
      rec["type"] = "holder_fit";
      json c = json::array();
      for (int a = 0; a < d.dim; ++a) c.push_back(region.center[a]);
      rec["center"] = c;
      rec["radius"] = region.radius;
      rec["t_min"] = t_min;
      rec["seed"] = fit.seed;
      rec["pairs"] = fit.sample_count;
      rec["usable_bins"] = fit.usable_bins;
      rec["holder_exponent"] = fit.holder_exponent;
      rec["prefactor"] = fit.prefactor;
      rec["sup_norm"] = fit.sup_norm;
      rec["residual_rms"] = fit.residual_rms;
      rec["exact_constant"] = fit.exact_constant;
      rec["degenerate_time_weight"] = fit.degenerate_time_weight;
      emit(rec);
    }
  }
}

// ---------------------------------------------------------------------------
// lemma sweeps

namespace {

double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

double uniform_in(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// continuous periodic piecewise-linear field from a coarse random lattice
ScalarField random_piecewise_linear(const Domain& d, std::mt19937_64& rng, int nodes_per_dim) {
  std::vector<double> node_vals;
  const int K = nodes_per_dim;
  if (d.dim == 1) {
    node_vals.resize(K);
    for (auto& v : node_vals) v = uniform01(rng);
    ScalarField f = make_field(d);
    const double box = 2.0 * d.extent;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const double x = d.cell_center(i)[0] + d.extent;  // [0, box)
      const double s = x / box * K;
      const int j = static_cast<int>(s) % K;
      const double w = s - std::floor(s);
      f.values[i] = (1.0 - w) * node_vals[j] + w * node_vals[(j + 1) % K];
    }
    return f;
  }
  node_vals.resize(static_cast<std::size_t>(K) * K);
  for (auto& v : node_vals) v = uniform01(rng);
  ScalarField f = make_field(d);
  const double box = 2.0 * d.extent;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const auto x = d.cell_center(i);
    double s[2], w[2];
    int j[2];
    for (int a = 0; a < 2; ++a) {
      s[a] = (x[a] + d.extent) / box * K;
      j[a] = static_cast<int>(s[a]) % K;
      w[a] = s[a] - std::floor(s[a]);
    }
    auto node = [&](int dx, int dy) {
      return node_vals[static_cast<std::size_t>((j[1] + dy) % K) * K + (j[0] + dx) % K];
    };
    f.values[i] = (1.0 - w[0]) * (1.0 - w[1]) * node(0, 0) + w[0] * (1.0 - w[1]) * node(1, 0) +
                  (1.0 - w[0]) * w[1] * node(0, 1) + w[0] * w[1] * node(1, 1);
  }
  return f;
}

// smooth cutoff-multiplied series for the embedding corpus
FieldSeries embedding_corpus_field(const Domain& d, std::mt19937_64& rng,
                                   const CutoffFunction& cutoff) {
  const ScalarField eta = cutoff.spatial_field(d);
  double a1 = uniform_in(rng, 0.3, 1.0), a2 = uniform_in(rng, 0.1, 0.6);
  double ph1 = uniform_in(rng, 0.0, 6.28), ph2 = uniform_in(rng, 0.0, 6.28);
  double tm = uniform_in(rng, 0.2, 0.8);
  FieldSeries s;
  for (int j = 0; j < 4; ++j) {
    const double t = 0.1 * j;
    ScalarField f = make_field(d, t);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const auto x = d.cell_center(i);
      double v = a1 * std::sin(M_PI * x[0] / d.extent + ph1) +
                 a2 * std::sin(2.0 * M_PI * x[0] / d.extent + ph2);
      if (d.dim >= 2) v *= std::cos(M_PI * x[1] / d.extent + ph2);
      f.values[i] = v * (1.0 + tm * std::sin(3.0 * t + ph1)) * eta.values[i];
    }
    s.push(std::move(f));
  }
  return s;
}

}  // namespace

LemmaSweepSummary run_lemma_sweeps(std::uint64_t seed, int geo_count, int iso_count,
                                   int embed_count) {
  LemmaSweepSummary sum;
  std::mt19937_64 rng(seed);

  // Lemma: fast geometric convergence at the extremal recursion
  sum.geo_count = geo_count;
  for (int i = 0; i < geo_count; ++i) {
    GeoIterParams p;
    p.c = uniform_in(rng, 1.1, 4.0);
    p.b = uniform_in(rng, 1.5, 16.0);
    p.alpha = uniform_in(rng, 0.3, 2.0);
    p.kappa = uniform_in(rng, 0.3, 2.0);
    const double nu0 = p.threshold();
    const double split = uniform_in(rng, 0.1, 0.9);
    const double X0 = split * 0.99 * nu0;
    const double Y0 = std::pow((1.0 - split) * 0.99 * nu0, 1.0 / (1.0 + p.kappa));
    const auto res = fast_geometric_iterate(p, X0, Y0, 200);
    if (res.converged) ++sum.geo_converged;
  }
  {
    GeoIterParams p{1.0, 2.0, 1.0, 1.0};
    const auto res = fast_geometric_iterate(p, 1.0 / 32.0, 1.0 / 32.0, 200);
    sum.geo_worked_instance = res.converged && std::abs(p.threshold() - 1.0 / 16.0) < 1e-15;
  }

  // Isoperimetric sweep over random piecewise-linear fields, 1D and 2D
  sum.iso_count = iso_count;
  const Domain d1 = make_domain(1, 1.0, 128);
  const Domain d2 = make_domain(2, 1.0, 64);
  for (int i = 0; i < iso_count; ++i) {
    const bool two_d = (i % 2 == 1);
    const Domain& d = two_d ? d2 : d1;
    const int nodes = two_d ? 4 + static_cast<int>(uniform01(rng) * 2)
                            : 4 + static_cast<int>(uniform01(rng) * 5);
    const ScalarField w = random_piecewise_linear(d, rng, nodes);
    const Cube cube{{0.0, 0.0, 0.0}, d.extent * (two_d ? 0.9 : 0.95)};
    const auto cells = cube_cells(d, cube);
    double lo = w.values[cells.front()], hi = lo;
    for (std::size_t c : cells) {
      lo = std::min(lo, w.values[c]);
      hi = std::max(hi, w.values[c]);
    }
    const double range = hi - lo;
    if (range <= 0.0) continue;
    const double k = lo + uniform_in(rng, 0.2, 0.4) * range;
    const double l = k + uniform_in(rng, 0.2, 0.35) * range;
    const auto rep = isoperimetric_check(w, cube, k, l);
    if (!rep.gamma_fit) continue;  // |{w > l}| = 0: null report
    ++sum.iso_checked;
    if (std::isfinite(*rep.gamma_fit)) {
      ++sum.iso_finite;
      sum.iso_worst_gamma = std::max(sum.iso_worst_gamma, *rep.gamma_fit);
    }
  }

  // Embedding corpus: finiteness, exact scaling invariance, refinement stability
  sum.embed_count = embed_count;
  double worst_scaling = 0.0, worst_refine = 1.0, worst_gamma = 0.0;
  for (int i = 0; i < embed_count; ++i) {
    const bool two_d = (i % 2 == 1);
    const Domain d = two_d ? make_domain(2, 1.0, 32) : make_domain(1, 1.0, 128);
    const Domain d_fine = two_d ? make_domain(2, 1.0, 64) : make_domain(1, 1.0, 256);
    const double R = d.extent * 0.25;
    const auto cutoff = make_cutoff(d, {0.0, 0.0, 0.0}, 1.0, 0, R, 1.0);
    const std::uint64_t sub_seed = rng();
    IntrinsicCylinder cyl;
    cyl.cube = Cube{{0.0, 0.0, 0.0}, d.extent * 0.75};
    cyl.t_end = 0.3;
    cyl.theta = 0.31 / (cyl.cube.radius * cyl.cube.radius);

    std::mt19937_64 sub(sub_seed);
    const FieldSeries w = embedding_corpus_field(d, sub, cutoff);
    const auto rep = embedding_check(w, cyl, 2.0, 2.0);
    if (!rep.gamma_estimate || !std::isfinite(*rep.gamma_estimate)) continue;
    ++sum.embed_finite;
    worst_gamma = std::max(worst_gamma, *rep.gamma_estimate);

    // lambda-scaling leaves gamma invariant
    FieldSeries w_scaled;
    for (const auto& snap : w.snapshots) {
      ScalarField f = snap;
      for (double& v : f.values) v *= 3.7;
      w_scaled.push(std::move(f));
    }
    const auto rep_scaled = embedding_check(w_scaled, cyl, 2.0, 2.0);
    if (rep_scaled.gamma_estimate)
      worst_scaling = std::max(worst_scaling,
                               std::abs(*rep_scaled.gamma_estimate / *rep.gamma_estimate - 1.0));

    // same analytic field, refined grid
    const auto cutoff_fine = make_cutoff(d_fine, {0.0, 0.0, 0.0}, 1.0, 0, R, 1.0);
    std::mt19937_64 sub2(sub_seed);
    const FieldSeries w_fine = embedding_corpus_field(d_fine, sub2, cutoff_fine);
    const auto rep_fine = embedding_check(w_fine, cyl, 2.0, 2.0);
    if (rep_fine.gamma_estimate && *rep.gamma_estimate > 0.0) {
      const double ratio = *rep_fine.gamma_estimate / *rep.gamma_estimate;
      worst_refine = std::max(worst_refine, std::max(ratio, 1.0 / ratio));
    }
  }
  sum.embed_scaling_error = worst_scaling;
  sum.embed_refine_factor = worst_refine;
  sum.embed_worst_gamma = worst_gamma;

  sum.passed = sum.geo_converged == sum.geo_count && sum.geo_worked_instance &&
               sum.iso_finite == sum.iso_checked && (iso_count == 0 || sum.iso_checked > 0) &&
               (embed_count == 0 || (sum.embed_finite == sum.embed_count &&
                                     sum.embed_scaling_error < 1e-8 &&
                                     sum.embed_refine_factor < 2.0));
  return sum;
}

void print_lemma_summary(const LemmaSweepSummary& s, std::ostream& out) {
  out << "fast_geometric: " << s.geo_converged << "/" << s.geo_count
      << " converged, worked instance " << (s.geo_worked_instance ? "ok" : "FAILED") << "\n";
  out << "isoperimetric: " << s.iso_finite << "/" << s.iso_checked << " finite (of " << s.iso_count
      << " drawn), global gamma_D = " << format_g17(s.iso_worst_gamma) << "\n";
  out << "embedding: " << s.embed_finite << "/" << s.embed_count
      << " finite, worst gamma = " << format_g17(s.embed_worst_gamma)
      << ", scaling error = " << format_g17(s.embed_scaling_error)
      << ", refinement factor = " << format_g17(s.embed_refine_factor) << "\n";
  out << (s.passed ? "PASS" : "FAIL") << "\n";
}

// ---------------------------------------------------------------------------
// convergence study

std::vector<ConvergenceRow> convergence_study(const RunConfig& base, int n_refinements) {
  if (base.solver.params.chi != 0.0)
    throw config_error("convergence study requires chi = 0 (oracle validity)");
  if (base.ic_u.kind != InitialCondition::Kind::Barenblatt)
    throw config_error("convergence study requires ic_u = barenblatt");
  if (n_refinements < 1) throw config_error("convergence study needs n_refinements >= 1");

  BarenblattParams bp;
  bp.m = base.solver.params.m;
  bp.dim = base.dim;
  bp.mass = base.ic_u.mass;
  bp.t_offset = base.ic_u.t_offset;

  std::vector<ConvergenceRow> rows;
  for (int level = 0; level < n_refinements; ++level) {
    RunConfig cfg = base;
    cfg.cells_per_dim = base.cells_per_dim << level;
    const Domain d = domain_from_config(cfg);
    const ScalarField u0 = build_initial_condition(d, cfg.ic_u, bp.m);
    const ScalarField v0 = build_initial_condition(d, cfg.ic_v, bp.m);
    const RunResult res = run(u0, v0, cfg.solver);

    const ScalarField exact = barenblatt_field(d, bp, cfg.solver.t_end);
    const auto& num = res.u.snapshots.back();
    double err = 0.0;
    for (std::size_t i = 0; i < num.values.size(); ++i)
      err += std::abs(num.values[i] - exact.values[i]);
    err *= d.cell_measure();

    ConvergenceRow row;
    row.h = d.spacing;
    row.l1_error = err;
    if (!rows.empty() && err > 0.0 && rows.back().l1_error > 0.0)
      row.observed_order = std::log2(rows.back().l1_error / err);
    rows.push_back(row);
  }
  return rows;
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::string out = "h,l1_error,observed_order\n";
  for (const auto& r : rows) {
    out += format_g17(r.h);
    out += ',';
    out += format_g17(r.l1_error);
    out += ',';
    if (r.observed_order) out += format_g17(*r.observed_order);
    out += '\n';
  }
  return out;
}

}  // namespace fdlab
