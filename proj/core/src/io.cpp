#include "fdlab/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fdlab/errors.hpp"
#include "fdlab/operators.hpp"
#include "fdlab/oracles.hpp"
#include "kv_file.hpp"

namespace fdlab {

using detail::KvFile;
using detail::read_kv;
using detail::trim;

namespace {

std::array<double, 3> parse_center(const std::string& text, int dim, const std::string& key) {
  std::array<double, 3> out{0.0, 0.0, 0.0};
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= dim) throw config_error("config key '" + key + "' has more entries than dim");
    try {
      out[i++] = std::stod(trim(item));
    } catch (const std::exception&) {
      throw config_error("config key '" + key + "' has a non-numeric entry: '" + item + "'");
    }
  }
  return out;
}

InitialCondition parse_ic(KvFile& f, const std::string& prefix, int dim) {
  InitialCondition ic;
  const std::string kind = f.get_string(prefix, "", true);
  if (kind == "gaussian") {
    ic.kind = InitialCondition::Kind::Gaussian;
    ic.amplitude = f.get_double(prefix + ".amplitude", 1.0);
    ic.width = f.get_double(prefix + ".width", 0.5);
    ic.center = parse_center(f.get_string(prefix + ".center", "0"), dim, prefix + ".center");
    if (!(ic.amplitude >= 0.0)) throw config_error(prefix + ".amplitude violates amplitude >= 0");
    if (!(ic.width > 0.0)) throw config_error(prefix + ".width violates width > 0");
  } else if (kind == "barenblatt") {
    ic.kind = InitialCondition::Kind::Barenblatt;
    ic.mass = f.get_double(prefix + ".mass", 1.0);
    ic.t_offset = f.get_double(prefix + ".t_offset", 0.01);
    if (!(ic.mass > 0.0)) throw config_error(prefix + ".mass violates mass > 0");
    if (!(ic.t_offset > 0.0)) throw config_error(prefix + ".t_offset violates t_offset > 0");
  } else if (kind == "file") {
    ic.kind = InitialCondition::Kind::File;
    ic.path = f.get_string(prefix + ".path", "", true);
  } else {
    throw config_error("config key '" + prefix + "' must be gaussian, barenblatt or file, got '" +
                       kind + "'");
  }
  return ic;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  KvFile f = read_kv(in);
  RunConfig cfg;
  cfg.dim = static_cast<int>(f.get_int("dim", 1));
  cfg.extent = f.get_double("extent", 0.0, true);
  cfg.cells_per_dim = static_cast<int>(f.get_int("cells_per_dim", 0, true));

  if (cfg.dim < 1 || cfg.dim > 3) throw config_error("dim violates dim in {1, 2, 3}");
  if (!(cfg.extent > 0.0)) throw config_error("extent violates extent > 0");
  if (cfg.cells_per_dim < 8 || cfg.cells_per_dim % 2 != 0)
    throw config_error("cells_per_dim violates even cells_per_dim >= 8");

  ModelParams& p = cfg.solver.params;
  p.dim = cfg.dim;
  p.m = f.get_double("m", 0.0, true);
  p.q_exp = f.get_double("q_exp", 1.2);
  p.chi = f.get_double("chi", 0.0);
  p.decay_rate = f.get_double("decay_rate", 1.0);
  validate_params(p);

  const std::string floor_text = f.get_string("u_floor", "auto");
  if (floor_text != "auto") {
    try {
      cfg.solver.u_floor = std::stod(floor_text);
    } catch (const std::exception&) {
      throw config_error("config key 'u_floor' must be a number or 'auto'");
    }
    if (!(cfg.solver.u_floor > 0.0)) throw config_error("u_floor violates u_floor > 0");
  }
  cfg.solver.cfl_safety = f.get_double("cfl_safety", 0.4);
  if (!(cfg.solver.cfl_safety > 0.0 && cfg.solver.cfl_safety <= 1.0))
    throw config_error("cfl_safety violates 0 < cfl_safety <= 1");
  cfg.solver.t_end = f.get_double("t_end", 0.0, true);
  if (!(cfg.solver.t_end >= 0.0)) throw config_error("t_end violates t_end >= 0");
  cfg.solver.snapshot_interval = f.get_double("snapshot_interval", 0.0);
  cfg.solver.v_solver_tol = f.get_double("v_solver_tol", 1e-10);
  if (!(cfg.solver.v_solver_tol > 0.0)) throw config_error("v_solver_tol violates v_solver_tol > 0");
  cfg.solver.dt_min = f.get_double("dt_min", 1e-13);

  cfg.ic_u = parse_ic(f, "ic_u", cfg.dim);
  cfg.ic_v = parse_ic(f, "ic_v", cfg.dim);
  cfg.out_dir = f.get_string("out_dir", "");
  cfg.seed = static_cast<std::uint64_t>(f.get_int("seed", 0));

  f.reject_unknown();
  return cfg;
}

RunConfig parse_run_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file " + path.string());
  return parse_run_config(in);
}

Domain domain_from_config(const RunConfig& cfg) {
  return make_domain(cfg.dim, cfg.extent, cfg.cells_per_dim);
}

ScalarField build_initial_condition(const Domain& d, const InitialCondition& ic, double m) {
  switch (ic.kind) {
    case InitialCondition::Kind::Gaussian: {
      ScalarField f = make_field(d);
      const double inv2w2 = 1.0 / (2.0 * ic.width * ic.width);
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        const auto x = d.cell_center(i);
        double r2 = 0.0;
        for (int a = 0; a < d.dim; ++a) {
          const double dx = d.wrap(x[a] - ic.center[a]);
          r2 += dx * dx;
        }
        f.values[i] = ic.amplitude * std::exp(-r2 * inv2w2);
      }
      return f;
    }
    case InitialCondition::Kind::Barenblatt: {
      BarenblattParams bp;
      bp.m = m;
      bp.dim = d.dim;
      bp.mass = ic.mass;
      bp.t_offset = ic.t_offset;
      return barenblatt_field(d, bp, 0.0);
    }
    case InitialCondition::Kind::File: {
      ScalarField f = read_checkpoint(ic.path);
      if (!(f.domain == d))
        throw config_error("initial-condition file " + ic.path + " has a mismatched domain");
      f.time = 0.0;
      return f;
    }
  }
  throw config_error("unreachable initial-condition kind");
}

namespace {

void byteswap_if_needed(std::vector<double>& values) {
  if constexpr (std::endian::native == std::endian::little) {
    (void)values;
  } else {
    for (double& v : values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      bits = __builtin_bswap64(bits);
      std::memcpy(&v, &bits, 8);
    }
  }
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const ScalarField& f,
                      const std::string& field_name) {
  nlohmann::ordered_json header;
  header["dim"] = f.domain.dim;
  header["cells_per_dim"] = f.domain.cells_per_dim;
  header["extent"] = f.domain.extent;
  header["time"] = f.time;
  header["field"] = field_name;
  header["endianness"] = "LE";
  header["type"] = "f64";
  std::string line = header.dump();
  line.push_back('\n');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open checkpoint for writing: " + path.string());
  const std::uint32_t len = static_cast<std::uint32_t>(line.size());
  char lenbuf[4] = {static_cast<char>(len & 0xff), static_cast<char>((len >> 8) & 0xff),
                    static_cast<char>((len >> 16) & 0xff), static_cast<char>((len >> 24) & 0xff)};
  out.write(lenbuf, 4);
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  std::vector<double> payload = f.values;
  byteswap_if_needed(payload);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw io_error("short write on checkpoint " + path.string());
}

ScalarField read_checkpoint(const std::filesystem::path& path, std::string* field_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open checkpoint " + path.string());
  char lenbuf[4];
  in.read(lenbuf, 4);
  if (!in) throw io_error("checkpoint truncated (header length): " + path.string());
  const std::uint32_t len = static_cast<std::uint8_t>(lenbuf[0]) |
                            (static_cast<std::uint8_t>(lenbuf[1]) << 8) |
                            (static_cast<std::uint8_t>(lenbuf[2]) << 16) |
                            (static_cast<std::uint8_t>(lenbuf[3]) << 24);
  std::string line(len, '\0');
  in.read(line.data(), len);
  if (!in) throw io_error("checkpoint truncated (header): " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw io_error("checkpoint header is not valid JSON: " + std::string(e.what()));
  }
  if (header.value("endianness", "") != "LE" || header.value("type", "") != "f64")
    throw io_error("checkpoint " + path.string() + " has unsupported encoding tags");

  const Domain d = make_domain(header.at("dim").get<int>(), header.at("extent").get<double>(),
                               header.at("cells_per_dim").get<int>());
  ScalarField f = make_field(d, header.at("time").get<double>());
  in.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!in) throw io_error("checkpoint truncated (payload): " + path.string());
  byteswap_if_needed(f.values);
  if (field_name) *field_name = header.value("field", "");
  return f;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string step_csv(const std::vector<StepReport>& reports) {
  std::string out = "step,t,dt,mass_u,mass_v,min_u,max_u\n";
  for (const auto& r : reports) {
    out += std::to_string(r.step);
    out += ',';
    out += format_g17(r.t);
    out += ',';
    out += format_g17(r.dt_used);
    out += ',';
    out += format_g17(r.mass_u);
    out += ',';
    out += format_g17(r.mass_v);
    out += ',';
    out += format_g17(r.min_u);
    out += ',';
    out += format_g17(r.max_u);
    out += '\n';
  }
  return out;
}

}  // namespace fdlab
