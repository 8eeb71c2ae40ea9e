// Command-line front end: cell, solve, sweep and report.
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "homstokes/error.hpp"
#include "homstokes/io.hpp"
#include "homstokes/manufactured.hpp"
#include "homstokes/rates.hpp"

#ifndef HOMSTOKES_VERSION
#define HOMSTOKES_VERSION "0.0.0"
#endif

using namespace homstokes;
using nlohmann::json;

namespace {

enum Exit { ok = 0, validation = 1, solver = 2, acceptance = 3 };

int exit_code(const Error& e) { return e.code() == ErrorCode::solver_failure ? solver : validation; }

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::invalid_config, key + ": " + what);
}

void only_keys(const json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad("config", "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) bad(it.key(), "unknown key");
  }
}

/// "name" or {"name": ..., "params": {...}}
std::shared_ptr<const CoefficientField> coefficient_from(const json& j) {
  std::string name;
  ParamMap params;
  if (j.is_string()) {
    name = j.get<std::string>();
  } else if (j.is_object()) {
    only_keys(j, {"name", "params"});
    if (!j.contains("name") || !j.at("name").is_string()) bad("coefficient.name", "expected a string");
    name = j.at("name").get<std::string>();
    if (j.contains("params")) {
      if (!j.at("params").is_object()) bad("coefficient.params", "expected an object");
      for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it) {
        if (!it.value().is_number()) bad("coefficient.params." + it.key(), "expected a number");
        params[it.key()] = it.value().get<double>();
      }
    }
  } else {
    bad("coefficient", "expected a name or an object");
  }
  return std::make_shared<const CoefficientField>(builtin_coefficient(name, params));
}

template <class T>
T value_or(const json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(key, "wrong type");
  }
}

std::string out_path(const std::string& dir, const char* file) { return (std::filesystem::path(dir) / file).string(); }

json tensor_json(const Tensor4& t) {
  json a = json::array();
  for (int i = 0; i < 2; ++i) {
    json ai = json::array();
    for (int j = 0; j < 2; ++j) {
      json aij = json::array();
      for (int al = 0; al < 2; ++al) {
        json row = json::array();
        for (int be = 0; be < 2; ++be) row.push_back(t(i, j, al, be));
        aij.push_back(row);
      }
      ai.push_back(aij);
    }
    a.push_back(ai);
  }
  return a;
}

int run_cell_command(const std::string& config, const std::string& dir_flag) {
  json j = read_json_file(config);
  only_keys(j, {"coefficient", "n", "output_dir", "vtk"});
  auto a = coefficient_from(j.contains("coefficient") ? j.at("coefficient") : json("identity"));
  int n = value_or<int>(j, "n", 128);
  if (n < 4) bad("n", "must be at least 4");
  std::string dir = dir_flag.empty() ? value_or<std::string>(j, "output_dir", "out/cell") : dir_flag;
  bool vtk = value_or<bool>(j, "vtk", true);

  CellProducts cell = run_cell(a, n);
  const auto& id = cell.identities;
  json aj;
  aj["coefficient"] = a->name;
  aj["n"] = n;
  aj["a_hat"] = tensor_json(cell.a_hat.a_hat);
  aj["ellipticity"] = {{"mu_low", cell.a_hat.window.mu_low}, {"mu_high", cell.a_hat.window.mu_high}};
  write_text_file(out_path(dir, "a_hat.json"), aj.dump(2) + "\n");
  json ij;
  ij["chi_mean"] = id.chi_mean;
  ij["pi_mean"] = id.pi_mean;
  ij["chi_divergence"] = id.chi_divergence;
  ij["b_mean"] = id.b_mean;
  ij["e_antisymmetry"] = id.e_antisymmetry;
  ij["dq_minus_pi"] = id.dq_minus_pi;
  ij["dq_minus_pi_raw"] = id.dq_minus_pi_raw;
  ij["weak_divergence_b"] = id.weak_divergence_b;
  ij["a_hat_elliptic"] = id.a_hat_elliptic;
  ij["pass"] = id.pass;
  ij["corrector_iterations"] = cell.correctors.iterations;
  ij["mesh"] = mesh_stats(*cell.correctors.mesh);
  write_text_file(out_path(dir, "identities.json"), ij.dump(2) + "\n");
  if (vtk) {
    std::vector<std::pair<std::string, const Field*>> fields;
    for (int k = 0; k < 2; ++k)
      for (int g = 0; g < 2; ++g) {
        std::string tag = std::to_string(k + 1) + std::to_string(g + 1);
        fields.push_back({"chi_" + tag, &cell.correctors.chi[k][g]});
        fields.push_back({"pi_" + tag, &cell.correctors.pi[k][g]});
      }
    write_vtk(out_path(dir, "correctors.vtk"), *cell.correctors.mesh, fields);
  }
  std::printf("a_hat written to %s\n", out_path(dir, "a_hat.json").c_str());
  return id.pass ? ok : acceptance;
}

int run_solve_command(const std::string& config, const std::string& dir_flag, bool override_guard) {
  json j = read_json_file(config);
  only_keys(j, {"domain", "h", "coefficient", "eps", "data", "boundary", "override_resolution_guard", "output_dir"});
  DomainSpec spec = DomainSpec::from_preset(value_or<std::string>(j, "domain", "unit_square"));
  double h = value_or<double>(j, "h", 1.0 / 32.0);
  std::string dir = dir_flag.empty() ? value_or<std::string>(j, "output_dir", "out/solve") : dir_flag;
  ResolutionGuard guard;
  guard.override_guard = override_guard || value_or<bool>(j, "override_resolution_guard", false);

  StokesCoefficient coef = StokesCoefficient::identity();
  if (j.contains("coefficient")) {
    auto a = coefficient_from(j.at("coefficient"));
    if (a->name != "identity") {
      if (!j.contains("eps")) bad("eps", "required with an oscillating coefficient");
      coef = StokesCoefficient::oscillating(a, value_or<double>(j, "eps", 0.0));
    }
  }
  SweepData data;
  if (j.contains("data")) {
    const json& dj = j.at("data");
    only_keys(dj, {"forcing", "value"});
    data.forcing = value_or<std::string>(dj, "forcing", data.forcing);
    if (dj.contains("value")) {
      auto v = value_or<std::vector<double>>(dj, "value", {});
      if (v.size() != 2) bad("data.value", "expected two numbers");
      data.value = {v[0], v[1]};
    }
  }
  std::string boundary = value_or<std::string>(j, "boundary", "zero");
  if (boundary != "zero") bad("boundary", "only zero boundary data is supported");

  auto mesh = build_domain_mesh(spec, h);
  SweepProblemData d = sweep_data(data, mesh);
  StokesProblem problem{mesh, coef, d.F, d.h, d.g, guard};
  StokesSolution s = solve_stokes(problem);
  write_vtk(out_path(dir, "solution.vtk"), *mesh, {{"u", &s.u}, {"p", &s.p}});
  json dj;
  dj["mesh"] = mesh_stats(*mesh);
  dj["iterations"] = s.diagnostics.iterations;
  dj["momentum_residual"] = s.diagnostics.momentum_residual;
  dj["divergence_residual"] = s.diagnostics.divergence_residual;
  dj["compatibility_residual"] = s.diagnostics.compatibility_residual;
  DataNorms norms = data_norms(d.F, d.h, d.g, *mesh);
  dj["energy_constant"] = energy_constant(s, norms);
  if (data.forcing == "manufactured" && coef.kind == StokesCoefficient::Kind::identity) {
    dj["velocity_l2_error"] = l2_error(s.u, manufactured::velocity);
    dj["pressure_l2_error"] = l2_quotient_error(s.p, manufactured::pressure);
  }
  write_text_file(out_path(dir, "diagnostics.json"), dj.dump(2) + "\n");
  std::printf("solution written to %s\n", out_path(dir, "solution.vtk").c_str());
  return ok;
}

int finish_report(const std::vector<ErrorRecord>& records, const SweepConfig& c) {
  std::vector<RateFit> fits;
  auto checks = evaluate_checks(records, c, &fits);
  emit_report(records, fits, checks, c.output_dir);
  bool all = !records.empty();
  for (const auto& ch : checks) {
    std::printf("%-26s %s  %s\n", ch.name.c_str(), ch.pass ? "pass" : "FAIL", ch.detail.c_str());
    all = all && ch.pass;
  }
  for (const auto& r : records)
    if (!r.ok()) {
      std::fprintf(stderr, "eps = %g failed: %s\n", r.eps, r.failure.c_str());
      return solver;
    }
  return all ? ok : acceptance;
}

SweepConfig load_sweep_config(const std::string& path, const std::string& dir_flag, int workers, bool dump,
                              bool override_guard) {
  SweepConfig c = parse_sweep_config(read_json_file(path));
  if (!dir_flag.empty()) c.output_dir = dir_flag;
  if (workers > 0) c.workers = workers;
  if (dump) c.dump_fields = true;
  if (override_guard) c.override_resolution_guard = true;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic Stokes homogenization: cell problems, solves and error-rate sweeps"};
  app.set_version_flag("--version", std::string("homstokes ") + HOMSTOKES_VERSION);
  app.require_subcommand(1);

  std::string config, dir;
  int workers = 0;
  bool dump = false, override_guard = false, verbose = false;

  auto* cell = app.add_subcommand("cell", "solve the cell problems and write the homogenized tensor");
  auto* solve = app.add_subcommand("solve", "solve one Stokes problem");
  auto* sweep = app.add_subcommand("sweep", "run the eps sweep and evaluate the configured checks");
  auto* report = app.add_subcommand("report", "re-render the report from stored records");
  for (auto* s : {cell, solve, sweep, report}) {
    s->add_option("-c,--config", config, "JSON configuration")->required();
    s->add_option("-o,--output-dir", dir, "override the configured output directory");
  }
  for (auto* s : {solve, sweep}) s->add_flag("--override-resolution-guard", override_guard, "allow h > eps / 16");
  sweep->add_option("-j,--workers", workers, "concurrent eps pipelines")->check(CLI::PositiveNumber);
  sweep->add_flag("--dump-fields", dump, "write per-eps VTK files");
  sweep->add_flag("-v,--verbose", verbose, "stage timings on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? ok : validation;
  }

  try {
    if (cell->parsed()) return run_cell_command(config, dir);
    if (solve->parsed()) return run_solve_command(config, dir, override_guard);
    SweepConfig c = load_sweep_config(config, dir, workers, dump, override_guard);
    if (verbose) c.verbose = true;
    if (sweep->parsed()) {
      auto records = run_sweep(c, [](const ErrorRecord& r) {
        if (r.ok())
          std::fprintf(stderr, "eps = %g  l2_vel %.4e  h1_w %.4e  quot_z %.4e\n", r.eps, r.l2_vel, r.h1_w, r.quot_z);
        else
          std::fprintf(stderr, "eps = %g  failed: %s\n", r.eps, r.failure.c_str());
      });
      return finish_report(records, c);
    }
    std::string store = out_path(c.output_dir, "records.json");
    if (!std::filesystem::exists(store)) throw Error(ErrorCode::io_error, "file not found: " + store);
    auto records = load_records(store);
    std::sort(records.begin(), records.end(), [](const ErrorRecord& a, const ErrorRecord& b) { return a.eps > b.eps; });
    return finish_report(records, c);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return validation;
  }
}
