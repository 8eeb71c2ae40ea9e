#include "homstokes/rates.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "homstokes/error.hpp"
#include "homstokes/io.hpp"
#include "homstokes/manufactured.hpp"
#include "homstokes/smoothing.hpp"

namespace homstokes {

using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::invalid_config, (path.empty() ? std::string("config") : path) + ": " + what);
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) config_error(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) config_error(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

double get_number(const json& j, const std::string& path, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) config_error(join(path, key), "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) config_error(join(path, key), "expected a finite number");
  return x;
}

bool get_bool(const json& j, const std::string& path, const char* key, bool def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_boolean()) config_error(join(path, key), "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& j, const std::string& path, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_string()) config_error(join(path, key), "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_numbers(const json& j, const std::string& path, const char* key, std::vector<double> def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_array()) config_error(join(path, key), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) config_error(join(path, key), "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::array<double, 2> get_pair(const json& j, const std::string& path, const char* key, std::array<double, 2> def) {
  if (!j.contains(key)) return def;
  auto v = get_numbers(j, path, key, {});
  if (v.size() != 2) config_error(join(path, key), "expected two numbers");
  return {v[0], v[1]};
}

std::vector<std::string> get_strings(const json& j, const std::string& path, const char* key,
                                     std::vector<std::string> def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_array()) config_error(join(path, key), "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) config_error(join(path, key), "expected an array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

const std::set<std::string>& known_checks() {
  static const std::set<std::string> s{"rates", "sharp", "wlp", "caccioppoli", "identity"};
  return s;
}

}  // namespace

SweepConfig parse_sweep_config(const json& j) {
  allow_keys(j, "", {"coefficient", "domain", "eps", "resolution_ratio", "override_resolution_guard", "cell_n", "data",
                     "variants", "cutoff_factor", "u0_coupled_min_h", "caccioppoli", "checks", "tolerances", "workers",
                     "output_dir", "dump_fields", "resume", "verbose"});
  SweepConfig c;
  if (j.contains("coefficient")) {
    const json& cj = j.at("coefficient");
    if (cj.is_string()) {
      c.coefficient = cj.get<std::string>();
      c.coefficient_params.clear();
    } else {
      allow_keys(cj, "coefficient", {"name", "params"});
      c.coefficient = get_string(cj, "coefficient", "name", c.coefficient);
      c.coefficient_params.clear();
      if (cj.contains("params")) {
        const json& pj = cj.at("params");
        if (!pj.is_object()) config_error("coefficient.params", "expected an object");
        for (auto it = pj.begin(); it != pj.end(); ++it) {
          if (!it.value().is_number()) config_error("coefficient.params." + it.key(), "expected a number");
          c.coefficient_params[it.key()] = it.value().get<double>();
        }
      }
    }
  }
  c.domain = get_string(j, "", "domain", c.domain);
  c.eps = get_numbers(j, "", "eps", c.eps);
  c.resolution_ratio = get_number(j, "", "resolution_ratio", c.resolution_ratio);
  c.override_resolution_guard = get_bool(j, "", "override_resolution_guard", c.override_resolution_guard);
  double n = get_number(j, "", "cell_n", c.cell_n);
  if (n != std::floor(n)) config_error("cell_n", "expected an integer");
  c.cell_n = static_cast<int>(n);
  if (j.contains("data")) {
    const json& dj = j.at("data");
    allow_keys(dj, "data", {"forcing", "value"});
    c.data.forcing = get_string(dj, "data", "forcing", c.data.forcing);
    c.data.value = get_pair(dj, "data", "value", c.data.value);
  }
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& s : get_strings(j, "", "variants", {})) {
      try {
        c.variants.push_back(parse_variant(s));
      } catch (const Error&) {
        config_error("variants", "unknown variant '" + s + "' (expected A, B or C)");
      }
    }
  }
  c.cutoff_factor = get_number(j, "", "cutoff_factor", c.cutoff_factor);
  c.u0_coupled_min_h = get_number(j, "", "u0_coupled_min_h", c.u0_coupled_min_h);
  if (j.contains("caccioppoli")) {
    const json& kj = j.at("caccioppoli");
    allow_keys(kj, "caccioppoli", {"radii", "interior_center", "boundary_center"});
    c.caccioppoli.radii = get_numbers(kj, "caccioppoli", "radii", c.caccioppoli.radii);
    auto ic = get_pair(kj, "caccioppoli", "interior_center", {c.caccioppoli.interior_center.x, c.caccioppoli.interior_center.y});
    auto bc = get_pair(kj, "caccioppoli", "boundary_center", {c.caccioppoli.boundary_center.x, c.caccioppoli.boundary_center.y});
    c.caccioppoli.interior_center = {ic[0], ic[1]};
    c.caccioppoli.boundary_center = {bc[0], bc[1]};
  }
  c.checks = get_strings(j, "", "checks", c.checks);
  for (const auto& s : c.checks)
    if (!known_checks().count(s)) config_error("checks", "unknown check '" + s + "'");
  if (j.contains("tolerances")) {
    const json& tj = j.at("tolerances");
    const std::string p = "tolerances";
    allow_keys(tj, p, {"l2_vel_alpha", "log_constant_spread", "h1_w_alpha", "quot_z_alpha", "sharp_alpha_min",
                       "wlp4_max", "wlp2_max", "caccioppoli_max", "identity_max"});
    auto& t = c.tolerances;
    t.l2_vel_alpha = get_pair(tj, p, "l2_vel_alpha", t.l2_vel_alpha);
    t.log_constant_spread = get_number(tj, p, "log_constant_spread", t.log_constant_spread);
    t.h1_w_alpha = get_pair(tj, p, "h1_w_alpha", t.h1_w_alpha);
    t.quot_z_alpha = get_pair(tj, p, "quot_z_alpha", t.quot_z_alpha);
    t.sharp_alpha_min = get_number(tj, p, "sharp_alpha_min", t.sharp_alpha_min);
    t.wlp4_max = get_number(tj, p, "wlp4_max", t.wlp4_max);
    t.wlp2_max = get_number(tj, p, "wlp2_max", t.wlp2_max);
    t.caccioppoli_max = get_number(tj, p, "caccioppoli_max", t.caccioppoli_max);
    t.identity_max = get_number(tj, p, "identity_max", t.identity_max);
  }
  double w = get_number(j, "", "workers", c.workers);
  if (w != std::floor(w) || w < 1) config_error("workers", "expected a positive integer");
  c.workers = static_cast<int>(w);
  c.output_dir = get_string(j, "", "output_dir", c.output_dir);
  c.dump_fields = get_bool(j, "", "dump_fields", c.dump_fields);
  c.resume = get_bool(j, "", "resume", c.resume);
  c.verbose = get_bool(j, "", "verbose", c.verbose);
  return c;
}

json to_json(const SweepConfig& c) {
  json j;
  json params = json::object();
  for (const auto& [k, v] : c.coefficient_params) params[k] = v;
  j["coefficient"] = {{"name", c.coefficient}, {"params", params}};
  j["domain"] = c.domain;
  j["eps"] = c.eps;
  j["resolution_ratio"] = c.resolution_ratio;
  j["override_resolution_guard"] = c.override_resolution_guard;
  j["cell_n"] = c.cell_n;
  j["data"] = {{"forcing", c.data.forcing}, {"value", c.data.value}};
  std::vector<std::string> vs;
  for (auto v : c.variants) vs.push_back(variant_name(v));
  j["variants"] = vs;
  j["cutoff_factor"] = c.cutoff_factor;
  j["u0_coupled_min_h"] = c.u0_coupled_min_h;
  j["caccioppoli"] = {{"radii", c.caccioppoli.radii},
                      {"interior_center", {c.caccioppoli.interior_center.x, c.caccioppoli.interior_center.y}},
                      {"boundary_center", {c.caccioppoli.boundary_center.x, c.caccioppoli.boundary_center.y}}};
  j["checks"] = c.checks;
  const auto& t = c.tolerances;
  j["tolerances"] = {{"l2_vel_alpha", t.l2_vel_alpha},       {"log_constant_spread", t.log_constant_spread},
                     {"h1_w_alpha", t.h1_w_alpha},           {"quot_z_alpha", t.quot_z_alpha},
                     {"sharp_alpha_min", t.sharp_alpha_min}, {"wlp4_max", t.wlp4_max},
                     {"wlp2_max", t.wlp2_max},               {"caccioppoli_max", t.caccioppoli_max},
                     {"identity_max", t.identity_max}};
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  j["dump_fields"] = c.dump_fields;
  j["resume"] = c.resume;
  j["verbose"] = c.verbose;
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t pos = e.byte > 0 ? e.byte - 1 : 0;
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    auto cut = msg.find("parse error");
    if (cut != std::string::npos) msg = msg.substr(cut);
    throw Error(ErrorCode::invalid_config,
                path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" + msg + ")");
  }
}

void validate_sweep_config(const SweepConfig& c) {
  if (c.eps.empty()) config_error("eps", "at least one value is required");
  for (std::size_t i = 0; i < c.eps.size(); ++i) {
    if (!(c.eps[i] > 0.0)) config_error("eps", "values must be positive");
    if (i > 0 && !(c.eps[i] < c.eps[i - 1])) config_error("eps", "values must be strictly decreasing");
  }
  if (!(c.resolution_ratio >= 1.0)) config_error("resolution_ratio", "must be at least 1");
  ResolutionGuard guard;
  if (c.resolution_ratio < guard.ratio && !c.override_resolution_guard)
    config_error("resolution_ratio", "h = eps / " + std::to_string(c.resolution_ratio) +
                                         " violates the resolution guard h <= eps / 16 (set override_resolution_guard)");
  if (c.cell_n < 4) config_error("cell_n", "must be at least 4");
  if (c.variants.empty()) config_error("variants", "at least one variant is required");
  if (!(c.cutoff_factor > 0.0)) config_error("cutoff_factor", "must be positive");
  if (!(c.u0_coupled_min_h > 0.0)) config_error("u0_coupled_min_h", "must be positive");
  if (c.data.forcing != "manufactured" && c.data.forcing != "constant" && c.data.forcing != "zero")
    config_error("data.forcing", "expected manufactured, constant or zero");
  for (double r : c.caccioppoli.radii)
    if (!(r > 0.0)) config_error("caccioppoli.radii", "radii must be positive");

  DomainSpec spec;
  try {
    spec = DomainSpec::from_preset(c.domain);
  } catch (const Error& e) {
    config_error("domain", e.what());
  }
  auto probe = build_domain_mesh(spec, polygon_diameter(spec.vertices) / 8.0);
  bool needs_cutoff = false;
  for (auto v : c.variants) needs_cutoff = needs_cutoff || v != Variant::C;
  for (double e : c.eps) {
    if (needs_cutoff && c.cutoff_factor * e > probe->inradius * (1.0 + 1e-12))
      config_error("eps", "eps = " + std::to_string(e) + " leaves no room for the cut-off: " +
                              std::to_string(c.cutoff_factor) + " eps exceeds the inradius " +
                              std::to_string(probe->inradius));
  }
}

// ---------------------------------------------------------------- pipeline

CellProducts run_cell(std::shared_ptr<const CoefficientField> a, int n) {
  CellProducts p;
  p.coefficient = a;
  auto mesh = build_cell_mesh(2, n);
  p.correctors = solve_correctors(a, mesh);
  p.a_hat = homogenized_tensor(p.correctors);
  p.b = flux_difference(p.correctors, p.a_hat);
  p.flux = solve_flux_correctors(p.b);
  p.identities = verify_corrector_identities(p.correctors, p.flux, p.a_hat, p.b);
  return p;
}

SweepProblemData sweep_data(const SweepData& spec, const std::shared_ptr<const DomainMesh>& mesh) {
  SweepProblemData d;
  if (spec.forcing == "manufactured") {
    d.F = interpolate(mesh, Rank::vector, Space::quadrature, manufactured::forcing);
  } else if (spec.forcing == "constant") {
    auto v = spec.value;
    d.F = interpolate(mesh, Rank::vector, Space::quadrature, [v](Vec2, double* o) {
      o[0] = v[0];
      o[1] = v[1];
    });
  } else if (spec.forcing == "zero") {
    d.F = Field(mesh, Rank::vector, Space::quadrature);
  } else {
    throw Error(ErrorCode::invalid_config, "data.forcing: unknown forcing '" + spec.forcing + "'");
  }
  d.h = Field(mesh, Rank::scalar, Space::pressure);
  d.g = BoundaryTrace::zero(*mesh);
  return d;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Tangential lid velocity sin^2(pi s) on the top edge, zero elsewhere.
BoundaryTrace lid_trace(const DomainMesh& mesh) {
  double ymax = -1e300, xmin = 1e300, xmax = -1e300;
  for (const auto& v : mesh.spec.vertices) {
    ymax = std::max(ymax, v.y);
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
  }
  return BoundaryTrace::interpolate(mesh, [=](Vec2 p, double* o) {
    o[1] = 0.0;
    if (std::abs(p.y - ymax) > 1e-12) {
      o[0] = 0.0;
      return;
    }
    double s = std::sin(std::numbers::pi * (p.x - xmin) / (xmax - xmin));
    o[0] = s * s;
  });
}

bool is_full_rectangle(const DomainMesh& mesh) {
  if (!mesh.lattice) return false;
  for (int e : mesh.lattice->square_elem)
    if (e < 0) return false;
  return true;
}

/// ||S_eps f - f|| / eps for f = sin(2 pi x1) continued periodically.
double smoothing_rate_ratio(const std::shared_ptr<const DomainMesh>& mesh, double eps) {
  double x0 = mesh->lattice->origin.x;
  double w = mesh->lattice->s * mesh->lattice->nx;
  Field f = interpolate(mesh, Rank::scalar, Space::quadrature,
                        [=](Vec2 p, double* o) { o[0] = std::sin(2.0 * std::numbers::pi * (p.x - x0) / w); });
  Field s = smooth(f, eps, {Extension::periodic, true});
  return norm(add(s, f, -1.0), NormKind::L2()) / eps;
}

}  // namespace

ErrorRecord run_eps(const SweepConfig& c, const CellProducts& cell, double eps) {
  auto t0 = std::chrono::steady_clock::now();
  auto log = [&](const char* what) {
    if (c.verbose) std::fprintf(stderr, "[eps=%g] %s (%.1fs)\n", eps, what, seconds_since(t0));
  };
  const DomainSpec spec = DomainSpec::from_preset(c.domain);
  const double h = eps / c.resolution_ratio;
  auto mesh = build_domain_mesh(spec, h);
  ResolutionGuard guard;
  guard.override_guard = c.override_resolution_guard;
  SweepProblemData data = sweep_data(c.data, mesh);
  log("mesh");

  StokesSolution sol_e;
  std::map<std::string, double> extra;
  {
    StokesOperator op(mesh, StokesCoefficient::oscillating(cell.coefficient, eps), guard);
    sol_e = op.solve(data.F, data.h, data.g);
    extra["iterations_eps"] = sol_e.diagnostics.iterations;
    log("u_eps");
    // homogeneous lid-driven solve for the Caccioppoli windows
    Field zero_f(mesh, Rank::vector, Space::quadrature);
    StokesSolution lid = op.solve(zero_f, data.h, lid_trace(*mesh));
    for (std::size_t i = 0; i < c.caccioppoli.radii.size(); ++i) {
      double r = c.caccioppoli.radii[i];
      extra["cacc_interior_" + std::to_string(i)] =
          caccioppoli_ratio(lid, c.caccioppoli.interior_center, r, CaccioppoliMode::interior);
      extra["cacc_boundary_" + std::to_string(i)] =
          caccioppoli_ratio(lid, c.caccioppoli.boundary_center, r, CaccioppoliMode::boundary);
    }
    log("caccioppoli");
  }
  DataNorms norms = data_norms(data.F, data.h, data.g, *mesh);
  extra["energy_constant"] = energy_constant(sol_e, norms);

  // homogenized solution
  StokesSolution sol_0;
  const Tensor4& ahat = cell.a_hat.a_hat;
  const bool coupled = !ahat.is_scalar_identity();
  double u0_h = mesh->h_char();
  if (coupled && mesh->h_char() < c.u0_coupled_min_h * (1.0 - 1e-9)) {
    auto coarse = build_domain_mesh(spec, c.u0_coupled_min_h);
    double ratio = coarse->h_char() / mesh->h_char();
    if (!coarse->lattice || !mesh->lattice || std::abs(ratio - std::round(ratio)) > 1e-9)
      throw Error(ErrorCode::incompatible_mesh, "homogenized solve needs nested lattices");
    SweepProblemData cd = sweep_data(c.data, coarse);
    StokesOperator op0(coarse, StokesCoefficient::constant(ahat));
    StokesSolution s0 = op0.solve(cd.F, cd.h, cd.g);
    sol_0.u = transfer(s0.u, mesh);
    sol_0.p = transfer(s0.p, mesh);
    sol_0.diagnostics = s0.diagnostics;
    u0_h = coarse->h_char();
  } else {
    StokesOperator op0(mesh, StokesCoefficient::constant(ahat));
    sol_0 = op0.solve(data.F, data.h, data.g);
  }
  extra["u0_h"] = u0_h;
  extra["iterations_0"] = sol_0.diagnostics.iterations;
  log("u0");

  AmplitudeOptions aopt;
  aopt.cutoff_factor = c.cutoff_factor;
  std::vector<Amplitude> amps;
  for (auto v : c.variants) amps.push_back(build_amplitude(sol_0.u, eps, v, aopt));
  log("amplitudes");
  auto bundles = assemble_approximants(sol_e, sol_0, cell.correctors, cell.flux, eps, amps);
  amps.clear();
  log("bundles");

  ErrorRecord rec = error_record(bundles.front(), norms, mesh->h_char(), guard.ratio);
  for (std::size_t i = 1; i < bundles.size(); ++i) add_variant_errors(rec, bundles[i]);
  add_variant_errors(rec, bundles.front());
  for (const auto& [k, v] : extra) rec.extra[k] = v;
  if (is_full_rectangle(*mesh)) rec.extra["smoothing_ratio"] = smoothing_rate_ratio(mesh, eps);

  if (c.dump_fields) {
    char name[64];
    std::snprintf(name, sizeof name, "fields/eps_%.6g.vtk", eps);
    std::string path = (std::filesystem::path(c.output_dir) / name).string();
    write_vtk(path, *mesh,
              {{"u_eps", &sol_e.u}, {"p_eps", &sol_e.p}, {"u0", &sol_0.u}, {"p0", &sol_0.p},
               {"w", &bundles.front().w}, {"z", &bundles.front().z}});
  }
  log("record");
  return rec;
}

// ---------------------------------------------------------------- records

json record_to_json(const ErrorRecord& r) {
  json j;
  j["eps"] = r.eps;
  j["h"] = r.h;
  j["variant"] = r.variant;
  j["l2_vel"] = r.l2_vel;
  j["l4_vel"] = r.l4_vel;
  j["h1_w"] = r.h1_w;
  j["l2_w"] = r.l2_w;
  j["quot_z"] = r.quot_z;
  j["quot_p_simple"] = r.quot_p_simple;
  j["grad_l4"] = r.grad_l4;
  j["grad_l2"] = r.grad_l2;
  j["f_norm"] = r.f_norm;
  j["h_norm"] = r.h_norm;
  j["g_norm"] = r.g_norm;
  j["guard_ratio"] = r.guard_ratio;
  j["flagged"] = r.flagged;
  json ex = json::object();
  for (const auto& [k, v] : r.extra) ex[k] = v;
  j["extra"] = ex;
  j["failure"] = r.failure;
  return j;
}

ErrorRecord record_from_json(const json& j) {
  ErrorRecord r;
  auto num = [&](const char* k) {
    if (!j.contains(k) || j.at(k).is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.at(k).get<double>();
  };
  r.eps = num("eps");
  r.h = num("h");
  r.variant = j.value("variant", std::string("A"));
  r.l2_vel = num("l2_vel");
  r.l4_vel = num("l4_vel");
  r.h1_w = num("h1_w");
  r.l2_w = num("l2_w");
  r.quot_z = num("quot_z");
  r.quot_p_simple = num("quot_p_simple");
  r.grad_l4 = num("grad_l4");
  r.grad_l2 = num("grad_l2");
  r.f_norm = num("f_norm");
  r.h_norm = num("h_norm");
  r.g_norm = num("g_norm");
  r.guard_ratio = j.contains("guard_ratio") ? j.at("guard_ratio").get<double>() : 16.0;
  r.flagged = j.value("flagged", false);
  if (j.contains("extra"))
    for (auto it = j.at("extra").begin(); it != j.at("extra").end(); ++it)
      r.extra[it.key()] = it.value().is_null() ? std::numeric_limits<double>::quiet_NaN() : it.value().get<double>();
  r.failure = j.value("failure", std::string());
  return r;
}

std::vector<ErrorRecord> load_records(const std::string& path) {
  json j = read_json_file(path);
  const json& arr = j.is_array() ? j : j.at("records");
  std::vector<ErrorRecord> out;
  for (const auto& r : arr) out.push_back(record_from_json(r));
  return out;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void sort_records(std::vector<ErrorRecord>& r) {
  std::sort(r.begin(), r.end(), [](const ErrorRecord& a, const ErrorRecord& b) { return a.eps > b.eps; });
}

}  // namespace

std::string records_csv(const std::vector<ErrorRecord>& records) {
  static const char* fixed[] = {"eps",    "h",      "l2_vel",        "l4_vel",  "h1_w",   "l2_w",
                                "quot_z", "quot_p_simple", "grad_l4", "f_norm", "h_norm", "g_norm"};
  std::set<std::string> extras;
  for (const auto& r : records)
    for (const auto& [k, v] : r.extra) extras.insert(k);
  std::ostringstream os;
  for (const char* f : fixed) os << f << ',';
  os << "grad_l2,variant,h_over_eps,flagged,status";
  for (const auto& k : extras) os << ',' << k;
  os << '\n';
  for (const auto& r : records) {
    for (const char* f : fixed) os << fmt(r.value(f)) << ',';
    os << fmt(r.grad_l2) << ',' << r.variant << ',' << fmt(r.h / r.eps) << ',' << (r.flagged ? 1 : 0) << ','
       << (r.ok() ? "ok" : "failed");
    for (const auto& k : extras) {
      auto it = r.extra.find(k);
      os << ',' << (it == r.extra.end() ? std::string() : fmt(it->second));
    }
    os << '\n';
  }
  return os.str();
}

std::vector<ErrorRecord> run_sweep(const SweepConfig& c, const SweepHook& hook) {
  validate_sweep_config(c);
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec || !std::filesystem::is_directory(c.output_dir))
    throw Error(ErrorCode::io_error, "cannot create output directory '" + c.output_dir + "'");
  const std::string store = (std::filesystem::path(c.output_dir) / "records.json").string();
  const std::string csv = (std::filesystem::path(c.output_dir) / "records.csv").string();

  // the stored config omits run-local flags so that resuming tolerates them
  json key = to_json(c);
  for (const char* k : {"workers", "output_dir", "dump_fields", "resume", "verbose", "checks", "tolerances"}) key.erase(k);

  std::map<double, ErrorRecord> done;
  if (c.resume && std::filesystem::exists(store)) {
    try {
      json old = read_json_file(store);
      if (old.contains("config") && old.at("config") == key) {
        for (const auto& rj : old.at("records")) {
          ErrorRecord r = record_from_json(rj);
          if (r.ok()) done[r.eps] = r;
        }
      }
    } catch (const Error&) {
      done.clear();
    }
  }

  auto t0 = std::chrono::steady_clock::now();
  auto coefficient = std::make_shared<const CoefficientField>(builtin_coefficient(c.coefficient, c.coefficient_params));
  CellProducts cell = run_cell(coefficient, c.cell_n);
  if (c.verbose) std::fprintf(stderr, "[cell n=%d] done (%.1fs)\n", c.cell_n, seconds_since(t0));

  std::mutex mu;
  std::map<double, ErrorRecord> results = done;
  auto persist = [&]() {
    std::vector<ErrorRecord> all;
    for (const auto& [e, r] : results) all.push_back(r);
    sort_records(all);
    json j;
    j["config"] = key;
    json arr = json::array();
    for (const auto& r : all) arr.push_back(record_to_json(r));
    j["records"] = arr;
    write_text_file(store, j.dump(2) + "\n");
    write_text_file(csv, records_csv(all));
  };

  std::vector<double> todo;
  for (double e : c.eps)
    if (!done.count(e)) todo.push_back(e);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      double eps = todo[i];
      ErrorRecord r;
      try {
        r = run_eps(c, cell, eps);
      } catch (const std::exception& e) {
        r = ErrorRecord{};
        r.eps = eps;
        r.h = eps / c.resolution_ratio;
        r.variant = variant_name(c.variants.front());
        r.failure = e.what();
        for (double* v : {&r.l2_vel, &r.l4_vel, &r.h1_w, &r.l2_w, &r.quot_z, &r.quot_p_simple, &r.grad_l4, &r.grad_l2,
                          &r.f_norm, &r.h_norm, &r.g_norm})
          *v = std::numeric_limits<double>::quiet_NaN();
      }
      std::lock_guard<std::mutex> lock(mu);
      results[eps] = r;
      persist();
      if (hook) hook(r);
    }
  };
  int nw = std::max(1, std::min<int>(c.workers, static_cast<int>(todo.size())));
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < nw; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  persist();

  std::vector<ErrorRecord> out;
  for (double e : c.eps) out.push_back(results.at(e));
  sort_records(out);
  return out;
}

// ---------------------------------------------------------------- fits

const char* model_name(RateModel m) { return m == RateModel::power ? "power" : "log_corrected"; }

namespace {

struct Points {
  std::vector<double> eps, e;
  std::vector<std::string> notes;
};

Points usable(const std::vector<ErrorRecord>& records, const std::string& norm) {
  Points p;
  for (const auto& r : records) {
    char tag[48];
    std::snprintf(tag, sizeof tag, "eps=%g", r.eps);
    if (!r.ok()) {
      p.notes.push_back(std::string(tag) + " excluded: failed");
      continue;
    }
    if (r.flagged) {
      p.notes.push_back(std::string(tag) + " excluded: resolution guard flag");
      continue;
    }
    double v = r.value(norm);
    if (!(v > 0.0) || !std::isfinite(v)) {
      p.notes.push_back(std::string(tag) + " excluded: nonpositive " + norm);
      continue;
    }
    p.eps.push_back(r.eps);
    p.e.push_back(v);
  }
  return p;
}

RateFit fit_points(const Points& p, const std::string& norm, RateModel model, double r0) {
  RateFit f;
  f.norm = norm;
  f.model = model;
  f.notes = p.notes;
  const std::size_t n = p.eps.size();
  if (n < 3)
    throw Error(ErrorCode::insufficient_data, norm + ": " + std::to_string(n) + " usable points, at least 3 needed");
  f.points = static_cast<int>(n);
  f.eps_min = *std::min_element(p.eps.begin(), p.eps.end());
  f.eps_max = *std::max_element(p.eps.begin(), p.eps.end());
  if (model == RateModel::power) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double x = std::log(p.eps[i]), y = std::log(p.e[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double mx = sx / n, my = sy / n;
    double vxx = sxx / n - mx * mx, vxy = sxy / n - mx * my;
    f.alpha = vxy / vxx;
    double b = my - f.alpha * mx;
    f.constant = std::exp(b);
    double rr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = std::log(p.e[i]) - (b + f.alpha * std::log(p.eps[i]));
      rr += d * d;
    }
    f.residual = std::sqrt(rr / n);
  } else {
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(p.eps[i] < r0)) throw Error(ErrorCode::insufficient_data, "log model needs eps < r0");
      double x = p.eps[i] * std::log(r0 / p.eps[i]);
      sxy += x * p.e[i];
      sxx += x * x;
    }
    f.constant = sxy / sxx;
    double rr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = p.e[i] / (f.constant * p.eps[i] * std::log(r0 / p.eps[i])) - 1.0;
      rr += d * d;
    }
    f.residual = std::sqrt(rr / n);
    f.alpha = 1.0;
  }
  return f;
}

}  // namespace

RateFit fit_rate(const std::vector<ErrorRecord>& records, const std::string& norm, RateModel model, double r0) {
  return fit_points(usable(records, norm), norm, model, r0);
}

std::vector<double> drop_one_constants(const std::vector<ErrorRecord>& records, const std::string& norm,
                                       RateModel model, double r0) {
  Points all = usable(records, norm);
  std::vector<double> out;
  for (std::size_t k = 0; k < all.eps.size(); ++k) {
    Points p;
    for (std::size_t i = 0; i < all.eps.size(); ++i) {
      if (i == k) continue;
      p.eps.push_back(all.eps[i]);
      p.e.push_back(all.e[i]);
    }
    out.push_back(fit_points(p, norm, model, r0).constant);
  }
  return out;
}

double wlp_uniformity(const std::vector<ErrorRecord>& records, double p) {
  if (p != 2.0 && p != 4.0) throw Error(ErrorCode::invalid_config, "W^{1,p} observable is recorded for p = 2 and 4");
  std::vector<double> v;
  for (const auto& r : records) {
    if (!r.ok() || r.flagged) continue;
    double g = p == 4.0 ? r.grad_l4 : r.grad_l2;
    double d = r.data_sum();
    if (!(d > 0.0) || !std::isfinite(g)) continue;
    v.push_back(g / d);
  }
  if (v.size() < 2) throw Error(ErrorCode::insufficient_data, "W^{1,p} uniformity needs at least two records");
  return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
}

// ---------------------------------------------------------------- checks

std::vector<CheckResult> evaluate_checks(const std::vector<ErrorRecord>& records, const SweepConfig& c,
                                         std::vector<RateFit>* fits) {
  std::vector<CheckResult> out;
  const double r0 = polygon_diameter(DomainSpec::from_preset(c.domain).vertices);
  const auto& t = c.tolerances;
  auto has = [&](const char* s) { return std::find(c.checks.begin(), c.checks.end(), s) != c.checks.end(); };
  auto window = [](double v, std::array<double, 2> w) { return v >= w[0] && v <= w[1]; };
  auto add_fit = [&](const RateFit& f) {
    if (fits) fits->push_back(f);
  };
  auto guarded = [&](const std::string& name, const std::function<CheckResult()>& body) {
    try {
      out.push_back(body());
    } catch (const Error& e) {
      out.push_back({name, false, std::numeric_limits<double>::quiet_NaN(), e.what()});
    }
  };
  char buf[256];

  if (has("rates")) {
    guarded("l2_velocity_rate", [&] {
      RateFit f = fit_rate(records, "l2_vel", RateModel::power, r0);
      add_fit(f);
      std::snprintf(buf, sizeof buf, "alpha = %.4f, window [%.2f, %.2f]", f.alpha, t.l2_vel_alpha[0], t.l2_vel_alpha[1]);
      return CheckResult{"l2_velocity_rate", window(f.alpha, t.l2_vel_alpha), f.alpha, buf};
    });
    guarded("l2_velocity_log_constant", [&] {
      RateFit f = fit_rate(records, "l2_vel", RateModel::log_corrected, r0);
      add_fit(f);
      double spread = 0.0;
      for (double k : drop_one_constants(records, "l2_vel", RateModel::log_corrected, r0))
        spread = std::max(spread, std::abs(k / f.constant - 1.0));
      std::snprintf(buf, sizeof buf, "C = %.4g, max drop-one deviation %.3f (limit %.2f)", f.constant, spread,
                    t.log_constant_spread);
      return CheckResult{"l2_velocity_log_constant", spread <= t.log_constant_spread, spread, buf};
    });
    guarded("h1_w_rate", [&] {
      RateFit f = fit_rate(records, "h1_w_A", RateModel::power, r0);
      add_fit(f);
      std::snprintf(buf, sizeof buf, "variant A alpha = %.4f, window [%.2f, %.2f]", f.alpha, t.h1_w_alpha[0],
                    t.h1_w_alpha[1]);
      return CheckResult{"h1_w_rate", window(f.alpha, t.h1_w_alpha), f.alpha, buf};
    });
    guarded("z_quotient_rate", [&] {
      RateFit f = fit_rate(records, "quot_z_A", RateModel::power, r0);
      add_fit(f);
      std::snprintf(buf, sizeof buf, "variant A alpha = %.4f, window [%.2f, %.2f]", f.alpha, t.quot_z_alpha[0],
                    t.quot_z_alpha[1]);
      return CheckResult{"z_quotient_rate", window(f.alpha, t.quot_z_alpha), f.alpha, buf};
    });
  }
  if (has("sharp")) {
    guarded("sharp_pressure_rate", [&] {
      RateFit f = fit_rate(records, "quot_p_simple_C", RateModel::power, r0);
      add_fit(f);
      std::snprintf(buf, sizeof buf, "variant C alpha = %.4f, minimum %.2f", f.alpha, t.sharp_alpha_min);
      return CheckResult{"sharp_pressure_rate", f.alpha >= t.sharp_alpha_min, f.alpha, buf};
    });
    guarded("sharp_l4_rate", [&] {
      RateFit f = fit_rate(records, "l4_vel", RateModel::power, r0);
      add_fit(f);
      std::snprintf(buf, sizeof buf, "alpha = %.4f, minimum %.2f", f.alpha, t.sharp_alpha_min);
      return CheckResult{"sharp_l4_rate", f.alpha >= t.sharp_alpha_min, f.alpha, buf};
    });
  }
  if (has("wlp")) {
    guarded("wlp4_uniformity", [&] {
      double r = wlp_uniformity(records, 4.0);
      std::snprintf(buf, sizeof buf, "max/min = %.4f (limit %.2f)", r, t.wlp4_max);
      return CheckResult{"wlp4_uniformity", r <= t.wlp4_max, r, buf};
    });
    guarded("wlp2_uniformity", [&] {
      double r = wlp_uniformity(records, 2.0);
      std::snprintf(buf, sizeof buf, "max/min = %.4f (limit %.2f)", r, t.wlp2_max);
      return CheckResult{"wlp2_uniformity", r <= t.wlp2_max, r, buf};
    });
  }
  if (has("caccioppoli")) {
    guarded("caccioppoli_bound", [&] {
      double worst = 0.0;
      int count = 0;
      bool finite = true;
      for (const auto& r : records) {
        if (!r.ok()) continue;
        for (const auto& [k, v] : r.extra) {
          if (k.rfind("cacc_", 0) != 0) continue;
          ++count;
          finite = finite && std::isfinite(v) && v >= 0.0;
          worst = std::max(worst, v);
        }
      }
      if (count == 0) throw Error(ErrorCode::insufficient_data, "no Caccioppoli ratios recorded");
      std::snprintf(buf, sizeof buf, "max ratio %.4g over %d windows (limit %.0f)", worst, count, t.caccioppoli_max);
      return CheckResult{"caccioppoli_bound", finite && worst <= t.caccioppoli_max, worst, buf};
    });
  }
  if (has("identity")) {
    guarded("identity_exactness", [&] {
      double worst = 0.0;
      int count = 0;
      for (const auto& r : records) {
        if (!r.ok()) throw Error(ErrorCode::solver_failure, "a record failed: " + r.failure);
        for (const char* k : {"l2_vel", "l4_vel", "h1_w", "l2_w", "quot_z", "quot_p_simple"}) {
          worst = std::max(worst, r.value(k));
          ++count;
        }
        for (const auto& [k, v] : r.extra) {
          if (k.rfind("h1_w_", 0) == 0 || k.rfind("l2_w_", 0) == 0 || k.rfind("quot_", 0) == 0)
            worst = std::max(worst, v);
        }
      }
      if (count == 0) throw Error(ErrorCode::insufficient_data, "no records");
      std::snprintf(buf, sizeof buf, "max two-scale error %.3g (limit %.0e)", worst, t.identity_max);
      return CheckResult{"identity_exactness", worst <= t.identity_max, worst, buf};
    });
  }
  return out;
}

// ---------------------------------------------------------------- report

namespace {

std::string svg_plot(const std::vector<ErrorRecord>& records, const std::vector<RateFit>& fits) {
  static const char* tracked[] = {"l2_vel", "l4_vel", "h1_w", "l2_w", "quot_z", "quot_p_simple", "quot_p_simple_C"};
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
  const double W = 720, H = 480, L = 70, R = 220, T = 30, B = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    for (const char* k : tracked) {
      double v = r.value(k);
      if (!(v > 0.0) || !std::isfinite(v)) continue;
      xmin = std::min(xmin, std::log10(r.eps));
      xmax = std::max(xmax, std::log10(r.eps));
      ymin = std::min(ymin, std::log10(v));
      ymax = std::max(ymax, std::log10(v));
    }
  }
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n", W,
                H, W, H);
  os << buf;
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (xmin > xmax) {
    os << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no data</text>\n</svg>\n";
    return os.str();
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  ymin = std::floor(ymin);
  ymax = std::ceil(ymax);
  auto X = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto Y = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };
  std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                L, T, W - L - R, H - T - B);
  os << buf;
  for (int d = static_cast<int>(ymin); d <= static_cast<int>(ymax); ++d) {
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">1e%d</text>\n", L - 6, Y(d) + 4, d);
    os << buf;
  }
  for (const auto& r : records) {
    if (!r.ok()) continue;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%g</text>\n",
                  X(std::log10(r.eps)), H - B + 16, r.eps);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">eps</text>\n",
                L + (W - L - R) / 2, H - 12);
  os << buf;
  int row = 0;
  for (std::size_t k = 0; k < std::size(tracked); ++k) {
    std::ostringstream pts;
    int n = 0;
    for (const auto& r : records) {
      if (!r.ok()) continue;
      double v = r.value(tracked[k]);
      if (!(v > 0.0) || !std::isfinite(v)) continue;
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", n ? " " : "", X(std::log10(r.eps)), Y(std::log10(v)));
      pts << buf;
      ++n;
    }
    if (n == 0) continue;
    os << "<polyline fill=\"none\" stroke=\"" << colors[k] << "\" stroke-width=\"2\" points=\"" << pts.str()
       << "\"/>\n";
    std::string label = tracked[k];
    for (const auto& f : fits) {
      if (f.model == RateModel::power && (f.norm == label || f.norm == label + "_A")) {
        std::snprintf(buf, sizeof buf, " (slope %.2f)", f.alpha);
        label += buf;
        break;
      }
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"%s\">%s</text>\n", W - R + 10, T + 16 + 18.0 * row,
                  colors[k], label.c_str());
    os << buf;
    ++row;
  }
  os << "</svg>\n";
  return os.str();
}

double json_safe(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

void emit_report(const std::vector<ErrorRecord>& records, const std::vector<RateFit>& fits,
                 const std::vector<CheckResult>& checks, const std::string& dir, const json& extra) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error(ErrorCode::io_error, "cannot create directory '" + dir + "'");
  auto path = [&](const char* f) { return (std::filesystem::path(dir) / f).string(); };
  write_text_file(path("records.csv"), records_csv(records));

  json s;
  s["no_data"] = records.empty();
  s["records"] = records.size();
  int failed = 0;
  json excluded = json::array();
  for (const auto& r : records) {
    if (!r.ok()) {
      ++failed;
      excluded.push_back({{"eps", r.eps}, {"reason", r.failure}});
    } else if (r.flagged) {
      excluded.push_back({{"eps", r.eps}, {"reason", "resolution guard flag"}});
    }
  }
  s["failed_records"] = failed;
  s["excluded"] = excluded;
  json fj = json::array();
  for (const auto& f : fits) {
    fj.push_back({{"norm", f.norm},
                  {"model", model_name(f.model)},
                  {"alpha", json_safe(f.alpha)},
                  {"constant", json_safe(f.constant)},
                  {"residual", json_safe(f.residual)},
                  {"eps_range", {f.eps_min, f.eps_max}},
                  {"points", f.points},
                  {"notes", f.notes}});
  }
  s["fits"] = fj;
  json cj = json::array();
  bool all = true;
  for (const auto& c : checks) {
    cj.push_back({{"name", c.name}, {"status", c.pass ? "pass" : "fail"}, {"value", json_safe(c.value)},
                  {"detail", c.detail}});
    all = all && c.pass;
  }
  s["checks"] = cj;
  s["all_pass"] = all && !records.empty();
  for (auto it = extra.begin(); it != extra.end(); ++it) s[it.key()] = it.value();
  write_text_file(path("summary.json"), s.dump(2) + "\n");
  write_text_file(path("rates.svg"), svg_plot(records, fits));
}

}  // namespace homstokes
