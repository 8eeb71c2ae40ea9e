#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "homstokes/cellsolve.hpp"
#include "homstokes/twoscale.hpp"

namespace homstokes {

/// Acceptance windows evaluated on a finished sweep.
struct SweepTolerances {
  std::array<double, 2> l2_vel_alpha{0.80, 1.15};
  double log_constant_spread = 0.30;
  std::array<double, 2> h1_w_alpha{0.35, 0.70};
  std::array<double, 2> quot_z_alpha{0.35, 0.75};
  double sharp_alpha_min = 0.85;
  double wlp4_max = 2.0;
  double wlp2_max = 1.5;
  double caccioppoli_max = 1e3;
  double identity_max = 1e-7;
};

struct SweepData {
  /// "manufactured" (forcing of the stream-function solution), "constant" or "zero"
  std::string forcing = "manufactured";
  std::array<double, 2> value{1.0, 0.0};
};

struct CaccioppoliSetup {
  std::vector<double> radii{0.125, 0.0625};
  Vec2 interior_center{0.5, 0.5};
  Vec2 boundary_center{0.5, 0.0};
};

struct SweepConfig {
  std::string coefficient = "scalar_trig";
  ParamMap coefficient_params{{"kappa", 2.0}};
  std::string domain = "unit_square";
  /// Strictly decreasing.
  std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125};
  /// h = eps / resolution_ratio
  double resolution_ratio = 16.0;
  bool override_resolution_guard = false;
  int cell_n = 128;
  SweepData data;
  /// The first variant fills the primary record columns.
  std::vector<Variant> variants{Variant::A, Variant::C};
  double cutoff_factor = 2.0;
  /// Homogenized problems with a coupled (non-scalar) tensor are solved on a
  /// lattice no finer than this and transferred to the fine mesh.
  double u0_coupled_min_h = 1.0 / 256.0;
  CaccioppoliSetup caccioppoli;
  /// Acceptance items evaluated on the sweep: any of "rates", "sharp", "wlp",
  /// "caccioppoli", "identity".
  std::vector<std::string> checks{"rates", "sharp", "wlp", "caccioppoli"};
  SweepTolerances tolerances;
  int workers = 1;
  std::string output_dir = "out";
  bool dump_fields = false;
  /// Reuse records of a previous run with the same configuration.
  bool resume = true;
  bool verbose = false;
};

/// Strict parse: unknown keys and wrong types throw invalid-config naming the key.
SweepConfig parse_sweep_config(const nlohmann::json& j);
nlohmann::json to_json(const SweepConfig& c);

/// Reads a JSON file. Throws io-error when unreadable and invalid-config with
/// line and column when malformed.
nlohmann::json read_json_file(const std::string& path);

/// Checks eps ordering, the cut-off room 2 eps <= inradius and the mesh rule.
/// Throws invalid-config.
void validate_sweep_config(const SweepConfig& c);

struct CellProducts {
  std::shared_ptr<const CoefficientField> coefficient;
  CorrectorSet correctors;
  HomogenizedTensor a_hat;
  FluxDifference b;
  FluxSet flux;
  IdentityReport identities;
};

CellProducts run_cell(std::shared_ptr<const CoefficientField> a, int n);

/// Stokes data of a sweep on a given mesh.
struct SweepProblemData {
  Field F;
  Field h;
  BoundaryTrace g;
};
SweepProblemData sweep_data(const SweepData& spec, const std::shared_ptr<const DomainMesh>& mesh);

/// Full pipeline at one eps. Throws on failure.
ErrorRecord run_eps(const SweepConfig& c, const CellProducts& cell, double eps);

/// Progress hook called after each finished eps.
using SweepHook = std::function<void(const ErrorRecord&)>;

/// Runs every eps (failures recorded, not thrown), writing records.json and
/// records.csv into the output directory after each one. Validation errors throw.
std::vector<ErrorRecord> run_sweep(const SweepConfig& c, const SweepHook& hook = {});

enum class RateModel { power, log_corrected };

const char* model_name(RateModel m);

struct RateFit {
  std::string norm;
  RateModel model = RateModel::power;
  /// exponent (power model)
  double alpha = 0.0;
  /// constant C (both models)
  double constant = 0.0;
  /// RMS residual of log e (power) or of e / (C eps ln(r0/eps)) - 1 (log model)
  double residual = 0.0;
  double eps_min = 0.0;
  double eps_max = 0.0;
  int points = 0;
  std::vector<std::string> notes;
};

/// Least-squares fit over ok, unflagged records with positive values. Throws
/// insufficient-data below three points.
RateFit fit_rate(const std::vector<ErrorRecord>& records, const std::string& norm, RateModel model, double r0);

/// Constants of the fit repeated with each eps left out in turn.
std::vector<double> drop_one_constants(const std::vector<ErrorRecord>& records, const std::string& norm,
                                       RateModel model, double r0);

/// max over eps of ||grad u_eps||_{L^p} / data ÷ the min. p = 2 or 4.
double wlp_uniformity(const std::vector<ErrorRecord>& records, double p);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

/// Acceptance items named in c.checks plus the fits they rely on.
std::vector<CheckResult> evaluate_checks(const std::vector<ErrorRecord>& records, const SweepConfig& c,
                                         std::vector<RateFit>* fits = nullptr);

/// Writes records.csv, summary.json and rates.svg into dir. Throws io-error.
void emit_report(const std::vector<ErrorRecord>& records, const std::vector<RateFit>& fits,
                 const std::vector<CheckResult>& checks, const std::string& dir,
                 const nlohmann::json& extra = nlohmann::json::object());

std::string records_csv(const std::vector<ErrorRecord>& records);
nlohmann::json record_to_json(const ErrorRecord& r);
ErrorRecord record_from_json(const nlohmann::json& j);
std::vector<ErrorRecord> load_records(const std::string& path);

}  // namespace homstokes
