#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "homstokes/error.hpp"
#include "homstokes/rates.hpp"

using namespace homstokes;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::invalid_config;
}

std::vector<ErrorRecord> synthetic(const std::vector<double>& eps, const std::function<double(double)>& e) {
  std::vector<ErrorRecord> out;
  for (double x : eps) {
    ErrorRecord r;
    r.eps = x;
    r.h = x / 16;
    r.l2_vel = e(x);
    r.f_norm = 1.0;
    r.grad_l2 = 2.0;
    r.grad_l4 = 3.0;
    out.push_back(r);
  }
  return out;
}

const std::vector<double> kEps{0.25, 0.125, 0.0625, 0.03125};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("homstokes_test_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(Fit, RecoversExactPowers) {
  auto lin = fit_rate(synthetic(kEps, [](double e) { return 3 * e; }), "l2_vel", RateModel::power, 1.0);
  EXPECT_NEAR(lin.alpha, 1.0, 1e-10);
  EXPECT_NEAR(lin.constant, 3.0, 1e-9);
  EXPECT_NEAR(lin.residual, 0.0, 1e-10);
  EXPECT_EQ(lin.points, 4);
  EXPECT_DOUBLE_EQ(lin.eps_min, 0.03125);
  EXPECT_DOUBLE_EQ(lin.eps_max, 0.25);
  auto half = fit_rate(synthetic(kEps, [](double e) { return std::sqrt(e); }), "l2_vel", RateModel::power, 1.0);
  EXPECT_NEAR(half.alpha, 0.5, 1e-10);
}

TEST(Fit, LogCorrectedModel) {
  const double r0 = 4.0;
  auto recs = synthetic(kEps, [&](double e) { return 0.7 * e * std::log(r0 / e); });
  auto p = fit_rate(recs, "l2_vel", RateModel::power, r0);
  EXPECT_GT(p.alpha, 0.7);
  EXPECT_LT(p.alpha, 1.0);
  auto l = fit_rate(recs, "l2_vel", RateModel::log_corrected, r0);
  EXPECT_NEAR(l.constant, 0.7, 1e-12);
  EXPECT_NEAR(l.residual, 0.0, 1e-12);
  for (double c : drop_one_constants(recs, "l2_vel", RateModel::log_corrected, r0)) EXPECT_NEAR(c, 0.7, 1e-12);
}

TEST(Fit, ExclusionsAndInsufficientData) {
  auto recs = synthetic({0.5, 0.25, 0.125, 0.0625, 0.03125}, [](double e) { return e * e; });
  recs[0].failure = "solver-failure: test";
  recs[1].flagged = true;
  recs[2].l2_vel = 0.0;
  EXPECT_EQ(code_of([&] { fit_rate(recs, "l2_vel", RateModel::power, 1.0); }), ErrorCode::insufficient_data);
  recs[2].l2_vel = 0.125 * 0.125;
  auto f = fit_rate(recs, "l2_vel", RateModel::power, 1.0);
  EXPECT_EQ(f.points, 3);
  EXPECT_NEAR(f.alpha, 2.0, 1e-10);
  EXPECT_EQ(f.notes.size(), 2u);
  EXPECT_EQ(code_of([&] { fit_rate({}, "l2_vel", RateModel::power, 1.0); }), ErrorCode::insufficient_data);
}

TEST(Wlp, UniformityRatio) {
  auto recs = synthetic(kEps, [](double e) { return e; });
  EXPECT_NEAR(wlp_uniformity(recs, 2.0), 1.0, 1e-15);
  recs[1].grad_l4 = 6.0;
  EXPECT_NEAR(wlp_uniformity(recs, 4.0), 2.0, 1e-15);
  recs[1].failure = "x";
  EXPECT_NEAR(wlp_uniformity(recs, 4.0), 1.0, 1e-15);
  EXPECT_EQ(code_of([&] { wlp_uniformity(recs, 3.0); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([&] { wlp_uniformity({recs[0]}, 2.0); }), ErrorCode::insufficient_data);
}

TEST(Config, StrictParsing) {
  auto c = parse_sweep_config(json::parse(R"({"coefficient": {"name": "scalar_trig", "params": {"kappa": 3}},
                                             "eps": [0.25, 0.125], "variants": ["C", "A"], "workers": 2})"));
  EXPECT_EQ(c.coefficient, "scalar_trig");
  EXPECT_EQ(c.coefficient_params.at("kappa"), 3.0);
  ASSERT_EQ(c.variants.size(), 2u);
  EXPECT_EQ(c.variants[0], Variant::C);
  EXPECT_EQ(c.workers, 2);
  EXPECT_EQ(parse_sweep_config(to_json(c)).eps, c.eps);
  auto message = [](const char* text) {
    try {
      parse_sweep_config(json::parse(text));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::invalid_config);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"epsilon": [0.1]})").find("epsilon"), std::string::npos);
  EXPECT_NE(message(R"({"data": {"forcng": "zero"}})").find("data"), std::string::npos);
  EXPECT_NE(message(R"({"eps": "small"})").find("eps"), std::string::npos);
  EXPECT_NE(message(R"({"variants": ["D"]})").find("variants"), std::string::npos);
  EXPECT_NE(message(R"({"cell_n": 12.5})").find("cell_n"), std::string::npos);
  EXPECT_NE(message(R"({"checks": ["speed"]})").find("checks"), std::string::npos);
}

TEST(Config, Validation) {
  SweepConfig c;
  EXPECT_NO_THROW(validate_sweep_config(c));
  c.eps = {0.5, 0.25};
  EXPECT_EQ(code_of([&] { validate_sweep_config(c); }), ErrorCode::invalid_config);  // 2 eps > inradius
  c.variants = {Variant::C};
  EXPECT_NO_THROW(validate_sweep_config(c));
  c.eps = {0.125, 0.25};
  EXPECT_EQ(code_of([&] { validate_sweep_config(c); }), ErrorCode::invalid_config);
  c.eps = {0.25, 0.125};
  c.resolution_ratio = 8;
  EXPECT_EQ(code_of([&] { validate_sweep_config(c); }), ErrorCode::invalid_config);
  c.override_resolution_guard = true;
  EXPECT_NO_THROW(validate_sweep_config(c));
  c.cell_n = 2;
  EXPECT_EQ(code_of([&] { validate_sweep_config(c); }), ErrorCode::invalid_config);
}

TEST(Config, FileErrors) {
  EXPECT_EQ(code_of([] { read_json_file("/nonexistent/config.json"); }), ErrorCode::io_error);
  auto d = scratch_dir("badjson");
  std::filesystem::create_directories(d);
  std::ofstream(d / "bad.json") << "{\n  \"eps\": [0.1,\n}";
  try {
    read_json_file((d / "bad.json").string());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_config);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Records, JsonRoundTripAndCsv) {
  auto recs = synthetic(kEps, [](double e) { return e; });
  recs[0].extra["h1_w_C"] = 0.125;
  recs[1].failure = "solver-failure: diverged";
  recs[1].l2_vel = std::nan("");
  for (const auto& r : recs) {
    ErrorRecord b = record_from_json(record_to_json(r));
    EXPECT_EQ(b.eps, r.eps);
    EXPECT_EQ(b.failure, r.failure);
    EXPECT_EQ(b.extra, r.extra);
    if (r.ok()) EXPECT_EQ(b.l2_vel, r.l2_vel);
    else EXPECT_TRUE(std::isnan(b.l2_vel));
  }
  std::string csv = records_csv(recs);
  EXPECT_EQ(csv, records_csv(recs));
  EXPECT_EQ(csv.rfind("eps,", 0), 0u);
  EXPECT_NE(csv.find("h1_w_C"), std::string::npos);
  EXPECT_NE(csv.find("nan"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Report, EmptyRecordsReportNoData) {
  auto d = scratch_dir("empty_report");
  SweepConfig c;
  std::vector<RateFit> fits;
  auto checks = evaluate_checks({}, c, &fits);
  ASSERT_FALSE(checks.empty());
  for (const auto& k : checks) EXPECT_FALSE(k.pass) << k.name;
  emit_report({}, fits, checks, d.string());
  json s = json::parse(slurp(d / "summary.json"));
  EXPECT_TRUE(s.at("no_data").get<bool>());
  EXPECT_FALSE(s.at("all_pass").get<bool>());
  EXPECT_TRUE(std::filesystem::exists(d / "records.csv"));
  EXPECT_TRUE(std::filesystem::exists(d / "rates.svg"));
}

TEST(Sweep, IdentityRunResumesAndReports) {
  auto d = scratch_dir("identity_sweep");
  SweepConfig c;
  c.coefficient = "identity";
  c.coefficient_params.clear();
  c.eps = {0.5, 0.25, 0.125};
  c.variants = {Variant::C};
  c.cell_n = 8;
  c.checks = {"identity"};
  c.caccioppoli.radii.clear();
  c.output_dir = d.string();
  int seen = 0;
  auto recs = run_sweep(c, [&](const ErrorRecord&) { ++seen; });
  EXPECT_EQ(seen, 3);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].eps, 0.5);
  for (const auto& r : recs) EXPECT_TRUE(r.ok()) << r.failure;
  auto checks = evaluate_checks(recs, c);
  ASSERT_EQ(checks.size(), 1u);
  EXPECT_TRUE(checks[0].pass) << checks[0].detail;
  std::string first = slurp(d / "records.csv");

  int rerun = 0;
  auto again = run_sweep(c, [&](const ErrorRecord&) { ++rerun; });
  EXPECT_EQ(rerun, 0);
  EXPECT_EQ(slurp(d / "records.csv"), first);
  EXPECT_EQ(load_records((d / "records.json").string()).size(), 3u);
}
