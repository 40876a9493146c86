#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "trapcal/angles.hpp"
#include "trapcal/config.hpp"
#include "trapcal/errors.hpp"
#include "trapcal/scenario.hpp"

using namespace trapcal;

namespace {

std::string small_fringe_config(std::uint64_t seed) {
  return R"({
    "schema_version": 1,
    "scenario": "fringe",
    "seed": )" + std::to_string(seed) + R"(,
    "trap": {"secular_a_hz": [1.5e6, 1.5e6, 0.35e6], "scale_b": 0.576},
    "beams": [{"id": "h", "angle_deg": -45.0, "wavelength_m": 674e-9}],
    "params": {"beam": "h", "m_values": [1, 2, 4], "points": 128,
               "samples_per_point": 200}
  })";
}

std::string stat_config(std::uint64_t seed, long trials) {
  return R"({
    "schema_version": 1,
    "scenario": "stat-uncertainty",
    "seed": )" + std::to_string(seed) + R"(,
    "params": {"n_values": [40], "phi_points": 3, "trials": )" +
         std::to_string(trials) + R"(,
               "contrast_values": [1.0], "comparison_n": 40, "comparison_trials": 200}
  })";
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("trapcal_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("identical configs produce byte-identical artifacts") {
  ScenarioConfig config = validate_config(small_fringe_config(99));
  config.output_dir = temp_dir("det_a").string();
  const RunReport first = run_scenario(config);
  config.output_dir = temp_dir("det_b").string();
  const RunReport second = run_scenario(config);

  REQUIRE(first.file_digests.size() == second.file_digests.size());
  for (const auto& [name, digest] : first.file_digests) {
    REQUIRE(second.file_digests.count(name) == 1);
    CHECK(second.file_digests.at(name) == digest);
  }
  for (const auto& [name, value] : first.metrics) {
    CHECK(second.metrics.at(name) == value);
  }
}

TEST_CASE("fringe zero-crossing counts follow the sequence length") {
  const ScenarioConfig config = validate_config(small_fringe_config(5));
  const FringeResult result = run_fringe(config);
  REQUIRE(result.traces.size() == 3);
  for (const auto& trace : result.traces) {
    CHECK(trace.zero_crossings == 2 * trace.big_m - 1);
  }
}

TEST_CASE("headline statistics are stable across seeds") {
  // Mean RMS of the arctan2 estimator vs 1.24/sqrt(N), five seeds.
  for (const std::uint64_t seed : {11u, 22u, 33u, 44u, 55u}) {
    const ScenarioConfig config = validate_config(stat_config(seed, 3000));
    const StatUncertaintyResult result = run_stat_uncertainty(config);
    REQUIRE(result.mean_rms.size() == 1);
    CHECK(result.mean_rms[0].rms ==
          doctest::Approx(result.mean_rms[0].reference).epsilon(0.10));
  }
}

TEST_CASE("closed-loop averaging slope is seed independent") {
  const auto config_for = [](int seed) {
    return std::string(R"({
      "schema_version": 1, "scenario": "closed-loop", "seed": )") +
           std::to_string(seed) + R"(,
      "trap": {"secular_a_hz": [1.5e6, 1.5e6, 0.35e6], "scale_b": 0.576},
      "beams": [{"id": "h", "angle_deg": -45.0, "wavelength_m": 674e-9},
                {"id": "v", "angle_deg": 45.0, "wavelength_m": 674e-9}],
      "field": {"stray_v_per_m": [0.08, -0.05, 0.0]},
      "noise": {"projection_sampling": true},
      "electrodes": {"field_per_volt": [
        [0.7071067811865476, 0.7071067811865476],
        [-0.7071067811865476, 0.7071067811865476],
        [0.0, 0.0]]},
      "params": {
        "observables": [
          {"beam": "h", "m": 8, "estimator": "arcsin", "samples": 400},
          {"beam": "v", "m": 8, "estimator": "arcsin", "samples": 400}],
        "scan_amplitude_v": 0.2, "scan_points": 5, "calibration_samples": 2000,
        "duration_s": 2200.0, "update_interval_s": 11.0, "drift_enabled": false}
    })";
  };
  for (const int seed : {7, 42, 109, 333, 2024}) {
    const ClosedLoopScenarioResult result = run_closed_loop(validate_config(config_for(seed)));
    CHECK(std::abs(result.allan_slope + 0.5) <= 0.1);
  }
}

TEST_CASE("method B drift leaves the phase difference invariant (noiseless)") {
  const std::string text = R"({
    "schema_version": 1,
    "scenario": "method-b-drift",
    "seed": 3,
    "trap": {"secular_a_hz": [1.5e6, 1.5e6, 0.35e6], "scale_b": 0.576},
    "beams": [{"id": "h", "angle_deg": -45.0, "wavelength_m": 674e-9},
              {"id": "v", "angle_deg": 45.0, "wavelength_m": 674e-9}],
    "field": {"stray_v_per_m": [0.2, -0.1, 0.0]},
    "params": {"beam_alpha": "v", "beam_beta": "h", "m": 1, "steps": 40,
               "interval_s": 1.0, "ramp_rad_per_s": 2.5, "samples_per_point": 0}
  })";
  const MethodBDriftResult result = run_method_b_drift(validate_config(text));
  CHECK(result.diff_span < 1e-9);
  CHECK(result.phi_a_span > 1.0);  // the individual phases really drifted
}

TEST_CASE("unequal pass schedules sharpen the final RPE passes") {
  const auto rpe_config = [](const std::string& schedule_json) {
    return R"({
      "schema_version": 1, "scenario": "rpe-scaling", "seed": 60,
      "trap": {"secular_a_hz": [1.5e6, 1.5e6, 0.35e6], "scale_b": 0.576},
      "beams": [{"id": "h", "angle_deg": -45.0, "wavelength_m": 674e-9}],
      "params": {"beam": "h", "j_max": 3, "samples_per_pass": 24, )" +
           schedule_json + R"( "trials": 400, "baseline_n": []}
    })";
  };
  const RpeScalingResult front = run_rpe_scaling(
      validate_config(rpe_config(R"("samples_per_pass_list": [40, 24, 8],)")));
  const RpeScalingResult back = run_rpe_scaling(
      validate_config(rpe_config(R"("samples_per_pass_list": [8, 24, 40],)")));
  REQUIRE(front.ideal.size() == 3);
  REQUIRE(back.ideal.size() == 3);
  CHECK(front.ideal.back().n_measurements == 72.0);
  CHECK(back.ideal.back().n_measurements == 72.0);
  // At equal total samples a starved first pass loses whole branches, which
  // costs far more than a noisy final refinement.
  CHECK(front.ideal.back().rms < back.ideal.back().rms);

  CHECK_THROWS_AS(
      validate_config(rpe_config(R"("samples_per_pass_list": [8, 24],)")),
      ConfigInvalid);
}

TEST_CASE("run_scenario writes the report next to the artifacts") {
  ScenarioConfig config = validate_config(stat_config(1, 500));
  const auto dir = temp_dir("report");
  config.output_dir = dir.string();
  const RunReport report = run_scenario(config);
  CHECK(std::filesystem::exists(dir / "run_report.json"));
  for (const auto& [name, digest] : report.file_digests) {
    CHECK(std::filesystem::exists(dir / name));
    CHECK(digest.size() == 16);
  }
  CHECK(report.metrics.count("mean_rms_ratio_n40") == 1);
}

TEST_CASE("threaded Monte Carlo matches the single-thread reduction") {
  ScenarioConfig config = validate_config(stat_config(77, 2000));
  config.threads = 1;
  const StatUncertaintyResult serial = run_stat_uncertainty(config);
  config.threads = 4;
  const StatUncertaintyResult threaded = run_stat_uncertainty(config);
  REQUIRE(serial.mean_rms.size() == threaded.mean_rms.size());
  for (std::size_t i = 0; i < serial.mean_rms.size(); ++i) {
    CHECK(serial.mean_rms[i].rms == threaded.mean_rms[i].rms);
  }
  REQUIRE(serial.grid.size() == threaded.grid.size());
  for (std::size_t i = 0; i < serial.grid.size(); ++i) {
    CHECK(serial.grid[i].rms == threaded.grid[i].rms);
  }
}
