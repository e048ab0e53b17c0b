#pragma once

// Whole-study configuration and its JSON representation (comments allowed).
// Every key is optional; absent keys keep their defaults. See docs/config.md.

#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "silmpc/building_model.hpp"
#include "silmpc/digital_twin.hpp"
#include "silmpc/mpc_controller.hpp"
#include "silmpc/residual_estimator.hpp"
#include "silmpc/scenario_data.hpp"

namespace silmpc {

struct HarnessConfig {
    std::uint64_t seed = 42;          // master seed, mixed into every per-year stream
    int study_year = 2019;
    int study_start_weekday = 1;      // Monday = 0; the pre-year follows 365 days earlier
    std::int64_t year_steps = 0;      // 0 = a full simulated year
    int window_months = 12;           // S3 training window
    std::size_t min_training_rows = 48;
    double initial_building_temp = 22.0;
    double initial_server_temp = 20.0;
    double initial_e_bat = 49.0;
    std::optional<std::filesystem::path> data_csv;  // study-year disturbances instead of generated ones
    bool save_models = false;
};

struct StudyConfig {
    BuildingParameters building = BuildingParameters::defaults();
    GeneratorConfig generator;
    ExogenousModel twin = ExogenousModel::defaults(BuildingParameters::defaults());
    bool calibrate_twin_noise = true;  // noise std = noise_ratio x deterministic std
    ParameterMismatch mismatch;
    MeasurementConfig measurement;
    OcpConfig ocp;
    EstimatorConfig estimator;
    HarnessConfig harness;

    // Throws ParameterError.
    void validate() const;
};

nlohmann::json to_json(const StudyConfig& cfg);
// Missing keys keep defaults; unknown keys raise ParseError naming the key.
StudyConfig study_config_from_json(const nlohmann::json& j);
StudyConfig load_study_config(const std::filesystem::path& path);

// Stable 64-bit FNV-1a digest of the canonical JSON, as 16 hex digits.
std::string config_fingerprint(const StudyConfig& cfg);

}  // namespace silmpc
