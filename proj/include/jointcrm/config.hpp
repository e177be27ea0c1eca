#pragma once

#include "jointcrm/io.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace jcrm {

enum class ConfigFormat { Json, Toml };

/// Declarative run description. Scenarios default to S1..S5 and generation to
/// a single default GenerationParams.
struct RunConfig {
    std::string name = "run";
    std::string outputDirectory = ".";
    std::uint64_t seed = 20240501;
    int replications = 1000;
    int workers = 0;  // 0: JCRM_WORKERS or all cores
    std::vector<Scenario> scenarios;
    std::vector<NamedDesign> designs;
    std::vector<GenerationParams> gens;
    OptimizerSpec optimizer;
    std::optional<CalibrationGrid> calibration;
    Json canonical;  // normalized document, the input to the config hash

    SimPlan plan() const;
    std::string hash() const { return fingerprint(canonical.dump()); }
};

/// Throws SchemaError on syntax errors, wrong types, unknown keys and values
/// outside their domain. Association pairs are checked separately (run_plan).
RunConfig parse_config(const std::string& text, ConfigFormat format);

/// Format from the extension (.toml or .json).
RunConfig load_config(const std::filesystem::path& path);

}  // namespace jcrm
