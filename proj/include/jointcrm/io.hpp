#pragma once

#include "jointcrm/calibration.hpp"
#include "jointcrm/sim_harness.hpp"
#include "jointcrm/trial_engine.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace jcrm {

using Json = nlohmann::json;

/// Malformed document: bad syntax, wrong types, unknown keys.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Doses are 1-based in every external document ("dose": 1 is d1).

Json to_json(const DesignSpec& d);
/// Strict: unknown keys and wrong types throw SchemaError.
DesignSpec design_from_json(const Json& j);

Json to_json(const GenerationParams& g);
GenerationParams generation_from_json(const Json& j);

Json to_json(const OptimizerSpec& s);
OptimizerSpec optimizer_from_json(const Json& j);

Json to_json(const CalibrationGrid& g);
CalibrationGrid calibration_grid_from_json(const Json& j);

Json to_json(const FitSummary& f);
Json to_json(const CohortRecord& r);

/// Cohort from an API or transcript body {"dose", "toxic", "biomarker"?}.
Cohort cohort_from_json(const Json& j);

/// Transcript: a header line with the design and optimizer settings, then one
/// line per cohort with the outcomes and the decision the engine made.
std::string transcript_header(const DesignSpec& design, const OptimizerSpec& fitSpec);
std::string transcript_line(const CohortRecord& r);
std::string write_transcript(const TrialEngine& engine);

struct Transcript {
    DesignSpec design;
    OptimizerSpec fitSpec;
    std::vector<Cohort> cohorts;
    std::vector<Json> recorded;  // cohort lines as written
};

Transcript parse_transcript(std::istream& in);
Transcript parse_transcript_text(const std::string& text);

struct ReplayResult {
    TrialEngine engine;
    std::vector<std::string> mismatches;  // recorded decisions the replay did not reproduce
};

ReplayResult replay(const Transcript& t);

/// RFC 4180 field: quoted when it contains a comma, quote, CR or LF.
std::string csv_field(const std::string& s);
std::string format_double(double v);

void write_oc_csv(std::ostream& out, const PlanResult& result);
Json to_json(const PlanResult& result);
Json calibration_report(const CalibrationResult& result, const CalibrationGrid& grid, const DesignSpec& design,
                        const GenerationParams& gen, std::uint64_t seed);

/// 64-bit FNV-1a of the text, as 16 hex digits. A fingerprint, not a digest.
std::string fingerprint(const std::string& text);

}  // namespace jcrm
