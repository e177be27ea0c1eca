#pragma once

#include "jointcrm/sim_harness.hpp"

#include <cstdint>
#include <vector>

namespace jcrm {

/// Candidate skeletons are the design skeleton shifted and stretched on the
/// probit scale, Phi(offset + scale * Phi^{-1}(p0)). Each round after the
/// first searches the neighbourhood of the current winner with the steps
/// divided by refinementDivisor.
struct CalibrationGrid {
    double offsetMin = -6.0;
    double offsetMax = 0.0;
    double offsetStep = 0.5;
    double scaleMin = 0.05;
    double scaleMax = 1.0;
    double scaleStep = 0.05;
    std::vector<ToxicityParams> params{ToxicityParams{}};  // initial guesses used for backward fitting
    int refinementRounds = 2;
    double refinementDivisor = 5.0;
    int refinementHalfWidth = 5;  // refined axes span winner +- halfWidth steps
    int replicationsPerCell = 200;

    void validate() const;
};

struct CalibrationCell {
    int round = 0;
    double offset = 0.0;
    double scale = 1.0;
    std::size_t paramsIndex = 0;
    std::vector<double> labels;
    std::vector<double> pcs;
    std::vector<double> separation;
    double objective = 0.0;
};

struct CalibrationResult {
    DoseLabels labels;
    Skeleton skeleton = default_skeleton();
    ToxicityParams params;
    ToxicityParams start;  // optimizer start of the calibrated design
    double objective = 0.0;
    std::vector<double> perScenarioPCS;
    CalibrationCell winner;
    std::vector<CalibrationCell> cells;  // every evaluated cell in evaluation order
    std::vector<double> bestByRound;
};

/// (prod x_i)^(1/n); zero if any entry is zero.
double geometric_mean(const std::vector<double>& x);

/// Labels reproducing `skeleton` at the given parameters under the design's model.
DoseLabels labels_at(const Skeleton& skeleton, const WorkingModel& model, const ToxicityParams& params);

/// Initial guess at which the calibrated labels reproduce the design
/// skeleton, so fits start from the prior curve. Probit1 keeps `params`
/// since its intercept is fixed.
ToxicityParams calibrated_start(const WorkingModel& model, const ToxicityParams& params, double offset, double scale);

/// `design` with the calibrated labels and start installed.
DesignSpec calibrated_design(const DesignSpec& design, const CalibrationResult& result);

/// Grid search maximizing the geometric mean of PCS over scenarios. Every cell
/// is evaluated on the same replications (seed), so the result is
/// deterministic and the best objective never decreases across rounds.
CalibrationResult calibrate(const DesignSpec& design, const std::vector<Scenario>& scenarios,
                            const GenerationParams& gen, const CalibrationGrid& grid, std::uint64_t seed,
                            const OptimizerSpec& fitSpec = {}, int workers = 0);

}  // namespace jcrm
