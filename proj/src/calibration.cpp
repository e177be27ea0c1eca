#include "jointcrm/calibration.hpp"

#include "jointcrm/errors.hpp"
#include "jointcrm/normal.hpp"

#include <cmath>
#include <map>
#include <tuple>
#include <utility>

namespace jcrm {

void CalibrationGrid::validate() const {
    if (!(offsetStep > 0.0) || !(scaleStep > 0.0)) throw DomainError("calibration steps must be positive");
    if (offsetMax < offsetMin || scaleMax < scaleMin) throw DomainError("calibration ranges are empty");
    if (!(scaleMin > 0.0)) throw DomainError("calibration scales must be positive");
    if (params.empty()) throw DomainError("calibration needs at least one parameter candidate");
    if (refinementRounds < 0) throw DomainError("refinement rounds must be non-negative");
    if (!(refinementDivisor > 1.0)) throw DomainError("refinement divisor must exceed 1");
    if (refinementHalfWidth < 1) throw DomainError("refinement half-width must be at least 1");
    if (replicationsPerCell < 100) throw DomainError("at least 100 replications per cell are required");
}

double geometric_mean(const std::vector<double>& x) {
    if (x.empty()) throw DomainError("geometric_mean: empty input");
    double s = 0.0;
    for (double v : x) {
        if (v < 0.0) throw DomainError("geometric_mean: negative input");
        if (v == 0.0) return 0.0;
        s += std::log(v);
    }
    return std::exp(s / static_cast<double>(x.size()));
}

DoseLabels labels_at(const Skeleton& skeleton, const WorkingModel& model, const ToxicityParams& params) {
    if (model.kind == ModelKind::Empiric) throw DomainError("labels of the empiric model are not calibrated");
    return backward_fit_labels(skeleton, model, params);
}

ToxicityParams calibrated_start(const WorkingModel& model, const ToxicityParams& params, double offset, double scale) {
    if (model.kind != ModelKind::Probit2) return params;
    // b0' + exp(b1') x = Phi^{-1}(p0) for x backward-fitted on the shifted skeleton
    return {(params.b0 - offset) / scale, params.b1 - std::log(scale)};
}

DesignSpec calibrated_design(const DesignSpec& design, const CalibrationResult& result) {
    DesignSpec d = design;
    d.labels = result.labels;
    d.start = result.start;
    return d;
}

namespace {

std::vector<double> axis(double lo, double hi, double step) {
    std::vector<double> v;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) v.push_back(lo + static_cast<double>(i) * step);
    return v;
}

std::vector<double> around(double centre, double step, int halfWidth, bool positive) {
    std::vector<double> v;
    for (int i = -halfWidth; i <= halfWidth; ++i) {
        const double x = centre + i * step;
        if (positive && !(x > 1e-12)) continue;
        v.push_back(x);
    }
    return v;
}

}  // namespace

CalibrationResult calibrate(const DesignSpec& design, const std::vector<Scenario>& scenarios,
                            const GenerationParams& gen, const CalibrationGrid& grid, std::uint64_t seed,
                            const OptimizerSpec& fitSpec, int workers) {
    grid.validate();
    if (scenarios.empty()) throw DomainError("calibration needs at least one scenario");
    const WorkingModel model = design.working_model();
    if (model.kind == ModelKind::Empiric) throw DomainError("labels of the empiric model are not calibrated");

    CalibrationResult out;
    // Cells are keyed on rounded coordinates so refinement reuses evaluations.
    std::map<std::tuple<long long, long long, std::size_t>, std::size_t> seen;
    std::size_t best = 0;
    bool haveBest = false;

    auto evaluate = [&](int round, double offset, double scale, std::size_t pi) {
        const auto key = std::make_tuple(std::llround(offset * 1e9), std::llround(scale * 1e9), pi);
        if (seen.count(key)) return;
        CalibrationCell cell;
        cell.round = round;
        cell.offset = offset;
        cell.scale = scale;
        cell.paramsIndex = pi;
        const Skeleton sk = transform_skeleton(design.skeleton, offset, scale);
        const DoseLabels labels = labels_at(sk, model, grid.params[pi]);
        cell.labels = labels.values();
        NamedDesign nd{"calibration", design};
        nd.design.labels = labels;
        nd.design.start = calibrated_start(model, grid.params[pi], offset, scale);
        for (std::size_t s = 0; s < scenarios.size(); ++s) {
            const auto r = run_cell(scenarios[s], s, nd, gen, grid.replicationsPerCell, seed, fitSpec,
                                    Execution::Parallel, workers);
            cell.pcs.push_back(r.oc.pcs);
            cell.separation.push_back(r.oc.separationRate);
        }
        cell.objective = geometric_mean(cell.pcs);
        seen[key] = out.cells.size();
        out.cells.push_back(std::move(cell));
        const std::size_t idx = out.cells.size() - 1;
        if (!haveBest || out.cells[idx].objective > out.cells[best].objective) {
            best = idx;
            haveBest = true;
        }
    };

    for (std::size_t pi = 0; pi < grid.params.size(); ++pi) {
        for (double o : axis(grid.offsetMin, grid.offsetMax, grid.offsetStep)) {
            for (double s : axis(grid.scaleMin, grid.scaleMax, grid.scaleStep)) evaluate(0, o, s, pi);
        }
    }
    out.bestByRound.push_back(out.cells[best].objective);

    double oStep = grid.offsetStep, sStep = grid.scaleStep;
    for (int round = 1; round <= grid.refinementRounds; ++round) {
        oStep /= grid.refinementDivisor;
        sStep /= grid.refinementDivisor;
        const CalibrationCell centre = out.cells[best];
        for (double o : around(centre.offset, oStep, grid.refinementHalfWidth, false)) {
            for (double s : around(centre.scale, sStep, grid.refinementHalfWidth, true)) evaluate(round, o, s, centre.paramsIndex);
        }
        out.bestByRound.push_back(out.cells[best].objective);
    }

    out.winner = out.cells[best];
    out.objective = out.winner.objective;
    out.perScenarioPCS = out.winner.pcs;
    out.params = grid.params[out.winner.paramsIndex];
    out.skeleton = transform_skeleton(design.skeleton, out.winner.offset, out.winner.scale);
    out.labels = labels_at(out.skeleton, model, out.params);
    out.start = calibrated_start(model, out.params, out.winner.offset, out.winner.scale);
    return out;
}

}  // namespace jcrm
