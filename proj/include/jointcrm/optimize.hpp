#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace jcrm {

/// Map between a constrained model parameter and the unbounded coordinate the
/// optimizer works in.
enum class ParamTransform {
    Identity,  // real line
    Log,       // (0, inf)
    Atanh,     // (-1, 1)
};

double to_internal(ParamTransform t, double value);
double from_internal(ParamTransform t, double internal);

/// Settings for minimize(). Defaults follow the PORT (nlminb) defaults where
/// an analogue exists: 150 iterations, relative function tolerance 1e-10,
/// step tolerance 1.5e-8.
struct OptimizerSpec {
    int maxIterations = 150;
    int maxEvaluations = 300;
    double gradientTolerance = 1e-6;
    double relativeTolerance = 1e-10;
    double stepTolerance = 1.5e-8;
    int restartCount = 2;
    double restartJitter = 0.25;  // standard deviation of the start perturbation
    std::uint64_t restartSeed = 0x5eedULL;
    int polishEvaluations = 400;
    double maxStep = 10.0;  // cap on the infinity norm of a quasi-Newton step

    // Box on the internal coordinates; empty means unbounded. Infinite
    // entries are allowed.
    std::vector<double> lower;
    std::vector<double> upper;
};

struct MinimizeResult {
    std::vector<double> argmin;
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    int restartsUsed = 0;
};

/// Objective returning f(x) and writing df/dx into `grad` (same length as x).
using ObjectiveWithGradient = std::function<double(std::span<const double>, std::span<double>)>;
using Objective = std::function<double(std::span<const double>)>;

/// Projected BFGS from `start`; when that does not converge, a Nelder-Mead
/// polish from the BFGS point, then up to restartCount jittered restarts.
/// Returns the best point seen, which never has a larger value than the start.
/// The objective may return +inf to reject a point; the line search backs off.
/// Throws NonFiniteObjective if the start value is not finite.
MinimizeResult minimize(const ObjectiveWithGradient& objective, std::vector<double> start,
                        const OptimizerSpec& spec = {});

/// Same, with central finite-difference gradients.
MinimizeResult minimize(const Objective& objective, std::vector<double> start,
                        const OptimizerSpec& spec = {});

/// Nelder-Mead on its own (used for the polish stage).
MinimizeResult nelder_mead(const Objective& objective, std::vector<double> start,
                           const OptimizerSpec& spec, int maxEvaluations);

}  // namespace jcrm
