#pragma once

#include "jointcrm/dose_model.hpp"
#include "jointcrm/joint_model.hpp"
#include "jointcrm/optimize.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jcrm {

enum class Method { Probit, Joint2d, Joint9d };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

inline constexpr double kSeparationEpsilon = 1e-4;
inline constexpr double kEqualProbabilityEpsilon = 1e-4;
inline constexpr double kBoundThreshold = 8.0;

struct DiagnosticFlags {
    bool separation = false;        // some dose has min(p, 1-p) <= 1e-4
    bool equalProbability = false;  // |p_J - p_1| <= 1e-4
    bool boundaryParameter = false; // |marginal probit index| > 8 at some dose
};

enum class SeparationClass { CompleteSeparation, QuasiCompleteSeparation, Overlap };

std::string to_string(SeparationClass c);

struct FitResult {
    Method method = Method::Probit;
    WorkingModel model;
    ToxicityParams toxicity;           // conditional scale for the joint methods
    std::optional<JointParams> joint;  // present for Joint2d / Joint9d
    MarginalToxicity marginal;
    std::vector<double> curve;         // marginal toxicity per dose
    double loglik = 0.0;
    bool converged = false;
    bool floored = false;              // a probability hit the log floor at the optimum
    int iterations = 0;
    int evaluations = 0;
    DiagnosticFlags diagnostics;
};

/// Strict split of outcomes by label (all-equal outcomes count as complete),
/// split with ties only at the threshold label, or overlap.
SeparationClass classify_separation(std::span<const Observation> data);

/// Flags from a fitted marginal curve. `index` holds the marginal probit index
/// per dose (for Empiric it is Phi^{-1} of the curve).
DiagnosticFlags diagnose(std::span<const double> curve, std::span<const double> index);

/// Maximum likelihood fit. The working model applies to Method::Probit; the
/// joint methods use the two-parameter probit toxicity block. The optimizer
/// starts from `start` (the initial guess the labels were backward-fitted at).
/// Deterministic given the inputs.
FitResult fit(Method method, const WorkingModel& model, const DoseLabels& labels,
              std::span<const Observation> data, const OptimizerSpec& spec = {},
              const ToxicityParams& start = {});

/// Posterior P(p > phiT) under a Beta(1,1) prior after toxCount of totalCount.
double early_stop_posterior(int toxCount, int totalCount, double phiT);

/// Stopping rule at the lowest dose: at least `minToxicities` DLTs and the
/// posterior probability of excess toxicity at least `threshold`.
bool early_stop(int toxCount, int totalCount, double phiT, double threshold = 0.95, int minToxicities = 2);

}  // namespace jcrm
