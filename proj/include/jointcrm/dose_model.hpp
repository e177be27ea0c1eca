#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace jcrm {

enum class ModelKind { Empiric, Probit1, Probit2 };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

/// Working dose-toxicity model. a0 is used only by Probit1.
struct WorkingModel {
    ModelKind kind = ModelKind::Probit2;
    double a0 = 3.0;
};

/// Prior toxicity guesses per dose; strictly increasing, each in (0,1).
class Skeleton {
public:
    explicit Skeleton(std::vector<double> p);
    const std::vector<double>& values() const noexcept { return p_; }
    std::size_t size() const noexcept { return p_.size(); }
    double operator[](std::size_t j) const { return p_[j]; }

private:
    std::vector<double> p_;
};

/// (0.25, 0.35, 0.45, 0.55, 0.65)
Skeleton default_skeleton();

/// Dose covariate values; strictly increasing and finite.
class DoseLabels {
public:
    DoseLabels() = default;
    explicit DoseLabels(std::vector<double> x);
    const std::vector<double>& values() const noexcept { return x_; }
    std::size_t size() const noexcept { return x_.size(); }
    double operator[](std::size_t j) const { return x_[j]; }

private:
    std::vector<double> x_;
};

/// b0 is ignored by Empiric and Probit1. The effective slope is exp(b1).
struct ToxicityParams {
    double b0 = 0.0;
    double b1 = 0.0;
};

/// Labels x_j that reproduce the skeleton at b0 = b1 = 0.
DoseLabels backward_fit_labels(const Skeleton& skeleton, const WorkingModel& model);
/// Labels that reproduce the skeleton at the initial guess `at`.
DoseLabels backward_fit_labels(const Skeleton& skeleton, const WorkingModel& model, const ToxicityParams& at);

/// Probit linear predictor; throws DomainError for Empiric.
double linear_predictor(const WorkingModel& model, const ToxicityParams& params, double label);

double toxicity_prob(const WorkingModel& model, const ToxicityParams& params, double label);

std::vector<double> toxicity_curve(const WorkingModel& model, const ToxicityParams& params,
                                   const DoseLabels& labels);

/// Index of the dose whose probability is closest to phiT; ties go to the lower dose.
std::size_t select_target(std::span<const double> curve, double phiT);

/// Skeleton obtained by shifting and stretching `base` on the probit scale:
/// Phi(offset + scale * Phi^{-1}(p_j)). Used by the calibration grid.
Skeleton transform_skeleton(const Skeleton& base, double offset, double scale);

}  // namespace jcrm
