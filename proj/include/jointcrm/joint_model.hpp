#pragma once

#include "jointcrm/dose_model.hpp"
#include "jointcrm/linalg.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace jcrm {

inline constexpr int kWeeks = 8;
using Biomarker = std::array<double, kWeeks>;

/// One patient's outcomes: dose label, DLT indicator, weekly biomarker values.
struct Observation {
    double label = 0.0;
    int toxic = 0;
    Biomarker biomarker{};
};

struct BiomarkerParams {
    double c0 = 20.0;
    double c1 = -2.0;
    double at = -1.0;
    double sigma = 1.0;
    double rhoC = 0.4;

    /// Mean at dose label x in week t (1-based).
    double mean(double x, int week) const { return c0 + c1 * x + at * week; }
};

enum class JointVariant { Joint2d, Joint9d };

/// Conditional-scale toxicity effects plus the biomarker block. `tau` is the
/// Joint2d association; `rhoB` (in [0,1)) drives the Joint9d association.
struct JointParams {
    ToxicityParams toxicity;
    BiomarkerParams biomarker;
    double tau = 0.0;
    double rhoB = 0.0;
};

/// Marginal probit effects, stored so that toxicity_prob(Probit2, params, x)
/// evaluates the marginal curve: b1 carries the log of the rescaled slope.
struct MarginalToxicity {
    ToxicityParams params;
    double scale = 1.0;  // factor applied to both conditional effects
};

/// AR(1) covariance: entry (i,j) = rho^|i-j| sigma^2.
CovarianceMatrix ar1_covariance(double sigma, double rho, int t);

/// 9x9 correlation used to draw complete-information profiles. Coordinate 0
/// is the toxicity latent, 1..8 the weeks; cross-correlation rhoB^(9-t).
CovarianceMatrix generation_covariance(double rhoB, double rhoC);

/// Model covariance for Joint9d in the same layout: unit-variance latent,
/// sigma^2 AR(1) weeks, cross-covariance -rhoB^(9-t) sigma.
CovarianceMatrix model_covariance(double rhoB, double rhoC, double sigma);

/// Regression of the toxicity latent on the 8 weekly values under
/// model_covariance, from the tridiagonal AR(1) precision.
struct Association9d {
    Biomarker schur;          // Schur-complement regression weights
    double variance = 1.0;    // conditional variance of the latent
    Biomarker probit;         // weights on the unit-variance conditional scale: schur / sqrt(variance)
};
Association9d association_9d(double rhoB, double rhoC, double sigma);

struct Validity {
    bool valid = true;
    std::string reason;
};

/// Valid iff the generation covariance is positive definite and the model's
/// conditional variance is positive.
Validity validate_params(double rhoB, double rhoC, double sigma);

double conditional_probit_2d(const JointParams& params, double yc8, double label);
double conditional_probit_9d(const JointParams& params, const Biomarker& yc, double label);

MarginalToxicity conditional_to_marginal(const JointParams& params, JointVariant variant);

/// Bernoulli log-likelihood. Probabilities are floored at kLogFloorProbability;
/// `floored` (if given) is set when that happens.
double loglik_probit(std::span<const Observation> data, const ToxicityParams& params,
                     const WorkingModel& model, bool* floored = nullptr);

/// Biomarker log-density plus conditional Bernoulli log-likelihood. Joint2d
/// uses the week-8 value only.
double loglik_joint(std::span<const Observation> data, const JointParams& params, JointVariant variant,
                    bool* floored = nullptr);

/// Negative log-likelihoods on the optimizer's internal coordinates, with
/// analytic gradients.
///
/// Probit:  (b0, b1) for Probit2, (b1) for Probit1 and Empiric.
/// Joint2d: (b0, b1, c0, c1, tau, log sigma); the time slope is absorbed in c0.
/// Joint9d: (b0, b1, c0, c1, at, log sigma, atanh rhoC, atanh rhoB).
class ProbitObjective {
public:
    ProbitObjective(std::span<const Observation> data, WorkingModel model);
    std::size_t dim() const noexcept { return model_.kind == ModelKind::Probit2 ? 2 : 1; }
    double operator()(std::span<const double> theta, std::span<double> grad) const;
    ToxicityParams params(std::span<const double> theta) const;
    std::vector<double> internal(const ToxicityParams& p) const;

private:
    struct Group {
        double label;
        double n;
        double k;
    };
    std::vector<Group> groups_;
    WorkingModel model_;
};

class Joint2dObjective {
public:
    explicit Joint2dObjective(std::span<const Observation> data) : data_(data) {}
    static constexpr std::size_t dim() { return 6; }
    double operator()(std::span<const double> theta, std::span<double> grad) const;
    static JointParams params(std::span<const double> theta);
    static std::vector<double> internal(const JointParams& p);

private:
    std::span<const Observation> data_;
};

class Joint9dObjective {
public:
    explicit Joint9dObjective(std::span<const Observation> data) : data_(data) {}
    static constexpr std::size_t dim() { return 8; }
    double operator()(std::span<const double> theta, std::span<double> grad) const;
    static JointParams params(std::span<const double> theta);
    static std::vector<double> internal(const JointParams& p);

private:
    std::span<const Observation> data_;
};

}  // namespace jcrm
