#pragma once

// Univariate standard normal distribution functions.

namespace jcrm {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

/// Standard normal density.
double normal_pdf(double z);

/// Standard normal CDF, evaluated through erfc so both tails keep full
/// relative precision. Saturates at 0/1 for |z| beyond ~38.
double normal_cdf(double z);

/// Inverse of normal_cdf. Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);

/// Floor applied to probabilities before taking logs in the likelihoods.
inline constexpr double kLogFloorProbability = 1e-300;

struct LogCdf {
    double value;    // log Phi(z), floored at log(kLogFloorProbability)
    double dlog;     // d/dz log Phi(z) (inverse Mills ratio), 0 when floored
    bool floored;
};

/// log Phi(z) together with its derivative.
LogCdf log_normal_cdf(double z);

}  // namespace jcrm
