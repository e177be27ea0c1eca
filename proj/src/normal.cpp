#include "jointcrm/normal.hpp"

#include "jointcrm/errors.hpp"

#include <cmath>
#include <string>

namespace jcrm {

namespace {

constexpr double kSqrt1_2 = 0.707106781186547524400844362105;
const double kLogFloor = std::log(kLogFloorProbability);

// Acklam's rational approximation, |relative error| < 1.15e-9 before refinement.
double quantile_initial(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;

    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kSqrt1_2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile: p must lie in (0,1), got " + std::to_string(p));
    }
    double x = quantile_initial(p);
    // Halley steps on the tail closest to p keep the residual relative.
    for (int i = 0; i < 2; ++i) {
        const double e = p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
        const double pdf = normal_pdf(x);
        if (pdf <= 0.0) break;
        const double u = e / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

LogCdf log_normal_cdf(double z) {
    const double cdf = normal_cdf(z);
    if (cdf < kLogFloorProbability) {
        return {kLogFloor, 0.0, true};
    }
    const double value = z > 0.0 ? std::log1p(-normal_cdf(-z)) : std::log(cdf);
    return {value, normal_pdf(z) / cdf, false};
}

}  // namespace jcrm
