#include "jointcrm/joint_model.hpp"

#include "jointcrm/errors.hpp"
#include "jointcrm/normal.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace jcrm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinConditionalVariance = 1e-10;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// T = (1 - rho^2) R^{-1} for the unit AR(1) correlation R over the weeks.
Biomarker apply_t(double rho, const Biomarker& a) {
    Biomarker out{};
    const double mid = 1.0 + rho * rho;
    out[0] = a[0] - rho * a[1];
    for (int t = 1; t < kWeeks - 1; ++t) out[t] = mid * a[t] - rho * (a[t - 1] + a[t + 1]);
    out[kWeeks - 1] = a[kWeeks - 1] - rho * a[kWeeks - 2];
    return out;
}

// dT/drho applied to a.
Biomarker apply_dt(double rho, const Biomarker& a) {
    Biomarker out{};
    out[0] = -a[1];
    for (int t = 1; t < kWeeks - 1; ++t) out[t] = 2.0 * rho * a[t] - (a[t - 1] + a[t + 1]);
    out[kWeeks - 1] = -a[kWeeks - 2];
    return out;
}

double dot(const Biomarker& a, const Biomarker& b) {
    double s = 0.0;
    for (int t = 0; t < kWeeks; ++t) s += a[t] * b[t];
    return s;
}

// Cross-correlation profile a_t = rhoB^(9-t) and its derivative.
Biomarker cross_profile(double rb) {
    Biomarker a{};
    double p = rb;
    for (int t = kWeeks - 1; t >= 0; --t) {
        a[t] = p;
        p *= rb;
    }
    return a;
}

Biomarker cross_profile_derivative(double rb) {
    Biomarker d{};
    for (int t = 0; t < kWeeks; ++t) {
        const int power = kWeeks - t;  // a_t = rb^power
        d[t] = power * std::pow(rb, power - 1);
    }
    return d;
}

// u = R^{-1} a, S = 1 - a.u, v = u / sqrt(S), and derivatives of v.
struct Assoc {
    Biomarker u{}, v{};
    double s = 1.0;
    Biomarker dvB{}, dvC{};
};

Assoc assoc(double rb, double rc, bool derivatives) {
    Assoc r;
    const double d = 1.0 - rc * rc;
    const Biomarker a = cross_profile(rb);
    const Biomarker ta = apply_t(rc, a);
    for (int t = 0; t < kWeeks; ++t) r.u[t] = ta[t] / d;
    r.s = 1.0 - dot(a, r.u);
    if (!(r.s > 0.0)) return r;
    const double rs = std::sqrt(r.s);
    for (int t = 0; t < kWeeks; ++t) r.v[t] = r.u[t] / rs;
    if (!derivatives) return r;

    const double s32 = r.s * rs;
    const Biomarker da = cross_profile_derivative(rb);
    const Biomarker tda = apply_t(rc, da);
    Biomarker du{};
    for (int t = 0; t < kWeeks; ++t) du[t] = tda[t] / d;
    const double dsB = -2.0 * dot(da, r.u);
    for (int t = 0; t < kWeeks; ++t) r.dvB[t] = du[t] / rs - r.u[t] * dsB / (2.0 * s32);

    const Biomarker dta = apply_dt(rc, a);
    for (int t = 0; t < kWeeks; ++t) du[t] = dta[t] / d + 2.0 * rc * ta[t] / (d * d);
    const double dsC = -dot(a, du);
    for (int t = 0; t < kWeeks; ++t) r.dvC[t] = du[t] / rs - r.u[t] * dsC / (2.0 * s32);
    return r;
}

struct BernoulliTerm {
    double value;
    double deta;  // d value / d eta
    bool floored;
};

BernoulliTerm bernoulli(int toxic, double eta) {
    if (toxic) {
        const auto l = log_normal_cdf(eta);
        return {l.value, l.dlog, l.floored};
    }
    const auto l = log_normal_cdf(-eta);
    return {l.value, -l.dlog, l.floored};
}

void check_biomarker(const BiomarkerParams& b) {
    if (!(b.sigma > 0.0)) throw DomainError("biomarker sigma must be positive");
    if (!(std::abs(b.rhoC) < 1.0)) throw DomainError("biomarker rhoC must lie in (-1,1)");
}

}  // namespace

CovarianceMatrix ar1_covariance(double sigma, double rho, int t) {
    if (!(sigma > 0.0) || !(std::abs(rho) < 1.0) || t < 1) {
        throw DomainError("ar1_covariance: need sigma > 0, |rho| < 1, t >= 1");
    }
    Eigen::MatrixXd m(t, t);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < t; ++j) m(i, j) = std::pow(rho, std::abs(i - j)) * sigma * sigma;
    return CovarianceMatrix(std::move(m));
}

CovarianceMatrix generation_covariance(double rhoB, double rhoC) {
    Eigen::MatrixXd m(kWeeks + 1, kWeeks + 1);
    m(0, 0) = 1.0;
    m.bottomRightCorner(kWeeks, kWeeks) = ar1_covariance(1.0, rhoC, kWeeks).matrix();
    for (int t = 1; t <= kWeeks; ++t) m(0, t) = m(t, 0) = std::pow(rhoB, kWeeks + 1 - t);
    return CovarianceMatrix(std::move(m));
}

CovarianceMatrix model_covariance(double rhoB, double rhoC, double sigma) {
    Eigen::MatrixXd m(kWeeks + 1, kWeeks + 1);
    m(0, 0) = 1.0;
    m.bottomRightCorner(kWeeks, kWeeks) = ar1_covariance(sigma, rhoC, kWeeks).matrix();
    for (int t = 1; t <= kWeeks; ++t) m(0, t) = m(t, 0) = -std::pow(rhoB, kWeeks + 1 - t) * sigma;
    return CovarianceMatrix(std::move(m));
}

Association9d association_9d(double rhoB, double rhoC, double sigma) {
    if (!(sigma > 0.0) || !(std::abs(rhoC) < 1.0)) throw DomainError("association_9d: invalid sigma or rhoC");
    const Assoc a = assoc(rhoB, rhoC, false);
    Association9d out;
    out.variance = a.s;
    for (int t = 0; t < kWeeks; ++t) {
        out.schur[t] = -a.u[t] / sigma;
        out.probit[t] = a.s > 0.0 ? -a.v[t] / sigma : std::nan("");
    }
    return out;
}

Validity validate_params(double rhoB, double rhoC, double sigma) {
    if (!(sigma > 0.0)) return {false, "sigma_c must be positive"};
    if (!(std::abs(rhoC) < 1.0)) return {false, "rho_c must lie in (-1, 1)"};
    if (!(rhoB >= 0.0 && rhoB < 1.0)) return {false, "rho_b must lie in [0, 1)"};
    try {
        (void)cholesky(generation_covariance(rhoB, rhoC));
    } catch (const NotPositiveDefinite&) {
        return {false, "9x9 covariance is not positive definite for rho_b=" + std::to_string(rhoB) +
                           ", rho_c=" + std::to_string(rhoC) + " (large rho_b with small rho_c)"};
    }
    const double s = assoc(rhoB, rhoC, false).s;
    if (!(s > 0.0)) return {false, "conditional variance of the toxicity latent is not positive"};
    return {};
}

double conditional_probit_2d(const JointParams& p, double yc8, double label) {
    const double mu = p.toxicity.b0 + std::exp(p.toxicity.b1) * label;
    return normal_cdf(mu + p.tau * (yc8 - p.biomarker.mean(label, kWeeks)));
}

double conditional_probit_9d(const JointParams& p, const Biomarker& yc, double label) {
    const auto v = validate_params(p.rhoB, p.biomarker.rhoC, p.biomarker.sigma);
    if (!v.valid) throw InvalidAssociation(v.reason);
    const auto a = association_9d(p.rhoB, p.biomarker.rhoC, p.biomarker.sigma);
    double eta = p.toxicity.b0 + std::exp(p.toxicity.b1) * label;
    for (int t = 0; t < kWeeks; ++t) eta += a.probit[t] * (yc[t] - p.biomarker.mean(label, t + 1));
    return normal_cdf(eta);
}

MarginalToxicity conditional_to_marginal(const JointParams& p, JointVariant variant) {
    double scale = 1.0;
    if (variant == JointVariant::Joint2d) {
        const double st = p.biomarker.sigma * p.tau;
        scale = 1.0 / std::sqrt(1.0 + st * st);
    } else {
        const double s = assoc(p.rhoB, p.biomarker.rhoC, false).s;
        if (!(s > 0.0)) throw InvalidAssociation("conditional variance is not positive");
        scale = std::sqrt(s);
    }
    return {{p.toxicity.b0 * scale, p.toxicity.b1 + std::log(scale)}, scale};
}

double loglik_probit(std::span<const Observation> data, const ToxicityParams& params, const WorkingModel& model,
                     bool* floored) {
    if (data.empty()) throw DomainError("loglik_probit: no data");
    double ll = 0.0;
    bool any = false;
    for (const auto& o : data) {
        if (model.kind == ModelKind::Empiric) {
            const double pi = toxicity_prob(model, params, o.label);
            const double q = o.toxic ? pi : 1.0 - pi;
            if (q < kLogFloorProbability) {
                any = true;
                ll += std::log(kLogFloorProbability);
            } else {
                ll += std::log(q);
            }
        } else {
            const auto b = bernoulli(o.toxic, linear_predictor(model, params, o.label));
            any |= b.floored;
            ll += b.value;
        }
    }
    if (floored) *floored = any;
    return ll;
}

double loglik_joint(std::span<const Observation> data, const JointParams& p, JointVariant variant, bool* floored) {
    if (data.empty()) throw DomainError("loglik_joint: no data");
    check_biomarker(p.biomarker);
    const double sigma = p.biomarker.sigma;
    const double slope = std::exp(p.toxicity.b1);
    double ll = 0.0;
    bool any = false;

    if (variant == JointVariant::Joint2d) {
        for (const auto& o : data) {
            const double r = o.biomarker[kWeeks - 1] - p.biomarker.mean(o.label, kWeeks);
            ll += -0.5 * kLog2Pi - std::log(sigma) - 0.5 * r * r / (sigma * sigma);
            const auto b = bernoulli(o.toxic, p.toxicity.b0 + slope * o.label + p.tau * r);
            any |= b.floored;
            ll += b.value;
        }
    } else {
        const auto v = validate_params(p.rhoB, p.biomarker.rhoC, sigma);
        if (!v.valid) throw InvalidAssociation(v.reason);
        const double rc = p.biomarker.rhoC;
        const double d = 1.0 - rc * rc;
        const auto a = association_9d(p.rhoB, rc, sigma);
        for (const auto& o : data) {
            Biomarker r{};
            for (int t = 0; t < kWeeks; ++t) r[t] = o.biomarker[t] - p.biomarker.mean(o.label, t + 1);
            const double q = dot(r, apply_t(rc, r));
            ll += -0.5 * kWeeks * kLog2Pi - kWeeks * std::log(sigma) - 0.5 * (kWeeks - 1) * std::log(d) -
                  0.5 * q / (sigma * sigma * d);
            const auto b = bernoulli(o.toxic, p.toxicity.b0 + slope * o.label + dot(a.probit, r));
            any |= b.floored;
            ll += b.value;
        }
    }
    if (floored) *floored = any;
    return ll;
}

ProbitObjective::ProbitObjective(std::span<const Observation> data, WorkingModel model) : model_(model) {
    for (const auto& o : data) {
        auto it = groups_.begin();
        while (it != groups_.end() && it->label != o.label) ++it;
        if (it == groups_.end()) {
            groups_.push_back({o.label, 0.0, 0.0});
            it = groups_.end() - 1;
        }
        it->n += 1.0;
        it->k += o.toxic ? 1.0 : 0.0;
    }
}

ToxicityParams ProbitObjective::params(std::span<const double> theta) const {
    if (model_.kind == ModelKind::Probit2) return {theta[0], theta[1]};
    return {0.0, theta[0]};
}

std::vector<double> ProbitObjective::internal(const ToxicityParams& p) const {
    if (model_.kind == ModelKind::Probit2) return {p.b0, p.b1};
    return {p.b1};
}

double ProbitObjective::operator()(std::span<const double> theta, std::span<double> grad) const {
    const ToxicityParams p = params(theta);
    const double slope = std::exp(p.b1);
    double ll = 0.0, g0 = 0.0, g1 = 0.0;
    for (const auto& g : groups_) {
        const double nk = g.n - g.k;
        if (model_.kind == ModelKind::Empiric) {
            const double logPi = slope * std::log(g.label);
            const double pi = std::exp(logPi);
            const double q = -std::expm1(logPi);  // 1 - pi
            if (g.k > 0) {
                if (pi < kLogFloorProbability) {
                    ll += g.k * std::log(kLogFloorProbability);
                } else {
                    ll += g.k * logPi;
                    g1 += g.k * logPi;
                }
            }
            if (nk > 0) {
                if (q < kLogFloorProbability) {
                    ll += nk * std::log(kLogFloorProbability);
                } else {
                    ll += nk * std::log(q);
                    g1 += nk * (-pi / q) * logPi;
                }
            }
            continue;
        }
        const double eta = linear_predictor(model_, p, g.label);
        double de = 0.0;
        if (g.k > 0) {
            const auto l = log_normal_cdf(eta);
            ll += g.k * l.value;
            de += g.k * l.dlog;
        }
        if (nk > 0) {
            const auto l = log_normal_cdf(-eta);
            ll += nk * l.value;
            de -= nk * l.dlog;
        }
        g0 += de;
        g1 += de * slope * g.label;
    }
    if (model_.kind == ModelKind::Probit2) {
        grad[0] = -g0;
        grad[1] = -g1;
    } else {
        grad[0] = -g1;
    }
    return -ll;
}

JointParams Joint2dObjective::params(std::span<const double> th) {
    JointParams p;
    p.toxicity = {th[0], th[1]};
    p.biomarker.c0 = th[2];
    p.biomarker.c1 = th[3];
    p.biomarker.at = 0.0;
    p.tau = th[4];
    p.biomarker.sigma = std::exp(th[5]);
    p.biomarker.rhoC = 0.0;
    p.rhoB = 0.0;
    return p;
}

std::vector<double> Joint2dObjective::internal(const JointParams& p) {
    return {p.toxicity.b0,
            p.toxicity.b1,
            p.biomarker.c0 + kWeeks * p.biomarker.at,
            p.biomarker.c1,
            p.tau,
            std::log(p.biomarker.sigma)};
}

double Joint2dObjective::operator()(std::span<const double> th, std::span<double> grad) const {
    const double b0 = th[0], slope = std::exp(th[1]), c0 = th[2], c1 = th[3], tau = th[4];
    const double logSigma = th[5];
    const double inv2 = std::exp(-2.0 * logSigma);
    double ll = 0.0;
    std::array<double, 6> g{};
    for (const auto& o : data_) {
        const double x = o.label;
        const double r = o.biomarker[kWeeks - 1] - (c0 + c1 * x);
        ll += -0.5 * kLog2Pi - logSigma - 0.5 * r * r * inv2;
        const auto b = bernoulli(o.toxic, b0 + slope * x + tau * r);
        ll += b.value;
        const double dr = -r * inv2 + b.deta * tau;
        g[0] += b.deta;
        g[1] += b.deta * slope * x;
        g[2] -= dr;
        g[3] -= dr * x;
        g[4] += b.deta * r;
        g[5] += -1.0 + r * r * inv2;
    }
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] = -g[i];
    return -ll;
}

JointParams Joint9dObjective::params(std::span<const double> th) {
    JointParams p;
    p.toxicity = {th[0], th[1]};
    p.biomarker.c0 = th[2];
    p.biomarker.c1 = th[3];
    p.biomarker.at = th[4];
    p.biomarker.sigma = std::exp(th[5]);
    p.biomarker.rhoC = std::tanh(th[6]);
    p.rhoB = std::tanh(th[7]);
    return p;
}

std::vector<double> Joint9dObjective::internal(const JointParams& p) {
    return {p.toxicity.b0,     p.toxicity.b1,
            p.biomarker.c0,    p.biomarker.c1,
            p.biomarker.at,    std::log(p.biomarker.sigma),
            std::atanh(p.biomarker.rhoC), std::atanh(p.rhoB)};
}

double Joint9dObjective::operator()(std::span<const double> th, std::span<double> grad) const {
    const double b0 = th[0], slope = std::exp(th[1]), c0 = th[2], c1 = th[3], at = th[4];
    const double logSigma = th[5], sigma = std::exp(logSigma);
    const double rc = std::tanh(th[6]), rb = std::tanh(th[7]);
    const double d = 1.0 - rc * rc;
    if (!(d > 0.0) || !(rb >= 0.0)) return kInf;
    const Assoc as = assoc(rb, rc, true);
    if (!(as.s > kMinConditionalVariance)) return kInf;

    Biomarker tau{};
    for (int t = 0; t < kWeeks; ++t) tau[t] = -as.v[t] / sigma;
    const double invSd = 1.0 / (sigma * sigma * d);
    const double constant = -0.5 * kWeeks * kLog2Pi - kWeeks * logSigma - 0.5 * (kWeeks - 1) * std::log(d);

    double ll = 0.0;
    std::array<double, 8> g{};
    for (const auto& o : data_) {
        const double x = o.label;
        Biomarker r{};
        for (int t = 0; t < kWeeks; ++t) r[t] = o.biomarker[t] - (c0 + c1 * x + at * (t + 1));
        const Biomarker tr = apply_t(rc, r);
        const double q = dot(r, tr);
        const double dq = dot(r, apply_dt(rc, r));
        ll += constant - 0.5 * q * invSd;

        const double eta = b0 + slope * x + dot(tau, r);
        const auto b = bernoulli(o.toxic, eta);
        ll += b.value;

        double sumDr = 0.0, sumTDr = 0.0;
        for (int t = 0; t < kWeeks; ++t) {
            const double dr = -tr[t] * invSd + b.deta * tau[t];
            sumDr += dr;
            sumTDr += dr * (t + 1);
        }
        g[0] += b.deta;
        g[1] += b.deta * slope * x;
        g[2] -= sumDr;
        g[3] -= sumDr * x;
        g[4] -= sumTDr;
        g[5] += -kWeeks + q * invSd - b.deta * dot(tau, r);
        const double dRc = (kWeeks - 1) * rc / d - 0.5 * dq * invSd - q * rc * invSd / d -
                           b.deta * dot(as.dvC, r) / sigma;
        const double dRb = -b.deta * dot(as.dvB, r) / sigma;
        g[6] += dRc * d;
        g[7] += dRb * (1.0 - rb * rb);
    }
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] = -g[i];
    return -ll;
}

}  // namespace jcrm
