#include "jointcrm/estimation.hpp"

#include "jointcrm/errors.hpp"
#include "jointcrm/normal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace jcrm {

std::string to_string(Method m) {
    switch (m) {
        case Method::Probit: return "probit";
        case Method::Joint2d: return "joint2d";
        case Method::Joint9d: return "joint9d";
    }
    return "probit";
}

Method method_from_string(const std::string& s) {
    if (s == "probit") return Method::Probit;
    if (s == "joint2d") return Method::Joint2d;
    if (s == "joint9d") return Method::Joint9d;
    throw DomainError("unknown method '" + s + "'");
}

std::string to_string(SeparationClass c) {
    switch (c) {
        case SeparationClass::CompleteSeparation: return "complete";
        case SeparationClass::QuasiCompleteSeparation: return "quasi-complete";
        case SeparationClass::Overlap: return "overlap";
    }
    return "overlap";
}

SeparationClass classify_separation(std::span<const Observation> data) {
    if (data.empty()) throw DomainError("classify_separation: no data");
    constexpr double inf = std::numeric_limits<double>::infinity();
    double min0 = inf, max0 = -inf, min1 = inf, max1 = -inf;
    for (const auto& o : data) {
        if (o.toxic) {
            min1 = std::min(min1, o.label);
            max1 = std::max(max1, o.label);
        } else {
            min0 = std::min(min0, o.label);
            max0 = std::max(max0, o.label);
        }
    }
    if (std::isinf(min0) || std::isinf(min1)) return SeparationClass::CompleteSeparation;
    if (max0 < min1 || max1 < min0) return SeparationClass::CompleteSeparation;
    if (max0 <= min1 || max1 <= min0) return SeparationClass::QuasiCompleteSeparation;
    return SeparationClass::Overlap;
}

DiagnosticFlags diagnose(std::span<const double> curve, std::span<const double> index) {
    DiagnosticFlags f;
    if (curve.empty()) return f;
    for (double p : curve) {
        if (std::min(p, 1.0 - p) <= kSeparationEpsilon) f.separation = true;
    }
    f.equalProbability = std::abs(curve.back() - curve.front()) <= kEqualProbabilityEpsilon;
    for (double z : index) {
        if (!(std::abs(z) <= kBoundThreshold)) f.boundaryParameter = true;
    }
    return f;
}

namespace {

// Least squares with a minimum-norm answer when doses are not varied.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    return x.completeOrthogonalDecomposition().solve(y);
}

std::vector<double> marginal_index(const WorkingModel& model, const ToxicityParams& marginal,
                                   const DoseLabels& labels, std::span<const double> curve) {
    std::vector<double> z(labels.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (model.kind == ModelKind::Empiric) {
            const double p = curve[j];
            z[j] = (p > 0.0 && p < 1.0) ? normal_quantile(p) : (p <= 0.0 ? -kBoundThreshold * 2 : kBoundThreshold * 2);
        } else {
            z[j] = linear_predictor(model, marginal, labels[j]);
        }
    }
    return z;
}

FitResult fit_probit(const WorkingModel& model, const DoseLabels& labels, std::span<const Observation> data,
                     const OptimizerSpec& spec, const ToxicityParams& start) {
    const ProbitObjective objective(data, model);
    const ObjectiveWithGradient fg = [&objective](std::span<const double> x, std::span<double> g) {
        return objective(x, g);
    };
    const auto r = minimize(fg, objective.internal(start), spec);
    FitResult out;
    out.method = Method::Probit;
    out.model = model;
    out.toxicity = objective.params(r.argmin);
    out.marginal = {out.toxicity, 1.0};
    out.loglik = loglik_probit(data, out.toxicity, model, &out.floored);
    out.converged = r.converged;
    out.iterations = r.iterations;
    out.evaluations = r.evaluations;
    out.curve = toxicity_curve(model, out.toxicity, labels);
    const auto z = marginal_index(model, out.toxicity, labels, out.curve);
    out.diagnostics = diagnose(out.curve, z);
    return out;
}

// Ordinary least squares for the biomarker block. Joint2d regresses the week-8
// value on the label; Joint9d regresses all weeks on (label, week).
BiomarkerParams biomarker_start(std::span<const Observation> data, bool allWeeks) {
    const auto n = static_cast<Eigen::Index>(data.size());
    BiomarkerParams b;
    b.rhoC = 0.0;
    if (!allWeeks) {
        Eigen::MatrixXd x(n, 2);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i, 0) = 1.0;
            x(i, 1) = data[i].label;
            y(i) = data[i].biomarker[kWeeks - 1];
        }
        const Eigen::VectorXd beta = least_squares(x, y);
        b.c0 = beta(0);
        b.c1 = beta(1);
        b.at = 0.0;
        const double rss = (y - x * beta).squaredNorm();
        b.sigma = std::max(std::sqrt(rss / static_cast<double>(n)), 1e-3);
        return b;
    }
    Eigen::MatrixXd x(n * kWeeks, 3);
    Eigen::VectorXd y(n * kWeeks);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int t = 0; t < kWeeks; ++t) {
            const Eigen::Index row = i * kWeeks + t;
            x(row, 0) = 1.0;
            x(row, 1) = data[i].label;
            x(row, 2) = t + 1;
            y(row) = data[i].biomarker[t];
        }
    }
    const Eigen::VectorXd beta = least_squares(x, y);
    const Eigen::VectorXd res = y - x * beta;
    b.c0 = beta(0);
    b.c1 = beta(1);
    b.at = beta(2);
    b.sigma = std::max(std::sqrt(res.squaredNorm() / static_cast<double>(res.size())), 1e-3);
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int t = 0; t < kWeeks; ++t) {
            const double e = res(i * kWeeks + t);
            den += e * e;
            if (t > 0) num += e * res(i * kWeeks + t - 1);
        }
    }
    b.rhoC = den > 0.0 ? std::clamp(num / den, -0.8, 0.8) : 0.0;
    return b;
}

FitResult fit_joint(Method method, const DoseLabels& labels, std::span<const Observation> data,
                    const OptimizerSpec& spec, const ToxicityParams& guess) {
    const WorkingModel probit2{ModelKind::Probit2, 0.0};
    const FitResult start = fit_probit(probit2, labels, data, spec, guess);
    const bool nine = method == Method::Joint9d;
    JointParams init;
    init.toxicity = start.toxicity;
    init.biomarker = biomarker_start(data, nine);
    init.tau = 0.0;
    init.rhoB = 0.0;

    MinimizeResult r;
    JointParams est;
    OptimizerSpec s = spec;
    if (nine) {
        const Joint9dObjective objective(data);
        s.lower.assign(Joint9dObjective::dim(), -std::numeric_limits<double>::infinity());
        s.upper.assign(Joint9dObjective::dim(), std::numeric_limits<double>::infinity());
        s.lower[7] = 0.0;
        const ObjectiveWithGradient fg = [&objective](std::span<const double> x, std::span<double> g) {
            return objective(x, g);
        };
        r = minimize(fg, Joint9dObjective::internal(init), s);
        est = Joint9dObjective::params(r.argmin);
    } else {
        const Joint2dObjective objective(data);
        const ObjectiveWithGradient fg = [&objective](std::span<const double> x, std::span<double> g) {
            return objective(x, g);
        };
        r = minimize(fg, Joint2dObjective::internal(init), s);
        est = Joint2dObjective::params(r.argmin);
    }
    const JointVariant variant = nine ? JointVariant::Joint9d : JointVariant::Joint2d;
    FitResult out;
    out.method = method;
    out.model = probit2;
    out.toxicity = est.toxicity;
    out.joint = est;
    out.marginal = conditional_to_marginal(est, variant);
    out.loglik = loglik_joint(data, est, variant, &out.floored);
    out.converged = r.converged;
    out.iterations = r.iterations;
    out.evaluations = r.evaluations + start.evaluations;
    out.curve = toxicity_curve(probit2, out.marginal.params, labels);
    const auto z = marginal_index(probit2, out.marginal.params, labels, out.curve);
    out.diagnostics = diagnose(out.curve, z);
    return out;
}

}  // namespace

FitResult fit(Method method, const WorkingModel& model, const DoseLabels& labels, std::span<const Observation> data,
              const OptimizerSpec& spec, const ToxicityParams& start) {
    if (data.empty()) throw DomainError("fit: no data");
    if (method == Method::Probit) return fit_probit(model, labels, data, spec, start);
    return fit_joint(method, labels, data, spec, start);
}

double early_stop_posterior(int toxCount, int totalCount, double phiT) {
    if (toxCount < 0 || totalCount < toxCount) throw DomainError("early_stop_posterior: invalid counts");
    if (!(phiT > 0.0 && phiT < 1.0)) throw DomainError("early_stop_posterior: phiT must lie in (0,1)");
    // p ~ Beta(1+k, 1+n-k); P(p > phi) = P(Binomial(n+1, phi) <= k).
    const int m = totalCount + 1;
    double term = std::pow(1.0 - phiT, m);  // P(X = 0)
    double cdf = term;
    for (int i = 1; i <= toxCount; ++i) {
        term *= (static_cast<double>(m - i + 1) / i) * (phiT / (1.0 - phiT));
        cdf += term;
    }
    return std::min(cdf, 1.0);
}

bool early_stop(int toxCount, int totalCount, double phiT, double threshold, int minToxicities) {
    return toxCount >= minToxicities && early_stop_posterior(toxCount, totalCount, phiT) >= threshold;
}

}  // namespace jcrm
