#include "jointcrm/dose_model.hpp"

#include "jointcrm/errors.hpp"
#include "jointcrm/normal.hpp"

#include <cmath>

namespace jcrm {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Empiric: return "empiric";
        case ModelKind::Probit1: return "probit1";
        case ModelKind::Probit2: return "probit2";
    }
    return "probit2";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "empiric") return ModelKind::Empiric;
    if (s == "probit1") return ModelKind::Probit1;
    if (s == "probit2" || s == "probit") return ModelKind::Probit2;
    throw DomainError("unknown model kind '" + s + "'");
}

Skeleton::Skeleton(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty()) throw DomainError("Skeleton: empty");
    for (std::size_t j = 0; j < p_.size(); ++j) {
        if (!(p_[j] > 0.0 && p_[j] < 1.0)) throw DomainError("Skeleton: probabilities must lie in (0,1)");
        if (j > 0 && !(p_[j] > p_[j - 1])) throw DomainError("Skeleton: must be strictly increasing");
    }
}

Skeleton default_skeleton() { return Skeleton({0.25, 0.35, 0.45, 0.55, 0.65}); }

DoseLabels::DoseLabels(std::vector<double> x) : x_(std::move(x)) {
    if (x_.empty()) throw DomainError("DoseLabels: empty");
    for (std::size_t j = 0; j < x_.size(); ++j) {
        if (!std::isfinite(x_[j])) throw DomainError("DoseLabels: non-finite label");
        if (j > 0 && !(x_[j] > x_[j - 1])) throw DomainError("DoseLabels: must be strictly increasing");
    }
}

DoseLabels backward_fit_labels(const Skeleton& skeleton, const WorkingModel& model) {
    return backward_fit_labels(skeleton, model, ToxicityParams{});
}

DoseLabels backward_fit_labels(const Skeleton& skeleton, const WorkingModel& model, const ToxicityParams& at) {
    const double slope = std::exp(at.b1);
    std::vector<double> x(skeleton.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        switch (model.kind) {
            case ModelKind::Empiric: x[j] = at.b1 == 0.0 ? skeleton[j] : std::pow(skeleton[j], 1.0 / slope); break;
            case ModelKind::Probit1: x[j] = (normal_quantile(skeleton[j]) - model.a0) / slope; break;
            case ModelKind::Probit2: x[j] = (normal_quantile(skeleton[j]) - at.b0) / slope; break;
        }
    }
    return DoseLabels(std::move(x));
}

double linear_predictor(const WorkingModel& model, const ToxicityParams& params, double label) {
    switch (model.kind) {
        case ModelKind::Probit1: return model.a0 + std::exp(params.b1) * label;
        case ModelKind::Probit2: return params.b0 + std::exp(params.b1) * label;
        case ModelKind::Empiric: break;
    }
    throw DomainError("linear_predictor: empiric model has no probit predictor");
}

double toxicity_prob(const WorkingModel& model, const ToxicityParams& params, double label) {
    if (model.kind == ModelKind::Empiric) {
        if (!(label > 0.0 && label < 1.0)) throw DomainError("toxicity_prob: empiric label must lie in (0,1)");
        return std::pow(label, std::exp(params.b1));
    }
    return normal_cdf(linear_predictor(model, params, label));
}

std::vector<double> toxicity_curve(const WorkingModel& model, const ToxicityParams& params,
                                   const DoseLabels& labels) {
    std::vector<double> curve(labels.size());
    for (std::size_t j = 0; j < curve.size(); ++j) curve[j] = toxicity_prob(model, params, labels[j]);
    return curve;
}

std::size_t select_target(std::span<const double> curve, double phiT) {
    if (curve.empty()) throw DomainError("select_target: empty curve");
    std::size_t best = 0;
    double bestGap = std::abs(curve[0] - phiT);
    for (std::size_t j = 1; j < curve.size(); ++j) {
        const double gap = std::abs(curve[j] - phiT);
        if (gap < bestGap) {
            bestGap = gap;
            best = j;
        }
    }
    return best;
}

Skeleton transform_skeleton(const Skeleton& base, double offset, double scale) {
    if (!(scale > 0.0)) throw DomainError("transform_skeleton: scale must be positive");
    std::vector<double> p(base.size());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = normal_cdf(offset + scale * normal_quantile(base[j]));
    return Skeleton(std::move(p));
}

}  // namespace jcrm
