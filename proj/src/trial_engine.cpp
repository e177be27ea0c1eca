#include "jointcrm/trial_engine.hpp"

#include "jointcrm/errors.hpp"

#include <algorithm>
#include <cmath>

namespace jcrm {

std::string to_string(DesignMethod m) {
    switch (m) {
        case DesignMethod::Probit: return "probit";
        case DesignMethod::Joint2d: return "joint2d";
        case DesignMethod::Joint9d: return "joint9d";
        case DesignMethod::Empiric: return "empiric";
        case DesignMethod::Probit1: return "probit1";
    }
    return "probit";
}

DesignMethod design_method_from_string(const std::string& s) {
    if (s == "probit") return DesignMethod::Probit;
    if (s == "joint2d") return DesignMethod::Joint2d;
    if (s == "joint9d") return DesignMethod::Joint9d;
    if (s == "empiric") return DesignMethod::Empiric;
    if (s == "probit1") return DesignMethod::Probit1;
    throw DomainError("unknown method '" + s + "'");
}

Method DesignSpec::fit_method() const {
    switch (method) {
        case DesignMethod::Joint2d: return Method::Joint2d;
        case DesignMethod::Joint9d: return Method::Joint9d;
        default: return Method::Probit;
    }
}

WorkingModel DesignSpec::working_model() const {
    switch (method) {
        case DesignMethod::Empiric: return {ModelKind::Empiric, a0};
        case DesignMethod::Probit1: return {ModelKind::Probit1, a0};
        default: return {ModelKind::Probit2, a0};
    }
}

DoseLabels DesignSpec::dose_labels() const {
    if (labels) return *labels;
    return backward_fit_labels(skeleton, working_model(), start);
}

void DesignSpec::validate() const {
    if (!(phiT > 0.0 && phiT < 1.0)) throw DomainError("phiT must lie in (0,1)");
    if (initialK < 1) throw DomainError("initial stage k must be at least 1");
    if (cohortSize < 1) throw DomainError("cohort size must be at least 1");
    if (maxCohorts < 1) throw DomainError("number of cohorts must be at least 1");
    if (!(stopThreshold > 0.0 && stopThreshold <= 1.0)) throw DomainError("stop threshold must lie in (0,1]");
    if (labels && labels->size() != skeleton.size()) throw DomainError("label count does not match the skeleton");
    if (!std::isfinite(start.b0) || !std::isfinite(start.b1)) throw DomainError("initial guess must be finite");
}

std::string to_string(Stage s) {
    switch (s) {
        case Stage::Initial: return "initial";
        case Stage::Modeling: return "modeling";
        case Stage::StoppedToxic: return "stopped_toxic";
        case Stage::Completed: return "completed";
    }
    return "initial";
}

Stage stage_from_string(const std::string& s) {
    if (s == "initial") return Stage::Initial;
    if (s == "modeling") return Stage::Modeling;
    if (s == "stopped_toxic") return Stage::StoppedToxic;
    if (s == "completed") return Stage::Completed;
    throw DomainError("unknown stage '" + s + "'");
}

Stage1Decision stage1_next(const DesignSpec& design, std::size_t dose, int cohortToxicities, int totalToxicities,
                           int totalNonToxicities, int toxAtLowest, int nAtLowest) {
    Stage1Decision d;
    d.nextDose = dose;
    if (totalToxicities >= design.initialK && totalNonToxicities >= design.initialK) {
        d.action = Stage1Action::AdvanceToStage2;
        return d;
    }
    if (cohortToxicities == 0) {
        if (dose + 1 < design.doses()) {
            d.action = Stage1Action::Escalate;
            d.nextDose = dose + 1;
        } else {
            d.action = Stage1Action::Stay;
        }
    } else if (cohortToxicities == 1) {
        d.action = Stage1Action::Stay;
    } else if (dose == 0) {
        d.posterior = early_stop_posterior(toxAtLowest, nAtLowest, design.phiT);
        d.action = early_stop(toxAtLowest, nAtLowest, design.phiT, design.stopThreshold, design.stopMinToxicities)
                       ? Stage1Action::Stop
                       : Stage1Action::Stay;
    } else {
        d.action = Stage1Action::Deescalate;
        d.nextDose = dose - 1;
    }
    return d;
}

std::size_t stage2_next(const FitResult& fit, double phiT, std::size_t highestTried) {
    return std::min(select_target(fit.curve, phiT), highestTried + 1);
}

FitSummary summarize(const FitResult& f, double phiT) {
    return {f.curve, f.converged, f.diagnostics, select_target(f.curve, phiT)};
}

TrialEngine::TrialEngine(DesignSpec design, OptimizerSpec fitSpec)
    : design_(std::move(design)), fitSpec_(std::move(fitSpec)) {
    design_.validate();
    labels_ = design_.dose_labels();
}

std::vector<Observation> TrialEngine::observations() const { return data_; }

const CohortRecord& TrialEngine::submit(Cohort cohort) {
    if (finished()) throw DomainError("the trial has ended");
    if (cohort.dose != state_.currentDose) {
        throw DomainError("cohort dosed at d" + std::to_string(cohort.dose + 1) + " but the design assigns d" +
                          std::to_string(state_.currentDose + 1));
    }
    if (static_cast<int>(cohort.toxic.size()) != design_.cohortSize) {
        throw DomainError("expected " + std::to_string(design_.cohortSize) + " outcomes, got " +
                          std::to_string(cohort.toxic.size()));
    }
    for (int y : cohort.toxic) {
        if (y != 0 && y != 1) throw DomainError("DLT outcomes must be 0 or 1");
    }
    const bool joint = design_.fit_method() != Method::Probit;
    if (!cohort.biomarker.empty() && cohort.biomarker.size() != cohort.toxic.size()) {
        throw DomainError("biomarker vectors must be given for every patient or for none");
    }
    if (joint && cohort.biomarker.empty()) {
        throw DomainError("method " + to_string(design_.method) + " needs " + std::to_string(kWeeks) +
                          " biomarker values per patient");
    }
    for (const auto& b : cohort.biomarker) {
        for (double v : b) {
            if (!std::isfinite(v)) throw DomainError("biomarker values must be finite");
        }
    }

    CohortRecord rec;
    rec.cohortIndex = static_cast<int>(state_.history.size()) + 1;
    rec.stage = state_.stage;
    for (std::size_t i = 0; i < cohort.toxic.size(); ++i) {
        data_.push_back({labels_[cohort.dose], cohort.toxic[i], cohort.biomarker.empty() ? Biomarker{} : cohort.biomarker[i]});
    }
    state_.highestTried = std::max(state_.highestTried, cohort.dose);
    const bool last = rec.cohortIndex >= design_.maxCohorts;

    bool model = state_.stage == Stage::Modeling;
    if (state_.stage == Stage::Initial) {
        ++state_.initialCohorts;
        int tox = 0, lowTox = 0, lowN = 0;
        for (const auto& o : data_) tox += o.toxic;
        for (const auto& r : state_.history) {
            if (r.cohort.dose != 0) continue;
            for (int y : r.cohort.toxic) lowTox += y;
            lowN += static_cast<int>(r.cohort.toxic.size());
        }
        int cohortTox = 0;
        for (int y : cohort.toxic) cohortTox += y;
        if (cohort.dose == 0) {
            lowTox += cohortTox;
            lowN += static_cast<int>(cohort.toxic.size());
        }
        const auto d = stage1_next(design_, cohort.dose, cohortTox, tox, static_cast<int>(data_.size()) - tox, lowTox, lowN);
        if (d.action == Stage1Action::Stop) {
            rec.stopPosterior = d.posterior;
            rec.cohort = std::move(cohort);
            state_.stage = Stage::StoppedToxic;
            state_.history.push_back(std::move(rec));
            return state_.history.back();
        }
        if (cohort.dose == 0 && cohortTox >= 2) rec.stopPosterior = d.posterior;
        if (d.action == Stage1Action::AdvanceToStage2) {
            state_.stage = Stage::Modeling;
            model = true;
        } else {
            state_.currentDose = d.nextDose;
        }
    }
    if (model) {
        FitResult f = fit(design_.fit_method(), design_.working_model(), labels_, data_, fitSpec_, design_.start);
        rec.fit = summarize(f, design_.phiT);
        if (f.converged) {
            state_.currentDose = stage2_next(f, design_.phiT, state_.highestTried);
        } else {
            rec.retainedOnNonConvergence = true;
        }
        state_.lastFit = std::move(f);
    }
    rec.cohort = std::move(cohort);
    if (!last) rec.nextDose = state_.currentDose;
    state_.history.push_back(std::move(rec));
    if (last) conclude();
    return state_.history.back();
}

void TrialEngine::conclude() {
    // The last Stage-2 fit already covers all data; a trial that never left
    // Stage 1 is fitted once here.
    if (state_.stage == Stage::Modeling && state_.lastFit) {
        state_.finalFit = state_.lastFit;
    } else {
        state_.finalFit = fit(design_.fit_method(), design_.working_model(), labels_, data_, fitSpec_, design_.start);
    }
    state_.recommendation = select_target(state_.finalFit->curve, design_.phiT);
    state_.stage = Stage::Completed;
}

TrialRecord run_trial(const DesignSpec& design, const ProfileSource& profiles, const OptimizerSpec& fitSpec) {
    TrialEngine engine(design, fitSpec);
    const bool biomarkers = design.fit_method() != Method::Probit;
    std::size_t patient = 0;
    while (!engine.finished()) {
        Cohort c;
        c.dose = engine.next_dose();
        for (int i = 0; i < design.cohortSize; ++i) {
            const PatientProfile p = profiles(patient++);
            c.toxic.push_back(p.toxic.at(c.dose));
            if (biomarkers) c.biomarker.push_back(p.biomarker.at(c.dose));
        }
        engine.submit(std::move(c));
    }
    const TrialState& s = engine.state();
    TrialRecord out;
    out.stopped = s.stage == Stage::StoppedToxic;
    out.recommendation = s.recommendation;
    out.cohorts = static_cast<int>(s.history.size());
    out.initialCohorts = s.initialCohorts;
    out.log = s.history;
    out.finalFit = s.finalFit;
    return out;
}

}  // namespace jcrm
