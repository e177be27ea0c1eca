#pragma once

#include "jointcrm/estimation.hpp"
#include "jointcrm/patient_gen.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace jcrm {

/// The five dose-finding methods. Empiric and Probit1 are the probit method
/// with a one-parameter working model.
enum class DesignMethod { Probit, Joint2d, Joint9d, Empiric, Probit1 };

std::string to_string(DesignMethod m);
DesignMethod design_method_from_string(const std::string& s);

struct DesignSpec {
    DesignMethod method = DesignMethod::Probit;
    Skeleton skeleton = default_skeleton();
    double a0 = 3.0;        // Probit1 intercept
    double phiT = 0.3;
    int initialK = 1;       // Stage 1 ends once there are >= k DLTs and >= k non-DLTs
    int cohortSize = 3;
    int maxCohorts = 20;
    double stopThreshold = 0.95;
    int stopMinToxicities = 2;
    ToxicityParams start;   // initial guess: labels are backward-fitted here and every fit starts here
    std::optional<DoseLabels> labels;  // overrides the backward-fitted labels

    std::size_t doses() const noexcept { return skeleton.size(); }
    Method fit_method() const;
    WorkingModel working_model() const;
    /// Labels used by the model: the override if set, otherwise backward-fitted.
    DoseLabels dose_labels() const;
    /// Throws DomainError when a field is out of range.
    void validate() const;
};

enum class Stage { Initial, Modeling, StoppedToxic, Completed };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

struct Cohort {
    std::size_t dose = 0;
    std::vector<int> toxic;
    std::vector<Biomarker> biomarker;  // empty or one per patient
};

struct FitSummary {
    std::vector<double> curve;
    bool converged = false;
    DiagnosticFlags diagnostics;
    std::size_t target = 0;
};

FitSummary summarize(const FitResult& f, double phiT);

/// One transcript record.
struct CohortRecord {
    int cohortIndex = 0;  // 1-based
    Stage stage = Stage::Initial;  // stage in which the cohort was dosed
    Cohort cohort;
    std::optional<FitSummary> fit;
    std::optional<std::size_t> nextDose;  // absent once the trial has ended
    double stopPosterior = 0.0;           // set when the stopping rule was evaluated
    bool retainedOnNonConvergence = false;
};

struct TrialState {
    Stage stage = Stage::Initial;
    std::vector<CohortRecord> history;
    std::size_t currentDose = 0;  // dose for the next cohort
    std::size_t highestTried = 0;
    int initialCohorts = 0;  // cohorts dosed in Stage 1
    std::optional<FitResult> lastFit;
    std::optional<FitResult> finalFit;
    std::optional<std::size_t> recommendation;

    bool finished() const noexcept { return stage == Stage::StoppedToxic || stage == Stage::Completed; }
};

enum class Stage1Action { Escalate, Stay, Deescalate, Stop, AdvanceToStage2 };

struct Stage1Decision {
    Stage1Action action = Stage1Action::Stay;
    std::size_t nextDose = 0;
    double posterior = 0.0;
};

/// Rule-based Stage 1 step after a cohort at `dose` with `cohortToxicities`
/// DLTs. Cumulative counts cover all patients so far; the d1 counts feed the
/// stopping rule.
Stage1Decision stage1_next(const DesignSpec& design, std::size_t dose, int cohortToxicities, int totalToxicities,
                           int totalNonToxicities, int toxAtLowest, int nAtLowest);

/// Model-guided dose: the target clamped to one level above the highest dose tried.
std::size_t stage2_next(const FitResult& fit, double phiT, std::size_t highestTried);

/// State machine shared by batch simulation and live conduct.
class TrialEngine {
public:
    TrialEngine(DesignSpec design, OptimizerSpec fitSpec = {});

    const DesignSpec& design() const noexcept { return design_; }
    const DoseLabels& labels() const noexcept { return labels_; }
    const OptimizerSpec& fit_spec() const noexcept { return fitSpec_; }
    const TrialState& state() const noexcept { return state_; }
    std::size_t next_dose() const noexcept { return state_.currentDose; }
    bool finished() const noexcept { return state_.finished(); }

    /// Records a cohort dosed at next_dose(). Throws DomainError when the
    /// trial has ended, the dose differs, or the outcomes are malformed.
    const CohortRecord& submit(Cohort cohort);

    std::vector<Observation> observations() const;

private:
    void conclude();

    DesignSpec design_;
    OptimizerSpec fitSpec_;
    DoseLabels labels_;
    TrialState state_;
    std::vector<Observation> data_;
};

struct TrialRecord {
    bool stopped = false;
    std::optional<std::size_t> recommendation;
    int cohorts = 0;
    int initialCohorts = 0;
    std::vector<CohortRecord> log;
    std::optional<FitResult> finalFit;
};

/// Patient i (0-based, in enrolment order) supplies outcomes at every dose.
using ProfileSource = std::function<PatientProfile(std::size_t patient)>;

TrialRecord run_trial(const DesignSpec& design, const ProfileSource& profiles, const OptimizerSpec& fitSpec = {});

}  // namespace jcrm
