#include "jointcrm/sim_harness.hpp"

#include "jointcrm/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>

namespace jcrm {

std::vector<LatentProfile> replication_latents(const ProfileGenerator& gen, std::uint64_t seed,
                                               std::size_t scenarioIndex, std::size_t replication,
                                               std::size_t patients) {
    std::vector<LatentProfile> out;
    out.reserve(patients);
    for (std::size_t i = 0; i < patients; ++i) {
        RngStream rng(seed, stream_key(scenarioIndex, replication, i));
        out.push_back(gen.draw(rng));
    }
    return out;
}

ReplicationOutcome summarize_trial(const TrialRecord& r) {
    ReplicationOutcome o;
    o.stopped = r.stopped;
    o.initialCohorts = r.initialCohorts;
    o.cohorts = r.cohorts;
    if (!r.stopped && r.recommendation && r.finalFit) {
        o.selected = static_cast<int>(*r.recommendation);
        o.separation = r.finalFit->diagnostics.separation;
        o.equalProbability = r.finalFit->diagnostics.equalProbability;
        o.boundary = r.finalFit->diagnostics.boundaryParameter;
        o.converged = r.finalFit->converged;
    }
    return o;
}

ReplicationOutcome run_replication(const DesignSpec& design, const Scenario& scenario, const GenerationParams& gen,
                                   const std::vector<LatentProfile>& latents, const OptimizerSpec& fitSpec) {
    const DoseLabels labels = design.dose_labels();
    std::vector<std::optional<PatientProfile>> cache(latents.size());
    const ProfileSource source = [&](std::size_t i) {
        if (i >= latents.size()) throw DomainError("profile stream exhausted");
        if (!cache[i]) cache[i] = profile_from_latent(latents[i], scenario, gen, labels);
        return *cache[i];
    };
    return summarize_trial(run_trial(design, source, fitSpec));
}

OperatingCharacteristics aggregate(const std::vector<ReplicationOutcome>& outcomes, std::size_t targetDose,
                                   std::size_t doses) {
    OperatingCharacteristics oc;
    oc.replications = static_cast<int>(outcomes.size());
    oc.selection.assign(doses, 0.0);
    if (outcomes.empty()) return oc;
    int sep = 0, eq = 0, bound = 0, nonconv = 0;
    long initial = 0;
    for (const auto& o : outcomes) {
        initial += o.initialCohorts;
        if (o.stopped) {
            ++oc.stopped;
            continue;
        }
        oc.selection.at(static_cast<std::size_t>(o.selected)) += 1.0;
        sep += o.separation;
        eq += o.equalProbability;
        bound += o.boundary;
        nonconv += !o.converged;
    }
    const double n = static_cast<double>(outcomes.size());
    const int completed = oc.replications - oc.stopped;
    for (double& s : oc.selection) s /= n;
    oc.pcs = oc.selection[targetDose];
    oc.earlyStopRate = oc.stopped / n;
    oc.meanInitialCohorts = static_cast<double>(initial) / n;
    if (completed > 0) {
        oc.separationRate = static_cast<double>(sep) / completed;
        oc.equalProbRate = static_cast<double>(eq) / completed;
        oc.boundaryRate = static_cast<double>(bound) / completed;
        oc.nonConvergedRate = static_cast<double>(nonconv) / completed;
    }
    return oc;
}

int default_workers() { return omp_get_max_threads(); }

CellResult run_cell(const Scenario& scenario, std::size_t scenarioIndex, const NamedDesign& design,
                    const GenerationParams& gen, int replications, std::uint64_t seed, const OptimizerSpec& fitSpec,
                    Execution exec, int workers) {
    if (replications < 1) throw DomainError("replications must be at least 1");
    if (design.design.doses() != scenario.truth.size()) {
        throw DomainError("design '" + design.name + "' and scenario '" + scenario.name + "' differ in dose count");
    }
    const ProfileGenerator generator(gen);
    const std::size_t patients = static_cast<std::size_t>(design.design.maxCohorts * design.design.cohortSize);
    std::vector<ReplicationOutcome> outcomes(static_cast<std::size_t>(replications));

    auto one = [&](int r) {
        const auto latents = replication_latents(generator, seed, scenarioIndex, static_cast<std::size_t>(r), patients);
        outcomes[static_cast<std::size_t>(r)] = run_replication(design.design, scenario, gen, latents, fitSpec);
    };
    if (exec == Execution::Serial) {
        for (int r = 0; r < replications; ++r) one(r);
    } else {
        const int threads = workers > 0 ? workers : default_workers();
        // Exceptions may not cross the parallel region; collect and rethrow.
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(replications));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
        for (int r = 0; r < replications; ++r) {
            try {
                one(r);
            } catch (...) {
                errors[static_cast<std::size_t>(r)] = std::current_exception();
            }
        }
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    CellResult c;
    c.scenario = scenario.name;
    c.scenarioIndex = scenarioIndex;
    c.targetDose = scenario.targetDose;
    c.design = design.name;
    c.rhoB = gen.rhoB;
    c.seed = seed;
    c.oc = aggregate(outcomes, scenario.targetDose, scenario.truth.size());
    c.outcomes = std::move(outcomes);
    return c;
}

PlanResult run_plan(const SimPlan& plan, Execution exec, int workers) {
    for (const auto& g : plan.gens) {
        const auto v = validate_params(g.rhoB, g.rhoC, g.sigma);
        if (!v.valid) throw InvalidAssociation(v.reason);
    }
    PlanResult out;
    out.plan = plan.name;
    for (const auto& g : plan.gens) {
        for (const auto& d : plan.designs) {
            for (std::size_t s = 0; s < plan.scenarios.size(); ++s) {
                out.cells.push_back(run_cell(plan.scenarios[s], s, d, g, plan.replications, plan.masterSeed,
                                             plan.fitSpec, exec, workers));
            }
        }
    }
    return out;
}

MethodDelta compare_methods(const CellResult& a, const CellResult& b) {
    if (a.scenario != b.scenario || a.scenarioIndex != b.scenarioIndex) {
        throw KeyMismatch("scenario '" + a.scenario + "' vs '" + b.scenario + "'");
    }
    if (a.seed != b.seed) throw KeyMismatch("different master seeds");
    if (a.outcomes.size() != b.outcomes.size()) throw KeyMismatch("different replication counts");
    MethodDelta d;
    d.scenario = a.scenario;
    d.designA = a.design;
    d.designB = b.design;
    d.rhoA = a.rhoB;
    d.rhoB = b.rhoB;
    const double n = static_cast<double>(a.outcomes.size());
    double sum = 0.0, sumSq = 0.0;
    for (std::size_t r = 0; r < a.outcomes.size(); ++r) {
        const double ca = a.outcomes[r].selected == static_cast<int>(a.targetDose) ? 1.0 : 0.0;
        const double cb = b.outcomes[r].selected == static_cast<int>(b.targetDose) ? 1.0 : 0.0;
        sum += ca - cb;
        sumSq += (ca - cb) * (ca - cb);
    }
    d.pcsDelta = sum / n;
    const double var = n > 1 ? (sumSq - n * d.pcsDelta * d.pcsDelta) / (n - 1) : 0.0;
    d.pcsDeltaSe = std::sqrt(std::max(var, 0.0) / n);
    d.separationDelta = a.oc.separationRate - b.oc.separationRate;
    return d;
}

}  // namespace jcrm
