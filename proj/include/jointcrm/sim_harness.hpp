#pragma once

#include "jointcrm/patient_gen.hpp"
#include "jointcrm/trial_engine.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace jcrm {

struct NamedDesign {
    std::string name;
    DesignSpec design;
};

struct SimPlan {
    std::string name = "plan";
    std::vector<Scenario> scenarios;
    std::vector<NamedDesign> designs;
    std::vector<GenerationParams> gens;
    int replications = 1000;
    std::uint64_t masterSeed = 20240501;
    OptimizerSpec fitSpec;
};

/// What one simulated trial contributes to the tables.
struct ReplicationOutcome {
    int selected = -1;  // -1 when stopped for toxicity
    bool stopped = false;
    bool separation = false;
    bool equalProbability = false;
    bool boundary = false;
    bool converged = true;
    int initialCohorts = 0;
    int cohorts = 0;

    bool operator==(const ReplicationOutcome&) const = default;
};

/// Separation, equal-probability, boundary and non-convergence rates are over
/// trials that were not stopped; the early-stop rate and PCS are over all.
struct OperatingCharacteristics {
    int replications = 0;
    int stopped = 0;
    double pcs = 0.0;
    double separationRate = 0.0;
    double equalProbRate = 0.0;
    double boundaryRate = 0.0;
    double nonConvergedRate = 0.0;
    double earlyStopRate = 0.0;
    double meanInitialCohorts = 0.0;
    std::vector<double> selection;  // per dose, over all replications
};

struct CellResult {
    std::string scenario;
    std::size_t scenarioIndex = 0;
    std::size_t targetDose = 0;
    std::string design;
    double rhoB = 0.0;
    std::uint64_t seed = 0;
    OperatingCharacteristics oc;
    std::vector<ReplicationOutcome> outcomes;
};

struct PlanResult {
    std::string plan;
    std::vector<CellResult> cells;
};

enum class Execution { Serial, Parallel };

/// Latent profiles of the patients of one replication. Patient i draws from
/// stream (seed, stream_key(scenarioIndex, replication, i)), so every design
/// and every rho_b sees the same toxicity latents.
std::vector<LatentProfile> replication_latents(const ProfileGenerator& gen, std::uint64_t seed,
                                               std::size_t scenarioIndex, std::size_t replication,
                                               std::size_t patients);

ReplicationOutcome summarize_trial(const TrialRecord& r);

ReplicationOutcome run_replication(const DesignSpec& design, const Scenario& scenario, const GenerationParams& gen,
                                   const std::vector<LatentProfile>& latents, const OptimizerSpec& fitSpec = {});

OperatingCharacteristics aggregate(const std::vector<ReplicationOutcome>& outcomes, std::size_t targetDose,
                                   std::size_t doses);

/// Threads used when `workers` is 0.
int default_workers();

/// One (scenario, design, gen) cell. Serial and Parallel give identical results.
CellResult run_cell(const Scenario& scenario, std::size_t scenarioIndex, const NamedDesign& design,
                    const GenerationParams& gen, int replications, std::uint64_t seed,
                    const OptimizerSpec& fitSpec = {}, Execution exec = Execution::Parallel, int workers = 0);

/// Cells in (gen, design, scenario) order. workers <= 0 uses the OpenMP default.
PlanResult run_plan(const SimPlan& plan, Execution exec = Execution::Parallel, int workers = 0);

struct MethodDelta {
    std::string scenario;
    std::string designA;
    std::string designB;
    double rhoA = 0.0;
    double rhoB = 0.0;
    double pcsDelta = 0.0;    // PCS(a) - PCS(b)
    double pcsDeltaSe = 0.0;  // standard error of the paired difference
    double separationDelta = 0.0;
};

/// Paired comparison on common random numbers. Throws KeyMismatch unless the
/// cells share scenario, seed and replication count.
MethodDelta compare_methods(const CellResult& a, const CellResult& b);

}  // namespace jcrm
