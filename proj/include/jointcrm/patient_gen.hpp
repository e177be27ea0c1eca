#pragma once

#include "jointcrm/dose_model.hpp"
#include "jointcrm/joint_model.hpp"
#include "jointcrm/linalg.hpp"
#include "jointcrm/rng.hpp"

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

namespace jcrm {

/// True toxicity per dose. targetDose is the dose closest to phiT (lower wins ties).
struct Scenario {
    std::string name;
    std::vector<double> truth;
    std::size_t targetDose = 0;
};

Scenario make_scenario(std::string name, std::vector<double> truth, double phiT);

/// S1..S5 for five doses.
std::vector<Scenario> standard_scenarios(double phiT = 0.3);

/// Which dose coordinate enters the biomarker mean.
enum class DoseCoordinate { Label, Index };

struct GenerationParams {
    double rhoB = 0.0;
    double rhoC = 0.4;
    double sigma = 1.0;
    double c0 = 20.0;
    double c1 = -2.0;
    double at = -1.0;
    DoseCoordinate coordinate = DoseCoordinate::Label;

    BiomarkerParams biomarker() const { return {c0, c1, at, sigma, rhoC}; }
};

/// The patient's position on every outcome scale, before doses are applied.
struct LatentProfile {
    double ub = 0.5;
    Biomarker uc{};
};

struct PatientProfile {
    double ub = 0.5;
    Biomarker uc{};
    std::vector<int> toxic;            // per dose
    std::vector<Biomarker> biomarker;  // per dose

    std::size_t doses() const noexcept { return toxic.size(); }
    Observation observe(std::size_t dose, const DoseLabels& labels) const {
        return {labels[dose], toxic[dose], biomarker[dose]};
    }
};

/// Draws latent profiles from the 9-dimensional normal (toxicity latent first).
/// Throws InvalidAssociation when validate_params rejects (rhoB, rhoC).
class ProfileGenerator {
public:
    explicit ProfileGenerator(const GenerationParams& gen);
    LatentProfile draw(RngStream& rng) const;
    const GenerationParams& params() const noexcept { return gen_; }

private:
    GenerationParams gen_;
    MvnSampler sampler_;
};

/// Outcomes at every dose from uniforms: y_b = 1 iff ub <= truth_j,
/// y_c,t = mean(x_j, t) + Phi^{-1}(uc_t) sigma.
PatientProfile profile_from_latent(const LatentProfile& latent, const Scenario& scenario,
                                   const GenerationParams& gen, const DoseLabels& labels);

PatientProfile generate_profile(const Scenario& scenario, const GenerationParams& gen, const DoseLabels& labels,
                                RngStream& rng);

/// Empirical DLT rate per dose over nDraws profiles from one stream.
std::vector<double> toxicity_margin_check(const Scenario& scenario, const GenerationParams& gen, int nDraws,
                                          std::uint64_t seed = 1);

/// CSV with one row per patient and dose: patientId,dose,y_b,y_c1..y_c8,u_b.
void write_profiles_csv(std::ostream& out, const std::vector<PatientProfile>& profiles);

}  // namespace jcrm
