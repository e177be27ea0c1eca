#include "jointcrm/patient_gen.hpp"

#include "jointcrm/errors.hpp"
#include "jointcrm/normal.hpp"

#include <cmath>
#include <iomanip>

namespace jcrm {

Scenario make_scenario(std::string name, std::vector<double> truth, double phiT) {
    if (truth.empty()) throw DomainError("scenario '" + name + "' has no doses");
    for (std::size_t j = 0; j < truth.size(); ++j) {
        if (!(truth[j] > 0.0 && truth[j] < 1.0)) throw DomainError("scenario '" + name + "': probability outside (0,1)");
        if (j > 0 && !(truth[j] > truth[j - 1])) throw DomainError("scenario '" + name + "': not strictly increasing");
    }
    Scenario s;
    s.targetDose = select_target(truth, phiT);
    s.name = std::move(name);
    s.truth = std::move(truth);
    return s;
}

std::vector<Scenario> standard_scenarios(double phiT) {
    return {
        make_scenario("S1", {0.30, 0.45, 0.55, 0.65, 0.75}, phiT),
        make_scenario("S2", {0.15, 0.30, 0.45, 0.55, 0.65}, phiT),
        make_scenario("S3", {0.10, 0.15, 0.30, 0.45, 0.55}, phiT),
        make_scenario("S4", {0.05, 0.10, 0.15, 0.30, 0.45}, phiT),
        make_scenario("S5", {0.05, 0.08, 0.10, 0.15, 0.30}, phiT),
    };
}

namespace {

const GenerationParams& checked(const GenerationParams& gen) {
    const auto v = validate_params(gen.rhoB, gen.rhoC, gen.sigma);
    if (!v.valid) throw InvalidAssociation(v.reason);
    return gen;
}

}  // namespace

ProfileGenerator::ProfileGenerator(const GenerationParams& gen)
    : gen_(checked(gen)), sampler_(Eigen::VectorXd::Zero(kWeeks + 1), generation_covariance(gen.rhoB, gen.rhoC)) {}

LatentProfile ProfileGenerator::draw(RngStream& rng) const {
    const Eigen::VectorXd z = sampler_.draw(rng);
    LatentProfile p;
    p.ub = normal_cdf(z(0));
    for (int t = 0; t < kWeeks; ++t) p.uc[t] = normal_cdf(z(t + 1));
    return p;
}

PatientProfile profile_from_latent(const LatentProfile& latent, const Scenario& scenario,
                                   const GenerationParams& gen, const DoseLabels& labels) {
    const std::size_t J = scenario.truth.size();
    if (gen.coordinate == DoseCoordinate::Label && labels.size() != J) {
        throw DomainError("profile_from_latent: label count does not match scenario");
    }
    const BiomarkerParams mean = gen.biomarker();
    Biomarker z{};
    for (int t = 0; t < kWeeks; ++t) z[t] = normal_quantile(latent.uc[t]);

    PatientProfile out;
    out.ub = latent.ub;
    out.uc = latent.uc;
    out.toxic.resize(J);
    out.biomarker.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        const double x = gen.coordinate == DoseCoordinate::Label ? labels[j] : static_cast<double>(j + 1);
        out.toxic[j] = latent.ub <= scenario.truth[j] ? 1 : 0;
        for (int t = 0; t < kWeeks; ++t) out.biomarker[j][t] = mean.mean(x, t + 1) + z[t] * gen.sigma;
    }
    return out;
}

PatientProfile generate_profile(const Scenario& scenario, const GenerationParams& gen, const DoseLabels& labels,
                                RngStream& rng) {
    const ProfileGenerator g(gen);
    return profile_from_latent(g.draw(rng), scenario, gen, labels);
}

std::vector<double> toxicity_margin_check(const Scenario& scenario, const GenerationParams& gen, int nDraws,
                                          std::uint64_t seed) {
    if (nDraws < 1) throw DomainError("toxicity_margin_check: nDraws must be positive");
    const ProfileGenerator g(gen);
    RngStream rng(seed, 0);
    std::vector<double> rate(scenario.truth.size(), 0.0);
    for (int i = 0; i < nDraws; ++i) {
        const double ub = g.draw(rng).ub;
        for (std::size_t j = 0; j < rate.size(); ++j) rate[j] += ub <= scenario.truth[j] ? 1.0 : 0.0;
    }
    for (double& r : rate) r /= nDraws;
    return rate;
}

void write_profiles_csv(std::ostream& out, const std::vector<PatientProfile>& profiles) {
    out << "patientId,dose,y_b";
    for (int t = 1; t <= kWeeks; ++t) out << ",y_c" << t;
    out << ",u_b\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& p = profiles[i];
        for (std::size_t j = 0; j < p.doses(); ++j) {
            out << i << ',' << j + 1 << ',' << p.toxic[j];
            for (int t = 0; t < kWeeks; ++t) out << ',' << p.biomarker[j][t];
            out << ',' << p.ub << '\n';
        }
    }
}

}  // namespace jcrm
