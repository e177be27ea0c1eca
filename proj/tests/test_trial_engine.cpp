#include "doctest.h"

#include "jointcrm/errors.hpp"
#include "jointcrm/sim_harness.hpp"
#include "jointcrm/trial_engine.hpp"

#include <algorithm>
#include <cmath>

using namespace jcrm;

namespace {

FitResult with_curve(std::vector<double> curve) {
    FitResult f;
    f.curve = std::move(curve);
    f.converged = true;
    return f;
}

std::vector<std::size_t> dose_path(const TrialRecord& r) {
    std::vector<std::size_t> d;
    for (const auto& c : r.log) d.push_back(c.cohort.dose);
    return d;
}

// Profiles of one simulated replication, materialized on the design's labels.
ProfileSource stream(const Scenario& s, const GenerationParams& gen, const DoseLabels& labels, std::uint64_t seed,
                     std::size_t scenarioIndex, std::size_t rep) {
    const ProfileGenerator g(gen);
    auto lat = replication_latents(g, seed, scenarioIndex, rep, 60);
    std::vector<PatientProfile> prof;
    for (const auto& l : lat) prof.push_back(profile_from_latent(l, s, gen, labels));
    return [prof](std::size_t i) { return prof.at(i); };
}

}  // namespace

TEST_CASE("stage1_next rules") {
    DesignSpec d;
    d.initialK = 1;
    SUBCASE("no DLTs escalates, or stays at the top dose") {
        auto r = stage1_next(d, 0, 0, 0, 3, 0, 3);
        CHECK(r.action == Stage1Action::Escalate);
        CHECK(r.nextDose == 1);
        r = stage1_next(d, 4, 0, 0, 12, 0, 3);
        CHECK(r.action == Stage1Action::Stay);
        CHECK(r.nextDose == 4);
    }
    SUBCASE("one DLT with the gate met advances") {
        const auto r = stage1_next(d, 1, 1, 1, 5, 0, 3);
        CHECK(r.action == Stage1Action::AdvanceToStage2);
    }
    SUBCASE("one DLT without the gate stays") {
        d.initialK = 2;
        const auto r = stage1_next(d, 1, 1, 1, 5, 0, 3);
        CHECK(r.action == Stage1Action::Stay);
        CHECK(r.nextDose == 1);
    }
    SUBCASE("three DLTs at the lowest dose stop") {
        d.initialK = 1;
        const auto r = stage1_next(d, 0, 3, 3, 0, 3, 3);
        CHECK(r.action == Stage1Action::Stop);
        CHECK(r.posterior == doctest::Approx(1 - std::pow(0.3, 4)));
    }
    SUBCASE("two DLTs at the lowest dose below the threshold stay") {
        d.initialK = 3;
        const auto r = stage1_next(d, 0, 2, 2, 1, 2, 3);
        CHECK(r.action == Stage1Action::Stay);
        CHECK(r.nextDose == 0);
        CHECK(r.posterior == doctest::Approx(0.9163));
    }
    SUBCASE("two DLTs above the lowest dose de-escalate") {
        d.initialK = 3;
        const auto r = stage1_next(d, 2, 2, 2, 7, 0, 3);
        CHECK(r.action == Stage1Action::Deescalate);
        CHECK(r.nextDose == 1);
    }
    SUBCASE("accumulated data at the lowest dose feed the stopping rule") {
        d.initialK = 3;
        // 2/3 then 2/3 at d1: P(p > 0.3) under Beta(5, 3) = 0.971
        const auto r = stage1_next(d, 0, 2, 4, 2, 4, 6);
        CHECK(r.action == Stage1Action::Stop);
        CHECK(r.posterior == doctest::Approx(0.9712).epsilon(1e-3));
    }
}

TEST_CASE("stage2_next") {
    CHECK(stage2_next(with_curve({0.05, 0.12, 1, 1, 1}), 0.3, 1) == 1);
    CHECK(stage2_next(with_curve({0.05, 0.12, 1, 1, 1}), 0.3, 4) == 1);
    CHECK(stage2_next(with_curve({0.01, 0.05, 0.1, 0.3, 0.5}), 0.3, 1) == 2);
    CHECK(stage2_next(with_curve({0.2, 0.2, 0.2, 0.2, 0.2}), 0.3, 4) == 0);
    // de-escalation is not restricted
    CHECK(stage2_next(with_curve({0.3, 0.6, 0.7, 0.8, 0.9}), 0.3, 4) == 0);
}

TEST_CASE("engine input validation") {
    DesignSpec d;
    TrialEngine e(d);
    CHECK(e.next_dose() == 0);
    CHECK_THROWS_AS(e.submit({1, {0, 0, 0}, {}}), DomainError);
    CHECK_THROWS_AS(e.submit({0, {0, 0}, {}}), DomainError);
    CHECK_THROWS_AS(e.submit({0, {0, 2, 0}, {}}), DomainError);
    const auto& rec = e.submit({0, {0, 0, 0}, {}});
    CHECK(rec.cohortIndex == 1);
    CHECK(rec.stage == Stage::Initial);
    REQUIRE(rec.nextDose);
    CHECK(*rec.nextDose == 1);

    DesignSpec j = d;
    j.method = DesignMethod::Joint9d;
    TrialEngine je(j);
    CHECK_THROWS_AS(je.submit({0, {0, 0, 0}, {}}), DomainError);
    CHECK_NOTHROW(je.submit({0, {0, 0, 0}, {Biomarker{}, Biomarker{}, Biomarker{}}}));

    DesignSpec bad = d;
    bad.initialK = 0;
    CHECK_THROWS_AS(TrialEngine{bad}, DomainError);
}

TEST_CASE("three DLTs in the first cohort stop the trial") {
    TrialEngine e(DesignSpec{});
    const auto& rec = e.submit({0, {1, 1, 1}, {}});
    CHECK(e.state().stage == Stage::StoppedToxic);
    CHECK(rec.stopPosterior == doctest::Approx(0.9919).epsilon(1e-4));
    CHECK_FALSE(rec.nextDose);
    CHECK_FALSE(e.state().recommendation);
    CHECK_THROWS_AS(e.submit({0, {0, 0, 0}, {}}), DomainError);
}

TEST_CASE("a trial that never leaves Stage 1 is still fitted at the end") {
    DesignSpec d;
    d.maxCohorts = 4;
    d.initialK = 1;
    TrialEngine e(d);
    for (int c = 0; c < 4; ++c) e.submit({e.next_dose(), {0, 0, 0}, {}});
    CHECK(e.state().stage == Stage::Completed);
    REQUIRE(e.state().finalFit);
    CHECK(e.state().initialCohorts == 4);
    CHECK(e.state().recommendation);
}

TEST_CASE("gate, no-skipping and trial length over random streams") {
    const auto scen = standard_scenarios();
    GenerationParams gen;
    for (int k = 1; k <= 4; ++k) {
        for (auto method : {DesignMethod::Probit, DesignMethod::Empiric, DesignMethod::Probit1}) {
            DesignSpec d;
            d.method = method;
            d.initialK = k;
            const auto labels = d.dose_labels();
            for (std::size_t s = 0; s < scen.size(); ++s) {
                for (std::size_t rep = 0; rep < 15; ++rep) {
                    const auto r = run_trial(d, stream(scen[s], gen, labels, 99, s, rep));
                    CHECK(r.cohorts <= d.maxCohorts);
                    if (!r.stopped) CHECK(r.cohorts == d.maxCohorts);
                    CHECK(r.log.front().cohort.dose == 0);

                    int tox = 0, non = 0, gateAt = 0;
                    for (const auto& c : r.log) {
                        for (int y : c.cohort.toxic) (y ? tox : non) += 1;
                        if (gateAt == 0 && tox >= k && non >= k) gateAt = c.cohortIndex;
                    }
                    if (gateAt > 0 && !(r.stopped && gateAt == r.cohorts)) {
                        CHECK(r.initialCohorts == gateAt);
                    }
                    for (const auto& c : r.log) {
                        CHECK((c.stage == Stage::Initial) == (c.cohortIndex <= r.initialCohorts));
                    }

                    std::size_t highest = 0;
                    for (std::size_t c = 0; c + 1 < r.log.size(); ++c) {
                        highest = std::max(highest, r.log[c].cohort.dose);
                        CHECK(r.log[c + 1].cohort.dose <= highest + 1);
                    }
                }
            }
        }
    }
}

TEST_CASE("Stage-1 path does not depend on the method") {
    const auto scen = standard_scenarios();
    GenerationParams gen;
    for (int k : {1, 3}) {
        for (std::size_t s : {0u, 2u, 4u}) {
            for (std::size_t rep = 0; rep < 4; ++rep) {
                std::vector<std::vector<std::size_t>> paths;
                std::vector<int> initial;
                for (auto m : {DesignMethod::Probit, DesignMethod::Joint2d, DesignMethod::Joint9d, DesignMethod::Empiric,
                               DesignMethod::Probit1}) {
                    DesignSpec d;
                    d.method = m;
                    d.initialK = k;
                    d.maxCohorts = 12;
                    const auto r = run_trial(d, stream(scen[s], gen, d.dose_labels(), 5, s, rep));
                    auto p = dose_path(r);
                    p.resize(static_cast<std::size_t>(r.initialCohorts));
                    paths.push_back(p);
                    initial.push_back(r.initialCohorts);
                }
                for (std::size_t i = 1; i < paths.size(); ++i) {
                    CHECK(paths[i] == paths[0]);
                    CHECK(initial[i] == initial[0]);
                }
            }
        }
    }
}

TEST_CASE("batch and step-by-step conduct agree") {
    const auto s = standard_scenarios()[3];
    DesignSpec d;
    d.method = DesignMethod::Joint2d;
    d.initialK = 2;
    const auto src = stream(s, {}, d.dose_labels(), 17, 3, 0);
    const auto batch = run_trial(d, src);

    TrialEngine e(d);
    std::size_t patient = 0;
    while (!e.finished()) {
        Cohort c;
        c.dose = e.next_dose();
        for (int i = 0; i < d.cohortSize; ++i) {
            const auto p = src(patient++);
            c.toxic.push_back(p.toxic[c.dose]);
            c.biomarker.push_back(p.biomarker[c.dose]);
        }
        e.submit(c);
    }
    CHECK(e.state().recommendation == batch.recommendation);
    REQUIRE(e.state().history.size() == batch.log.size());
    for (std::size_t c = 0; c < batch.log.size(); ++c) CHECK(e.state().history[c].cohort.dose == batch.log[c].cohort.dose);
    CHECK(e.state().finalFit->curve == batch.finalFit->curve);
}

TEST_CASE("hypothetical-trial replays on a pinned profile stream") {
    // S5 with a pure-noise biomarker. Stage 1 of this stream: no DLT at d1,
    // then one DLT at d2; under Initial3 the path is d1 d2 d2 d3 d3 d4 d5 with
    // DLTs in cohorts 2, 4 and 7.
    const auto s = standard_scenarios()[4];
    const GenerationParams gen;
    DesignSpec probit;
    probit.initialK = 1;
    const auto src = stream(s, gen, probit.dose_labels(), 1, 4, 15377);

    SUBCASE("Probit, Initial1: anchored at d2 with separation") {
        const auto r = run_trial(probit, src);
        REQUIRE_FALSE(r.stopped);
        CHECK(r.initialCohorts == 2);
        CHECK(r.log[0].cohort.toxic == std::vector<int>{0, 0, 0});
        CHECK(std::count(r.log[1].cohort.toxic.begin(), r.log[1].cohort.toxic.end(), 1) == 1);
        for (std::size_t c = 1; c < r.log.size(); ++c) CHECK(r.log[c].cohort.dose == 1);
        CHECK(*r.recommendation == 1);
        CHECK(r.finalFit->diagnostics.separation);
        // step function from the first model fit onward
        REQUIRE(r.log[1].fit);
        for (std::size_t j = 2; j < 5; ++j) CHECK(r.log[1].fit->curve[j] >= 1 - 1e-4);
        CHECK(r.finalFit->curve[0] <= 1e-4);
        CHECK(r.finalFit->curve[2] > 0.5);
        for (std::size_t j = 3; j < 5; ++j) CHECK(r.finalFit->curve[j] >= 1 - 1e-4);
    }
    SUBCASE("Joint2d, Initial1: mirrors Probit") {
        DesignSpec d = probit;
        d.method = DesignMethod::Joint2d;
        const auto r = run_trial(d, src);
        for (std::size_t c = 1; c < r.log.size(); ++c) CHECK(r.log[c].cohort.dose == 1);
        CHECK(*r.recommendation == 1);
    }
    SUBCASE("Joint9d, Initial1: escalates from cohort 3 and ends at d5") {
        DesignSpec d = probit;
        d.method = DesignMethod::Joint9d;
        const auto r = run_trial(d, src);
        CHECK(r.initialCohorts == 2);
        CHECK(r.log[2].cohort.dose == 2);
        CHECK(*r.recommendation == 4);
    }
    SUBCASE("Initial3 resolves the anchoring for every method") {
        for (auto m : {DesignMethod::Probit, DesignMethod::Joint2d, DesignMethod::Joint9d}) {
            DesignSpec d = probit;
            d.method = m;
            d.initialK = 3;
            const auto r = run_trial(d, src);
            CHECK(r.initialCohorts == 7);
            auto path = dose_path(r);
            path.resize(7);
            CHECK(path == std::vector<std::size_t>{0, 1, 1, 2, 2, 3, 4});
            CHECK(*r.recommendation == 4);
        }
    }
}
