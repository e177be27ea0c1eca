#include "doctest.h"

#include "jointcrm/calibration.hpp"
#include "jointcrm/errors.hpp"

#include <algorithm>
#include <cmath>

using namespace jcrm;

namespace {

DesignSpec probit_i3() {
    DesignSpec d;
    d.initialK = 3;
    return d;
}

std::vector<Scenario> two_scenarios() {
    const auto all = standard_scenarios();
    return {all[0], all[4]};
}

}  // namespace

TEST_CASE("geometric mean") {
    CHECK(geometric_mean({0.8, 0.2}) == doctest::Approx(0.4));
    CHECK(geometric_mean({0.8, 0.2}) < 0.5);
    CHECK(geometric_mean({0.3, 0.6, 0.9}) == doctest::Approx(geometric_mean({0.9, 0.3, 0.6})));
    CHECK(geometric_mean({0.7, 0.0, 0.9}) == 0.0);
    CHECK(geometric_mean({0.5}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(geometric_mean({}), DomainError);
    CHECK_THROWS_AS(geometric_mean({0.5, -0.1}), DomainError);
}

TEST_CASE("labels reproduce the skeleton at the initial guess") {
    const Skeleton sk = transform_skeleton(default_skeleton(), -2.0, 0.4);
    for (const WorkingModel m : {WorkingModel{ModelKind::Probit2, 0.0}, WorkingModel{ModelKind::Probit1, 3.0}}) {
        const ToxicityParams at{0.7, -0.3};
        const auto curve = toxicity_curve(m, at, labels_at(sk, m, at));
        for (std::size_t j = 0; j < sk.size(); ++j) CHECK(curve[j] == doctest::Approx(sk[j]).epsilon(1e-10));
    }
    CHECK_THROWS_AS(labels_at(sk, {ModelKind::Empiric, 0.0}, {}), DomainError);
}

TEST_CASE("calibrated start maps the shifted labels back onto the design skeleton") {
    const WorkingModel m{ModelKind::Probit2, 0.0};
    const Skeleton p0 = default_skeleton();
    for (double off : {-6.0, -2.5, 0.0}) {
        for (double sc : {0.05, 0.35, 1.0}) {
            const ToxicityParams guess{0.2, 0.1};
            const auto labels = labels_at(transform_skeleton(p0, off, sc), m, guess);
            const auto curve = toxicity_curve(m, calibrated_start(m, guess, off, sc), labels);
            for (std::size_t j = 0; j < p0.size(); ++j) CHECK(curve[j] == doctest::Approx(p0[j]).epsilon(1e-8));
        }
    }
    const ToxicityParams g{0.0, 0.4};
    const auto kept = calibrated_start({ModelKind::Probit1, 3.0}, g, -1.0, 0.5);
    CHECK(kept.b1 == g.b1);
}

TEST_CASE("one-cell grid returns that cell") {
    CalibrationGrid g;
    g.offsetMin = g.offsetMax = -1.0;
    g.scaleMin = g.scaleMax = 0.5;
    g.refinementRounds = 0;
    g.replicationsPerCell = 100;
    const auto scen = two_scenarios();
    const DesignSpec d = probit_i3();
    const GenerationParams gen;
    const auto r = calibrate(d, scen, gen, g, 11);
    REQUIRE(r.cells.size() == 1);
    CHECK(r.winner.offset == -1.0);
    CHECK(r.winner.scale == 0.5);
    CHECK(r.objective == doctest::Approx(geometric_mean(r.perScenarioPCS)));
    const auto expected = labels_at(transform_skeleton(d.skeleton, -1.0, 0.5), d.working_model(), {});
    for (std::size_t j = 0; j < expected.size(); ++j) CHECK(r.labels[j] == doctest::Approx(expected[j]));

    // the reported PCS is what the calibrated design achieves on the same seed
    const NamedDesign nd{"cal", calibrated_design(d, r)};
    for (std::size_t s = 0; s < scen.size(); ++s) {
        CHECK(run_cell(scen[s], s, nd, gen, 100, 11).oc.pcs == r.perScenarioPCS[s]);
    }
}

TEST_CASE("refinement never loses the best cell and labels are valid") {
    CalibrationGrid g;
    g.offsetMin = -2.0;
    g.offsetMax = 0.0;
    g.offsetStep = 2.0;
    g.scaleMin = 0.5;
    g.scaleMax = 1.0;
    g.scaleStep = 0.5;
    g.refinementRounds = 1;
    g.refinementHalfWidth = 1;
    g.replicationsPerCell = 100;
    const auto r = calibrate(probit_i3(), two_scenarios(), GenerationParams{}, g, 5);
    REQUIRE(r.bestByRound.size() == 2);
    CHECK(r.bestByRound[1] >= r.bestByRound[0]);
    CHECK(r.cells.size() == 4 + 8);  // the winner is not re-evaluated
    const double best = std::max_element(r.cells.begin(), r.cells.end(), [](const auto& a, const auto& b) {
                            return a.objective < b.objective;
                        })->objective;
    CHECK(r.objective == best);
    for (std::size_t j = 0; j < r.labels.size(); ++j) {
        CHECK(std::isfinite(r.labels[j]));
        if (j > 0) CHECK(r.labels[j] > r.labels[j - 1]);
    }
    // same seed, same answer
    const auto again = calibrate(probit_i3(), two_scenarios(), GenerationParams{}, g, 5);
    CHECK(again.objective == r.objective);
    CHECK(again.winner.offset == r.winner.offset);
    CHECK(again.winner.scale == r.winner.scale);
}

TEST_CASE("invalid calibration requests") {
    CalibrationGrid g;
    DesignSpec emp;
    emp.method = DesignMethod::Empiric;
    CHECK_THROWS_AS(calibrate(emp, standard_scenarios(), GenerationParams{}, g, 1), DomainError);
    g.replicationsPerCell = 99;
    CHECK_THROWS_AS(calibrate(probit_i3(), standard_scenarios(), GenerationParams{}, g, 1), DomainError);
    g.replicationsPerCell = 100;
    g.scaleMin = 0.0;
    CHECK_THROWS_AS(g.validate(), DomainError);
    CHECK_THROWS_AS(calibrate(probit_i3(), {}, GenerationParams{}, CalibrationGrid{}, 1), DomainError);
}
