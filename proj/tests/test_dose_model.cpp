#include "doctest.h"

#include "jointcrm/dose_model.hpp"
#include "jointcrm/errors.hpp"
#include "jointcrm/normal.hpp"
#include "jointcrm/rng.hpp"

#include <cmath>
#include <vector>

using namespace jcrm;

namespace {

double bisect_quantile(double p) {
    double lo = -20.0, hi = 20.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("backward-fitted labels") {
    const Skeleton sk = default_skeleton();

    const auto emp = backward_fit_labels(sk, {ModelKind::Empiric, 0.0});
    for (std::size_t j = 0; j < sk.size(); ++j) CHECK(emp[j] == sk[j]);

    const auto p2 = backward_fit_labels(sk, {ModelKind::Probit2, 0.0});
    const double expected[] = {-0.6745, -0.3853, -0.1257, 0.1257, 0.3853};
    for (std::size_t j = 0; j < sk.size(); ++j) {
        CHECK(std::abs(p2[j] - bisect_quantile(sk[j])) < 1e-10);
        CHECK(std::abs(p2[j] - expected[j]) < 5e-5);
    }

    const auto p1 = backward_fit_labels(sk, {ModelKind::Probit1, 0.5});
    for (std::size_t j = 0; j < sk.size(); ++j) CHECK(p1[j] == doctest::Approx(p2[j] - 0.5).epsilon(1e-14));
}

TEST_CASE("label round trip for every model kind") {
    const Skeleton sk({0.02, 0.1, 0.33, 0.6, 0.97});
    for (auto model : {WorkingModel{ModelKind::Empiric, 0}, WorkingModel{ModelKind::Probit1, 3.0},
                       WorkingModel{ModelKind::Probit1, 0.0}, WorkingModel{ModelKind::Probit2, 0}}) {
        const auto x = backward_fit_labels(sk, model);
        for (std::size_t j = 0; j < sk.size(); ++j) {
            CHECK(std::abs(toxicity_prob(model, {}, x[j]) - sk[j]) <= 1e-10);
            if (j > 0) CHECK(x[j] > x[j - 1]);
        }
    }
}

TEST_CASE("toxicity_prob") {
    CHECK(toxicity_prob({ModelKind::Probit2, 0}, {0.0, 0.0}, 0.0) == 0.5);
    for (double b1 : {-3.0, 0.0, 2.0}) {
        CHECK(std::abs(toxicity_prob({ModelKind::Probit1, 0.5}, {0.0, b1}, 0.0) - 0.691) < 5e-4);
    }
    CHECK(toxicity_prob({ModelKind::Empiric, 0}, {0.0, 0.0}, 0.25) == doctest::Approx(0.25));
    CHECK_THROWS_AS(toxicity_prob({ModelKind::Empiric, 0}, {}, 1.5), DomainError);

    RngStream rng(3, 3);
    for (int rep = 0; rep < 200; ++rep) {
        const ToxicityParams p{4 * rng.normal(), 2 * rng.normal()};
        for (auto kind : {ModelKind::Probit1, ModelKind::Probit2}) {
            double prev = -1.0;
            for (double x = -3.0; x <= 3.0; x += 0.25) {
                const double v = toxicity_prob({kind, 1.0}, p, x);
                CHECK(v >= prev);
                prev = v;
            }
        }
    }
}

TEST_CASE("Probit1 reference dose splits the curve at label zero") {
    RngStream rng(8, 1);
    for (double a0 : {0.0, 0.5, 1.0, 3.0, 5.0}) {
        const WorkingModel m{ModelKind::Probit1, a0};
        const auto x = backward_fit_labels(default_skeleton(), m);
        for (int rep = 0; rep < 50; ++rep) {
            const ToxicityParams p{0.0, 3.0 * rng.normal()};
            for (std::size_t j = 0; j < x.size(); ++j) {
                CHECK((toxicity_prob(m, p, x[j]) < normal_cdf(a0)) == (x[j] < 0.0));
            }
        }
    }
}

TEST_CASE("select_target") {
    const std::vector<double> a{0.1, 0.3, 0.5, 0.7, 0.9};
    CHECK(select_target(a, 0.3) == 1);
    const std::vector<double> tie{0.2, 0.4, 0.6, 0.8, 0.9};
    CHECK(select_target(tie, 0.3) == 0);
    const std::vector<double> step{0.1, 0.1, 1.0, 1.0, 1.0};
    CHECK(select_target(step, 0.3) == 0);
    const std::vector<double> anchored{0.05, 0.12, 1.0, 1.0, 1.0};
    CHECK(select_target(anchored, 0.3) == 1);
    const std::vector<double> flat(5, 0.6);
    CHECK(select_target(flat, 0.3) == 0);
}

TEST_CASE("select_target commutes with curve-preserving re-indexing") {
    RngStream rng(12, 0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> curve(5);
        for (auto& c : curve) c = rng.uniform();
        std::vector<std::size_t> perm{0, 1, 2, 3, 4};
        for (std::size_t i = 4; i > 0; --i) std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);
        std::vector<double> permuted(5);
        for (std::size_t i = 0; i < 5; ++i) permuted[i] = curve[perm[i]];
        const double phi = rng.uniform();
        CHECK(curve[select_target(curve, phi)] == permuted[select_target(permuted, phi)]);
    }
}

TEST_CASE("skeleton validation and transform") {
    CHECK_THROWS_AS(Skeleton({0.3, 0.2}), DomainError);
    CHECK_THROWS_AS(Skeleton({0.0, 0.2}), DomainError);
    CHECK_THROWS_AS(DoseLabels({1.0, 1.0}), DomainError);
    const auto t = transform_skeleton(default_skeleton(), 0.0, 1.0);
    for (std::size_t j = 0; j < 5; ++j) CHECK(t[j] == doctest::Approx(default_skeleton()[j]).epsilon(1e-12));
    const auto far = transform_skeleton(default_skeleton(), -6.0, 0.05);
    const auto x = backward_fit_labels(far, {ModelKind::Probit2, 0});
    CHECK(x[0] == doctest::Approx(-6.0 + 0.05 * normal_quantile(0.25)).epsilon(1e-9));
}
