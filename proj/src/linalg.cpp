#include "jointcrm/linalg.hpp"

#include "jointcrm/errors.hpp"

#include <cmath>
#include <string>

namespace jcrm {

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols()) {
        throw DomainError("CovarianceMatrix: matrix must be square and non-empty");
    }
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw DomainError("CovarianceMatrix: matrix is not symmetric");
    }
}

Eigen::MatrixXd cholesky(const CovarianceMatrix& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m.matrix());
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("cholesky: matrix is not positive definite");
    }
    Eigen::MatrixXd lower = llt.matrixL();
    return lower;
}

ConditionalGaussian condition_gaussian(const CovarianceMatrix& cov, std::size_t target,
                                       std::span<const std::size_t> given) {
    const auto n = given.size();
    if (target >= cov.dim()) throw DomainError("condition_gaussian: target out of range");
    Eigen::MatrixXd gg(n, n);
    Eigen::VectorXd tg(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (given[i] >= cov.dim() || given[i] == target) {
            throw DomainError("condition_gaussian: invalid conditioning index");
        }
        tg(static_cast<Eigen::Index>(i)) = cov(target, given[i]);
        for (std::size_t j = 0; j < n; ++j) {
            gg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov(given[i], given[j]);
        }
    }
    if (n == 0) return {Eigen::VectorXd(0), cov(target, target)};

    // Whole-matrix positive definiteness is the precondition; checking it also
    // covers the conditioning block.
    Eigen::LLT<Eigen::MatrixXd> full(cov.matrix());
    if (full.info() != Eigen::Success) {
        throw NotPositiveDefinite("condition_gaussian: covariance is not positive definite");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gg);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("condition_gaussian: conditioning block is not positive definite");
    }
    Eigen::VectorXd coef = llt.solve(tg);
    const double var = cov(target, target) - tg.dot(coef);
    return {std::move(coef), var};
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const CovarianceMatrix& cov,
                           RngStream& rng) {
    return MvnSampler(mean, cov).draw(rng);
}

MvnSampler::MvnSampler(Eigen::VectorXd mean, const CovarianceMatrix& cov)
    : mean_(std::move(mean)), lower_(cholesky(cov)) {
    if (static_cast<std::size_t>(mean_.size()) != cov.dim()) {
        throw DomainError("MvnSampler: mean and covariance dimensions differ");
    }
}

Eigen::VectorXd MvnSampler::draw(RngStream& rng) const {
    Eigen::VectorXd z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return mean_ + lower_.triangularView<Eigen::Lower>() * z;
}

}  // namespace jcrm
