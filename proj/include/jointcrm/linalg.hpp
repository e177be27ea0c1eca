#pragma once

#include "jointcrm/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace jcrm {

/// Symmetric covariance matrix. Construction checks symmetry (to 1e-12,
/// relative to the largest entry); positive definiteness is established
/// only by cholesky().
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(Eigen::MatrixXd m);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const Eigen::MatrixXd& matrix() const noexcept { return m_; }

private:
    Eigen::MatrixXd m_;
};

/// Lower-triangular L with L L^T = m. Throws NotPositiveDefinite.
Eigen::MatrixXd cholesky(const CovarianceMatrix& m);

struct ConditionalGaussian {
    Eigen::VectorXd coefficients;  // regression weights on the conditioning block
    double variance;               // Schur complement of the conditioning block
};

/// Distribution of coordinate `target` given the coordinates in `given`:
/// coefficients = S_tg S_gg^{-1}, variance = S_tt - S_tg S_gg^{-1} S_gt.
ConditionalGaussian condition_gaussian(const CovarianceMatrix& cov, std::size_t target,
                                       std::span<const std::size_t> given);

/// One draw from N(mean, cov).
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const CovarianceMatrix& cov,
                           RngStream& rng);

/// Factor once, draw many.
class MvnSampler {
public:
    MvnSampler(Eigen::VectorXd mean, const CovarianceMatrix& cov);
    Eigen::VectorXd draw(RngStream& rng) const;
    std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd lower_;
};

}  // namespace jcrm
