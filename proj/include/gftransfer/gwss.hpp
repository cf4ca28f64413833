#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "gftransfer/error.hpp"
#include "gftransfer/random.hpp"
#include "gftransfer/spectral.hpp"

namespace gftransfer {

/// Graph wide-sense stationary signal model: x ~ N(mean, U diag(psd) U^T).
struct GwssModel {
    SpectralBasis basis;
    Eigen::VectorXd mean;
    Eigen::VectorXd psd;

    Index size() const { return basis.size(); }
};

inline GwssModel make_gwss_model(SpectralBasis basis, Eigen::VectorXd psd, Eigen::VectorXd mean = {}) {
    const Index n = basis.size();
    if (mean.size() == 0) mean = Eigen::VectorXd::Zero(n);
    require(psd.size() == n && mean.size() == n, ErrorCode::DimensionMismatch, "psd/mean length != graph size");
    require(psd.allFinite() && (psd.array() >= 0.0).all(), ErrorCode::InvalidArgument, "psd must be finite and >= 0");
    require(mean.allFinite(), ErrorCode::InvalidArgument, "mean must be finite");
    return {std::move(basis), std::move(mean), std::move(psd)};
}

/// Low-pass profile p_i = 1 - lambda_i / lambda_max.
inline Eigen::VectorXd psd_historical(const SpectralBasis& basis) {
    const double lmax = basis.max_eigenvalue();
    require(lmax > 0.0, ErrorCode::ZeroSpectrum, "largest eigenvalue is zero (edgeless graph)");
    Eigen::VectorXd p = (1.0 - basis.eigenvalues.array() / lmax).matrix();
    return p.cwiseMax(0.0).cwiseMin(1.0);
}

/// Inverse-frequency profile p_i = 1 / lambda_i, with p_i = 0 on every
/// eigenvalue below 1e-9 (the Laplacian null space).
inline Eigen::VectorXd psd_current(const SpectralBasis& basis) {
    Eigen::VectorXd p(basis.size());
    for (Index i = 0; i < basis.size(); ++i) {
        const double lambda = basis.eigenvalues(i);
        p(i) = lambda > kZeroEigenvalueTol ? 1.0 / lambda : 0.0;
    }
    return p;
}

inline Eigen::MatrixXd spectral_covariance(const SpectralBasis& basis, const Eigen::VectorXd& psd) {
    require(psd.size() == basis.size(), ErrorCode::DimensionMismatch, "psd length != graph size");
    const Eigen::MatrixXd& u = basis.eigenvectors;
    Eigen::MatrixXd cov = u * psd.asDiagonal() * u.transpose();
    return 0.5 * (cov + cov.transpose());
}

inline Eigen::MatrixXd covariance(const GwssModel& model) { return spectral_covariance(model.basis, model.psd); }

/// K i.i.d. draws as columns, x = mean + U diag(sqrt(p)) z with z ~ N(0, I).
inline Eigen::MatrixXd sample(const GwssModel& model, Index count, Rng& rng) {
    require(count >= 1, ErrorCode::InvalidArgument, "sample count must be >= 1");
    const Index n = model.size();
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(n, count);
    for (Index k = 0; k < count; ++k)
        for (Index i = 0; i < n; ++i) z(i, k) = normal(rng);
    const Eigen::MatrixXd factor = model.basis.eigenvectors * model.psd.cwiseSqrt().asDiagonal();
    Eigen::MatrixXd x = factor * z;
    x.colwise() += model.mean;
    return x;
}

}  // namespace gftransfer
