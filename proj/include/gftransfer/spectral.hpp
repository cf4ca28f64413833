#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gftransfer/error.hpp"
#include "gftransfer/graph.hpp"

namespace gftransfer {

/// Eigenvalues below this magnitude are graph-frequency zero (DC).
inline constexpr double kZeroEigenvalueTol = 1e-9;

/// Ascending graph frequencies and the matching orthonormal eigenvectors
/// (column i pairs with eigenvalue i). The GFT is x_hat = U^T x.
struct SpectralBasis {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    Index size() const { return eigenvalues.size(); }
    double max_eigenvalue() const { return eigenvalues.size() == 0 ? 0.0 : eigenvalues(eigenvalues.size() - 1); }
};

/// Eigendecomposition of a symmetric (Laplacian) matrix with a reproducible
/// ordering: stable ascending sort, near-zero eigenvalues snapped to 0, and
/// each eigenvector's first entry above 1e-9 in magnitude made positive.
inline SpectralBasis spectral_decompose(const Eigen::MatrixXd& laplacian) {
    require(laplacian.rows() == laplacian.cols(), ErrorCode::DimensionMismatch, "matrix is not square");
    const Index n = laplacian.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    require(solver.info() == Eigen::Success, ErrorCode::DecompositionFailure, "eigen solver did not converge");

    const Eigen::VectorXd& raw_values = solver.eigenvalues();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return raw_values(a) < raw_values(b); });

    SpectralBasis basis{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (Index c = 0; c < n; ++c) {
        const Index src = order[static_cast<std::size_t>(c)];
        double value = raw_values(src);
        if (std::abs(value) < kZeroEigenvalueTol) value = 0.0;
        basis.eigenvalues(c) = value;
        basis.eigenvectors.col(c) = solver.eigenvectors().col(src);
        for (Index r = 0; r < n; ++r) {
            const double entry = basis.eigenvectors(r, c);
            if (std::abs(entry) > kZeroEigenvalueTol) {
                if (entry < 0.0) basis.eigenvectors.col(c) *= -1.0;
                break;
            }
        }
    }
    return basis;
}

inline SpectralBasis spectral_decompose(const Graph& g) { return spectral_decompose(g.laplacian()); }

/// x_hat = U^T x. Works column-wise on a batch of signals.
inline Eigen::MatrixXd gft(const SpectralBasis& basis, const Eigen::MatrixXd& signals) {
    require(signals.rows() == basis.size(), ErrorCode::DimensionMismatch, "signal length != graph size");
    return basis.eigenvectors.transpose() * signals;
}

inline Eigen::VectorXd gft(const SpectralBasis& basis, const Eigen::VectorXd& x) {
    require(x.size() == basis.size(), ErrorCode::DimensionMismatch, "signal length != graph size");
    return basis.eigenvectors.transpose() * x;
}

/// x = U x_hat.
inline Eigen::MatrixXd igft(const SpectralBasis& basis, const Eigen::MatrixXd& spectra) {
    require(spectra.rows() == basis.size(), ErrorCode::DimensionMismatch, "spectrum length != graph size");
    return basis.eigenvectors * spectra;
}

inline Eigen::VectorXd igft(const SpectralBasis& basis, const Eigen::VectorXd& spectrum) {
    require(spectrum.size() == basis.size(), ErrorCode::DimensionMismatch, "spectrum length != graph size");
    return basis.eigenvectors * spectrum;
}

}  // namespace gftransfer
