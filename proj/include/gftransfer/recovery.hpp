#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gftransfer/error.hpp"
#include "gftransfer/graph.hpp"
#include "gftransfer/random.hpp"

namespace gftransfer {

/// y = M x + eps with M the row selection of `observed()` and eps ~ N(0, noise_std^2 I).
class ObservationModel {
public:
    ObservationModel(Index n, std::vector<Index> observed, double noise_std = 0.0)
        : n_(n), observed_(std::move(observed)), noise_std_(noise_std) {
        require(!observed_.empty(), ErrorCode::InvalidArgument, "at least one node must be observed");
        require(noise_std_ >= 0.0 && std::isfinite(noise_std_), ErrorCode::InvalidArgument, "noise_std must be >= 0");
        std::vector<char> seen(static_cast<std::size_t>(n_), 0);
        for (Index i : observed_) {
            require(i >= 0 && i < n_, ErrorCode::IndexOutOfRange, "observed node " + std::to_string(i) + " out of range");
            require(!seen[static_cast<std::size_t>(i)], ErrorCode::InvalidArgument, "observed nodes must be distinct");
            seen[static_cast<std::size_t>(i)] = 1;
        }
        position_.assign(static_cast<std::size_t>(n_), -1);
        for (std::size_t r = 0; r < observed_.size(); ++r) position_[static_cast<std::size_t>(observed_[r])] = static_cast<Index>(r);
    }

    Index signal_size() const { return n_; }
    Index observation_size() const { return static_cast<Index>(observed_.size()); }
    const std::vector<Index>& observed() const { return observed_; }
    double noise_std() const { return noise_std_; }
    bool is_observed(Index node) const { return position_[static_cast<std::size_t>(node)] >= 0; }
    /// Row of `node` in y, or -1 when missing.
    Index row_of(Index node) const { return position_[static_cast<std::size_t>(node)]; }

    ObservationModel with_noise(double noise_std) const { return ObservationModel(n_, observed_, noise_std); }

    Eigen::MatrixXd selection_matrix() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(observation_size(), n_);
        for (Index r = 0; r < observation_size(); ++r) m(r, observed_[static_cast<std::size_t>(r)]) = 1.0;
        return m;
    }

private:
    Index n_;
    std::vector<Index> observed_;
    double noise_std_;
    std::vector<Index> position_;
};

/// Each node independently missing with `missing_prob`; redrawn if nothing survives.
inline ObservationModel make_mask(Index n, double missing_prob, Rng& rng, double noise_std = 0.0) {
    require(missing_prob >= 0.0 && missing_prob < 1.0, ErrorCode::InvalidProbability, "missing_prob outside [0,1)");
    require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
    std::bernoulli_distribution missing(missing_prob);
    std::vector<Index> observed;
    while (observed.empty()) {
        for (Index i = 0; i < n; ++i)
            if (!missing(rng)) observed.push_back(i);
    }
    return ObservationModel(n, std::move(observed), noise_std);
}

/// Observes each column of `signals`.
inline Eigen::MatrixXd observe(const ObservationModel& m, const Eigen::MatrixXd& signals, Rng& rng) {
    require(signals.rows() == m.signal_size(), ErrorCode::DimensionMismatch, "signal length != mask size");
    Eigen::MatrixXd y(m.observation_size(), signals.cols());
    for (Index r = 0; r < m.observation_size(); ++r) y.row(r) = signals.row(m.observed()[static_cast<std::size_t>(r)]);
    if (m.noise_std() > 0.0) {
        std::normal_distribution<double> noise(0.0, m.noise_std());
        for (Index k = 0; k < y.cols(); ++k)
            for (Index r = 0; r < y.rows(); ++r) y(r, k) += noise(rng);
    }
    return y;
}

inline Eigen::VectorXd observe(const ObservationModel& m, const Eigen::VectorXd& x, Rng& rng) {
    return observe(m, Eigen::MatrixXd(x), rng).col(0);
}

struct LinearEstimator {
    Eigen::MatrixXd gain;    // N x d
    Eigen::VectorXd offset;  // N
};

/// Moore-Penrose inverse of a symmetric matrix; eigenvalues below
/// `rel_tol * max|eigenvalue|` are treated as zero.
inline Eigen::MatrixXd pseudo_inverse_symmetric(const Eigen::MatrixXd& a, double rel_tol = 1e-10) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    require(eig.info() == Eigen::Success, ErrorCode::SingularSystem, "eigen solver failed on inner matrix");
    const Eigen::VectorXd& values = eig.eigenvalues();
    const double cutoff = rel_tol * values.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(values.size());
    for (Index i = 0; i < values.size(); ++i)
        if (std::abs(values(i)) > cutoff) inv(i) = 1.0 / values(i);
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

/// LMMSE gain Q = S M^T (M S M^T [+ sigma^2 I])^+ and offset b = mu - Q M mu.
/// `include_noise = false` drops the noise term from the inner matrix.
inline LinearEstimator lmmse(const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean, const ObservationModel& m,
                             bool include_noise = true) {
    const Index n = m.signal_size();
    require(cov.rows() == n && cov.cols() == n, ErrorCode::DimensionMismatch, "covariance size != mask size");
    require(mean.size() == 0 || mean.size() == n, ErrorCode::DimensionMismatch, "mean length != mask size");
    require(cov.allFinite() && (mean.size() == 0 || mean.allFinite()), ErrorCode::SingularSystem,
            "non-finite covariance or mean");
    const Index d = m.observation_size();
    Eigen::MatrixXd cross(n, d);  // S M^T
    for (Index r = 0; r < d; ++r) cross.col(r) = cov.col(m.observed()[static_cast<std::size_t>(r)]);
    Eigen::MatrixXd inner(d, d);  // M S M^T
    for (Index r = 0; r < d; ++r) inner.row(r) = cross.row(m.observed()[static_cast<std::size_t>(r)]);
    if (include_noise) inner.diagonal().array() += m.noise_std() * m.noise_std();
    inner = 0.5 * (inner + inner.transpose());

    LinearEstimator est;
    if (inner.cwiseAbs().maxCoeff() == 0.0) {
        est.gain = Eigen::MatrixXd::Zero(n, d);
    } else {
        est.gain = cross * pseudo_inverse_symmetric(inner);
    }
    require(est.gain.allFinite(), ErrorCode::SingularSystem, "gain is not finite");
    if (mean.size() == 0) {
        est.offset = Eigen::VectorXd::Zero(n);
    } else {
        Eigen::VectorXd observed_mean(d);
        for (Index r = 0; r < d; ++r) observed_mean(r) = mean(m.observed()[static_cast<std::size_t>(r)]);
        est.offset = mean - est.gain * observed_mean;
    }
    return est;
}

/// x_hat = Q y + b, column-wise.
inline Eigen::MatrixXd recover(const LinearEstimator& est, const Eigen::MatrixXd& y) {
    require(y.rows() == est.gain.cols(), ErrorCode::DimensionMismatch, "observation length != estimator input size");
    Eigen::MatrixXd x = est.gain * y;
    x.colwise() += est.offset;
    return x;
}

inline Eigen::VectorXd recover(const LinearEstimator& est, const Eigen::VectorXd& y) {
    require(y.size() == est.gain.cols(), ErrorCode::DimensionMismatch, "observation length != estimator input size");
    return est.gain * y + est.offset;
}

/// (1/N) ||a - b||^2.
inline double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    require(a.size() == b.size() && a.size() > 0, ErrorCode::DimensionMismatch, "mse operands differ in length");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace gftransfer
