#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gftransfer/error.hpp"
#include "gftransfer/random.hpp"
#include "gftransfer/spectral.hpp"

namespace gftransfer {

/// Gaussian kernels phi_l(y) = exp(-||y - c_l||^2 / (2 sigma^2)). Centers are
/// stored as the columns of a d x b matrix.
struct KernelBasis {
    Eigen::MatrixXd centers;
    double bandwidth = 1.0;

    Index dimension() const { return centers.rows(); }
    Index size() const { return centers.cols(); }

    /// K x b feature matrix for samples stored as columns of `y` (d x K).
    Eigen::MatrixXd features(const Eigen::MatrixXd& y) const {
        require(y.rows() == dimension(), ErrorCode::DimensionMismatch,
                "sample dimension " + std::to_string(y.rows()) + " != basis dimension " + std::to_string(dimension()));
        const Eigen::VectorXd y_sq = y.colwise().squaredNorm().transpose();
        const Eigen::RowVectorXd c_sq = centers.colwise().squaredNorm();
        Eigen::MatrixXd d2 = -2.0 * (y.transpose() * centers);
        d2.colwise() += y_sq;
        d2.rowwise() += c_sq;
        const double scale = -0.5 / (bandwidth * bandwidth);
        return (d2.cwiseMax(0.0) * scale).array().exp().matrix();
    }

    Eigen::VectorXd features(const Eigen::VectorXd& y) const {
        return features(Eigen::MatrixXd(y)).row(0).transpose();
    }
};

struct RatioConfig {
    Index max_centers = 100;
    std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0};
    int folds = 5;
    /// Cap on the points entering the median-distance bandwidth rule; larger
    /// sets are thinned by an even stride.
    Index median_max_points = 1000;
    /// Median over pooled historical and current samples (true) or over the
    /// centers only (false).
    bool pooled_bandwidth = true;
};

namespace detail {

/// Median of all pairwise Euclidean distances between columns of `points`.
inline double median_pairwise_distance(const Eigen::MatrixXd& points) {
    const Index k = points.cols();
    if (k < 2) return 0.0;
    const Eigen::VectorXd sq = points.colwise().squaredNorm().transpose();
    const Eigen::MatrixXd gram = points.transpose() * points;
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(k * (k - 1) / 2));
    for (Index j = 1; j < k; ++j)
        for (Index i = 0; i < j; ++i) dist.push_back(std::sqrt(std::max(0.0, sq(i) + sq(j) - 2.0 * gram(i, j))));
    const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    if (dist.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(dist.begin(), mid);
    return 0.5 * (lower + upper);
}

inline Eigen::MatrixXd stride_columns(const Eigen::MatrixXd& a, Index max_cols) {
    if (max_cols <= 0 || a.cols() <= max_cols) return a;
    Eigen::MatrixXd out(a.rows(), max_cols);
    for (Index j = 0; j < max_cols; ++j) out.col(j) = a.col(j * a.cols() / max_cols);
    return out;
}

}  // namespace detail

/// Centers are min(max_centers, K_c) current samples drawn without
/// replacement. The bandwidth is the median pairwise distance over the pooled
/// historical and current samples when `y_hist` is given, otherwise over the
/// centers; a zero median falls back to 1.
inline KernelBasis build_basis(const Eigen::MatrixXd& y_curr, const RatioConfig& cfg, Rng& rng,
                               const std::optional<Eigen::MatrixXd>& y_hist = std::nullopt) {
    require(y_curr.cols() >= 1, ErrorCode::EmptySampleSet, "no current samples");
    require(cfg.max_centers >= 1, ErrorCode::InvalidArgument, "max_centers must be >= 1");
    const auto picks = sample_without_replacement(static_cast<std::size_t>(y_curr.cols()),
                                                  static_cast<std::size_t>(cfg.max_centers), rng);
    KernelBasis basis;
    basis.centers.resize(y_curr.rows(), static_cast<Index>(picks.size()));
    for (std::size_t j = 0; j < picks.size(); ++j) basis.centers.col(static_cast<Index>(j)) = y_curr.col(static_cast<Index>(picks[j]));

    double median = 0.0;
    if (y_hist && cfg.pooled_bandwidth) {
        require(y_hist->rows() == y_curr.rows(), ErrorCode::DimensionMismatch, "historical and current dimensions differ");
        const Index cap = cfg.median_max_points;
        Index cap_h = y_hist->cols();
        Index cap_c = y_curr.cols();
        if (cap > 0 && cap_h + cap_c > cap) {
            cap_h = std::max<Index>(1, cap * y_hist->cols() / (y_hist->cols() + y_curr.cols()));
            cap_c = std::max<Index>(1, cap - cap_h);
        }
        const Eigen::MatrixXd h = detail::stride_columns(*y_hist, cap_h);
        const Eigen::MatrixXd c = detail::stride_columns(y_curr, cap_c);
        Eigen::MatrixXd pooled(y_curr.rows(), h.cols() + c.cols());
        pooled << h, c;
        median = detail::median_pairwise_distance(pooled);
    } else {
        median = detail::median_pairwise_distance(basis.centers);
    }
    basis.bandwidth = (std::isfinite(median) && median > 0.0) ? median : 1.0;
    return basis;
}

struct DensityRatioModel {
    KernelBasis basis;
    Eigen::VectorXd theta;
    double reg_lambda = 0.0;
    /// Held-out objective for each grid value, in grid order.
    std::vector<double> cv_scores;
};

/// max(phi(y)^T theta, 0).
inline double eval_ratio(const DensityRatioModel& model, const Eigen::VectorXd& y) {
    return std::max(model.basis.features(y).dot(model.theta), 0.0);
}

/// Column-wise evaluation over a d x K sample matrix.
inline Eigen::VectorXd eval_ratio(const DensityRatioModel& model, const Eigen::MatrixXd& y) {
    return (model.basis.features(y) * model.theta).cwiseMax(0.0);
}

namespace detail {

inline Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& h_mat, const Eigen::VectorXd& h_vec, double lambda) {
    Eigen::MatrixXd a = h_mat;
    a.diagonal().array() += lambda;
    return a.llt().solve(h_vec);
}

}  // namespace detail

/// Least-squares ratio fit theta = (H + lambda I)^{-1} h with
/// H = mean phi(y_h) phi(y_h)^T and h = mean phi(y_c). lambda is picked from
/// the grid by k-fold cross-validation of 0.5 theta^T H theta - h^T theta
/// (folds assigned by sample index mod k; ties keep the earlier grid entry).
inline DensityRatioModel fit_ratio(const Eigen::MatrixXd& y_hist, const Eigen::MatrixXd& y_curr, const KernelBasis& basis,
                                   const std::vector<double>& lambda_grid, int folds = 5) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    require(y_hist.cols() >= 1 && y_curr.cols() >= 1, ErrorCode::EmptySampleSet, "ratio fit needs samples on both sides");
    require(y_hist.rows() == basis.dimension() && y_curr.rows() == basis.dimension(), ErrorCode::DimensionMismatch,
            "sample dimension != basis dimension");
    require(!lambda_grid.empty(), ErrorCode::InvalidArgument, "empty lambda grid");
    for (double l : lambda_grid)
        require(l > 0.0 && std::isfinite(l), ErrorCode::NonPositiveLambda, "lambda must be > 0, got " + std::to_string(l));
    require(basis.bandwidth > 0.0, ErrorCode::InvalidArgument, "bandwidth must be > 0");

    const MatrixXd phi_h = basis.features(y_hist);
    const MatrixXd phi_c = basis.features(y_curr);
    const Index kh = phi_h.rows();
    const Index kc = phi_c.rows();
    const Index b = basis.size();

    DensityRatioModel model;
    model.basis = basis;
    const MatrixXd h_all = phi_h.transpose() * phi_h;
    const VectorXd c_all = phi_c.colwise().sum().transpose();

    std::size_t best = lambda_grid.size() - 1;
    if (folds >= 2 && kh >= folds && kc >= folds) {
        std::vector<MatrixXd> h_fold(static_cast<std::size_t>(folds), MatrixXd::Zero(b, b));
        std::vector<VectorXd> c_fold(static_cast<std::size_t>(folds), VectorXd::Zero(b));
        std::vector<Index> nh(static_cast<std::size_t>(folds), 0);
        std::vector<Index> nc(static_cast<std::size_t>(folds), 0);
        for (int f = 0; f < folds; ++f) {
            const auto fi = static_cast<std::size_t>(f);
            MatrixXd rows((kh - f + folds - 1) / folds, b);
            for (Index k = f, r = 0; k < kh; k += folds, ++r) rows.row(r) = phi_h.row(k);
            h_fold[fi] = rows.transpose() * rows;
            nh[fi] = rows.rows();
            for (Index k = f; k < kc; k += folds) {
                c_fold[fi] += phi_c.row(k).transpose();
                ++nc[fi];
            }
        }
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
            double score = 0.0;
            for (int f = 0; f < folds; ++f) {
                const auto fi = static_cast<std::size_t>(f);
                const MatrixXd h_train = (h_all - h_fold[fi]) / static_cast<double>(kh - nh[fi]);
                const VectorXd c_train = (c_all - c_fold[fi]) / static_cast<double>(kc - nc[fi]);
                const VectorXd theta = detail::ridge_solve(h_train, c_train, lambda_grid[g]);
                const MatrixXd h_test = h_fold[fi] / static_cast<double>(nh[fi]);
                const VectorXd c_test = c_fold[fi] / static_cast<double>(nc[fi]);
                score += 0.5 * theta.dot(h_test * theta) - c_test.dot(theta);
            }
            score /= folds;
            model.cv_scores.push_back(score);
            if (score < best_score) {
                best_score = score;
                best = g;
            }
        }
    }
    model.reg_lambda = lambda_grid[best];
    model.theta = detail::ridge_solve(h_all / static_cast<double>(kh), c_all / static_cast<double>(kc), model.reg_lambda);
    require(model.theta.allFinite(), ErrorCode::SingularSystem, "ratio system produced non-finite weights");
    return model;
}

inline DensityRatioModel fit_ratio(const Eigen::MatrixXd& y_hist, const Eigen::MatrixXd& y_curr, const KernelBasis& basis,
                                   const RatioConfig& cfg) {
    return fit_ratio(y_hist, y_curr, basis, cfg.lambda_grid, cfg.folds);
}

/// Exact q_c(y) / q_h(y) for two multivariate normals, via log-densities.
inline double gaussian_ratio_oracle(const Eigen::MatrixXd& cov_h, const Eigen::MatrixXd& cov_c,
                                    const Eigen::VectorXd& mean_h, const Eigen::VectorXd& mean_c,
                                    const Eigen::VectorXd& y) {
    const Index d = y.size();
    require(cov_h.rows() == d && cov_h.cols() == d && cov_c.rows() == d && cov_c.cols() == d && mean_h.size() == d &&
                mean_c.size() == d,
            ErrorCode::DimensionMismatch, "oracle operand sizes differ");
    auto log_density = [&](const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean) {
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        require(llt.info() == Eigen::Success && (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all(),
                ErrorCode::SingularCovariance, "covariance is not positive definite");
        const Eigen::VectorXd white = llt.matrixL().solve(y - mean);
        const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        return -0.5 * (white.squaredNorm() + log_det + static_cast<double>(d) * std::log(2.0 * std::numbers::pi));
    };
    return std::exp(log_density(cov_c, mean_c) - log_density(cov_h, mean_h));
}

}  // namespace gftransfer
