#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "gftransfer/detail/active_set_qp.hpp"
#include "gftransfer/error.hpp"
#include "gftransfer/gwss.hpp"
#include "gftransfer/spectral.hpp"

namespace gftransfer {

struct PsdEstimate {
    Eigen::VectorXd values;
    Index sample_count = 0;
    bool weighted = false;
};

namespace detail {

/// (1/K) sum_k w_k (spectra(:,k))^2. Shared by every PSD estimator so that unit
/// weights reproduce the unweighted estimate bit for bit.
inline Eigen::VectorXd weighted_power(const Eigen::MatrixXd& spectra, const Eigen::VectorXd& weights) {
    const Index k = spectra.cols();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(spectra.rows());
    for (Index c = 0; c < k; ++c) acc += weights(c) * spectra.col(c).cwiseAbs2();
    return acc / static_cast<double>(k);
}

inline void check_weights(const Eigen::VectorXd& weights, Index count) {
    require(weights.size() == count, ErrorCode::DimensionMismatch, "one weight per sample required");
    require(weights.allFinite(), ErrorCode::InvalidArgument, "weights must be finite");
    require((weights.array() >= 0.0).all(), ErrorCode::NegativeWeight, "weights must be >= 0");
}

}  // namespace detail

/// Periodogram-style estimate p_hat = (1/K) sum_k (U^T x_k)^2 over the columns of `signals`.
inline PsdEstimate nonparam_psd(const Eigen::MatrixXd& signals, const SpectralBasis& basis) {
    require(signals.cols() >= 1, ErrorCode::EmptySampleSet, "no samples");
    const Eigen::MatrixXd spectra = gft(basis, signals);
    return {detail::weighted_power(spectra, Eigen::VectorXd::Ones(signals.cols())), signals.cols(), false};
}

/// Importance-weighted variant: p_hat = (1/K) sum_k w_k (U^T x_k)^2.
inline PsdEstimate nonparam_psd(const Eigen::MatrixXd& signals, const SpectralBasis& basis,
                                const Eigen::VectorXd& weights) {
    require(signals.cols() >= 1, ErrorCode::EmptySampleSet, "no samples");
    detail::check_weights(weights, signals.cols());
    const Eigen::MatrixXd spectra = gft(basis, signals);
    return {detail::weighted_power(spectra, weights), signals.cols(), true};
}

/// ARMA graph filter f(lambda) = sum_l beta_l lambda^l / (1 + sum_m alpha_m lambda^m).
/// `alpha` holds alpha_1..alpha_M.
struct ArmaParams {
    Eigen::VectorXd beta;
    Eigen::VectorXd alpha;

    int numerator_order() const { return static_cast<int>(beta.size()) - 1; }
    int denominator_order() const { return static_cast<int>(alpha.size()); }
};

inline constexpr double kPoleTol = 1e-12;

inline double arma_numerator(const ArmaParams& p, double lambda) {
    double acc = 0.0;
    for (Index l = p.beta.size() - 1; l >= 0; --l) acc = acc * lambda + p.beta(l);
    return acc;
}

inline double arma_denominator(const ArmaParams& p, double lambda) {
    double acc = 0.0;
    for (Index m = p.alpha.size() - 1; m >= 0; --m) acc = (acc + p.alpha(m)) * lambda;
    return 1.0 + acc;
}

inline Eigen::VectorXd arma_eval(const Eigen::VectorXd& grid, const ArmaParams& params) {
    require(params.beta.size() >= 1, ErrorCode::InvalidArgument, "beta must have at least one coefficient");
    Eigen::VectorXd out(grid.size());
    for (Index i = 0; i < grid.size(); ++i) {
        const double den = arma_denominator(params, grid(i));
        require(std::abs(den) >= kPoleTol, ErrorCode::PoleOnGrid,
                "denominator vanishes at lambda = " + std::to_string(grid(i)));
        out(i) = arma_numerator(params, grid(i)) / den;
    }
    return out;
}

/// Phi1 (N x M): lambda^1..lambda^M. Phi2 (N x (L+1)): lambda^0..lambda^L.
struct Vandermonde {
    Eigen::MatrixXd phi1;
    Eigen::MatrixXd phi2;
};

inline Vandermonde vandermonde(const Eigen::VectorXd& grid, int num_order, int den_order) {
    require(num_order >= 0 && den_order >= 1, ErrorCode::InvalidArgument, "need L >= 0 and M >= 1");
    const Index n = grid.size();
    Vandermonde v{Eigen::MatrixXd(n, den_order), Eigen::MatrixXd(n, num_order + 1)};
    for (Index i = 0; i < n; ++i) {
        double power = 1.0;
        v.phi2(i, 0) = 1.0;
        for (int l = 1; l <= std::max(num_order, den_order); ++l) {
            power *= grid(i);
            if (l <= num_order) v.phi2(i, l) = power;
            if (l <= den_order) v.phi1(i, l - 1) = power;
        }
    }
    return v;
}

/// Symmetric PSD regularizers for alpha (M x M) and beta ((L+1) x (L+1)).
struct ArmaRegularization {
    Eigen::MatrixXd alpha;
    Eigen::MatrixXd beta;

    static ArmaRegularization ridge(int num_order, int den_order, double rho_alpha, double rho_beta) {
        return {rho_alpha * Eigen::MatrixXd::Identity(den_order, den_order),
                rho_beta * Eigen::MatrixXd::Identity(num_order + 1, num_order + 1)};
    }
};

struct ArmaFitOptions {
    int num_order = 5;  // L
    int den_order = 2;  // M
    double reg_alpha = 1e-6;
    double reg_beta = 1e-6;
    double tolerance = 1e-8;
    int max_iterations = 10000;
    /// Lower bound imposed on the denominator at every grid point.
    double den_floor = 0.0;
};

struct ArmaFit {
    ArmaParams params;
    double objective = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    bool converged = false;
    std::vector<double> objective_history;
};

/// Value of ||P(1 + Phi1 alpha) - Phi2 beta||^2 + alpha^T Ra alpha + beta^T Rb beta, P = diag(target).
inline double arma_fit_objective(const Eigen::VectorXd& target, const Eigen::VectorXd& grid, const ArmaParams& params,
                                 const ArmaRegularization& reg) {
    const Vandermonde v = vandermonde(grid, params.numerator_order(), params.denominator_order());
    const Eigen::VectorXd den = Eigen::VectorXd::Ones(grid.size()) + v.phi1 * params.alpha;
    const Eigen::VectorXd residual = target.cwiseProduct(den) - v.phi2 * params.beta;
    return residual.squaredNorm() + params.alpha.dot(reg.alpha * params.alpha) + params.beta.dot(reg.beta * params.beta);
}

/// Fits ARMA coefficients to `target` (a square-root PSD) on `grid` by the
/// linearized least-squares problem
///   min ||P(1 + Phi1 a) - Phi2 b||^2 + a^T Ra a + b^T Rb b
///   s.t. 1 + Phi1 a >= 0,  Phi2 b >= 0.
/// Powers of lambda are rescaled by the largest |lambda| internally; the
/// problem solved is the same, only better conditioned.
inline ArmaFit fit_arma(const Eigen::VectorXd& target, const Eigen::VectorXd& grid, const ArmaFitOptions& opts,
                        const ArmaRegularization& reg) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const int L = opts.num_order;
    const int M = opts.den_order;
    require(target.size() == grid.size() && grid.size() >= 1, ErrorCode::DimensionMismatch,
            "target and grid lengths differ");
    require(target.allFinite() && (target.array() >= 0.0).all(), ErrorCode::InvalidArgument,
            "target must be finite and >= 0");
    require(grid.allFinite(), ErrorCode::InvalidArgument, "grid must be finite");
    require(opts.den_floor >= 0.0 && opts.den_floor < 1.0, ErrorCode::InvalidArgument, "den_floor outside [0,1)");
    require(reg.alpha.rows() == M && reg.alpha.cols() == M && reg.beta.rows() == L + 1 && reg.beta.cols() == L + 1,
            ErrorCode::DimensionMismatch, "regularization sizes do not match orders");

    const double s = grid.cwiseAbs().maxCoeff() > 0.0 ? grid.cwiseAbs().maxCoeff() : 1.0;
    const Vandermonde v = vandermonde(grid / s, L, M);
    const Index n_var = M + L + 1;
    VectorXd unscale(n_var);  // original = unscale .* scaled
    for (int m = 0; m < M; ++m) unscale(m) = std::pow(s, -(m + 1));
    for (int l = 0; l <= L; ++l) unscale(M + l) = std::pow(s, -l);

    const Index n = grid.size();
    MatrixXd design(n, n_var);
    design.leftCols(M) = target.asDiagonal() * v.phi1;
    design.rightCols(L + 1) = -v.phi2;
    MatrixXd reg_full = MatrixXd::Zero(n_var, n_var);
    reg_full.topLeftCorner(M, M) = reg.alpha;
    reg_full.bottomRightCorner(L + 1, L + 1) = reg.beta;
    reg_full = unscale.asDiagonal() * reg_full * unscale.asDiagonal();

    Eigen::SelfAdjointEigenSolver<MatrixXd> reg_eig(0.5 * (reg_full + reg_full.transpose()));
    require(reg_eig.info() == Eigen::Success, ErrorCode::InvalidArgument, "regularization is not symmetric");

    detail::LsqProblem lsq;
    lsq.design = std::move(design);
    lsq.shift = target;
    lsq.reg_factor = reg_eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * reg_eig.eigenvectors().transpose();
    lsq.constraints = MatrixXd::Zero(2 * n, n_var);
    lsq.constraints.topLeftCorner(n, M) = v.phi1;
    lsq.constraints.bottomRightCorner(n, L + 1) = v.phi2;
    lsq.offsets = VectorXd::Zero(2 * n);
    lsq.offsets.head(n).setConstant(1.0 - opts.den_floor);

    // Strictly feasible start: constant numerator, unit denominator.
    VectorXd z0 = VectorXd::Zero(n_var);
    const double level = target.mean();
    z0(M) = level > 0.0 ? level : 1.0;

    detail::QpOptions qp_opts;
    qp_opts.tolerance = opts.tolerance;
    qp_opts.max_iterations = opts.max_iterations;
    detail::QpResult sol = detail::solve_lsq_active_set(lsq, z0, qp_opts);

    ArmaFit fit;
    const VectorXd z = unscale.cwiseProduct(sol.z);
    fit.params.alpha = z.head(M);
    fit.params.beta = z.tail(L + 1);
    fit.objective = sol.objective;
    fit.iterations = sol.iterations;
    fit.kkt_residual = sol.kkt_residual;
    fit.converged = sol.converged && sol.kkt_residual < opts.tolerance;
    fit.objective_history = std::move(sol.history);
    return fit;
}

inline ArmaFit fit_arma(const Eigen::VectorXd& target, const Eigen::VectorXd& grid, const ArmaFitOptions& opts = {}) {
    return fit_arma(target, grid, opts,
                    ArmaRegularization::ridge(opts.num_order, opts.den_order, opts.reg_alpha, opts.reg_beta));
}

/// How a fitted response f maps to a PSD. The fit targets sqrt(p), so the
/// consistent PSD is f^2; `Linear` uses f itself (clipped at 0).
enum class PsdConvention { Squared, Linear };

inline std::string to_string(PsdConvention c) { return c == PsdConvention::Squared ? "squared" : "linear"; }

inline Eigen::VectorXd psd_from_arma(const Eigen::VectorXd& grid, const ArmaParams& params,
                                     PsdConvention convention = PsdConvention::Squared) {
    const Eigen::VectorXd f = arma_eval(grid, params);
    return convention == PsdConvention::Squared ? Eigen::VectorXd(f.cwiseAbs2()) : Eigen::VectorXd(f.cwiseMax(0.0));
}

/// U diag(f(lambda)^2) U^T on `basis` (or diag(f) under the linear convention).
inline Eigen::MatrixXd covariance_from_arma(const SpectralBasis& basis, const ArmaParams& params,
                                            PsdConvention convention = PsdConvention::Squared) {
    return spectral_covariance(basis, psd_from_arma(basis.eigenvalues, params, convention));
}

}  // namespace gftransfer
