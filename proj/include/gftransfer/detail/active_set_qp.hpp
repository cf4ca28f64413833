#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gftransfer/error.hpp"

namespace gftransfer::detail {

/// Linearly constrained least squares
///   minimize   ||A z + t||^2 + ||S z||^2
///   subject to G z + g >= 0
/// Objectives and gradients are always formed from residuals, never from the
/// expanded quadratic, so tiny decreases near the optimum stay visible.
struct LsqProblem {
    Eigen::MatrixXd design;       // A
    Eigen::VectorXd shift;        // t
    Eigen::MatrixXd reg_factor;   // S (any k x n; may have zero rows)
    Eigen::MatrixXd constraints;  // G
    Eigen::VectorXd offsets;      // g
};

struct QpOptions {
    double tolerance = 1e-8;
    int max_iterations = 10000;
    /// Iterations in a row without objective decrease before giving up.
    int stall_limit = 100;
};

struct QpResult {
    Eigen::VectorXd z;
    Eigen::VectorXd multipliers;  // one per row of G, zero for inactive rows
    double objective = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    bool converged = false;
    std::vector<double> history;  // objective of every iterate, starting point first
};

inline double lsq_objective(const LsqProblem& p, const Eigen::VectorXd& z) {
    return (p.design * z + p.shift).squaredNorm() + (p.reg_factor * z).squaredNorm();
}

inline Eigen::VectorXd lsq_gradient(const LsqProblem& p, const Eigen::VectorXd& z) {
    return 2.0 * (p.design.transpose() * (p.design * z + p.shift) + p.reg_factor.transpose() * (p.reg_factor * z));
}

/// Worst of stationarity, dual feasibility, primal feasibility and
/// complementarity, the dual quantities scaled by max(1, ||2 A^T t||_inf).
inline double lsq_kkt_residual(const LsqProblem& p, const Eigen::VectorXd& z, const Eigen::VectorXd& mu) {
    const double scale = std::max(1.0, 2.0 * (p.design.transpose() * p.shift).lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd slack = p.constraints * z + p.offsets;
    const Eigen::VectorXd stationarity = lsq_gradient(p, z) - p.constraints.transpose() * mu;
    double worst = stationarity.lpNorm<Eigen::Infinity>() / scale;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
        worst = std::max(worst, std::max(0.0, -mu(i)) / scale);
        worst = std::max(worst, std::max(0.0, -slack(i)));
        worst = std::max(worst, std::abs(mu(i) * slack(i)) / scale);
    }
    return worst;
}

/// Primal active-set method. Starting from a feasible `z0`, every iterate stays
/// feasible and the objective never increases. Each iteration either moves
/// towards the minimizer on the current working set (stopping at the first
/// blocking constraint) or releases the working constraint with the most
/// negative multiplier.
inline QpResult solve_lsq_active_set(const LsqProblem& input, Eigen::VectorXd z0, const QpOptions& opts = {}) {
    using Eigen::Index;
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const Index n = input.design.cols();
    require(input.shift.size() == input.design.rows() && input.reg_factor.cols() == n &&
                input.constraints.cols() == n && input.offsets.size() == input.constraints.rows() && z0.size() == n,
            ErrorCode::DimensionMismatch, "inconsistent least-squares problem dimensions");

    // Unit-norm constraint rows; all-zero rows are constant and never bind.
    LsqProblem p = input;
    const Index m_all = input.constraints.rows();
    std::vector<Index> kept_rows;
    std::vector<double> row_norm;
    for (Index i = 0; i < m_all; ++i) {
        const double norm = input.constraints.row(i).norm();
        if (norm > 0.0) {
            kept_rows.push_back(i);
            row_norm.push_back(norm);
        } else {
            require(input.offsets(i) >= 0.0, ErrorCode::InvalidArgument, "infeasible constant constraint");
        }
    }
    const auto m = static_cast<Index>(kept_rows.size());
    p.constraints.resize(m, n);
    p.offsets.resize(m);
    for (Index r = 0; r < m; ++r) {
        const auto src = kept_rows[static_cast<std::size_t>(r)];
        p.constraints.row(r) = input.constraints.row(src) / row_norm[static_cast<std::size_t>(r)];
        p.offsets(r) = input.offsets(src) / row_norm[static_cast<std::size_t>(r)];
    }
    require(((p.constraints * z0 + p.offsets).array() >= -1e-12).all(), ErrorCode::InvalidArgument,
            "starting point is infeasible");

    MatrixXd stacked(p.design.rows() + p.reg_factor.rows(), n);
    stacked << p.design, p.reg_factor;
    const double scale = std::max(1.0, 2.0 * (p.design.transpose() * p.shift).lpNorm<Eigen::Infinity>());
    const double mu_tol = opts.tolerance * scale * 1e-2;

    VectorXd z = std::move(z0);
    std::vector<Index> working;
    std::vector<char> in_working(static_cast<std::size_t>(m), 0);
    QpResult result;
    double f = lsq_objective(p, z);
    result.history.push_back(f);
    int stall = 0;
    auto note_progress = [&](bool decreased) {
        stall = decreased ? 0 : stall + 1;
        if (stall >= opts.stall_limit)
            throw Error(ErrorCode::SolverDiverged,
                        "active-set solver made no progress for " + std::to_string(opts.stall_limit) + " iterations");
    };
    auto working_matrix = [&]() {
        MatrixXd active(static_cast<Index>(working.size()), n);
        for (std::size_t r = 0; r < working.size(); ++r) active.row(static_cast<Index>(r)) = p.constraints.row(working[r]);
        return active;
    };

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        result.iterations = iter + 1;
        const auto w = static_cast<Index>(working.size());

        MatrixXd null_basis;
        if (w == 0) {
            null_basis = MatrixXd::Identity(n, n);
        } else {
            Eigen::HouseholderQR<MatrixXd> qr(working_matrix().transpose());
            const MatrixXd q_full = qr.householderQ() * MatrixXd::Identity(n, n);
            null_basis = q_full.rightCols(n - w);
        }

        // Minimum-norm solution of the reduced least-squares problem.
        VectorXd step = VectorXd::Zero(n);
        if (null_basis.cols() > 0) {
            VectorXd rhs(stacked.rows());
            rhs << -(p.design * z + p.shift), -(p.reg_factor * z);
            Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(stacked * null_basis);
            cod.setThreshold(1e-13);
            step = null_basis * cod.solve(rhs);
        }

        const double step_norm = step.lpNorm<Eigen::Infinity>();
        bool moved = false;
        if (step_norm > 1e-15 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
            double t = 1.0;
            Index blocking = -1;
            const VectorXd rate = p.constraints * step;
            const VectorXd slack = p.constraints * z + p.offsets;
            for (Index i = 0; i < m; ++i) {
                if (in_working[static_cast<std::size_t>(i)] || rate(i) >= -1e-14 * step_norm) continue;
                const double ti = std::max(0.0, slack(i)) / -rate(i);
                if (ti < t) {
                    t = ti;
                    blocking = i;
                }
            }
            VectorXd candidate = z + t * step;
            const double f_new = lsq_objective(p, candidate);
            if (f_new <= f) {
                moved = f_new < f || blocking >= 0;
                const bool decreased = f_new < f;
                z = std::move(candidate);
                f = f_new;
                if (blocking >= 0) {
                    working.push_back(blocking);
                    in_working[static_cast<std::size_t>(blocking)] = 1;
                }
                result.history.push_back(f);
                note_progress(decreased);
            }
        }
        if (moved) continue;

        // Stationary on the working set: check multipliers.
        if (w == 0) {
            result.converged = true;
            break;
        }
        const VectorXd mu = working_matrix().transpose().householderQr().solve(lsq_gradient(p, z));
        Index worst = 0;
        for (Index r = 1; r < w; ++r)
            if (mu(r) < mu(worst)) worst = r;
        if (mu(worst) >= -mu_tol) {
            result.converged = true;
            break;
        }
        in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(worst)])] = 0;
        working.erase(working.begin() + worst);
        result.history.push_back(f);
        note_progress(false);
    }

    VectorXd mu_scaled = VectorXd::Zero(m);
    if (!working.empty()) {
        const VectorXd mu = working_matrix().transpose().householderQr().solve(lsq_gradient(p, z));
        for (std::size_t r = 0; r < working.size(); ++r) mu_scaled(working[r]) = mu(static_cast<Index>(r));
    }
    result.kkt_residual = lsq_kkt_residual(p, z, mu_scaled);
    result.multipliers = VectorXd::Zero(m_all);
    for (Index r = 0; r < m; ++r)
        result.multipliers(kept_rows[static_cast<std::size_t>(r)]) = mu_scaled(r) / row_norm[static_cast<std::size_t>(r)];
    result.z = std::move(z);
    result.objective = f;
    return result;
}

}  // namespace gftransfer::detail
