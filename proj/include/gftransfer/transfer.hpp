#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <vector>

#include "gftransfer/density_ratio.hpp"
#include "gftransfer/error.hpp"
#include "gftransfer/graph.hpp"
#include "gftransfer/random.hpp"
#include "gftransfer/recovery.hpp"
#include "gftransfer/spectral.hpp"
#include "gftransfer/spectral_fit.hpp"

namespace gftransfer {

/// Observed current nodes that also exist in the historical graph: their rows
/// in the current observation vector and their node indices in the historical
/// graph, in mask order.
struct SharedObservation {
    std::vector<Index> curr_rows;
    std::vector<Index> hist_nodes;
};

inline SharedObservation shared_observation(const ObservationModel& mask, const NodeMapping& mapping) {
    std::vector<Index> curr_to_hist(static_cast<std::size_t>(mask.signal_size()), -1);
    for (std::size_t i = 0; i < mapping.kept.size(); ++i) {
        const Index c = mapping.kept_rows_curr[i];
        require(c >= 0 && c < mask.signal_size(), ErrorCode::MappingMismatch, "kept node outside the current mask");
        curr_to_hist[static_cast<std::size_t>(c)] = mapping.kept_rows_hist[i];
    }
    SharedObservation shared;
    for (Index r = 0; r < mask.observation_size(); ++r) {
        const Index h = curr_to_hist[static_cast<std::size_t>(mask.observed()[static_cast<std::size_t>(r)])];
        if (h < 0) continue;
        shared.curr_rows.push_back(r);
        shared.hist_nodes.push_back(h);
    }
    return shared;
}

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& a, const std::vector<Index>& rows) {
    Eigen::MatrixXd out(static_cast<Index>(rows.size()), a.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        require(rows[r] >= 0 && rows[r] < a.rows(), ErrorCode::IndexOutOfRange, "row selection out of range");
        out.row(static_cast<Index>(r)) = a.row(rows[r]);
    }
    return out;
}

/// Everything a transfer pipeline may read. Current ground-truth signals are
/// deliberately absent: only their observations `y_curr` are available.
struct TransferScenario {
    SpectralBasis basis_h;
    SpectralBasis basis_c;
    NodeMapping mapping;
    ObservationModel mask;       // over current nodes
    Eigen::MatrixXd x_hist;      // N_h x K_h
    Eigen::MatrixXd y_hist;      // |shared| x K_h, historical observations at shared nodes
    Eigen::MatrixXd y_curr;      // d x K_c
    SharedObservation shared;

    void validate() const {
        require(basis_c.size() == mask.signal_size(), ErrorCode::DimensionMismatch, "mask size != current graph size");
        require(x_hist.rows() == basis_h.size(), ErrorCode::DimensionMismatch, "historical signal length != graph size");
        require(x_hist.cols() >= 1, ErrorCode::EmptySampleSet, "no historical signals");
        require(y_hist.cols() == x_hist.cols(), ErrorCode::DimensionMismatch, "one observation per historical signal");
        require(y_hist.rows() == static_cast<Index>(shared.curr_rows.size()), ErrorCode::DimensionMismatch,
                "historical observation length != shared node count");
        require(y_curr.rows() == mask.observation_size(), ErrorCode::DimensionMismatch,
                "current observation length != mask size");
        require(mapping.kept.size() + mapping.removed.size() == static_cast<std::size_t>(basis_h.size()) &&
                    mapping.kept.size() + mapping.added.size() == static_cast<std::size_t>(basis_c.size()),
                ErrorCode::MappingMismatch, "mapping does not partition both node sets");
    }
};

struct TransferOptions {
    ArmaFitOptions arma{.den_floor = 0.1};
    PsdConvention convention = PsdConvention::Squared;
    bool include_noise = true;
    RatioConfig ratio;
    /// Divide the importance weights by their mean before forming the PSD.
    bool normalize_weights = true;
};

struct TransferDiagnostics {
    double reg_lambda = 0.0;  // selected ratio regularizer (0 when unweighted)
    double weight_min = 1.0;
    double weight_mean = 1.0;
    double weight_max = 1.0;
    int iterations = 0;
    bool converged = false;
    PsdConvention convention = PsdConvention::Squared;
};

struct TransferResult {
    LinearEstimator estimator;
    ArmaParams params;
    PsdEstimate psd;
    Eigen::MatrixXd covariance;
    TransferDiagnostics diagnostics;
};

/// Weighted PSD of historical signals seen through the current basis on the
/// surviving nodes: (1/K) sum_k w_k ([U_c]_{kept,:}^T x_k[kept])^2, length N_c.
inline PsdEstimate weighted_psd_nodechange(const Eigen::MatrixXd& x_hist, const Eigen::VectorXd& weights,
                                           const SpectralBasis& basis_c, const NodeMapping& mapping) {
    require(x_hist.cols() >= 1, ErrorCode::EmptySampleSet, "no historical signals");
    detail::check_weights(weights, x_hist.cols());
    const std::size_t kept = mapping.kept.size();
    if (mapping.kept_rows_hist.size() != kept || mapping.kept_rows_curr.size() != kept ||
        kept + mapping.removed.size() != static_cast<std::size_t>(x_hist.rows()) ||
        kept + mapping.added.size() != static_cast<std::size_t>(basis_c.size()))
        throw Error(ErrorCode::MappingMismatch, "mapping does not match signal and basis sizes");
    if (mapping.is_identity()) return nonparam_psd(x_hist, basis_c, weights);

    Eigen::MatrixXd u_kept(static_cast<Index>(kept), basis_c.size());
    Eigen::MatrixXd x_kept(static_cast<Index>(kept), x_hist.cols());
    for (std::size_t i = 0; i < kept; ++i) {
        const Index h = mapping.kept_rows_hist[i];
        const Index c = mapping.kept_rows_curr[i];
        if (h < 0 || h >= x_hist.rows() || c < 0 || c >= basis_c.size())
            throw Error(ErrorCode::MappingMismatch, "kept row out of range");
        u_kept.row(static_cast<Index>(i)) = basis_c.eigenvectors.row(c);
        x_kept.row(static_cast<Index>(i)) = x_hist.row(h);
    }
    const Eigen::MatrixXd spectra = u_kept.transpose() * x_kept;
    return {detail::weighted_power(spectra, weights), x_hist.cols(), true};
}

namespace detail {

inline TransferResult finish_transfer(const TransferScenario& scn, const PsdEstimate& psd, const Eigen::VectorXd& grid,
                                      const TransferOptions& opts) {
    TransferResult out;
    const ArmaFit fit = fit_arma(psd.values.cwiseMax(0.0).cwiseSqrt(), grid, opts.arma);
    out.params = fit.params;
    out.psd = psd;
    out.covariance = covariance_from_arma(scn.basis_c, fit.params, opts.convention);
    out.estimator = lmmse(out.covariance, {}, scn.mask, opts.include_noise);
    out.diagnostics.iterations = fit.iterations;
    out.diagnostics.converged = fit.converged;
    out.diagnostics.convention = opts.convention;
    return out;
}

}  // namespace detail

/// ARMAE: fit on the historical spectrum, then reuse the coefficients on the
/// current basis.
inline TransferResult baseline_transfer(const TransferScenario& scn, const TransferOptions& opts = {}) {
    scn.validate();
    return detail::finish_transfer(scn, nonparam_psd(scn.x_hist, scn.basis_h), scn.basis_h.eigenvalues, opts);
}

/// DRW pipeline with externally supplied importance weights (one per historical signal).
inline TransferResult drw_transfer_with_weights(const TransferScenario& scn, const Eigen::VectorXd& weights,
                                                const TransferOptions& opts = {}) {
    scn.validate();
    detail::check_weights(weights, scn.x_hist.cols());
    require(weights.maxCoeff() >= 1e-12, ErrorCode::DegenerateWeights, "all importance weights vanish");
    TransferResult out = detail::finish_transfer(
        scn, weighted_psd_nodechange(scn.x_hist, weights, scn.basis_c, scn.mapping), scn.basis_c.eigenvalues, opts);
    out.diagnostics.weight_min = weights.minCoeff();
    out.diagnostics.weight_mean = weights.mean();
    out.diagnostics.weight_max = weights.maxCoeff();
    return out;
}

/// ARMAE-DRW: importance weights from a density-ratio model fitted on the
/// shared-node observations, weighted PSD on the current basis, fit on the
/// current spectrum. `rng` only drives the choice of kernel centers.
inline TransferResult drw_transfer(const TransferScenario& scn, Rng& rng, const TransferOptions& opts = {}) {
    scn.validate();
    require(scn.y_curr.cols() >= 1, ErrorCode::EmptySampleSet, "no current observations");
    require(!scn.shared.curr_rows.empty(), ErrorCode::EmptySampleSet, "no observed node survives the change");
    const Eigen::MatrixXd y_curr_shared = select_rows(scn.y_curr, scn.shared.curr_rows);
    const KernelBasis basis = build_basis(y_curr_shared, opts.ratio, rng, scn.y_hist);
    const DensityRatioModel model = fit_ratio(scn.y_hist, y_curr_shared, basis, opts.ratio);
    Eigen::VectorXd weights = eval_ratio(model, scn.y_hist);
    if (opts.normalize_weights && weights.mean() > 0.0) weights /= weights.mean();
    TransferResult out = drw_transfer_with_weights(scn, weights, opts);
    out.diagnostics.reg_lambda = model.reg_lambda;
    return out;
}

}  // namespace gftransfer
