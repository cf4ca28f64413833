#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gftransfer/error.hpp"
#include "gftransfer/graph.hpp"
#include "gftransfer/gwss.hpp"
#include "gftransfer/random.hpp"
#include "gftransfer/recovery.hpp"
#include "gftransfer/spectral.hpp"
#include "gftransfer/transfer.hpp"

namespace gftransfer {

enum class GraphKind { ER, RS };
enum class PerturbationKind { Edges, Nodes };
enum class PsdProfile { LowPass, Inverse };
enum class MseScope { AllNodes, MissingOnly };

inline std::string to_string(GraphKind k) { return k == GraphKind::ER ? "ER" : "RS"; }
inline std::string to_string(PerturbationKind k) { return k == PerturbationKind::Edges ? "edges" : "nodes"; }
inline std::string to_string(PsdProfile p) { return p == PsdProfile::LowPass ? "lowpass" : "inverse"; }
inline std::string to_string(MseScope s) { return s == MseScope::AllNodes ? "all" : "missing"; }

struct ExperimentConfig {
    std::vector<GraphKind> graphs{GraphKind::ER, GraphKind::RS};
    Index nodes = 100;
    double er_p = 0.15;
    double er_weight_low = 1.0;
    double er_weight_high = 3.0;
    Index rs_k = 8;

    PerturbationKind perturbation = PerturbationKind::Edges;
    std::vector<std::size_t> sizes{10, 20, 30};  // e or v per table row
    double p_v = 0.15;

    PsdProfile hist_psd = PsdProfile::LowPass;
    PsdProfile curr_psd = PsdProfile::Inverse;
    Index k_hist = 2000;
    Index k_curr = 1000;
    double missing_prob = 0.3;
    double noise_var = 0.1;
    MseScope mse_scope = MseScope::AllNodes;

    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0: hardware concurrency

    TransferOptions transfer;

    void validate() const {
        require(!graphs.empty() && !sizes.empty(), ErrorCode::InvalidArgument, "need at least one graph and one size");
        require(nodes >= 2, ErrorCode::InvalidArgument, "nodes must be >= 2");
        require(er_p >= 0.0 && er_p <= 1.0 && p_v >= 0.0 && p_v <= 1.0, ErrorCode::InvalidProbability,
                "edge probabilities outside [0,1]");
        require(missing_prob >= 0.0 && missing_prob < 1.0, ErrorCode::InvalidProbability, "missing_prob outside [0,1)");
        require(noise_var >= 0.0 && std::isfinite(noise_var), ErrorCode::InvalidArgument, "noise_var must be >= 0");
        require(k_hist >= 1 && k_curr >= 1 && trials >= 1, ErrorCode::InvalidArgument, "counts must be >= 1");
        require(rs_k >= 1 && rs_k < nodes, ErrorCode::InvalidArgument, "need 1 <= rs_k < nodes");
        require(er_weight_low >= 0.0 && er_weight_low <= er_weight_high, ErrorCode::InvalidArgument,
                "need 0 <= er_weight_low <= er_weight_high");
    }
};

/// One (graph family, perturbation size) row of the results table.
struct CellSpec {
    GraphKind graph = GraphKind::ER;
    PerturbationKind perturbation = PerturbationKind::Edges;
    std::size_t size = 0;
};

inline std::vector<CellSpec> cells(const ExperimentConfig& cfg) {
    std::vector<CellSpec> out;
    for (GraphKind g : cfg.graphs)
        for (std::size_t s : cfg.sizes) out.push_back({g, cfg.perturbation, s});
    return out;
}

/// Seed of trial `trial` in `cell`; independent of scheduling.
inline std::uint64_t trial_seed(std::uint64_t master, const CellSpec& cell, std::size_t trial) {
    return derive_seed(master, {static_cast<std::uint64_t>(cell.graph), static_cast<std::uint64_t>(cell.perturbation),
                                static_cast<std::uint64_t>(cell.size), static_cast<std::uint64_t>(trial)});
}

struct TrialResult {
    CellSpec cell;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double mse_noisy = 0.0;
    double mse_armae = 0.0;
    double mse_drw = 0.0;
    double mse_oracle = 0.0;  // LMMSE with the true current covariance
    TransferDiagnostics armae;
    TransferDiagnostics drw;
};

/// Full state of one simulated trial, kept when a caller needs per-node output.
struct TrialCapture {
    std::optional<Graph> graph_c;
    Eigen::MatrixXd x_curr;
    Eigen::MatrixXd y_curr;
    Eigen::MatrixXd noisy_fill;
    Eigen::MatrixXd x_armae;
    Eigen::MatrixXd x_drw;
    std::optional<ObservationModel> mask;
};

namespace detail {

enum Stream : std::uint64_t { kGraph, kPerturb, kHistSignals, kCurrSignals, kMask, kHistNoise, kCurrNoise, kRatio };

inline Eigen::VectorXd profile(PsdProfile p, const SpectralBasis& basis) {
    return p == PsdProfile::LowPass ? psd_historical(basis) : psd_current(basis);
}

/// Mean over samples of the per-sample MSE, restricted to missing nodes if requested.
inline double average_mse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate, const ObservationModel& mask,
                          MseScope scope) {
    std::vector<Index> rows;
    for (Index i = 0; i < truth.rows(); ++i)
        if (scope == MseScope::AllNodes || !mask.is_observed(i)) rows.push_back(i);
    if (rows.empty()) return 0.0;
    double total = 0.0;
    for (Index k = 0; k < truth.cols(); ++k) {
        double sq = 0.0;
        for (Index i : rows) sq += (truth(i, k) - estimate(i, k)) * (truth(i, k) - estimate(i, k));
        total += sq / static_cast<double>(rows.size());
    }
    return total / static_cast<double>(truth.cols());
}

/// Observed entries kept as measured, missing entries set to the historical
/// sample mean of that node (0 for nodes absent from the historical graph).
inline Eigen::MatrixXd noisy_fill(const ObservationModel& mask, const Eigen::MatrixXd& y, const Eigen::VectorXd& fill) {
    Eigen::MatrixXd out = fill.replicate(1, y.cols());
    for (Index r = 0; r < mask.observation_size(); ++r) out.row(mask.observed()[static_cast<std::size_t>(r)]) = y.row(r);
    return out;
}

}  // namespace detail

/// Simulates one trial end to end. Errors propagate as exceptions.
inline TrialResult simulate_trial(const ExperimentConfig& cfg, const CellSpec& cell, std::uint64_t seed,
                                  TrialCapture* capture = nullptr) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    TrialResult result;
    result.cell = cell;
    result.seed = seed;
    auto stream = [seed](detail::Stream s) { return make_rng(seed, {static_cast<std::uint64_t>(s)}); };

    Rng graph_rng = stream(detail::kGraph);
    const Graph graph_h = cell.graph == GraphKind::ER
                              ? gen_er(cfg.nodes, cfg.er_p, cfg.er_weight_low, cfg.er_weight_high, graph_rng)
                              : gen_rs(cfg.nodes, cfg.rs_k, MeanEdgeLength{}, graph_rng);
    const WeightPolicy policy = cell.graph == GraphKind::ER
                                    ? WeightPolicy(UniformWeights{cfg.er_weight_low, cfg.er_weight_high})
                                    : WeightPolicy(DistanceKernelWeights{mean_edge_length(graph_h)});

    Rng perturb_rng = stream(detail::kPerturb);
    std::optional<Graph> graph_c;
    NodeMapping mapping;
    if (cell.perturbation == PerturbationKind::Edges) {
        graph_c = perturb_edges(graph_h, cell.size, policy, perturb_rng);
        mapping = NodeMapping::identity(graph_h);
    } else {
        NodePerturbation np = perturb_nodes(graph_h, cell.size, cfg.p_v, policy, perturb_rng);
        graph_c = std::move(np.graph);
        mapping = std::move(np.mapping);
    }

    SpectralBasis basis_h = spectral_decompose(graph_h);
    SpectralBasis basis_c = spectral_decompose(*graph_c);
    const GwssModel model_h = make_gwss_model(basis_h, detail::profile(cfg.hist_psd, basis_h));
    const GwssModel model_c = make_gwss_model(basis_c, detail::profile(cfg.curr_psd, basis_c));

    Rng hist_rng = stream(detail::kHistSignals);
    Rng curr_rng = stream(detail::kCurrSignals);
    MatrixXd x_hist = sample(model_h, cfg.k_hist, hist_rng);
    const MatrixXd x_curr = sample(model_c, cfg.k_curr, curr_rng);

    Rng mask_rng = stream(detail::kMask);
    const double noise_std = std::sqrt(cfg.noise_var);
    const ObservationModel mask = make_mask(graph_c->size(), cfg.missing_prob, mask_rng, noise_std);
    const SharedObservation shared = shared_observation(mask, mapping);

    Rng hist_noise = stream(detail::kHistNoise);
    Rng curr_noise = stream(detail::kCurrNoise);
    MatrixXd y_hist = select_rows(x_hist, shared.hist_nodes);
    if (noise_std > 0.0) {
        std::normal_distribution<double> noise(0.0, noise_std);
        for (Index k = 0; k < y_hist.cols(); ++k)
            for (Index r = 0; r < y_hist.rows(); ++r) y_hist(r, k) += noise(hist_noise);
    }
    MatrixXd y_curr = observe(mask, x_curr, curr_noise);

    VectorXd fill = VectorXd::Zero(graph_c->size());
    const VectorXd hist_mean = x_hist.rowwise().mean();
    for (std::size_t i = 0; i < mapping.kept.size(); ++i) fill(mapping.kept_rows_curr[i]) = hist_mean(mapping.kept_rows_hist[i]);

    TransferScenario scn{std::move(basis_h), std::move(basis_c), std::move(mapping), mask, std::move(x_hist),
                         std::move(y_hist), y_curr, shared};

    const TransferResult armae = baseline_transfer(scn, cfg.transfer);
    Rng ratio_rng = stream(detail::kRatio);
    const TransferResult drw = drw_transfer(scn, ratio_rng, cfg.transfer);
    const LinearEstimator oracle = lmmse(covariance(model_c), {}, mask, cfg.transfer.include_noise);

    MatrixXd x_armae = recover(armae.estimator, y_curr);
    MatrixXd x_drw = recover(drw.estimator, y_curr);
    MatrixXd x_noisy = detail::noisy_fill(mask, y_curr, fill);
    result.mse_noisy = detail::average_mse(x_curr, x_noisy, mask, cfg.mse_scope);
    result.mse_armae = detail::average_mse(x_curr, x_armae, mask, cfg.mse_scope);
    result.mse_drw = detail::average_mse(x_curr, x_drw, mask, cfg.mse_scope);
    result.mse_oracle = detail::average_mse(x_curr, recover(oracle, y_curr), mask, cfg.mse_scope);
    result.armae = armae.diagnostics;
    result.drw = drw.diagnostics;
    for (double v : {result.mse_noisy, result.mse_armae, result.mse_drw, result.mse_oracle})
        require(std::isfinite(v) && v >= 0.0, ErrorCode::SingularSystem, "non-finite MSE");
    result.ok = true;

    if (capture) {
        capture->graph_c = std::move(graph_c);
        capture->x_curr = x_curr;
        capture->y_curr = std::move(y_curr);
        capture->noisy_fill = std::move(x_noisy);
        capture->x_armae = std::move(x_armae);
        capture->x_drw = std::move(x_drw);
        capture->mask = mask;
    }
    return result;
}

/// Runs one trial, recording failures instead of throwing.
inline TrialResult run_trial(const ExperimentConfig& cfg, const CellSpec& cell, std::size_t trial) {
    const std::uint64_t seed = trial_seed(cfg.seed, cell, trial);
    try {
        TrialResult r = simulate_trial(cfg, cell, seed);
        r.trial = trial;
        return r;
    } catch (const std::exception& e) {
        TrialResult r;
        r.cell = cell;
        r.trial = trial;
        r.seed = seed;
        r.error = e.what();
        return r;
    }
}

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MethodSummary {
    double mean = 0.0;
    double std_error = 0.0;
};

struct CellSummary {
    CellSpec cell;
    std::size_t trials = 0;
    std::size_t failed = 0;
    MethodSummary noisy;
    MethodSummary armae;
    MethodSummary drw;
    MethodSummary oracle;
};

struct ExperimentResult {
    std::vector<CellSummary> rows;
    std::vector<TrialResult> trials;
};

inline MethodSummary summarize(const std::vector<double>& values) {
    MethodSummary s;
    const auto n = static_cast<double>(values.size());
    CompensatedSum sum;
    for (double v : values) sum.add(v);
    s.mean = sum.value() / n;
    if (values.size() > 1) {
        CompensatedSum sq;
        for (double v : values) sq.add((v - s.mean) * (v - s.mean));
        s.std_error = std::sqrt(sq.value() / (n - 1.0) / n);
    }
    return s;
}

/// Per-cell means and standard errors over successful trials, in trial order.
inline CellSummary summarize_cell(const CellSpec& cell, const std::vector<TrialResult>& trials) {
    CellSummary row;
    row.cell = cell;
    std::vector<double> noisy, armae, drw, oracle;
    for (const TrialResult& t : trials) {
        if (!t.ok) {
            ++row.failed;
            continue;
        }
        noisy.push_back(t.mse_noisy);
        armae.push_back(t.mse_armae);
        drw.push_back(t.mse_drw);
        oracle.push_back(t.mse_oracle);
    }
    row.trials = noisy.size();
    require(row.trials > 0, ErrorCode::AllTrialsFailed,
            "all " + std::to_string(trials.size()) + " trials failed for " + to_string(cell.graph) + " " +
                to_string(cell.perturbation) + " " + std::to_string(cell.size) +
                (trials.empty() ? std::string() : ": " + trials.front().error));
    row.noisy = summarize(noisy);
    row.armae = summarize(armae);
    row.drw = summarize(drw);
    row.oracle = summarize(oracle);
    return row;
}

/// Runs every cell for cfg.trials trials on a worker pool. Results are stored
/// by (cell, trial) slot, so the output does not depend on the thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<CellSpec> specs = cells(cfg);
    const std::size_t per_cell = cfg.trials;
    const std::size_t total = specs.size() * per_cell;
    std::vector<TrialResult> slots(total);

    unsigned workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t job = next++; job < total; job = next++)
            slots[job] = run_trial(cfg, specs[job / per_cell], job % per_cell);
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    ExperimentResult out;
    for (std::size_t c = 0; c < specs.size(); ++c) {
        const std::vector<TrialResult> cell_trials(slots.begin() + static_cast<std::ptrdiff_t>(c * per_cell),
                                                   slots.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_cell));
        out.rows.push_back(summarize_cell(specs[c], cell_trials));
    }
    out.trials = std::move(slots);
    return out;
}

}  // namespace gftransfer
