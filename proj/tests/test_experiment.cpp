#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "test_support.hpp"

using namespace gftransfer;
using gftransfer::testing::error_code_of;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.nodes = 30;
    cfg.rs_k = 6;
    cfg.sizes = {4};
    cfg.k_hist = 200;
    cfg.k_curr = 100;
    cfg.trials = 3;
    cfg.seed = 17;
    cfg.threads = 1;
    return cfg;
}

bool same_result(const TrialResult& a, const TrialResult& b) {
    return a.seed == b.seed && a.ok == b.ok && a.error == b.error && a.mse_noisy == b.mse_noisy &&
           a.mse_armae == b.mse_armae && a.mse_drw == b.mse_drw && a.mse_oracle == b.mse_oracle &&
           a.drw.reg_lambda == b.drw.reg_lambda && a.drw.weight_max == b.drw.weight_max;
}

std::string results_csv(const ExperimentConfig& cfg) {
    std::ostringstream out;
    write_results_csv(out, run_experiment(cfg).rows);
    return out.str();
}

}  // namespace

TEST(Config, ValidationRejectsBadValues) {
    ExperimentConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.missing_prob = 1.0;
    EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::InvalidProbability);
    cfg = ExperimentConfig{};
    cfg.k_hist = 0;
    EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
    cfg = ExperimentConfig{};
    cfg.noise_var = -0.1;
    EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
    cfg = ExperimentConfig{};
    cfg.sizes.clear();
    EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
}

TEST(Cells, GraphMajorOrder) {
    ExperimentConfig cfg;
    const auto c = cells(cfg);
    ASSERT_EQ(c.size(), 6u);
    EXPECT_EQ(c[0].graph, GraphKind::ER);
    EXPECT_EQ(c[0].size, 10u);
    EXPECT_EQ(c[2].size, 30u);
    EXPECT_EQ(c[3].graph, GraphKind::RS);
}

TEST(TrialSeed, DistinctPerCoordinate) {
    const CellSpec a{GraphKind::ER, PerturbationKind::Edges, 10};
    const CellSpec b{GraphKind::RS, PerturbationKind::Edges, 10};
    const CellSpec c{GraphKind::ER, PerturbationKind::Nodes, 10};
    const CellSpec d{GraphKind::ER, PerturbationKind::Edges, 20};
    const std::uint64_t base = trial_seed(1, a, 0);
    EXPECT_EQ(base, trial_seed(1, a, 0));
    for (std::uint64_t other : {trial_seed(2, a, 0), trial_seed(1, a, 1), trial_seed(1, b, 0), trial_seed(1, c, 0),
                                trial_seed(1, d, 0)})
        EXPECT_NE(base, other);
}

TEST(SimulateTrial, SameSeedIsBitwiseIdentical) {
    const ExperimentConfig cfg = small_config();
    for (GraphKind g : {GraphKind::ER, GraphKind::RS})
        for (PerturbationKind p : {PerturbationKind::Edges, PerturbationKind::Nodes}) {
            const CellSpec cell{g, p, 4};
            const TrialResult a = run_trial(cfg, cell, 2);
            const TrialResult b = run_trial(cfg, cell, 2);
            ASSERT_TRUE(a.ok) << a.error;
            EXPECT_TRUE(same_result(a, b));
            for (double v : {a.mse_noisy, a.mse_armae, a.mse_drw, a.mse_oracle}) {
                EXPECT_TRUE(std::isfinite(v));
                EXPECT_GE(v, 0.0);
            }
        }
}

TEST(SimulateTrial, OracleIsBestOnAverage) {
    ExperimentConfig cfg = small_config();
    const CellSpec cell{GraphKind::ER, PerturbationKind::Edges, 4};
    double oracle = 0.0, armae = 0.0, drw = 0.0, noisy = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
        const TrialResult r = run_trial(cfg, cell, t);
        ASSERT_TRUE(r.ok) << r.error;
        oracle += r.mse_oracle;
        armae += r.mse_armae;
        drw += r.mse_drw;
        noisy += r.mse_noisy;
    }
    EXPECT_LE(oracle, armae);
    EXPECT_LE(oracle, drw);
    EXPECT_LT(oracle, noisy);
}

TEST(SimulateTrial, MissingOnlyScope) {
    ExperimentConfig cfg = small_config();
    cfg.noise_var = 0.0;
    cfg.mse_scope = MseScope::MissingOnly;
    const CellSpec cell{GraphKind::ER, PerturbationKind::Edges, 4};
    TrialCapture cap;
    const TrialResult r = simulate_trial(cfg, cell, trial_seed(cfg.seed, cell, 0), &cap);
    std::vector<Index> missing;
    for (Index i = 0; i < cfg.nodes; ++i)
        if (!cap.mask->is_observed(i)) missing.push_back(i);
    double total = 0.0;
    for (Index k = 0; k < cap.x_curr.cols(); ++k) {
        double sq = 0.0;
        for (Index i : missing) sq += std::pow(cap.x_curr(i, k) - cap.noisy_fill(i, k), 2);
        total += sq / static_cast<double>(missing.size());
    }
    EXPECT_NEAR(r.mse_noisy, total / static_cast<double>(cap.x_curr.cols()), 1e-12);
}

TEST(SimulateTrial, NoChangeAndEqualPsdsGiveSimilarMethods) {
    ExperimentConfig cfg = small_config();
    cfg.nodes = 50;
    cfg.k_hist = 1000;
    cfg.k_curr = 500;
    cfg.hist_psd = PsdProfile::Inverse;
    cfg.curr_psd = PsdProfile::Inverse;
    for (PerturbationKind p : {PerturbationKind::Edges, PerturbationKind::Nodes}) {
        const CellSpec cell{GraphKind::ER, p, 0};
        double armae = 0.0, drw = 0.0;
        for (std::size_t t = 0; t < 5; ++t) {
            const TrialResult r = run_trial(cfg, cell, t);
            ASSERT_TRUE(r.ok) << r.error;
            armae += r.mse_armae;
            drw += r.mse_drw;
        }
        EXPECT_LT(std::abs(armae - drw) / armae, 0.1);
    }
}

TEST(SimulateTrial, SensorGraphNoisyBaselineScale) {
    ExperimentConfig cfg;
    cfg.k_hist = 500;
    cfg.k_curr = 200;
    const CellSpec cell{GraphKind::RS, PerturbationKind::Edges, 20};
    double noisy = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
        const TrialResult r = run_trial(cfg, cell, t);
        ASSERT_TRUE(r.ok) << r.error;
        noisy += r.mse_noisy / 5.0;
    }
    EXPECT_GT(noisy, 0.07);
    EXPECT_LT(noisy, 0.28);
}

TEST(SimulateTrial, NodeChangeFavoursDrwOnErdosRenyi) {
    ExperimentConfig cfg;
    cfg.perturbation = PerturbationKind::Nodes;
    cfg.graphs = {GraphKind::ER};
    cfg.sizes = {30};
    cfg.trials = 150;
    cfg.threads = 1;
    cfg.seed = 5;
    const ExperimentResult res = run_experiment(cfg);
    ASSERT_EQ(res.rows.size(), 1u);
    EXPECT_EQ(res.rows[0].failed, 0u);
    EXPECT_LT(res.rows[0].drw.mean, res.rows[0].armae.mean);
}

TEST(RunExperiment, SingleTrialTableEqualsTrial) {
    ExperimentConfig cfg = small_config();
    cfg.trials = 1;
    cfg.graphs = {GraphKind::RS};
    const ExperimentResult res = run_experiment(cfg);
    ASSERT_EQ(res.rows.size(), 1u);
    const TrialResult t = run_trial(cfg, res.rows[0].cell, 0);
    EXPECT_EQ(res.rows[0].armae.mean, t.mse_armae);
    EXPECT_EQ(res.rows[0].drw.mean, t.mse_drw);
    EXPECT_EQ(res.rows[0].noisy.mean, t.mse_noisy);
    EXPECT_EQ(res.rows[0].armae.std_error, 0.0);
}

TEST(RunExperiment, OutputIndependentOfThreadCount) {
    ExperimentConfig cfg = small_config();
    cfg.trials = 4;
    cfg.perturbation = PerturbationKind::Nodes;
    const std::string one = results_csv(cfg);
    cfg.threads = 3;
    EXPECT_EQ(results_csv(cfg), one);
    cfg.threads = 1;
    EXPECT_EQ(results_csv(cfg), one);
}

TEST(RunExperiment, FailuresAreRecordedPerTrial) {
    ExperimentConfig cfg = small_config();
    cfg.sizes = {1000};  // more removals than edges
    cfg.graphs = {GraphKind::ER};
    EXPECT_EQ(error_code_of([&] { run_experiment(cfg); }), ErrorCode::AllTrialsFailed);
    const TrialResult r = run_trial(cfg, cells(cfg)[0], 0);
    EXPECT_FALSE(r.ok);
    EXPECT_NE(r.error.find("TooManyRemovals"), std::string::npos);
}

TEST(Summaries, OrderInsensitiveMean) {
    std::vector<double> v;
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) v.push_back(u(rng) * std::pow(10.0, i % 7 - 3));
    const MethodSummary a = summarize(v);
    std::reverse(v.begin(), v.end());
    std::shuffle(v.begin(), v.end(), rng);
    const MethodSummary b = summarize(v);
    EXPECT_NEAR(a.mean, b.mean, 1e-12 * std::abs(a.mean));
    EXPECT_NEAR(a.std_error, b.std_error, 1e-12 * a.std_error);
}

TEST(Summaries, CompensatedSumRecoversCancellation) {
    CompensatedSum s;
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    EXPECT_EQ(s.value(), 1.0);
}

TEST(Summaries, CellCountsFailures) {
    const CellSpec cell{GraphKind::ER, PerturbationKind::Edges, 1};
    std::vector<TrialResult> trials(3);
    trials[0].ok = true;
    trials[0].mse_armae = 2.0;
    trials[2].ok = true;
    trials[2].mse_armae = 4.0;
    const CellSummary s = summarize_cell(cell, trials);
    EXPECT_EQ(s.trials, 2u);
    EXPECT_EQ(s.failed, 1u);
    EXPECT_EQ(s.armae.mean, 3.0);
    EXPECT_DOUBLE_EQ(s.armae.std_error, 1.0);
}
