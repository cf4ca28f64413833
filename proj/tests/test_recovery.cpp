#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace gftransfer;
using gftransfer::testing::connected_er;
using gftransfer::testing::error_code_of;
using gftransfer::testing::gaussian_matrix;
using gftransfer::testing::max_abs;

namespace {

/// Independent oracle: least-squares regression of x on [y, 1] over simulated pairs.
Eigen::MatrixXd regression_gain(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd design(y.cols(), y.rows() + 1);
    design.leftCols(y.rows()) = y.transpose();
    design.col(y.rows()).setOnes();
    const Eigen::MatrixXd coef = design.colPivHouseholderQr().solve(x.transpose());
    return coef.topRows(y.rows()).transpose();
}

struct Instance {
    GwssModel model;
    ObservationModel mask;
};

Instance random_instance(Index n, double noise_std, Rng& rng) {
    const SpectralBasis b = spectral_decompose(connected_er(n, 0.6, rng));
    std::uniform_real_distribution<double> unit(0.1, 1.0);
    Eigen::VectorXd p(n);
    for (Index i = 0; i < n; ++i) p(i) = unit(rng);
    ObservationModel mask = make_mask(n, 0.4, rng, noise_std);
    while (mask.observation_size() == n) mask = make_mask(n, 0.4, rng, noise_std);
    return {make_gwss_model(b, p), mask};
}

}  // namespace

TEST(Mask, FullObservationAndExpectedSize) {
    Rng rng(1);
    EXPECT_EQ(make_mask(20, 0.0, rng).observation_size(), 20);
    double total = 0.0;
    for (int rep = 0; rep < 200; ++rep) total += static_cast<double>(make_mask(100, 0.3, rng).observation_size());
    // Mean of 200 Binomial(100, 0.7) draws: sd 4.58 / sqrt(200).
    EXPECT_NEAR(total / 200.0, 70.0, 4.0 * 4.58 / std::sqrt(200.0));
    EXPECT_EQ(error_code_of([&] { make_mask(5, 1.0, rng); }), ErrorCode::InvalidProbability);
}

TEST(Mask, ConstructorValidates) {
    EXPECT_EQ(error_code_of([] { ObservationModel(3, {}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_code_of([] { ObservationModel(3, {0, 3}); }), ErrorCode::IndexOutOfRange);
    EXPECT_EQ(error_code_of([] { ObservationModel(3, {1, 1}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_code_of([] { ObservationModel(3, {1}, -1.0); }), ErrorCode::InvalidArgument);
    const ObservationModel m(4, {3, 1});
    EXPECT_EQ(m.row_of(3), 0);
    EXPECT_EQ(m.row_of(1), 1);
    EXPECT_EQ(m.row_of(0), -1);
    Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(2, 4);
    sel(0, 3) = sel(1, 1) = 1.0;
    EXPECT_EQ(m.selection_matrix(), sel);
}

TEST(Observe, SelectionWithoutNoise) {
    Rng rng(2);
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(8, 0.0, 7.0);
    EXPECT_EQ(observe(ObservationModel(8, {0, 1, 2, 3, 4, 5, 6, 7}), x, rng), x);
    EXPECT_EQ(observe(ObservationModel(8, {2, 5}), x, rng), Eigen::Vector2d(2.0, 5.0));
}

TEST(Observe, NoiseVariance) {
    Rng rng(3);
    const ObservationModel m(10, {0, 2, 4, 6, 8}, std::sqrt(0.1));
    const Eigen::MatrixXd x = gaussian_matrix(10, 20000, rng);
    const Eigen::MatrixXd resid = observe(m, x, rng) - m.selection_matrix() * x;
    const double var = resid.squaredNorm() / static_cast<double>(resid.size());
    EXPECT_NEAR(var, 0.1, 0.003);
}

TEST(Lmmse, TrivialGains) {
    const Index n = 6;
    const ObservationModel all(n, {0, 1, 2, 3, 4, 5});
    const LinearEstimator id = lmmse(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n), all, false);
    EXPECT_LT(max_abs(id.gain - Eigen::MatrixXd::Identity(n, n)), 1e-12);
    EXPECT_EQ(id.offset, Eigen::VectorXd::Zero(n));

    const LinearEstimator shrink =
        lmmse(Eigen::MatrixXd::Identity(n, n), {}, all.with_noise(std::sqrt(0.1)), true);
    EXPECT_LT(max_abs(shrink.gain - Eigen::MatrixXd::Identity(n, n) / 1.1), 1e-12);
}

TEST(Lmmse, OffsetCarriesMean) {
    Rng rng(4);
    const Instance inst = random_instance(5, 0.2, rng);
    const Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(5, 1.0, 2.0);
    const LinearEstimator est = lmmse(covariance(inst.model), mu, inst.mask);
    const Eigen::VectorXd y_mean = inst.mask.selection_matrix() * mu;
    EXPECT_LT((recover(est, y_mean) - mu).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(recover(est, Eigen::VectorXd(Eigen::VectorXd::Zero(inst.mask.observation_size()))), est.offset);
}

TEST(Lmmse, MatchesBruteForceRegression) {
    Rng rng(5);
    for (int rep = 0; rep < 3; ++rep) {
        const Instance inst = random_instance(5, std::sqrt(0.1), rng);
        const Eigen::MatrixXd x = sample(inst.model, 100000, rng);
        const Eigen::MatrixXd y = observe(inst.mask, x, rng);
        const LinearEstimator est = lmmse(covariance(inst.model), {}, inst.mask);
        EXPECT_LT(max_abs(est.gain - regression_gain(x, y)), 0.02) << "instance " << rep;
    }
}

TEST(Lmmse, SingularInnerMatrixUsesPseudoInverse) {
    // Rank-one covariance and no noise: M S M^T is singular.
    const Eigen::VectorXd v = Eigen::VectorXd::Ones(4) / 2.0;
    const Eigen::MatrixXd cov = v * v.transpose();
    const ObservationModel m(4, {0, 1});
    const LinearEstimator est = lmmse(cov, {}, m);
    EXPECT_TRUE(est.gain.allFinite());
    const Eigen::VectorXd x = 3.0 * v;
    EXPECT_LT((recover(est, Eigen::VectorXd(Eigen::Vector2d(x(0), x(1)))) - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lmmse, NoiseAwareGainIsNoWorse) {
    Rng rng(6);
    for (int rep = 0; rep < 3; ++rep) {
        const Instance inst = random_instance(5, 0.5, rng);
        const Eigen::MatrixXd cov = covariance(inst.model);
        const Eigen::MatrixXd x = sample(inst.model, 100000, rng);
        const Eigen::MatrixXd y = observe(inst.mask, x, rng);
        const double with = (recover(lmmse(cov, {}, inst.mask, true), y) - x).squaredNorm() / double(x.size());
        const double without = (recover(lmmse(cov, {}, inst.mask, false), y) - x).squaredNorm() / double(x.size());
        EXPECT_LE(with - without, 1e-3);
    }
}

TEST(Lmmse, BeatsZeroFillAndProjection) {
    Rng rng(7);
    const Instance inst = random_instance(8, std::sqrt(0.1), rng);
    const Eigen::MatrixXd x = sample(inst.model, 20000, rng);
    const Eigen::MatrixXd y = observe(inst.mask, x, rng);
    const Eigen::MatrixXd sel = inst.mask.selection_matrix();
    const double wiener = (recover(lmmse(covariance(inst.model), {}, inst.mask), y) - x).squaredNorm();
    const double zero_fill = (sel.transpose() * y - x).squaredNorm();
    // Projection: least-norm solution of y = M U_r c on the 3 smoothest modes.
    const Eigen::MatrixXd u3 = inst.model.basis.eigenvectors.leftCols(3);
    const Eigen::MatrixXd proj = u3 * (sel * u3).completeOrthogonalDecomposition().pseudoInverse();
    const double projection = (proj * y - x).squaredNorm();
    EXPECT_LT(wiener, zero_fill);
    EXPECT_LT(wiener, projection);
}

TEST(Recover, IsAffine) {
    Rng rng(8);
    const Instance inst = random_instance(6, 0.3, rng);
    const LinearEstimator est = lmmse(covariance(inst.model), Eigen::VectorXd::Ones(6), inst.mask);
    const Index d = inst.mask.observation_size();
    const Eigen::VectorXd y1 = gaussian_matrix(d, 1, rng).col(0);
    const Eigen::VectorXd y2 = gaussian_matrix(d, 1, rng).col(0);
    const double a = 0.3;
    const Eigen::VectorXd lhs = recover(est, Eigen::VectorXd(a * y1 + (1 - a) * y2));
    const Eigen::VectorXd rhs = a * recover(est, y1) + (1 - a) * recover(est, y2);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(recover(LinearEstimator{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3)},
                      Eigen::VectorXd(Eigen::Vector3d(1, 2, 3))),
              Eigen::VectorXd(Eigen::Vector3d(1, 2, 3)));
    EXPECT_EQ(error_code_of([&] { recover(est, Eigen::VectorXd(Eigen::VectorXd::Zero(d + 1))); }), ErrorCode::DimensionMismatch);
}

TEST(Mse, Examples) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1.0, 3.0);
    EXPECT_EQ(mse(x, x), 0.0);
    EXPECT_DOUBLE_EQ(mse(x, Eigen::VectorXd(x.array() + 1.0)), 1.0);
    EXPECT_EQ(error_code_of([&] { mse(x, Eigen::VectorXd::Zero(2)); }), ErrorCode::DimensionMismatch);
}
