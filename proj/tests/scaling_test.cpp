#include "mosumseg/errors.hpp"
#include "mosumseg/scaling.hpp"
#include "mosumseg/simlab.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace mosumseg {
namespace {

ScalingPolicy no_ridge(ScalingKind kind = ScalingKind::ScoreLocal) {
    ScalingPolicy p;
    p.kind = kind;
    p.allow_ridge = false;
    return p;
}

TEST(InvSqrt, Identity) {
    EXPECT_TRUE(inv_sqrt(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-14));
}

TEST(InvSqrt, Diagonal) {
    Matrix m = Matrix::Zero(2, 2);
    m.diagonal() << 4.0, 9.0;
    const Matrix r = inv_sqrt(m);
    EXPECT_NEAR(r(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(r(1, 1), 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(InvSqrt, RoundTripOnRandomSpd) {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t p = 1 + static_cast<std::size_t>(rep % 5);
        const Matrix m = testing::random_spd(rng, p);
        const Matrix r = inv_sqrt(m);
        const Matrix back = r * m * r;
        EXPECT_LT((back - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff(), 1e-8) << rep;
        EXPECT_LT((r - r.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(InvSqrt, RejectsIndefinite) {
    Matrix m(2, 2);
    m << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(inv_sqrt(m), SingularScaling);
    EXPECT_NO_THROW(inv_sqrt(m, 1.5));
}

TEST(InvSqrt, RejectsAsymmetric) {
    Matrix m(2, 2);
    m << 1.0, 0.5, 0.0, 1.0;
    EXPECT_THROW(inv_sqrt(m), UsageError);
}

TEST(MakeScaling, RidgeOnlyForNearSingular) {
    Matrix m = Matrix::Zero(2, 2);
    m.diagonal() << 1.0, 1e-14;
    const ScalingAtK ridged = make_scaling(5, m);
    EXPECT_TRUE(ridged.ridged);
    EXPECT_THROW(make_scaling(5, m, no_ridge()), SingularScaling);
    m(1, 1) = 1e-6;
    EXPECT_FALSE(make_scaling(5, m).ridged);
}

TEST(MakeScaling, PrecisionForm) {
    std::mt19937_64 rng(2);
    const Matrix p = testing::random_spd(rng, 3);
    const ScalingAtK s = make_scaling_from_precision(0, p);
    EXPECT_LT((s.matrix * p - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((s.inv_sqrt * s.inv_sqrt - p).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ScoreCovLocal, ConstantSeriesIsSingular) {
    const std::vector<double> x(40, 2.0);
    const Dataset d = Dataset::univariate(x);
    EXPECT_THROW(score_cov_local(d, MeanModel(), Vector::Constant(1, 0.0), 20, 10, no_ridge()), SingularScaling);
    EXPECT_THROW(score_cov_local(d, MeanModel(), Vector::Constant(1, 0.0), 20, 10), SingularScaling);
}

TEST(ScoreCovLocal, MatchesTwoPassOracle) {
    std::mt19937_64 rng(31);
    const std::size_t n = 300;
    const std::size_t G = 40;
    const RowMatrix x = testing::normal_matrix(rng, n, 3);
    const Dataset d = Dataset::multivariate(x);
    const MultivariateMeanModel model(3);
    const Vector theta{{0.1, -0.2, 0.3}};
    const RowMatrix h = score_series(model, d, theta);
    for (std::size_t k = G; k <= n - G; k += 37) {
        const Matrix oracle = (testing::centered_scatter(h, k - G, k) + testing::centered_scatter(h, k, k + G)) /
                              (2.0 * static_cast<double>(G));
        const ScalingAtK s = score_cov_local(d, model, theta, k, G);
        EXPECT_LT((s.matrix - oracle).cwiseAbs().maxCoeff(), 1e-12) << k;
    }
}

TEST(ScoreCovLocal, ConsistentForIidScores) {
    std::mt19937_64 rng(77);
    const std::size_t n = 1000;
    const std::size_t G = 500;
    Matrix c(2, 2);
    c << 2.0, 0.6, 0.6, 1.0;
    const Eigen::LLT<Matrix> llt(c);
    const RowMatrix z = testing::normal_matrix(rng, n, 2);
    const RowMatrix x = z * llt.matrixL().transpose();
    const Dataset d = Dataset::multivariate(x);
    const ScalingAtK s = score_cov_local(d, MultivariateMeanModel(2), Vector::Zero(2), G, G);
    EXPECT_LT((s.matrix - c).norm(), 0.15 * c.norm());
}

TEST(ScoreCovLocal, InvariantToConstantShiftOfScores) {
    // Integer data and shifts keep every sum exact.
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> draw(-20, 20);
    std::vector<double> x(120);
    for (auto& v : x) {
        v = draw(rng);
    }
    const Dataset d = Dataset::univariate(x);
    const MeanModel model;
    for (std::size_t k = 30; k <= 90; k += 15) {
        const Matrix a = score_cov_local(d, model, Vector::Constant(1, 0.0), k, 30).matrix;
        const Matrix b = score_cov_local(d, model, Vector::Constant(1, 7.0), k, 30).matrix;
        EXPECT_EQ(a, b) << k;
    }
}

TEST(ScoreCovLocal, BoundedAtChangesInCountScenario) {
    const Scenario sc = table3_scenario();
    const Dataset d = generate(sc, 5).dataset();
    const InarchModel model;
    const Vector theta = model.fit(d, Window::inclusive(300, 700));
    for (const std::size_t k : sc.change_points) {
        const ScalingAtK s = score_cov_local(d, model, theta, k, 150);
        const Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix);
        EXPECT_GT(es.eigenvalues().minCoeff(), 1e-8);
        EXPECT_LT(es.eigenvalues().maxCoeff(), 1e8);
    }
}

TEST(ScoreCovGlobal, MeanIsSampleVariance) {
    const std::vector<double> x{1.0, 2.0, 4.0, 7.0};
    const ScalingAtK s = score_cov_global(Dataset::univariate(x), MeanModel(), Vector::Constant(1, 0.0));
    EXPECT_NEAR(s.matrix(0, 0), 7.0, 1e-12);  // mean 3.5, sum of squares 21, n - 1 = 3
}

TEST(ScoreCovGlobal, MatchesTwoPassOracle) {
    std::mt19937_64 rng(9);
    const RowMatrix x = testing::normal_matrix(rng, 250, 2);
    const Dataset d = Dataset::multivariate(x);
    const MultivariateMeanModel model(2, MultivariateMeanModel::Component::MedianLike);
    const Vector theta{{0.3, -0.1}};
    const RowMatrix h = score_series(model, d, theta);
    const Matrix oracle = testing::centered_scatter(h, 0, 250) / 249.0;
    EXPECT_LT((score_cov_global(d, model, theta).matrix - oracle).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ScoreCovGlobal, LinregZeroResidualsAreSingular) {
    std::mt19937_64 rng(1);
    const RowMatrix x = testing::normal_matrix(rng, 50, 2);
    std::vector<double> y(50);
    for (std::size_t i = 0; i < 50; ++i) {
        y[i] = 1.0 + x(static_cast<Eigen::Index>(i), 0) - x(static_cast<Eigen::Index>(i), 1);
    }
    const Dataset d = Dataset::regression(y, x);
    const Vector beta{{1.0, 1.0, -1.0}};
    EXPECT_THROW(score_cov_global(d, LinearRegressionModel(3), beta), SingularScaling);
    EXPECT_THROW(score_cov_local(d, LinearRegressionModel(3), beta, 25, 20), SingularScaling);
}

TEST(WaldLocalGamma, MeanModelEqualsWindowVariance) {
    std::mt19937_64 rng(12);
    const auto x = testing::normal_series(rng, 200, 1.0, 2.0);
    const Dataset d = Dataset::univariate(x);
    const MeanModel model;
    for (std::size_t k = 50; k <= 150; k += 25) {
        const Vector left = model.fit(d, {k - 50, k});
        const Vector right = model.fit(d, {k, k + 50});
        const ScalingAtK s = wald_local_gamma(d, model, k, 50, left, right);
        EXPECT_NEAR(s.matrix(0, 0), mosum_window_variance(x, k, 50), 1e-12) << k;
    }
}

TEST(WaldLocalGamma, NoiselessRegressionIsSingular) {
    Scenario sc = table2_scenario();
    sc.noise_sd = 0.0;
    const Dataset d = generate(sc, 3).dataset();
    const LinearRegressionModel model(3);
    const Vector left = model.fit(d, {100, 200});
    const Vector right = model.fit(d, {200, 300});
    EXPECT_THROW(wald_local_gamma(d, model, 200, 100, left, right, no_ridge(ScalingKind::WaldLocal)),
                 SingularScaling);
}

TEST(WaldLocalGamma, RegressionScenarioIsWellConditioned) {
    const Dataset d = generate(table2_scenario(), 8).dataset();
    const LinearRegressionModel model(3);
    const std::size_t G = 100;
    for (std::size_t k = G; k + G <= d.size(); k += 13) {
        const ScalingAtK s = wald_local_gamma(d, model, k, G, model.fit(d, {k - G, k}), model.fit(d, {k, k + G}));
        const Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix);
        EXPECT_GT(es.eigenvalues().minCoeff(), 1e-6) << k;
        EXPECT_LT(es.eigenvalues().maxCoeff(), 1e6) << k;
    }
}

TEST(InarchGamma, DegenerateWindowsAreSingular) {
    const std::vector<double> zeros(40, 0.0);
    const Dataset z = Dataset::inarch(0.0, zeros);
    const Vector theta{{1.0, 0.5}};
    EXPECT_THROW(inarch_gamma(z, 20, 20, theta, theta, no_ridge(ScalingKind::InarchGamma)), SingularScaling);
    const std::vector<double> constant(40, 4.0);
    const Dataset c = Dataset::inarch(4.0, constant);
    EXPECT_THROW(inarch_gamma(c, 20, 20, theta, theta, no_ridge(ScalingKind::InarchGamma)), SingularScaling);
}

TEST(InarchGamma, PositiveDefiniteAwayFromChanges) {
    const Dataset d = generate(table3_scenario(), 21).dataset();
    const InarchModel model;
    const std::size_t G = 150;
    for (const std::size_t k : {160ul, 400ul, 620ul, 850ul}) {
        const ScalingAtK s = inarch_gamma(d, k, G, model.fit(d, {k - G, k}), model.fit(d, {k, k + G}),
                                          no_ridge(ScalingKind::InarchGamma));
        const Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix);
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << k;
        EXPECT_FALSE(s.ridged);
    }
}

TEST(MosumWindowVariance, AveragesWindowVariances) {
    // Left window variance 1, right window variance 4.
    const std::vector<double> x{-1.0, 1.0, -1.0, 1.0, -2.0, 2.0, -2.0, 2.0};
    EXPECT_DOUBLE_EQ(mosum_window_variance(x, 4, 4), 2.5);
}

TEST(MosumWindowVariance, ConstantWindowsThrow) {
    const std::vector<double> x{1.0, 1.0, 1.0, 5.0, 5.0, 5.0};
    EXPECT_THROW(mosum_window_variance(x, 3, 3), SingularScaling);
    EXPECT_THROW(mosum_window_variance(x, 2, 3), UsageError);
}

TEST(MosumWindowVariance, ConsistentUnderNormalNoise) {
    std::mt19937_64 rng(45);
    const auto x = testing::normal_series(rng, 1000);
    EXPECT_NEAR(mosum_window_variance(x, 500, 500), 1.0, 0.15);
}

void expect_rolling_matches_direct(const Dataset& d, const EstimatingModel& model, const Vector& theta,
                                   std::size_t G) {
    const RowMatrix h = score_series(model, d, theta);
    ScalingPolicy policy;
    ScoreScalingSeries rolling(d, model, theta, h, G, policy);
    for (std::size_t k = G; k + G <= d.size(); ++k) {
        const Matrix a = rolling.at(k).matrix;
        const Matrix b = score_cov_local(d, model, theta, k, G, policy).matrix;
        ASSERT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()))
            << model.name() << " k=" << k;
    }
}

TEST(ScoreScalingSeries, RollingMatchesDirect) {
    std::mt19937_64 rng(6);
    expect_rolling_matches_direct(Dataset::multivariate(testing::normal_matrix(rng, 150, 2)),
                                  MultivariateMeanModel(2), Vector{{0.2, 0.1}}, 25);
    const auto x = testing::normal_series(rng, 150);
    expect_rolling_matches_direct(Dataset::univariate(x), MedianLikeModel(), Vector::Constant(1, 0.3), 30);
    const Dataset reg = generate(table2_scenario(), 4).dataset();
    expect_rolling_matches_direct(reg, LinearRegressionModel(3), Vector{{1.0, 1.0, 1.0}}, 100);
    const Dataset counts = generate(table3_scenario(), 4).dataset();
    expect_rolling_matches_direct(counts, InarchModel(), Vector{{1.0, 0.5}}, 150);
}

TEST(ScoreScalingSeries, RejectsWaldOnlyKinds) {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const Dataset d = Dataset::univariate(x);
    const MeanModel model;
    const RowMatrix h = score_series(model, d, Vector::Zero(1));
    ScalingPolicy p;
    p.kind = ScalingKind::WaldLocal;
    EXPECT_THROW(ScoreScalingSeries(d, model, Vector::Zero(1), h, 2, p), UsageError);
}

TEST(ScalingKindNames, RoundTrip) {
    for (const auto kind : {ScalingKind::Known, ScalingKind::ScoreGlobal, ScalingKind::ScoreLocal,
                            ScalingKind::WaldLocal, ScalingKind::InarchGamma, ScalingKind::MosumWindowVariance}) {
        EXPECT_EQ(parse_scaling_kind(to_string(kind)), kind);
    }
    EXPECT_THROW(parse_scaling_kind("bogus"), UsageError);
}

} // namespace
} // namespace mosumseg
