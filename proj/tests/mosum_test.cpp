#include "mosumseg/errors.hpp"
#include "mosumseg/mosum.hpp"
#include "mosumseg/simlab.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace mosumseg {
namespace {

std::vector<double> step(std::size_t n, std::size_t at, double before, double after) {
    std::vector<double> x(n, before);
    for (std::size_t i = at; i < n; ++i) {
        x[i] = after;
    }
    return x;
}

ScanConfig known_config(std::size_t G, Statistic stat, Inspection insp = Inspection::global()) {
    ScanConfig c;
    c.G = G;
    c.statistic = stat;
    c.inspection = std::move(insp);
    c.scaling = ScalingPolicy::known_scalar(1.0);
    return c;
}

TEST(MovingScoreSums, MatchesNaiveSums) {
    std::mt19937_64 rng(3);
    for (const std::size_t G : {1ul, 2ul, 7ul, 25ul}) {
        const RowMatrix h = testing::normal_matrix(rng, 120, 3);
        const RowMatrix fast = moving_score_sums(h, G);
        const RowMatrix slow = testing::naive_moving_sums(h, G);
        ASSERT_EQ(fast.rows(), slow.rows());
        EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-9) << G;
    }
}

TEST(MovingScoreSums, Impulse) {
    RowMatrix h = RowMatrix::Zero(10, 1);
    h(4, 0) = 1.0;
    const RowMatrix m = moving_score_sums(h, 2);
    // Row j <-> k = 2 + j; the impulse at zero-based 4 is in the right window
    // for k = 3, 4 and in the left window for k = 5, 6.
    const std::vector<double> expected{0.0, 1.0, 1.0, -1.0, -1.0, 0.0, 0.0};
    ASSERT_EQ(static_cast<std::size_t>(m.rows()), expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j) {
        EXPECT_EQ(m(static_cast<Eigen::Index>(j), 0), expected[j]) << j;
    }
}

TEST(MovingScoreSums, ZeroScoresGiveZero) {
    const RowMatrix m = moving_score_sums(RowMatrix::Zero(30, 2), 5);
    EXPECT_EQ(m.rows(), 21);
    EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MovingScoreSums, RejectsShortInput) {
    EXPECT_THROW(moving_score_sums(RowMatrix::Zero(5, 1), 3), UsageError);
    EXPECT_THROW(moving_score_sums(RowMatrix::Zero(5, 1), 0), UsageError);
}

TEST(Scan, NoiselessStepBothStatistics) {
    const auto x = step(100, 50, 0.0, 10.0);
    const Dataset d = Dataset::univariate(x);
    const MeanModel model;
    const ScanResult score = scan(d, model, known_config(20, Statistic::Score, Inspection::fixed(Vector::Zero(1))));
    const ScanResult wald = scan(d, model, known_config(20, Statistic::Wald));
    EXPECT_NEAR(score.at(50), 31.6228, 1e-4);
    EXPECT_NEAR(wald.at(50), 31.6228, 1e-4);
    EXPECT_NEAR(score.at(50), 200.0 / std::sqrt(40.0), 1e-12);
}

TEST(Scan, LengthAndNonNegativity) {
    std::mt19937_64 rng(10);
    const auto x = testing::normal_series(rng, 333);
    const Dataset d = Dataset::univariate(x);
    for (const auto stat : {Statistic::Score, Statistic::Wald}) {
        ScanConfig c;
        c.G = 40;
        c.statistic = stat;
        c.scaling.kind = stat == Statistic::Score ? ScalingKind::ScoreLocal : ScalingKind::WaldLocal;
        const ScanResult r = scan(d, MeanModel(), c);
        ASSERT_EQ(r.stats.size(), 333u - 80u + 1u);
        EXPECT_EQ(r.first_k(), 40u);
        EXPECT_EQ(r.last_k(), 293u);
        for (const double t : r.stats) {
            EXPECT_TRUE(std::isfinite(t));
            EXPECT_GE(t, 0.0);
        }
    }
}

TEST(Scan, WaldEqualsScoreForMeanModel) {
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        const auto x = testing::normal_series(rng, 200, 0.5, 1.5);
        const Dataset d = Dataset::univariate(x);
        for (const bool local : {false, true}) {
            ScanConfig s = known_config(30, Statistic::Score);
            ScanConfig w = known_config(30, Statistic::Wald);
            if (local) {
                s.scaling.kind = ScalingKind::ScoreLocal;
                w.scaling.kind = ScalingKind::WaldLocal;
            }
            const ScanResult a = scan(d, MeanModel(), s);
            const ScanResult b = scan(d, MeanModel(), w);
            for (std::size_t j = 0; j < a.stats.size(); ++j) {
                ASSERT_NEAR(a.stats[j], b.stats[j], 1e-9 * std::max(1.0, a.stats[j])) << rep << " j=" << j;
            }
        }
    }
}

TEST(Scan, ConstantDataIsZero) {
    const std::vector<double> x(80, 3.0);
    const Dataset d = Dataset::univariate(x);
    const ScanResult s = scan(d, MeanModel(), known_config(10, Statistic::Score));
    const ScanResult w = scan(d, MeanModel(), known_config(10, Statistic::Wald));
    for (std::size_t j = 0; j < s.stats.size(); ++j) {
        EXPECT_EQ(s.stats[j], 0.0);
        EXPECT_EQ(w.stats[j], 0.0);
    }
}

TEST(Scan, InterceptOnlyRegressionOnConstantResponse) {
    const std::size_t n = 60;
    const std::vector<double> y(n, 2.0);
    const RowMatrix design = RowMatrix::Ones(static_cast<Eigen::Index>(n), 1);
    const Dataset d = Dataset::regression_design(y, design);
    const ScanResult r = scan(d, LinearRegressionModel(1), known_config(10, Statistic::Score));
    for (const double t : r.stats) {
        EXPECT_EQ(t, 0.0);
    }
}

TEST(Scan, MedianLikeShiftInvariance) {
    std::mt19937_64 rng(14);
    const auto x = testing::normal_series(rng, 150);
    std::vector<double> shifted(x);
    for (auto& v : shifted) {
        v += 5.0;
    }
    ScanConfig c;
    c.G = 25;
    const ScanResult a = scan(Dataset::univariate(x), MedianLikeModel(), c);
    const ScanResult b = scan(Dataset::univariate(shifted), MedianLikeModel(), c);
    for (std::size_t j = 0; j < a.stats.size(); ++j) {
        EXPECT_NEAR(a.stats[j], b.stats[j], 1e-9) << j;
    }
}

TEST(Scan, SignalRowsMatchStatistics) {
    std::mt19937_64 rng(15);
    const auto x = testing::normal_series(rng, 100);
    const ScanResult r = scan(Dataset::univariate(x), MeanModel(), known_config(20, Statistic::Score));
    for (std::size_t j = 0; j < r.stats.size(); ++j) {
        EXPECT_NEAR(r.stats[j], std::abs(r.signal(static_cast<Eigen::Index>(j), 0)) / std::sqrt(40.0), 1e-12);
    }
}

// Count series with a long run of zeros: the Wald window fits inside the run fail.
Dataset counts_with_zero_run() {
    Scenario sc;
    sc.kind = ScenarioKind::Inarch;
    sc.n = 400;
    sc.segment_params = {Vector{{2.0, 0.3}}};
    SimulatedSeries s = gen_inarch(sc, 5);
    for (std::size_t i = 200; i < 240; ++i) {
        s.values[i] = 0.0;
    }
    return s.dataset();
}

TEST(Scan, WaldFitFailuresBecomeNaN) {
    const Dataset d = counts_with_zero_run();
    ScanConfig c;
    c.G = 30;
    c.statistic = Statistic::Wald;
    c.scaling.kind = ScalingKind::InarchGamma;
    c.max_missing_fraction = 1.0;
    const ScanResult r = scan(d, InarchModel(), c);
    std::size_t nan = 0;
    for (const double t : r.stats) {
        nan += std::isnan(t) ? 1 : 0;
    }
    EXPECT_GT(nan, 0u);
    std::size_t flagged = 0;
    for (const auto& w : r.warnings) {
        flagged += w.flag == "fit-failure" ? 1 : 0;
    }
    EXPECT_EQ(flagged, nan);

    c.max_missing_fraction = 0.01;
    EXPECT_THROW(scan(d, InarchModel(), c), NumericalError);
}

TEST(Scan, RejectsBadBandwidth) {
    const std::vector<double> x(20, 1.0);
    const Dataset d = Dataset::univariate(x);
    EXPECT_THROW(scan(d, MeanModel(), known_config(10, Statistic::Score)), UsageError);
    EXPECT_THROW(scan(d, MeanModel(), known_config(0, Statistic::Score)), UsageError);
}

TEST(Scan, ScalingKindMustMatchStatistic) {
    std::mt19937_64 rng(2);
    const auto x = testing::normal_series(rng, 60);
    const Dataset d = Dataset::univariate(x);
    ScanConfig c;
    c.G = 10;
    c.statistic = Statistic::Wald;
    c.scaling.kind = ScalingKind::ScoreLocal;
    EXPECT_THROW(scan(d, MeanModel(), c), UsageError);
    c.statistic = Statistic::Score;
    c.scaling.kind = ScalingKind::WaldLocal;
    EXPECT_THROW(scan(d, MeanModel(), c), UsageError);
}

TEST(ResolveInspection, RangeAndFixed) {
    const std::vector<double> x{1.0, 2.0, 3.0, 10.0, 20.0};
    const Dataset d = Dataset::univariate(x);
    EXPECT_DOUBLE_EQ(resolve_inspection(d, MeanModel(), Inspection::on_range(Window::inclusive(1, 3)))(0), 2.0);
    EXPECT_DOUBLE_EQ(resolve_inspection(d, MeanModel(), Inspection::fixed(Vector::Constant(1, 4.0)))(0), 4.0);
    EXPECT_THROW(resolve_inspection(d, MeanModel(), Inspection::on_range({2, 9})), UsageError);
}

} // namespace
} // namespace mosumseg
