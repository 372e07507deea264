#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sentiscope/esn.hpp"
#include "test_util.hpp"

using namespace sentiscope;

namespace {

/// Gaussian elimination with partial pivoting on the ridge normal equations.
std::vector<double> gauss_ridge(const Eigen::MatrixXd& s, const std::vector<double>& y, double alpha) {
    const auto n = static_cast<std::size_t>(s.cols());
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0;
            for (Eigen::Index t = 0; t < s.rows(); ++t)
                acc += s(t, static_cast<Eigen::Index>(i)) * s(t, static_cast<Eigen::Index>(j));
            a[i][j] = acc + (i == j ? alpha : 0.0);
        }
        double b = 0;
        for (Eigen::Index t = 0; t < s.rows(); ++t) b += s(t, static_cast<Eigen::Index>(i)) * y[static_cast<std::size_t>(t)];
        a[i][n] = b;
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> w(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = a[i][n];
        for (std::size_t k = i + 1; k < n; ++k) acc -= a[i][k] * w[k];
        w[i] = acc / a[i][i];
    }
    return w;
}

ReservoirConfig small(std::size_t n, std::uint64_t seed) {
    ReservoirConfig c;
    c.size = n;
    c.sparsity = 0.5;
    c.spectral_radius = 0.5;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(ReservoirConfig, Validation) {
    ReservoirConfig c;
    EXPECT_NO_THROW(c.validate());
    auto bad = c;
    bad.spectral_radius = 1.0;
    EXPECT_THROW(bad.validate(), Error);
    bad = c;
    bad.leak = 0.0;
    EXPECT_THROW(bad.validate(), Error);
    bad = c;
    bad.sparsity = 1.5;
    EXPECT_THROW(bad.validate(), Error);
    bad = c;
    bad.ridge = -1;
    EXPECT_THROW(bad.validate(), Error);
    bad = c;
    bad.size = 0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(BuildReservoir, ReferenceConfigRadius) {
    ReservoirConfig c;  // N 150, p_s 0.1, radius 0.1
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        c.seed = seed;
        auto r = build_reservoir(c);
        EXPECT_NEAR(r.achieved_radius, 0.1, 1e-6);
        EXPECT_NEAR(dense_spectral_radius(r.adjacency), 0.1, 1e-6);
    }
}

TEST(BuildReservoir, PowerIterationMatchesDenseAtN5) {
    int compared = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Reservoir r;
        try {
            r = build_reservoir(small(5, seed));
        } catch (const Error&) {
            continue;
        }
        ++compared;
        auto p = power_spectral_radius(r.adjacency);
        ASSERT_TRUE(p.converged) << seed;
        ASSERT_NEAR(p.radius, dense_spectral_radius(r.adjacency), 1e-8) << seed;
    }
    EXPECT_GE(compared, 20);
}

TEST(BuildReservoir, PowerIterationOnKnownSpectra) {
    Eigen::MatrixXd rot(2, 2);
    rot << 0.0, -0.8, 0.8, 0.0;  // eigenvalues +-0.8i
    EXPECT_NEAR(power_spectral_radius(rot).radius, 0.8, 1e-12);
    Eigen::MatrixXd flip = Eigen::MatrixXd::Zero(3, 3);
    flip.diagonal() << 0.5, -0.5, 0.1;
    EXPECT_NEAR(power_spectral_radius(flip).radius, 0.5, 1e-12);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd big(350, 350);
    for (Eigen::Index i = 0; i < big.size(); ++i) big.data()[i] = u(rng);
    EXPECT_NEAR(spectral_radius(big) / dense_spectral_radius(big), 1.0, 1e-8);
}

TEST(BuildReservoir, DegenerateDrawErrors) {
    ReservoirConfig c = small(5, 1);
    c.sparsity = 1e-12;
    try {
        build_reservoir(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("degenerate reservoir, reseed or raise p_s"), std::string::npos);
    }
}

TEST(BuildReservoir, SparsityAndDeterminism) {
    ReservoirConfig c;
    c.size = 200;
    c.sparsity = 0.1;
    c.seed = 9;
    auto a = build_reservoir(c), b = build_reservoir(c);
    EXPECT_EQ(a.adjacency, b.adjacency);
    EXPECT_EQ(a.input_weights, b.input_weights);
    const double frac = static_cast<double>((a.adjacency.array() != 0.0).count()) / (200.0 * 200.0);
    EXPECT_NEAR(frac, 0.1, 0.01);
    EXPECT_LE(a.input_weights.cwiseAbs().maxCoeff(), c.input_scale);
    c.seed = 10;
    EXPECT_NE(build_reservoir(c).adjacency, a.adjacency);
}

TEST(RunStates, ZeroInputStaysAtZero) {
    auto r = build_reservoir(small(10, 2));
    std::vector<double> x(50, 0.0);
    EXPECT_TRUE(run_states(r, 0.5, x).isZero(0.0));
}

TEST(RunStates, FullLeakIsPlainTanhRecursion) {
    auto r = build_reservoir(small(8, 3));
    std::mt19937_64 rng(1);
    auto x = testutil::uniform_vec(rng, 20);
    auto s = run_states(r, 1.0, x);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(8);
    for (std::size_t t = 0; t < x.size(); ++t) {
        u = (r.adjacency * u + r.input_weights * x[t]).array().tanh();
        ASSERT_EQ(s.row(static_cast<Eigen::Index>(t)).transpose(), u);
    }
}

TEST(RunStates, HandComputedTwoUnitRecursion) {
    Reservoir r;
    r.adjacency.resize(2, 2);
    r.adjacency << 0.2, -0.1, 0.05, 0.3;
    r.input_weights.resize(2);
    r.input_weights << 0.7, -0.4;
    const double psi = 0.6;
    const std::vector<double> x = {1.0, -0.5, 2.0};
    auto s = run_states(r, psi, x);
    double u1 = 0, u2 = 0;
    for (int t = 0; t < 3; ++t) {
        const double a1 = std::tanh(0.2 * u1 - 0.1 * u2 + 0.7 * x[t]);
        const double a2 = std::tanh(0.05 * u1 + 0.3 * u2 - 0.4 * x[t]);
        u1 = (1 - psi) * u1 + psi * a1;
        u2 = (1 - psi) * u2 + psi * a2;
        EXPECT_NEAR(s(t, 0), u1, 1e-12);
        EXPECT_NEAR(s(t, 1), u2, 1e-12);
    }
}

TEST(RunStates, NonFiniteInputErrors) {
    auto r = build_reservoir(small(4, 5));
    std::vector<double> x = {0.1, NAN};
    EXPECT_THROW(run_states(r, 0.5, x), Error);
}

TEST(RunStates, StatesBoundedByOne) {
    std::mt19937_64 rng(8);
    for (double psi : {0.1, 0.5, 1.0}) {
        ReservoirConfig c;
        c.size = 30;
        c.spectral_radius = 0.9;
        c.input_scale = 5.0;
        c.sparsity = 0.5;
        auto r = build_reservoir(c);
        auto x = testutil::uniform_vec(rng, 300, -10, 10);
        EXPECT_LE(run_states(r, psi, x).cwiseAbs().maxCoeff(), 1.0);
    }
}

TEST(RunStates, FadingMemory) {
    std::mt19937_64 rng(12);
    for (double lam : {0.1, 0.5, 0.9})
        for (double psi : {0.5, 0.9, 1.0}) {
            ReservoirConfig c;
            c.size = 50;
            c.spectral_radius = lam;
            c.leak = psi;
            c.sparsity = 0.2;
            c.seed = 77;
            auto r = build_reservoir(c);
            auto x = testutil::uniform_vec(rng, 500, -2, 2);
            Eigen::VectorXd a = Eigen::VectorXd::Map(testutil::uniform_vec(rng, 50).data(), 50);
            Eigen::VectorXd b = Eigen::VectorXd::Map(testutil::uniform_vec(rng, 50).data(), 50);
            auto sa = run_states(r, psi, x, &a), sb = run_states(r, psi, x, &b);
            EXPECT_LT((sa.row(499) - sb.row(499)).norm(), 1e-6) << lam << " " << psi;
        }
}

TEST(TrainReadout, MatchesGaussOracle) {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::MatrixXd s(200, 20);
        for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = testutil::uniform_vec(rng, 1)[0];
        auto y = testutil::uniform_vec(rng, 200);
        for (double alpha : {1e-3, 0.1, 10.0}) {
            auto w = train_readout(s, y, alpha);
            auto o = gauss_ridge(s, y, alpha);
            for (std::size_t i = 0; i < o.size(); ++i) ASSERT_NEAR(w[static_cast<Eigen::Index>(i)], o[i], 1e-8);
        }
    }
}

TEST(TrainReadout, HandSolvedTwoByTwo) {
    // S^T S = [[2, 1], [1, 2]], S^T y = [3, 3]; with alpha 1: [[3,1],[1,3]] w = [3,3] -> w = (0.75, 0.75).
    Eigen::MatrixXd s(3, 2);
    s << 1, 0, 0, 1, 1, 1;
    std::vector<double> y = {1, 1, 2};
    auto w = train_readout(s, y, 1.0);
    EXPECT_NEAR(w[0], 0.75, 1e-10);
    EXPECT_NEAR(w[1], 0.75, 1e-10);
}

TEST(TrainReadout, ShrinkageExactFitAndSingularity) {
    std::mt19937_64 rng(14);
    Eigen::MatrixXd s(100, 10);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = testutil::uniform_vec(rng, 1)[0];
    auto y = testutil::uniform_vec(rng, 100);
    EXPECT_LE(train_readout(s, y, 1e12).norm(), 1e-6);

    Eigen::VectorXd w_true = Eigen::VectorXd::LinSpaced(10, -1, 1);
    Eigen::VectorXd yl = s * w_true;
    std::vector<double> yv(yl.data(), yl.data() + yl.size());
    auto w = train_readout(s, yv, 0.0);
    Eigen::VectorXd fit = s * w;
    std::vector<double> pred(fit.data(), fit.data() + fit.size());
    double mean = 0;
    for (double v : yv) mean += v;
    for (auto& v : yv) v += 5.0;  // keep the NRMSE denominator away from zero
    for (auto& v : pred) v += 5.0;
    EXPECT_LE(nrmse(pred, yv), 1e-8);

    Eigen::MatrixXd sing(50, 3);
    sing.col(0).setOnes();
    sing.col(1).setOnes();
    sing.col(2).setLinSpaced(50, 0, 1);
    try {
        train_readout(sing, std::vector<double>(50, 1.0), 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("ridge > 0"), std::string::npos);
    }
    EXPECT_NO_THROW(train_readout(sing, std::vector<double>(50, 1.0), 1e-6));
}

TEST(TrainReadout, WashoutAndShortDataWarning) {
    Eigen::MatrixXd s(5, 2);
    s << 100, 100, 1, 0, 0, 1, 1, 1, 2, 1;
    std::vector<double> y = {1000, 1, 1, 2, 3};
    auto w = train_readout(s, y, 0.0, 1);
    EXPECT_NEAR(w[0], 1.0, 1e-10);
    EXPECT_NEAR(w[1], 1.0, 1e-10);
    testutil::WarningLog log;
    train_readout(s, y, 1.0, 4);
    EXPECT_EQ(log.messages.size(), 1u);
}

TEST(EsnModel, UntrainedPredictErrors) {
    EsnModel m(small(5, 1), build_reservoir(small(5, 1)));
    EXPECT_FALSE(m.trained());
    EXPECT_THROW(m.predict(std::vector<double>{1, 2, 3}), Error);
}

TEST(EsnModel, ZeroReadoutPredictsTargetMean) {
    auto cfg = small(6, 2);
    EsnModel m(cfg, build_reservoir(cfg));
    Readout r{Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6), {42.5, 3.0}};
    m.set_readout(r);
    for (double p : m.predict(std::vector<double>{0.3, -1, 7, 2})) EXPECT_EQ(p, 42.5);
}

TEST(EsnModel, RecoversScaledFirstStateCoordinate) {
    ReservoirConfig cfg = small(20, 3);
    cfg.ridge = 1e-10;
    const auto res = build_reservoir(cfg);
    std::mt19937_64 rng(2);
    auto x = testutil::uniform_vec(rng, 300, 0, 10);
    const auto states = run_states(res, cfg.leak, Normalization::fit(x).apply(x));
    std::vector<double> y(300);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 3.0 * states(static_cast<Eigen::Index>(t), 0);
    EsnModel m(cfg, res);
    m.fit(x, y);
    auto p = m.predict(x);
    for (std::size_t t = 0; t < y.size(); ++t) ASSERT_NEAR(p[t], y[t], 1e-6);
}

TEST(EsnModel, ReproducibleAndSerializable) {
    ReservoirConfig cfg = small(30, 4);
    std::mt19937_64 rng(5);
    auto x = testutil::uniform_vec(rng, 200);
    auto y = testutil::uniform_vec(rng, 200, 1, 3);
    auto a = EsnModel::train(cfg, x, y), b = EsnModel::train(cfg, x, y);
    EXPECT_EQ(a.predict(x), b.predict(x));
    std::stringstream ss;
    a.save(ss);
    auto c = EsnModel::load(ss);
    EXPECT_EQ(c.config(), cfg);
    EXPECT_EQ(c.reservoir().adjacency, a.reservoir().adjacency);
    EXPECT_EQ(c.predict(x), a.predict(x));
    std::istringstream junk("not a model");
    EXPECT_THROW(EsnModel::load(junk), Error);
}

TEST(Nrmse, Examples) {
    const std::vector<double> obs = {1, 1}, pred = {2, 2};
    EXPECT_EQ(nrmse(obs, obs), 0.0);
    EXPECT_EQ(nrmse(pred, obs), 1.0);
    try {
        nrmse(std::vector<double>{1, -1}, std::vector<double>{1, -1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(),
                     "NRMSE undefined for zero-mean series; z-scoring the target is disallowed for this metric");
    }
    EXPECT_THROW(nrmse(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(RidgeStats, FoldSubtractionMatchesDirectFit) {
    std::mt19937_64 rng(6);
    Eigen::MatrixXd s(90, 8);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = testutil::uniform_vec(rng, 1)[0];
    auto y = testutil::uniform_vec(rng, 90, 2, 4);
    auto all = RidgeStats::from_rows(s, y);
    auto tail = RidgeStats::from_rows(s.bottomRows(30), std::span<const double>(y).subspan(60));
    auto head = all;
    head -= tail;
    auto direct = solve_readout(RidgeStats::from_rows(s.topRows(60), std::span<const double>(y).first(60)), 0.5);
    auto folded = solve_readout(head, 0.5);
    EXPECT_LT((direct.weights - folded.weights).norm(), 1e-10);
    EXPECT_NEAR(direct.target.mean, folded.target.mean, 1e-12);
}
