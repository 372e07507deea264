#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sentiscope/ccm.hpp"
#include "sentiscope/synthetic.hpp"
#include "test_util.hpp"

using namespace sentiscope;

namespace {

double two_pass_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

ReservoirConfig rich() {
    ReservoirConfig c;
    c.size = 100;
    c.spectral_radius = 0.9;
    c.leak = 0.9;
    c.sparsity = 0.4;
    c.ridge = 1e-3;
    c.input_scale = 0.6;
    c.seed = 1;
    return c;
}

std::vector<double> shift_left(const std::vector<double>& v, std::size_t k) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[std::min(i + k, v.size() - 1)];
    return out;
}

}  // namespace

TEST(AlignWindow, Examples) {
    auto w = align_window(100, 5);
    EXPECT_EQ(w.first, 1u);
    EXPECT_EQ(w.last, 95u);
    EXPECT_EQ(w.target_first(), 6u);
    EXPECT_EQ(w.target_last(), 100u);
    w = align_window(100, -3);
    EXPECT_EQ(w.first, 4u);
    EXPECT_EQ(w.last, 100u);
    EXPECT_EQ(w.target_first(), 1u);
    w = align_window(100, 0);
    EXPECT_EQ(w.length(), 100u);
    EXPECT_THROW(align_window(5, 5), Error);
    EXPECT_THROW(align_window(5, -7), Error);
}

TEST(AlignWindow, IndicesStayInRangeForAllLags) {
    for (std::size_t T = 1; T <= 40; ++T)
        for (int tau = -static_cast<int>(T) + 1; tau < static_cast<int>(T); ++tau) {
            auto w = align_window(T, tau);
            ASSERT_EQ(w.length(), T - static_cast<std::size_t>(std::abs(tau)));
            ASSERT_GE(w.first, 1u);
            ASSERT_LE(w.last, T);
            ASSERT_GE(w.target_first(), 1u);
            ASSERT_LE(w.target_last(), T);
        }
}

TEST(LagGrid, Validation) {
    EXPECT_EQ(LagGrid{}.lags().size(), 61u);
    EXPECT_THROW((LagGrid{0, 5}.validate()), Error);
    EXPECT_THROW((LagGrid{-5, 0}.validate()), Error);
}

TEST(Pearson, Examples) {
    EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4}), 0.98198050606, 1e-10);
    EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0, 1e-15);
    try {
        pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("constant series"), std::string::npos);
    }
}

TEST(Pearson, MatchesTwoPassOracle) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> len(3, 300);
    std::uniform_real_distribution<double> shift(-1e3, 1e3);
    for (int i = 0; i < 500; ++i) {
        const auto n = static_cast<std::size_t>(len(rng));
        auto a = testutil::uniform_vec(rng, n), b = testutil::uniform_vec(rng, n);
        const double off = shift(rng);
        for (auto& v : b) v = 0.3 * v + off;
        for (std::size_t k = 0; k < n; ++k) b[k] += 0.5 * a[k];
        const double r = pearson(a, b);
        ASSERT_NEAR(r, two_pass_pearson(a, b), 1e-12);
        ASSERT_LE(std::abs(r), 1.0);
    }
}

TEST(LocatePeak, TieBreakPrefersSmallerLagThenNegative) {
    LagCorrelationCurve c;
    c.taus = {-3, -2, 2, 3};
    c.rho = {0.5, 0.8, 0.8, 0.8};
    locate_peak(c);
    EXPECT_EQ(c.peak_tau, -2);
    EXPECT_EQ(c.peak_ties, 3u);
    c.rho = {0.9, 0.1, 0.1, 0.9};
    locate_peak(c);
    EXPECT_EQ(c.peak_tau, -3);
    EXPECT_EQ(c.peak_rho, 0.9);
}

TEST(Classify, TruthTable) {
    struct Row {
        int xy, yx;
        Causality want;
    };
    const Row table[] = {
        {1, -1, Causality::X_causes_Y},   {-1, 1, Causality::Y_causes_X},
        {-1, -1, Causality::bidirectional}, {0, 0, Causality::instantaneous_bidirectional},
        {1, 1, Causality::delayed_coupling}, {0, 1, Causality::inconclusive},
        {0, -1, Causality::inconclusive}, {1, 0, Causality::inconclusive},
        {-1, 0, Causality::inconclusive},
    };
    for (const auto& r : table)
        for (int mag : {1, 7}) {
            auto v = classify_peaks(r.xy * mag, 0.9, r.yx * mag, 0.9);
            EXPECT_EQ(v.classification, r.want) << r.xy << " " << r.yx;
            EXPECT_FALSE(v.weak);
        }
    EXPECT_EQ(classify_peaks(8, 0.7, -5, 0.6).classification, Causality::X_causes_Y);
    EXPECT_EQ(classify_peaks(0, 0.7, 0, 0.6).classification, Causality::instantaneous_bidirectional);
}

TEST(Classify, WeakNoteKeepsVerdict) {
    auto v = classify_peaks(3, 0.006, -2, 0.169);
    EXPECT_EQ(v.classification, Causality::X_causes_Y);
    EXPECT_TRUE(v.weak);
    EXPECT_FALSE(v.note.empty());
    EXPECT_FALSE(classify_peaks(3, 0.006, -2, 0.2).weak);
    EXPECT_EQ(classify(LagCorrelationCurve{}, LagCorrelationCurve{}).classification, Causality::inconclusive);
}

TEST(CrossMap, SelfMapPeaksAtZero) {
    CoupledMapConfig mc;
    mc.seed = 3;
    auto s = gen_coupled_logistic(mc);
    testutil::WarningLog quiet;
    auto c = cross_map_curve(s.x, s.x, rich(), LagGrid{-5, 5});
    const auto it = std::find(c.taus.begin(), c.taus.end(), 0);
    ASSERT_NE(it, c.taus.end());
    EXPECT_GE(c.rho[static_cast<std::size_t>(it - c.taus.begin())], 0.99);
    EXPECT_EQ(c.peak_tau, 0);
}

TEST(CrossMap, WhiteNoiseHasNoSkill) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> a(500), b(500);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    ReservoirConfig cfg;  // N 150, radius 0.1, leak 0.5, p_s 0.1, ridge 0.1, gamma 0.9
    auto c = cross_map_curve(a, b, cfg);
    double mx = 0;
    for (double r : c.rho) mx = std::max(mx, std::abs(r));
    EXPECT_LT(mx, 0.3);
    EXPECT_EQ(c.taus.size(), 61u);
}

TEST(CrossMap, DrivenSeriesRecoversDriver) {
    CoupledMapConfig mc;
    mc.seed = 5;
    auto s = gen_coupled_logistic(mc);
    auto yx = cross_map_curve(s.y, s.x, rich(), LagGrid{-10, 10}, {}, "y->x");
    EXPECT_GE(std::abs(yx.peak_rho), 0.5);
    EXPECT_EQ(yx.direction, "y->x");
}

TEST(CrossMap, ShortWindowsAreSkippedWithWarning) {
    std::mt19937_64 rng(6);
    auto a = testutil::uniform_vec(rng, 15), b = testutil::uniform_vec(rng, 15);
    ReservoirConfig cfg;
    cfg.size = 10;
    cfg.sparsity = 0.5;
    testutil::WarningLog log;
    auto c = cross_map_curve(a, b, cfg, LagGrid{-30, 30});
    // |tau| <= 5 leaves at least 10 rows.
    EXPECT_EQ(c.taus.size(), 11u);
    EXPECT_EQ(c.skipped.size(), 50u);
    EXPECT_EQ(std::count_if(log.messages.begin(), log.messages.end(),
                            [](const std::string& m) { return m.find("skipped") != std::string::npos; }),
              50);
}

TEST(CrossMap, DeterministicAndLengthChecked) {
    CoupledMapConfig mc;
    mc.length = 200;
    auto s = gen_coupled_logistic(mc);
    ReservoirConfig cfg;
    cfg.seed = 11;
    auto a = cross_map_curve(s.x, s.y, cfg, LagGrid{-5, 5});
    auto b = cross_map_curve(s.x, s.y, cfg, LagGrid{-5, 5});
    EXPECT_EQ(a.rho, b.rho);
    std::vector<double> shorter(s.y.begin(), s.y.end() - 1);
    EXPECT_THROW(cross_map_curve(s.x, shorter, cfg), Error);
}

TEST(CrossMap, CurvesCsvLayout) {
    LagCorrelationCurve c;
    c.direction = "x->y";
    c.taus = {-1, 0};
    c.rho = {0.25, 0.5};
    std::ostringstream os;
    write_curves_csv(os, std::span<const LagCorrelationCurve>(&c, 1));
    EXPECT_EQ(os.str(), "direction,tau,rho\nx->y,-1,0.25\nx->y,0,0.5\n");
}

TEST(GridSpec, DefaultsContainReferenceConfigs) {
    const auto g = GridSpec::defaults();
    EXPECT_EQ(g.cell_count(), 3u * 3 * 3 * 3 * 4 * 3);
    EXPECT_EQ(g.configs().size(), g.cell_count());
    ReservoirConfig d1;
    d1.spectral_radius = 0.1, d1.leak = 0.5, d1.size = 150, d1.sparsity = 0.1, d1.ridge = 0.1, d1.input_scale = 0.9;
    ReservoirConfig d2;
    d2.spectral_radius = 0.1, d2.leak = 0.9, d2.size = 250, d2.sparsity = 0.7, d2.ridge = 100, d2.input_scale = 0.9;
    EXPECT_TRUE(g.contains(d1));
    EXPECT_TRUE(g.contains(d2));
    d2.size = 100;
    EXPECT_FALSE(g.contains(d2));
}

namespace {

std::vector<CvUnit> panel(std::size_t units, std::size_t length, std::size_t lag, std::uint64_t seed) {
    std::vector<CvUnit> out;
    for (std::size_t k = 0; k < units; ++k) {
        CoupledMapConfig mc;
        mc.length = length;
        mc.seed = derive_seed(seed, k);
        auto s = gen_coupled_logistic(mc);
        out.push_back({"u" + std::to_string(k), s.x, shift_left(s.x, lag)});
        for (auto& v : out.back().target) v += 1.0;  // keeps NRMSE well defined
    }
    return out;
}

GridSpec small_grid() {
    GridSpec g;
    g.spectral_radius = {0.1, 0.9};
    g.leak = {0.5, 0.9};
    g.size = {20, 40};
    g.sparsity = {0.4};
    g.ridge = {1e-3, 10};
    g.input_scale = {0.6};
    return g;
}

}  // namespace

TEST(LooCv, SingleCellGridWinsTrivially) {
    GridSpec g;
    g.spectral_radius = {0.5};
    g.leak = {0.5};
    g.size = {20};
    g.sparsity = {0.4};
    g.ridge = {1.0};
    g.input_scale = {0.6};
    auto r = loo_cv_grid_search(panel(3, 120, 0, 1), g);
    ASSERT_TRUE(r.winner);
    EXPECT_EQ(*r.winner, 0u);
    EXPECT_EQ(r.folds.size(), 3u);
    EXPECT_TRUE(r.scores[0].valid);
}

TEST(LooCv, UnitOrderDoesNotMatter) {
    auto units = panel(4, 120, 2, 2);
    auto a = loo_cv_grid_search(units, small_grid());
    std::reverse(units.begin(), units.end());
    auto b = loo_cv_grid_search(units, small_grid());
    ASSERT_EQ(a.scores.size(), b.scores.size());
    EXPECT_EQ(a.winner, b.winner);
    for (std::size_t i = 0; i < a.scores.size(); ++i) EXPECT_EQ(a.scores[i].mean_nrmse, b.scores[i].mean_nrmse);
}

TEST(LooCv, LaggedTargetWinnerBeatsMedianCell) {
    GridSpec g = small_grid();
    g.tau = 0;
    auto r = loo_cv_grid_search(panel(5, 150, 1, 3), g);
    ASSERT_TRUE(r.winner);
    std::vector<double> s;
    for (const auto& c : r.scores)
        if (c.valid) s.push_back(c.mean_abs_nrmse);
    std::sort(s.begin(), s.end());
    EXPECT_LE(r.scores[*r.winner].mean_abs_nrmse, s[s.size() / 2]);
    EXPECT_EQ(r.scores[*r.winner].mean_abs_nrmse, s.front());
}

TEST(LooCv, InvalidCellsAreExcludedWithReason) {
    GridSpec g = small_grid();
    g.sparsity = {1e-12, 0.4};
    auto r = loo_cv_grid_search(panel(3, 100, 0, 4), g);
    std::size_t invalid = 0;
    for (const auto& s : r.scores)
        if (!s.valid) {
            ++invalid;
            EXPECT_NE(s.reason.find("degenerate"), std::string::npos);
        }
    EXPECT_EQ(invalid, r.scores.size() / 2);
    ASSERT_TRUE(r.winner);
    EXPECT_TRUE(r.scores[*r.winner].valid);
    std::ostringstream os;
    write_cv_csv(os, r);
    EXPECT_NE(os.str().find("invalid"), std::string::npos);
}

TEST(LooCv, InputErrors) {
    EXPECT_THROW(loo_cv_grid_search(panel(1, 50, 0, 5), small_grid()), Error);
    auto units = panel(2, 50, 0, 5);
    units[1].label = units[0].label;
    EXPECT_THROW(loo_cv_grid_search(units, small_grid()), Error);
}
