#pragma once

// Lag-scanned cross mapping with echo state networks.
//
// For a lag tau an ESN driven by the input series is trained to predict the
// target series tau steps ahead (behind, for tau < 0). rho(tau) is the Pearson
// correlation between predicted and observed targets over the aligned window,
// and the lag at which rho peaks in each direction decides the verdict.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentiscope/csv.hpp"
#include "sentiscope/error.hpp"
#include "sentiscope/esn.hpp"

namespace sentiscope {

struct LagGrid {
    int tau_min = -30;
    int tau_max = 30;

    void validate() const {
        if (!(tau_min < 0 && tau_max > 0)) throw Error("lag grid must satisfy tau_min < 0 < tau_max");
    }

    std::vector<int> lags() const {
        std::vector<int> out;
        for (int t = tau_min; t <= tau_max; ++t) out.push_back(t);
        return out;
    }
};

/// Summation window for lag tau over a length-T series, 1-based and inclusive:
/// inputs t in [first, last], targets t + tau.
struct AlignedWindow {
    int tau = 0;
    std::size_t first = 1;
    std::size_t last = 0;

    std::size_t length() const { return last >= first ? last - first + 1 : 0; }
    std::size_t target_first() const { return static_cast<std::size_t>(static_cast<long>(first) + tau); }
    std::size_t target_last() const { return static_cast<std::size_t>(static_cast<long>(last) + tau); }
};

/// h(tau) = max(tau, 0); t runs over [1 + |tau| - h(tau), T - h(tau)].
inline AlignedWindow align_window(std::size_t T, int tau) {
    const auto a = static_cast<std::size_t>(std::abs(tau));
    if (a >= T) throw Error("|tau| = " + std::to_string(a) + " must be below the series length " + std::to_string(T));
    const std::size_t h = tau >= 0 ? a : 0;
    return {tau, 1 + a - h, T - h};
}

/// Sample Pearson correlation (single pass, co-moment updates).
inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("pearson: lengths differ");
    if (a.size() < 2) throw Error("pearson: need at least two points");
    double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        const double da = a[i] - ma, db = b[i] - mb;
        ma += da / n;
        mb += db / n;
        saa += da * (a[i] - ma);
        sbb += db * (b[i] - mb);
        sab += da * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw Error("constant series");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct LagCorrelationCurve {
    /// "input->target".
    std::string direction;
    std::vector<int> taus;
    std::vector<double> rho;
    /// Lags left out (window too short or correlation undefined).
    std::vector<int> skipped;
    int peak_tau = 0;
    double peak_rho = 0.0;
    /// Lags sharing the maximum; > 1 means the tie rule picked peak_tau.
    std::size_t peak_ties = 0;

    bool empty() const { return taus.empty(); }
};

/// Largest rho; ties go to the smaller |tau|, then to the negative lag.
inline void locate_peak(LagCorrelationCurve& c) {
    c.peak_ties = 0;
    if (c.taus.empty()) return;
    const double best = *std::max_element(c.rho.begin(), c.rho.end());
    std::optional<int> pick;
    for (std::size_t i = 0; i < c.taus.size(); ++i) {
        if (c.rho[i] != best) continue;
        ++c.peak_ties;
        const int t = c.taus[i];
        if (!pick || std::abs(t) < std::abs(*pick) || (std::abs(t) == std::abs(*pick) && t < *pick)) pick = t;
    }
    c.peak_tau = *pick;
    c.peak_rho = best;
}

/// One locale's (input, target) pair. Series must be aligned and gap-free.
struct CrossMapPair {
    std::span<const double> input;
    std::span<const double> target;
};

struct CrossMapOptions {
    /// Contiguous blocks for out-of-fold prediction; 1 fits and predicts
    /// in-sample.
    int folds = 5;
    std::size_t min_window = 10;
};

namespace detail {

/// Out-of-fold (or in-sample when folds <= 1) readout predictions for the rows
/// of `u` against `y`.
inline std::vector<double> readout_predictions(const Eigen::MatrixXd& u, std::span<const double> y, double ridge,
                                               int folds) {
    const auto n = static_cast<std::size_t>(u.rows());
    std::vector<double> pred(n);
    const std::size_t k = folds <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(folds), n);
    if (k == 1) {
        const Readout r = solve_readout(RidgeStats::from_rows(u, y), ridge);
        for (std::size_t i = 0; i < n; ++i) pred[i] = r.predict(u.row(static_cast<Eigen::Index>(i)));
        return pred;
    }
    std::vector<std::size_t> edge(k + 1);
    for (std::size_t b = 0; b <= k; ++b) edge[b] = b * n / k;
    std::vector<RidgeStats> block;
    RidgeStats total = RidgeStats::zero(u.cols());
    for (std::size_t b = 0; b < k; ++b) {
        const auto rows = static_cast<Eigen::Index>(edge[b + 1] - edge[b]);
        block.push_back(RidgeStats::from_rows(u.middleRows(static_cast<Eigen::Index>(edge[b]), rows),
                                              y.subspan(edge[b], edge[b + 1] - edge[b])));
        total += block.back();
    }
    for (std::size_t b = 0; b < k; ++b) {
        RidgeStats train = total;
        train -= block[b];
        const Readout r = solve_readout(train, ridge);
        for (std::size_t i = edge[b]; i < edge[b + 1]; ++i) pred[i] = r.predict(u.row(static_cast<Eigen::Index>(i)));
    }
    return pred;
}

}  // namespace detail

/// rho(tau) over the lag grid. One reservoir (seeded from cfg) serves all lags;
/// each unit's input is z-scored on its own and its states start from zero, so
/// pooled units never share state. Rows with t <= washout are left out.
inline LagCorrelationCurve cross_map_curve(std::span<const CrossMapPair> units, const ReservoirConfig& cfg,
                                           const LagGrid& grid = {}, const CrossMapOptions& opt = {},
                                           std::string direction = "x->y") {
    cfg.validate();
    grid.validate();
    if (units.empty()) throw Error("cross map needs at least one series pair");
    for (const auto& u : units)
        if (u.input.size() != u.target.size()) throw Error("input and target series differ in length");
    const Reservoir res = build_reservoir(cfg);
    std::vector<Eigen::MatrixXd> states;
    for (const auto& u : units)
        states.push_back(run_states(res, cfg.leak, Normalization::fit(u.input).apply(u.input)));

    LagCorrelationCurve curve;
    curve.direction = std::move(direction);
    const auto n_state = static_cast<Eigen::Index>(cfg.size);
    for (int tau : grid.lags()) {
        std::vector<AlignedWindow> wins;
        std::size_t rows = 0;
        bool fits = true;
        for (const auto& u : units) {
            if (static_cast<std::size_t>(std::abs(tau)) >= u.input.size()) {
                fits = false;
                break;
            }
            auto w = align_window(u.input.size(), tau);
            w.first = std::max(w.first, cfg.washout + 1);
            rows += w.length();
            wins.push_back(w);
        }
        if (!fits || rows < opt.min_window) {
            warn("tau=" + std::to_string(tau) + ": window shorter than " + std::to_string(opt.min_window) +
                 " points, skipped");
            curve.skipped.push_back(tau);
            continue;
        }
        Eigen::MatrixXd u(static_cast<Eigen::Index>(rows), n_state);
        std::vector<double> y(rows);
        std::size_t r = 0;
        for (std::size_t k = 0; k < units.size(); ++k) {
            const auto& w = wins[k];
            if (w.length() == 0) continue;
            u.middleRows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w.length())) =
                states[k].middleRows(static_cast<Eigen::Index>(w.first - 1), static_cast<Eigen::Index>(w.length()));
            std::copy_n(units[k].target.begin() + static_cast<long>(w.target_first() - 1), w.length(), y.begin() + static_cast<long>(r));
            r += w.length();
        }
        try {
            const auto pred = detail::readout_predictions(u, y, cfg.ridge, opt.folds);
            const double rho = pearson(pred, y);
            curve.taus.push_back(tau);
            curve.rho.push_back(rho);
        } catch (const Error& e) {
            warn("tau=" + std::to_string(tau) + ": " + e.what() + ", skipped");
            curve.skipped.push_back(tau);
        }
    }
    locate_peak(curve);
    return curve;
}

inline LagCorrelationCurve cross_map_curve(std::span<const double> input, std::span<const double> target,
                                           const ReservoirConfig& cfg, const LagGrid& grid = {},
                                           const CrossMapOptions& opt = {}, std::string direction = "x->y") {
    const CrossMapPair pair{input, target};
    return cross_map_curve(std::span<const CrossMapPair>(&pair, 1), cfg, grid, opt, std::move(direction));
}

enum class Causality {
    X_causes_Y,
    Y_causes_X,
    bidirectional,
    instantaneous_bidirectional,
    delayed_coupling,
    inconclusive,
};

inline constexpr std::string_view to_string(Causality c) {
    switch (c) {
        case Causality::X_causes_Y: return "X_causes_Y";
        case Causality::Y_causes_X: return "Y_causes_X";
        case Causality::bidirectional: return "bidirectional";
        case Causality::instantaneous_bidirectional: return "instantaneous_bidirectional";
        case Causality::delayed_coupling: return "delayed_coupling";
        case Causality::inconclusive: return "inconclusive";
    }
    return "?";
}

inline constexpr double kWeakCorrelation = 0.2;

struct CausalVerdict {
    Causality classification = Causality::inconclusive;
    int tau_xy = 0;
    double rho_xy = 0.0;
    int tau_yx = 0;
    double rho_yx = 0.0;
    /// Both peak |rho| below kWeakCorrelation. Annotation only.
    bool weak = false;
    std::string note;
};

/// Verdict from the peak lags of curve_xy (X drives the reservoir, Y is
/// predicted) and curve_yx (the reverse).
///
///   tau_xy > 0, tau_yx < 0  -> X_causes_Y
///   tau_xy < 0, tau_yx > 0  -> Y_causes_X
///   both < 0                -> bidirectional
///   both == 0               -> instantaneous_bidirectional
///   both > 0                -> delayed_coupling
///   one zero, one nonzero   -> inconclusive
inline CausalVerdict classify_peaks(int tau_xy, double rho_xy, int tau_yx, double rho_yx) {
    CausalVerdict v{Causality::inconclusive, tau_xy, rho_xy, tau_yx, rho_yx, false, {}};
    if (tau_xy > 0 && tau_yx < 0)
        v.classification = Causality::X_causes_Y;
    else if (tau_xy < 0 && tau_yx > 0)
        v.classification = Causality::Y_causes_X;
    else if (tau_xy < 0 && tau_yx < 0)
        v.classification = Causality::bidirectional;
    else if (tau_xy == 0 && tau_yx == 0)
        v.classification = Causality::instantaneous_bidirectional;
    else if (tau_xy > 0 && tau_yx > 0)
        v.classification = Causality::delayed_coupling;
    v.weak = std::abs(rho_xy) < kWeakCorrelation && std::abs(rho_yx) < kWeakCorrelation;
    if (v.weak) v.note = "weak relationship: both peak |rho| < 0.2";
    return v;
}

inline CausalVerdict classify(const LagCorrelationCurve& xy, const LagCorrelationCurve& yx) {
    if (xy.empty() || yx.empty()) {
        CausalVerdict v;
        v.note = "no lags evaluated";
        return v;
    }
    return classify_peaks(xy.peak_tau, xy.peak_rho, yx.peak_tau, yx.peak_rho);
}

/// "direction,tau,rho" rows for each curve.
inline void write_curves_csv(std::ostream& os, std::span<const LagCorrelationCurve> curves) {
    os << "direction,tau,rho\n";
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.taus.size(); ++i)
            csv::write_row(os, std::array<std::string, 3>{c.direction, std::to_string(c.taus[i]), csv::number(c.rho[i])});
}

inline void write_verdict(std::ostream& os, const CausalVerdict& v, const LagCorrelationCurve& xy,
                          const LagCorrelationCurve& yx) {
    os << "classification: " << to_string(v.classification) << '\n';
    os << "peak " << xy.direction << ": tau=" << v.tau_xy << " rho=" << csv::number(v.rho_xy)
       << " ties=" << xy.peak_ties << '\n';
    os << "peak " << yx.direction << ": tau=" << v.tau_yx << " rho=" << csv::number(v.rho_yx)
       << " ties=" << yx.peak_ties << '\n';
    os << "tie rule: smallest |tau|, then negative tau\n";
    os << "note: " << (v.note.empty() ? "none" : v.note) << '\n';
}

// ---------------------------------------------------------------------------
// Leave-one-unit-out grid search

struct CvUnit {
    std::string label;
    std::vector<double> input;
    std::vector<double> target;
};

struct GridSpec {
    std::vector<double> spectral_radius;
    std::vector<double> leak;
    std::vector<std::size_t> size;
    std::vector<double> sparsity;
    std::vector<double> ridge;
    std::vector<double> input_scale;
    std::uint64_t seed = 0;
    std::size_t washout = 0;
    /// Lag between input and target during the search.
    int tau = 0;

    static GridSpec defaults() {
        return {{0.1, 0.5, 0.9}, {0.1, 0.5, 0.9}, {50, 150, 250}, {0.1, 0.4, 0.7}, {0.1, 1, 10, 100}, {0.3, 0.6, 0.9}};
    }

    std::size_t cell_count() const {
        return spectral_radius.size() * leak.size() * size.size() * sparsity.size() * ridge.size() *
               input_scale.size();
    }

    /// Cells in a fixed nesting order (spectral radius outermost, input scale
    /// innermost).
    std::vector<ReservoirConfig> configs() const {
        std::vector<ReservoirConfig> out;
        for (double lam : spectral_radius)
            for (double psi : leak)
                for (std::size_t n : size)
                    for (double ps : sparsity)
                        for (double a : ridge)
                            for (double g : input_scale) {
                                ReservoirConfig c;
                                c.spectral_radius = lam;
                                c.leak = psi;
                                c.size = n;
                                c.sparsity = ps;
                                c.ridge = a;
                                c.input_scale = g;
                                c.seed = seed;
                                c.washout = washout;
                                out.push_back(c);
                            }
        return out;
    }

    /// True when `c` matches a cell on the six tuned parameters.
    bool contains(const ReservoirConfig& c) const {
        auto has = [](const auto& v, auto x) { return std::find(v.begin(), v.end(), x) != v.end(); };
        return has(spectral_radius, c.spectral_radius) && has(leak, c.leak) && has(size, c.size) &&
               has(sparsity, c.sparsity) && has(ridge, c.ridge) && has(input_scale, c.input_scale);
    }
};

struct CvFold {
    std::size_t config_index = 0;
    std::string held_out;
    double nrmse = 0.0;
};

struct CvScore {
    ReservoirConfig config;
    bool valid = true;
    /// Mean held-out NRMSE.
    double mean_nrmse = 0.0;
    /// Mean held-out |NRMSE|; the ranking key.
    double mean_abs_nrmse = 0.0;
    std::string reason;
};

struct CvReport {
    std::vector<CvScore> scores;
    std::vector<CvFold> folds;
    std::optional<std::size_t> winner;
    int tau = 0;

    const ReservoirConfig& best() const {
        if (!winner) throw Error("grid search produced no valid configuration");
        return scores[*winner].config;
    }
};

namespace detail {

struct UnitRows {
    Eigen::MatrixXd states;
    std::vector<double> target;
};

inline UnitRows unit_rows(const Reservoir& res, const ReservoirConfig& cfg, const CvUnit& u, int tau) {
    if (u.input.size() != u.target.size()) throw Error("unit '" + u.label + "': input and target differ in length");
    auto w = align_window(u.input.size(), tau);
    w.first = std::max(w.first, cfg.washout + 1);
    if (w.length() < 2) throw Error("unit '" + u.label + "': window too short");
    const Eigen::MatrixXd s = run_states(res, cfg.leak, Normalization::fit(u.input).apply(u.input));
    UnitRows out;
    out.states = s.middleRows(static_cast<Eigen::Index>(w.first - 1), static_cast<Eigen::Index>(w.length()));
    out.target.assign(u.target.begin() + static_cast<long>(w.target_first() - 1),
                      u.target.begin() + static_cast<long>(w.target_last()));
    return out;
}

}  // namespace detail

/// For every cell: K folds, each fitting the readout on the other K-1 units
/// (pooled, states reset per unit) and scoring NRMSE on the held-out unit.
/// Units are processed in label order, so the result does not depend on the
/// order they are passed in. Winner: least mean |NRMSE|, ties to smaller N,
/// then smaller ridge.
inline CvReport loo_cv_grid_search(std::vector<CvUnit> units, const GridSpec& grid) {
    if (units.size() < 2) throw Error("leave-one-out needs at least two units");
    std::stable_sort(units.begin(), units.end(), [](const CvUnit& a, const CvUnit& b) { return a.label < b.label; });
    for (std::size_t i = 1; i < units.size(); ++i)
        if (units[i].label == units[i - 1].label) throw Error("duplicate unit label '" + units[i].label + "'");
    CvReport report;
    report.tau = grid.tau;
    const auto cells = grid.configs();
    if (cells.empty()) throw Error("empty grid");
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        CvScore score;
        score.config = cells[ci];
        std::vector<CvFold> folds;
        try {
            cells[ci].validate();
            const Reservoir res = build_reservoir(cells[ci]);
            std::vector<detail::UnitRows> rows;
            std::vector<RidgeStats> stats;
            RidgeStats total = RidgeStats::zero(static_cast<Eigen::Index>(cells[ci].size));
            for (const auto& u : units) {
                rows.push_back(detail::unit_rows(res, cells[ci], u, grid.tau));
                stats.push_back(RidgeStats::from_rows(rows.back().states, rows.back().target));
                total += stats.back();
            }
            double sum = 0, sum_abs = 0;
            for (std::size_t k = 0; k < units.size(); ++k) {
                RidgeStats train = total;
                train -= stats[k];
                const Readout r = solve_readout(train, cells[ci].ridge);
                std::vector<double> pred(rows[k].target.size());
                for (std::size_t t = 0; t < pred.size(); ++t)
                    pred[t] = r.predict(rows[k].states.row(static_cast<Eigen::Index>(t)));
                const double e = nrmse(pred, rows[k].target);
                if (!std::isfinite(e)) throw Error("non-finite NRMSE");
                folds.push_back({ci, units[k].label, e});
                sum += e;
                sum_abs += std::abs(e);
            }
            score.mean_nrmse = sum / static_cast<double>(units.size());
            score.mean_abs_nrmse = sum_abs / static_cast<double>(units.size());
        } catch (const Error& e) {
            score.valid = false;
            score.reason = e.what();
            folds.clear();
        }
        report.folds.insert(report.folds.end(), folds.begin(), folds.end());
        if (score.valid) {
            auto better = [&](const CvScore& a, const CvScore& b) {
                if (a.mean_abs_nrmse != b.mean_abs_nrmse) return a.mean_abs_nrmse < b.mean_abs_nrmse;
                if (a.config.size != b.config.size) return a.config.size < b.config.size;
                return a.config.ridge < b.config.ridge;
            };
            if (!report.winner || better(score, report.scores[*report.winner])) report.winner = ci;
        }
        report.scores.push_back(std::move(score));
    }
    return report;
}

/// "config,spectral_radius,leak,size,sparsity,ridge,input_scale,fold,nrmse";
/// fold "mean" rows carry the cell score and invalid cells report "invalid".
inline void write_cv_csv(std::ostream& os, const CvReport& r) {
    os << "config,spectral_radius,leak,size,sparsity,ridge,input_scale,fold,nrmse\n";
    auto prefix = [](std::size_t i, const ReservoirConfig& c) {
        return std::array<std::string, 7>{std::to_string(i), csv::number(c.spectral_radius), csv::number(c.leak),
                                          std::to_string(c.size), csv::number(c.sparsity), csv::number(c.ridge),
                                          csv::number(c.input_scale)};
    };
    std::size_t f = 0;
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
        const auto p = prefix(i, r.scores[i].config);
        auto emit = [&](const std::string& fold, const std::string& value) {
            std::vector<std::string> row(p.begin(), p.end());
            row.push_back(fold);
            row.push_back(value);
            csv::write_row(os, row);
        };
        for (; f < r.folds.size() && r.folds[f].config_index == i; ++f) emit(r.folds[f].held_out, csv::number(r.folds[f].nrmse));
        emit("mean", r.scores[i].valid ? csv::number(r.scores[i].mean_nrmse) : "invalid");
    }
}

}  // namespace sentiscope
