#pragma once

// Leaky echo state network with a ridge-regression readout.
//
//   u*_t = tanh(A u_{t-1} + W_in x_t)
//   u_t  = (1 - leak) u_{t-1} + leak u*_t,      u_0 = 0
//   y_t  = W_out u_t
//
// A and W_in are sparse uniform random matrices; A is rescaled to a target
// spectral radius below 1. Only W_out is trained.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sentiscope/error.hpp"

namespace sentiscope {

struct ReservoirConfig {
    std::size_t size = 150;
    double spectral_radius = 0.1;
    double leak = 0.5;
    double input_scale = 0.9;
    double sparsity = 0.1;
    double ridge = 0.1;
    std::uint64_t seed = 0;
    std::size_t washout = 0;

    void validate() const {
        if (size == 0) throw Error("reservoir size must be positive");
        if (!(spectral_radius > 0.0 && spectral_radius < 1.0))
            throw Error("spectral radius must lie in (0, 1) for the echo state property");
        if (!(leak > 0.0 && leak <= 1.0)) throw Error("leak must lie in (0, 1]");
        if (!(input_scale > 0.0) || !std::isfinite(input_scale)) throw Error("input scale must be positive");
        if (!(sparsity > 0.0 && sparsity <= 1.0)) throw Error("sparsity must lie in (0, 1]");
        if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw Error("ridge must be nonnegative");
    }

    friend bool operator==(const ReservoirConfig&, const ReservoirConfig&) = default;
};

struct Reservoir {
    Eigen::MatrixXd adjacency;
    Eigen::VectorXd input_weights;
    double achieved_radius = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(input_weights.size()); }
};

/// Largest eigenvalue modulus via a dense (Hessenberg QR) eigensolve.
inline double dense_spectral_radius(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw Error("eigenvalue solver did not converge");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct PowerIterationResult {
    double radius = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Spectral radius by restarted two-vector Arnoldi: each step projects A onto
/// span{x, Ax} and takes the largest Ritz value modulus, so a dominant complex
/// conjugate pair (the common case for nonsymmetric A) converges as well as a
/// dominant real eigenvalue.
inline PowerIterationResult power_spectral_radius(const Eigen::MatrixXd& a, double tol = 1e-13,
                                                  std::size_t max_iter = 200000, std::uint64_t seed = 12345) {
    const auto n = a.rows();
    PowerIterationResult out;
    if (n == 0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = unif(rng);
    x.normalize();
    double prev = -1.0;
    int stable = 0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd w = a * x;
        const double wn = w.norm();
        if (wn == 0.0) {
            out = {0.0, it, true};
            return out;
        }
        const double h11 = x.dot(w);
        Eigen::VectorXd r = w - h11 * x;
        const double beta = r.norm();
        double est;
        if (beta <= 1e-14 * wn) {
            est = std::abs(h11);
        } else {
            Eigen::VectorXd q2 = r / beta;
            Eigen::VectorXd aq2 = a * q2;
            const double h12 = x.dot(aq2), h22 = q2.dot(aq2);
            // Eigenvalues of [[h11, h12], [beta, h22]].
            const double tr = h11 + h22, det = h11 * h22 - h12 * beta;
            const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
            est = std::max(std::abs((tr + disc) / 2.0), std::abs((tr - disc) / 2.0));
        }
        out.radius = est;
        out.iterations = it;
        if (prev >= 0.0 && std::abs(est - prev) <= tol * std::max(est, std::numeric_limits<double>::min())) {
            if (++stable >= 5) {
                out.converged = true;
                return out;
            }
        } else {
            stable = 0;
        }
        prev = est;
        x = w / wn;
    }
    return out;
}

inline constexpr Eigen::Index kDenseEigenLimit = 300;

/// Dense eigensolve up to kDenseEigenLimit, power scheme beyond.
inline double spectral_radius(const Eigen::MatrixXd& a) {
    if (a.rows() <= kDenseEigenLimit) return dense_spectral_radius(a);
    auto r = power_spectral_radius(a);
    if (!r.converged) warn("spectral radius power iteration did not converge; using last estimate");
    return r.radius;
}

/// Draws A (entries s*v, s ~ Bernoulli(sparsity), v ~ U[-1, 1]), rescales it to
/// the configured spectral radius, then draws W_in the same way scaled by
/// input_scale. The seed fixes every draw.
inline Reservoir build_reservoir(const ReservoirConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<Eigen::Index>(cfg.size);
    std::mt19937_64 rng(cfg.seed);
    std::bernoulli_distribution keep(cfg.sparsity);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto draw = [&]() {
        const bool s = keep(rng);
        const double v = unif(rng);
        return s ? v : 0.0;
    };
    Reservoir res;
    res.adjacency.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) res.adjacency(i, j) = draw();
    res.input_weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) res.input_weights[i] = cfg.input_scale * draw();

    const double raw = spectral_radius(res.adjacency);
    if (!(raw > 1e-12)) throw Error("degenerate reservoir, reseed or raise p_s (spectral radius of A is zero)");
    if (res.input_weights.isZero(0.0)) throw Error("degenerate reservoir, reseed or raise p_s (W_in is all zero)");
    res.adjacency *= cfg.spectral_radius / raw;
    res.achieved_radius = spectral_radius(res.adjacency);
    return res;
}

/// States for inputs x_1..x_T as a T x N matrix (row t-1 holds u_t).
inline Eigen::MatrixXd run_states(const Reservoir& res, double leak, std::span<const double> inputs,
                                  const Eigen::VectorXd* initial = nullptr) {
    const auto n = static_cast<Eigen::Index>(res.size());
    Eigen::MatrixXd states(static_cast<Eigen::Index>(inputs.size()), n);
    Eigen::VectorXd u = initial ? *initial : Eigen::VectorXd::Zero(n);
    if (u.size() != n) throw Error("initial state has the wrong dimension");
    Eigen::VectorXd pre(n);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        if (!std::isfinite(inputs[t])) throw Error("non-finite input at t=" + std::to_string(t + 1));
        pre.noalias() = res.adjacency * u;
        pre += res.input_weights * inputs[t];
        u = (1.0 - leak) * u + leak * pre.array().tanh().matrix();
        states.row(static_cast<Eigen::Index>(t)) = u.transpose();
    }
    return states;
}

namespace detail {

inline Eigen::VectorXd solve_ridge(Eigen::MatrixXd lhs, const Eigen::VectorXd& rhs, double ridge) {
    lhs.diagonal().array() += ridge;
    if (ridge > 0.0) {
        Eigen::LLT<Eigen::MatrixXd> llt(lhs);
        if (llt.info() == Eigen::Success) return llt.solve(rhs);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-13))
        throw Error("singular readout system; use ridge > 0");
    return ldlt.solve(rhs);
}

}  // namespace detail

/// argmin_w ||S w - y||^2 + ridge ||w||^2 over rows t >= washout of the T x N
/// state matrix S: w = (S^T S + ridge I)^{-1} S^T y.
inline Eigen::VectorXd train_readout(const Eigen::MatrixXd& states, std::span<const double> targets, double ridge,
                                     std::size_t washout = 0) {
    if (static_cast<std::size_t>(states.rows()) != targets.size())
        throw Error("states and targets differ in length");
    if (washout >= targets.size()) throw Error("washout leaves no training rows");
    if (!(ridge >= 0.0)) throw Error("ridge must be nonnegative");
    const auto rows = static_cast<Eigen::Index>(targets.size() - washout);
    if (rows < states.cols())
        warn("readout trained on " + std::to_string(rows) + " rows for " + std::to_string(states.cols()) + " states");
    const auto s = states.bottomRows(rows);
    Eigen::Map<const Eigen::VectorXd> y(targets.data() + washout, rows);
    return detail::solve_ridge(s.transpose() * s, s.transpose() * y, ridge);
}

/// Affine z-score map. A zero spread keeps scale 1.
struct Normalization {
    double mean = 0.0;
    double scale = 1.0;

    static Normalization fit(std::span<const double> xs) {
        if (xs.empty()) return {};
        double m = 0;
        for (double x : xs) m += x;
        m /= static_cast<double>(xs.size());
        double ss = 0;
        for (double x : xs) ss += (x - m) * (x - m);
        const double sd = std::sqrt(ss / static_cast<double>(xs.size()));
        return {m, sd > 0 ? sd : 1.0};
    }

    double apply(double x) const { return (x - mean) / scale; }
    double invert(double z) const { return mean + scale * z; }

    std::vector<double> apply(std::span<const double> xs) const {
        std::vector<double> out(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = apply(xs[i]);
        return out;
    }

    friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Sufficient statistics of a centred ridge fit. Folds are formed by adding and
/// subtracting per-block statistics.
struct RidgeStats {
    Eigen::MatrixXd gram;
    Eigen::VectorXd state_sum;
    Eigen::VectorXd cross;
    double target_sum = 0.0;
    double target_sq = 0.0;
    std::size_t count = 0;

    static RidgeStats zero(Eigen::Index n) {
        return {Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0.0, 0.0, 0};
    }

    template <typename Rows>
    static RidgeStats from_rows(const Rows& states, std::span<const double> targets) {
        if (static_cast<std::size_t>(states.rows()) != targets.size())
            throw Error("states and targets differ in length");
        RidgeStats s;
        Eigen::Map<const Eigen::VectorXd> y(targets.data(), static_cast<Eigen::Index>(targets.size()));
        s.gram.noalias() = states.transpose() * states;
        s.state_sum = states.colwise().sum().transpose();
        s.cross.noalias() = states.transpose() * y;
        s.target_sum = y.sum();
        s.target_sq = y.squaredNorm();
        s.count = targets.size();
        return s;
    }

    RidgeStats& operator+=(const RidgeStats& o) {
        gram += o.gram;
        state_sum += o.state_sum;
        cross += o.cross;
        target_sum += o.target_sum;
        target_sq += o.target_sq;
        count += o.count;
        return *this;
    }

    RidgeStats& operator-=(const RidgeStats& o) {
        gram -= o.gram;
        state_sum -= o.state_sum;
        cross -= o.cross;
        target_sum -= o.target_sum;
        target_sq -= o.target_sq;
        count -= o.count;
        return *this;
    }
};

/// Readout with intercept: y = target.invert(w . (u - state_mean)).
struct Readout {
    Eigen::VectorXd weights;
    Eigen::VectorXd state_mean;
    Normalization target;

    template <typename Row>
    double predict(const Row& u) const {
        return target.invert(weights.dot(u.transpose() - state_mean));
    }
};

/// Ridge fit on centred states against the z-scored target.
inline Readout solve_readout(const RidgeStats& s, double ridge) {
    if (s.count == 0) throw Error("readout has no training rows");
    const double n = static_cast<double>(s.count);
    Readout r;
    r.state_mean = s.state_sum / n;
    const double ymean = s.target_sum / n;
    const double var = std::max(s.target_sq / n - ymean * ymean, 0.0);
    const double sd = std::sqrt(var);
    r.target = {ymean, sd > 1e-300 ? sd : 1.0};
    Eigen::MatrixXd gc = s.gram - n * r.state_mean * r.state_mean.transpose();
    Eigen::VectorXd rhs = (s.cross - n * ymean * r.state_mean) / r.target.scale;
    if (static_cast<Eigen::Index>(s.count) < gc.rows())
        warn("readout trained on " + std::to_string(s.count) + " rows for " + std::to_string(gc.rows()) + " states");
    r.weights = detail::solve_ridge(std::move(gc), rhs, ridge);
    return r;
}

/// A reservoir, input normalisation and trained readout.
class EsnModel {
public:
    EsnModel(ReservoirConfig cfg, Reservoir res) : cfg_(std::move(cfg)), res_(std::move(res)) {}

    /// Builds the reservoir from `cfg` and fits the readout.
    static EsnModel train(const ReservoirConfig& cfg, std::span<const double> inputs, std::span<const double> targets) {
        EsnModel m(cfg, build_reservoir(cfg));
        m.fit(inputs, targets);
        return m;
    }

    void fit(std::span<const double> inputs, std::span<const double> targets) {
        if (inputs.size() != targets.size()) throw Error("inputs and targets differ in length");
        if (cfg_.washout >= inputs.size()) throw Error("washout leaves no training rows");
        input_norm_ = Normalization::fit(inputs);
        const Eigen::MatrixXd s = states(inputs);
        const auto rows = static_cast<Eigen::Index>(inputs.size() - cfg_.washout);
        readout_ = solve_readout(RidgeStats::from_rows(s.bottomRows(rows), targets.subspan(cfg_.washout)), cfg_.ridge);
        trained_ = true;
    }

    /// Reservoir states driven by the normalised inputs, from u_0 = 0.
    Eigen::MatrixXd states(std::span<const double> inputs) const {
        return run_states(res_, cfg_.leak, input_norm_.apply(inputs));
    }

    std::vector<double> predict(std::span<const double> inputs) const {
        if (!trained_) throw Error("model is not trained");
        const Eigen::MatrixXd s = states(inputs);
        std::vector<double> out(inputs.size());
        for (Eigen::Index t = 0; t < s.rows(); ++t) out[static_cast<std::size_t>(t)] = readout_.predict(s.row(t));
        return out;
    }

    void set_readout(Readout r, Normalization input_norm = {}) {
        if (r.weights.size() != static_cast<Eigen::Index>(res_.size()) ||
            r.state_mean.size() != static_cast<Eigen::Index>(res_.size()))
            throw Error("readout dimension does not match the reservoir");
        readout_ = std::move(r);
        input_norm_ = input_norm;
        trained_ = true;
    }

    bool trained() const { return trained_; }
    const ReservoirConfig& config() const { return cfg_; }
    const Reservoir& reservoir() const { return res_; }
    const Readout& readout() const { return readout_; }
    const Normalization& input_normalization() const { return input_norm_; }

    /// Versioned text dump; doubles are written with 17 significant digits so
    /// load(save(m)) reproduces m exactly.
    void save(std::ostream& os) const {
        auto num = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        auto vec = [&](const Eigen::VectorXd& v) {
            for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << num(v[i]);
            os << '\n';
        };
        os << "sentiscope-esn 1\n";
        os << "size " << cfg_.size << "\nspectral_radius " << num(cfg_.spectral_radius) << "\nleak " << num(cfg_.leak)
           << "\ninput_scale " << num(cfg_.input_scale) << "\nsparsity " << num(cfg_.sparsity) << "\nridge "
           << num(cfg_.ridge) << "\nseed " << cfg_.seed << "\nwashout " << cfg_.washout << "\nachieved_radius "
           << num(res_.achieved_radius) << "\ntrained " << (trained_ ? 1 : 0) << "\ninput_norm "
           << num(input_norm_.mean) << ' ' << num(input_norm_.scale) << "\ntarget_norm " << num(readout_.target.mean)
           << ' ' << num(readout_.target.scale) << '\n';
        os << "adjacency\n";
        for (Eigen::Index i = 0; i < res_.adjacency.rows(); ++i) vec(res_.adjacency.row(i).transpose());
        os << "input_weights\n";
        vec(res_.input_weights);
        const auto n = static_cast<Eigen::Index>(res_.size());
        os << "state_mean\n";
        vec(trained_ ? readout_.state_mean : Eigen::VectorXd::Zero(n));
        os << "readout\n";
        vec(trained_ ? readout_.weights : Eigen::VectorXd::Zero(n));
        os << "end\n";
    }

    static EsnModel load(std::istream& in, const std::string& source = "<model>") {
        auto fail = [&](const std::string& what) -> Error { return Error(source + ": " + what); };
        auto expect = [&](const std::string& key) {
            std::string k;
            if (!(in >> k) || k != key) throw fail("expected '" + key + "'");
        };
        std::string magic;
        int version = 0;
        if (!(in >> magic >> version) || magic != "sentiscope-esn") throw fail("not a sentiscope model dump");
        if (version != 1) throw fail("unsupported model version " + std::to_string(version));
        ReservoirConfig cfg;
        Reservoir res;
        Readout ro;
        Normalization in_norm;
        int trained = 0;
        expect("size"), in >> cfg.size;
        expect("spectral_radius"), in >> cfg.spectral_radius;
        expect("leak"), in >> cfg.leak;
        expect("input_scale"), in >> cfg.input_scale;
        expect("sparsity"), in >> cfg.sparsity;
        expect("ridge"), in >> cfg.ridge;
        expect("seed"), in >> cfg.seed;
        expect("washout"), in >> cfg.washout;
        expect("achieved_radius"), in >> res.achieved_radius;
        expect("trained"), in >> trained;
        expect("input_norm"), in >> in_norm.mean >> in_norm.scale;
        expect("target_norm"), in >> ro.target.mean >> ro.target.scale;
        if (!in) throw fail("malformed header");
        cfg.validate();
        const auto n = static_cast<Eigen::Index>(cfg.size);
        auto read_vec = [&](Eigen::VectorXd& v) {
            v.resize(n);
            for (Eigen::Index i = 0; i < n; ++i)
                if (!(in >> v[i])) throw fail("truncated matrix data");
        };
        expect("adjacency");
        res.adjacency.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (!(in >> res.adjacency(i, j))) throw fail("truncated matrix data");
        expect("input_weights");
        read_vec(res.input_weights);
        expect("state_mean");
        read_vec(ro.state_mean);
        expect("readout");
        read_vec(ro.weights);
        expect("end");
        EsnModel m(cfg, std::move(res));
        if (trained) m.set_readout(std::move(ro), in_norm);
        return m;
    }

private:
    ReservoirConfig cfg_;
    Reservoir res_;
    Readout readout_;
    Normalization input_norm_;
    bool trained_ = false;
};

/// sqrt(mean squared error) / mean(observed).
inline double nrmse(std::span<const double> pred, std::span<const double> obs) {
    if (pred.size() != obs.size() || obs.empty()) throw Error("nrmse needs equal, nonzero lengths");
    double se = 0, sum = 0;
    for (std::size_t t = 0; t < obs.size(); ++t) {
        se += (pred[t] - obs[t]) * (pred[t] - obs[t]);
        sum += obs[t];
    }
    const double n = static_cast<double>(obs.size());
    const double mean = sum / n;
    if (std::abs(mean) < 1e-9)
        throw Error("NRMSE undefined for zero-mean series; z-scoring the target is disallowed for this metric");
    return std::sqrt(se / n) / mean;
}

}  // namespace sentiscope
