#pragma once

// Seeded synthetic series with known coupling, for checking causal recovery.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sentiscope/date.hpp"
#include "sentiscope/error.hpp"
#include "sentiscope/series.hpp"

namespace sentiscope {

/// Independent stream seed derived from a base seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Two logistic maps with delayed cross terms:
///   x_{t+1} = x_t (r_x - r_x x_t - c_xy y_{t-d})
///   y_{t+1} = y_t (r_y - r_y y_t - c_yx x_{t-d})
/// c_yx > 0 lets X drive Y.
struct CoupledMapConfig {
    double r_x = 3.8;
    double r_y = 3.5;
    double c_xy = 0.0;
    double c_yx = 0.1;
    std::size_t delay = 0;
    std::size_t length = 500;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    std::size_t transient = 100;

    void validate() const {
        for (double r : {r_x, r_y})
            if (!(r >= 3.5 && r < 4.0)) throw Error("growth rates must lie in [3.5, 4.0)");
        if (!(c_xy >= 0.0) || !(c_yx >= 0.0)) throw Error("couplings must be nonnegative");
        if (!(noise_sd >= 0.0)) throw Error("noise sd must be nonnegative");
        if (length == 0) throw Error("length must be positive");
    }
};

struct SeriesPair {
    std::vector<double> x;
    std::vector<double> y;
};

inline SeriesPair gen_coupled_logistic(const CoupledMapConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> init(0.2, 0.8);
    const std::size_t d = cfg.delay;
    const std::size_t total = cfg.transient + d + 1 + cfg.length;
    std::vector<double> x(total), y(total);
    for (std::size_t t = 0; t <= d; ++t) {
        x[t] = init(rng);
        y[t] = init(rng);
    }
    for (std::size_t t = d; t + 1 < total; ++t) {
        x[t + 1] = x[t] * (cfg.r_x - cfg.r_x * x[t] - cfg.c_xy * y[t - d]);
        y[t + 1] = y[t] * (cfg.r_y - cfg.r_y * y[t] - cfg.c_yx * x[t - d]);
        if (!(x[t + 1] > 0.0 && x[t + 1] < 1.0) || !(y[t + 1] > 0.0 && y[t + 1] < 1.0))
            throw Error("coupled logistic map left (0, 1) at step " + std::to_string(t + 1));
    }
    SeriesPair out;
    const auto skip = static_cast<long>(cfg.transient + d + 1);
    out.x.assign(x.begin() + skip, x.end());
    out.y.assign(y.begin() + skip, y.end());
    if (cfg.noise_sd > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.noise_sd);
        for (auto& v : out.x) v += noise(rng);
        for (auto& v : out.y) v += noise(rng);
    }
    return out;
}

/// x_t = phi x_{t-1} + e_t, e_t ~ N(0, 1), started from the stationary law.
inline std::vector<double> gen_ar1(double phi, std::size_t length, std::uint64_t seed) {
    if (!(std::abs(phi) < 1.0)) throw Error("AR(1) coefficient must satisfy |phi| < 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<double> out(length);
    double x = e(rng) / std::sqrt(1.0 - phi * phi);
    for (auto& v : out) {
        v = x;
        x = phi * x + e(rng);
    }
    return out;
}

/// Wraps a synthetic vector in the daily series format.
inline CitySeries as_series(std::vector<double> values, std::string city, std::string feature,
                            Date start = Date(2020, 1, 1)) {
    CitySeries s{std::move(city), std::move(feature), start, std::move(values), {}};
    s.filled.assign(s.values.size(), false);
    return s;
}

}  // namespace sentiscope
