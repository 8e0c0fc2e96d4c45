#pragma once

// Test-only helpers: a seeded generator independent of the library RNG, and
// reference implementations used as oracles.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include "perception/tinynet.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_dec_float_50;

// PCG32 (O'Neill), deliberately unrelated to the mt19937_64 the library uses.
class Pcg {
  public:
    explicit Pcg(std::uint64_t seed) : state_(0), inc_((seed << 1u) | 1u) {
        next();
        state_ += 0x853c49e6748fea9bULL + seed;
        next();
    }
    std::uint32_t next() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31));
    }
    double unit() { return (static_cast<double>(next()) + 0.5) / 4294967296.0; }
    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(unit() * static_cast<double>(n)); }

  private:
    std::uint64_t state_, inc_;
};

inline Eigen::VectorXd random_vector(Pcg &g, Eigen::Index n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = g.range(-scale, scale);
    return v;
}

// Straight from the published constants, byte at a time.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : s) {
        h = h ^ static_cast<std::uint8_t>(c);
        h = h * 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t mix64(std::uint64_t z) {
    z = z + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name, std::uint64_t index) {
    return mix64(mix64(master ^ fnv1a(name)) + index);
}

inline Big big_sigmoid(const Big &z) { return Big(1) / (Big(1) + boost::multiprecision::exp(-z)); }

inline Big big_pearson(const std::vector<double> &xs, const std::vector<double> &ys) {
    Big n(xs.size()), mx(0), my(0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    Big sxy(0), sxx(0), syy(0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Big dx = Big(xs[i]) - mx, dy = Big(ys[i]) - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return sxy / boost::multiprecision::sqrt(sxx * syy);
}

inline double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / scale;
}

// Plain recomputation of the critic output, no traces, no dropout.
inline double tanh_trunk_score(const perception::ModelParams &p, const Eigen::VectorXd &x) {
    Eigen::VectorXd h = x;
    for (const auto &l : p.trunk) h = (l.weight * h + l.bias).array().tanh().matrix();
    return (p.score_head.weight * h)(0) + p.score_head.bias(0);
}

inline std::filesystem::path scratch_dir(const std::string &name) {
    auto dir = std::filesystem::temp_directory_path() / ("perception-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace oracle
