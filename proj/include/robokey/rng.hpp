#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cmath>
#include <initializer_list>

namespace robokey {

// Stateless splitmix64 step. Used both as a seed mixer and to expand a
// single 64-bit seed into generator state.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Combine a master seed with a sequence of tag words into a child seed.
/// The chain is fixed so that experiment runs are reproducible: each word
/// is absorbed with one splitmix64 round (documented in the README).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t t : tags) {
        s = splitmix64(s ^ (t + 0x9E3779B97F4A7C15ull));
    }
    return s;
}

/// xoshiro256++ with splitmix64 seeding. Hand-rolled rather than <random>
/// so that streams are identical across standard library implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s = splitmix64(s);
            w = s;
        }
        // all-zero state is invalid for xoshiro
        if (state_[0] == 0 && state_[1] == 0 && state_[2] == 0 && state_[3] == 0) {
            state_[0] = 0x9E3779B97F4A7C15ull;
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + uniform01() * (b - a); }

    /// Fair bit.
    int bit() { return static_cast<int>(next_u64() >> 63); }

    /// Standard normal via Box-Muller (deterministic, one spare cached).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Eigen::Vector3d gaussian3() {
        Eigen::Vector3d g;
        g << gaussian(), gaussian(), gaussian();
        return g;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Draws correlated Gaussian vectors with a given PSD covariance.
/// The transform is U*sqrt(max(lambda,0)) from the eigendecomposition, so
/// exactly-zero covariances produce exactly-zero samples.
class CovarianceSampler {
public:
    explicit CovarianceSampler(const Eigen::Matrix3d& cov) {
        if (cov.isZero(0.0)) {
            transform_.setZero();
            return;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
        Eigen::Vector3d lam = es.eigenvalues().cwiseMax(0.0);
        transform_ = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
    }

    Eigen::Vector3d sample(RandomStream& stream) const {
        if (transform_.isZero(0.0)) {
            // keep the stream untouched so zero-noise runs are exact
            return Eigen::Vector3d::Zero();
        }
        return transform_ * stream.gaussian3();
    }

private:
    Eigen::Matrix3d transform_ = Eigen::Matrix3d::Zero();
};

}  // namespace robokey
