#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace erase {

// splitmix64 step; used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t salt = 0) {
    return splitmix64(splitmix64(master ^ 0x51d1b4d2615e5a17ULL * stream) + salt);
}

inline Eigen::VectorXd gaussian_vector(std::mt19937_64& gen, Eigen::Index n, double sigma = 1.0) {
    std::normal_distribution<double> dist(0.0, sigma);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(gen);
    return v;
}

}  // namespace erase
