#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "erase/rng.hpp"
#include "erase/types.hpp"

namespace erase {

enum class Nonlinearity { tanh_contrast, cube_contrast };

struct FastIcaConfig {
    int n_components = 0;  // 0 -> square (one per channel)
    Nonlinearity nonlinearity = Nonlinearity::tanh_contrast;
    int max_iter = 500;
    double tol = 1e-5;
    std::uint64_t seed = 0;
};

struct WhitenResult {
    Vector channel_means;  // per channel
    Matrix whitening;      // k x channels
    Matrix dewhitening;    // channels x k
    Matrix whitened;       // k x samples, identity covariance
    Vector eigenvalues;    // descending, all retained components
    int rank = 0;
};

// PCA whitening from the sample covariance eigendecomposition, components
// ordered by descending eigenvalue. n_components == 0 keeps rank components.
inline WhitenResult whiten(const Matrix& data, int n_components = 0) {
    const Eigen::Index c = data.rows(), n = data.cols();
    if (n <= c) throw InvalidSpecError("whitening needs more samples than channels");

    WhitenResult out;
    out.channel_means = data.rowwise().mean();
    Matrix cov = (data * data.transpose()) / double(n - 1);
    cov -= (double(n) / double(n - 1)) * out.channel_means * out.channel_means.transpose();

    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    if (es.info() != Eigen::Success) throw Error("covariance eigendecomposition failed");
    Vector lam = es.eigenvalues().reverse();
    Matrix vecs = es.eigenvectors().rowwise().reverse();

    const double lam_max = std::max(lam[0], 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (lam[i] > lam_max * 1e-12 && lam[i] > 0.0) ++rank;
    out.rank = rank;
    if (n_components == 0) n_components = rank;
    if (n_components > rank)
        throw RankError("requested " + std::to_string(n_components) +
                            " components but covariance rank is " + std::to_string(rank),
                        rank);

    const Eigen::Index k = n_components;
    out.eigenvalues = lam.head(k);
    Matrix ek = vecs.leftCols(k);
    out.whitening = out.eigenvalues.array().rsqrt().matrix().asDiagonal() * ek.transpose();
    out.dewhitening = ek * out.eigenvalues.array().sqrt().matrix().asDiagonal();
    out.whitened = out.whitening * data;
    out.whitened.colwise() -= out.whitening * out.channel_means;
    return out;
}

struct IcaModel {
    Vector channel_means;
    Matrix whitening;  // k x channels
    Matrix unmixing;   // k x k, rows orthonormal in whitened space
    Matrix mixing;     // channels x k
    int n_components = 0;
    std::uint64_t seed = 0;
    Nonlinearity nonlinearity = Nonlinearity::tanh_contrast;
    int iterations = 0;

    // S = W * K * (X - means)
    Matrix transform(const Matrix& data) const {
        if (data.rows() != channel_means.size())
            throw InvalidSpecError("transform: expected " + std::to_string(channel_means.size()) +
                                   " channels, got " + std::to_string(data.rows()));
        Matrix s = unmixing * (whitening * data);
        s.colwise() -= unmixing * (whitening * channel_means);
        return s;
    }

    // X = A * S (+ means), with the listed component rows zeroed first.
    Matrix inverse_transform(const Matrix& components, const std::set<int>& rejected = {}) const {
        if (components.rows() != n_components)
            throw InvalidSpecError("inverse_transform: expected " + std::to_string(n_components) +
                                   " components, got " + std::to_string(components.rows()));
        for (int j : rejected)
            if (j < 0 || j >= n_components)
                throw InvalidSpecError("rejected component index " + std::to_string(j) +
                                       " out of range [0, " + std::to_string(n_components) + ")");
        Matrix kept = components;
        for (int j : rejected) kept.row(j).setZero();
        Matrix x = mixing * kept;
        x.colwise() += channel_means;
        return x;
    }
};

namespace detail {

// W <- (W W^T)^(-1/2) W
inline void symmetric_decorrelate(Matrix& w) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(w * w.transpose());
    if (es.info() != Eigen::Success) throw Error("symmetric decorrelation failed");
    const Matrix& e = es.eigenvectors();
    Vector inv_sqrt = es.eigenvalues().array().max(1e-300).rsqrt();
    w = e * inv_sqrt.asDiagonal() * e.transpose() * w;
}

}  // namespace detail

// Symmetric fixed-point FastICA on whitened data. Deterministic given seed.
inline IcaModel fit_fastica(const Matrix& data, const FastIcaConfig& cfg = {}) {
    for (Eigen::Index j = 0; j < data.cols(); ++j)
        for (Eigen::Index i = 0; i < data.rows(); ++i)
            if (!std::isfinite(data(i, j)))
                throw Error("non-finite sample at channel " + std::to_string(i) + ", index " +
                            std::to_string(j));
    const int want = cfg.n_components == 0 ? static_cast<int>(data.rows()) : cfg.n_components;
    if (data.cols() < 10 * data.rows())
        std::cerr << "[fastica] warning: only " << data.cols() << " samples for " << data.rows()
                  << " channels (< 10x)\n";

    WhitenResult wh = whiten(data, want);
    const Eigen::Index k = want;
    const Eigen::Index n = wh.whitened.cols();

    std::mt19937_64 gen(cfg.seed);
    Matrix w(k, k);
    for (Eigen::Index i = 0; i < k; ++i) w.row(i) = gaussian_vector(gen, k).transpose();
    detail::symmetric_decorrelate(w);

    Matrix u(k, n), g(k, n), w_new(k, k);
    double delta = 0.0;
    int iterations = 0;
    bool converged = false;
    for (int it = 0; it < cfg.max_iter; ++it) {
        u.noalias() = w * wh.whitened;
        Vector gprime_mean(k);
        if (cfg.nonlinearity == Nonlinearity::tanh_contrast) {
            g = u.array().tanh();
            gprime_mean = (1.0 - g.array().square()).rowwise().mean();
        } else {
            g = u.array().cube();
            gprime_mean = 3.0 * u.array().square().rowwise().mean();
        }
        w_new.noalias() = g * wh.whitened.transpose() / double(n);
        w_new -= gprime_mean.asDiagonal() * w;
        detail::symmetric_decorrelate(w_new);

        delta = 0.0;
        for (Eigen::Index i = 0; i < k; ++i)
            delta = std::max(delta, std::abs(1.0 - std::abs(w_new.row(i).dot(w.row(i)))));
        w = w_new;
        iterations = it + 1;
        if (delta < cfg.tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("fastica did not converge in " + std::to_string(cfg.max_iter) +
                                   " iterations (last delta " + std::to_string(delta) + ")",
                               delta);

    IcaModel model;
    model.channel_means = wh.channel_means;
    model.whitening = wh.whitening;
    model.unmixing = w;
    model.mixing = wh.dewhitening * w.transpose();
    model.n_components = static_cast<int>(k);
    model.seed = cfg.seed;
    model.nonlinearity = cfg.nonlinearity;
    model.iterations = iterations;
    return model;
}

}  // namespace erase
