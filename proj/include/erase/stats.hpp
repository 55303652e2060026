#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "erase/types.hpp"

namespace erase {

namespace detail {

inline double log_gamma(double x) {
    static const double cof[6] = {76.18009172947146,  -86.50532032941677, 24.01409824083091,
                                  -1.231739572450155, 0.1208650973866179e-2, -0.5395239384953e-5};
    double y = x;
    double tmp = x + 5.5;
    tmp -= (x + 0.5) * std::log(tmp);
    double ser = 1.000000000190015;
    for (double c : cof) ser += c / ++y;
    return -tmp + std::log(2.5066282746310005 * ser / x);
}

inline double beta_cf(double a, double b, double x) {
    constexpr double fpmin = 1e-300, eps = 1e-12;
    constexpr int max_iter = 300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw InvalidSpecError("incomplete beta needs x in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double bt = std::exp(detail::log_gamma(a + b) - detail::log_gamma(a) -
                               detail::log_gamma(b) + a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::beta_cf(a, b, x) / a;
    return 1.0 - bt * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of Student's t with nu degrees of freedom.
inline double student_t_two_sided_p(double t, double nu) {
    if (!std::isfinite(t)) return 0.0;
    return incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_stddev(const std::vector<double>& v) {
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------- Pearson

enum class TValueVariant {
    sqrt_n_minus_1,  // t = |R| sqrt(N-1) / sqrt(1-R^2)
    sqrt_n_minus_2,  // conventional
};

struct PearsonTest {
    double r = 0.0;
    double t = 0.0;
    double p = 1.0;
    double significant_r = 0.0;  // r when p <= alpha, else 0
    int n = 0;
};

inline PearsonTest pearson_significance(const std::vector<double>& x, const std::vector<double>& y,
                                        TValueVariant variant = TValueVariant::sqrt_n_minus_1,
                                        double alpha = 0.05) {
    const std::size_t n = x.size();
    if (n != y.size()) throw InvalidSpecError("pearson inputs must have equal length");
    if (n < 3) throw InvalidSpecError("pearson needs at least 3 points");
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw InvalidSpecError("pearson inputs must have nonzero variance");

    PearsonTest out;
    out.n = static_cast<int>(n);
    out.r = sxy / std::sqrt(sxx * syy);
    out.r = std::clamp(out.r, -1.0, 1.0);
    const double nn = static_cast<double>(n);
    const double scale = variant == TValueVariant::sqrt_n_minus_1 ? std::sqrt(nn - 1.0)
                                                                  : std::sqrt(nn - 2.0);
    const double one_minus_r2 = 1.0 - out.r * out.r;
    if (one_minus_r2 < 1e-15) {
        out.t = std::numeric_limits<double>::infinity();
        out.p = 0.0;
    } else {
        out.t = std::abs(out.r) * scale / std::sqrt(one_minus_r2);
        out.p = student_t_two_sided_p(out.t, nn - 2.0);
    }
    out.significant_r = out.p <= alpha ? out.r : 0.0;
    return out;
}

// ---------------------------------------------------------------- rank sum

enum class RankSumMethod {
    automatic,  // exact when both sizes <= 10
    exact,
    normal_approx,
};

struct RankSumResult {
    double u = 0.0;         // Mann-Whitney U of the first sample
    double rank_sum = 0.0;  // rank sum W of the first sample (midranks)
    double p = 1.0;         // two-sided
    bool exact = false;
};

namespace detail {

inline std::vector<double> midranks(const std::vector<double>& pooled_sorted) {
    const std::size_t n = pooled_sorted.size();
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled_sorted[j + 1] == pooled_sorted[i]) ++j;
        const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[k] = r;
        i = j + 1;
    }
    return ranks;
}

// Exact permutation distribution: p = P(|W - mu| >= |w_obs - mu|) over all
// C(n+m, n) assignments of the pooled midranks.
inline double ranksum_exact_p(const std::vector<double>& ranks, std::size_t n, double w_obs) {
    const std::size_t N = ranks.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const double mu = static_cast<double>(n) * (static_cast<double>(N) + 1.0) / 2.0;
    const double dev = std::abs(w_obs - mu) - 1e-9;
    std::uint64_t extreme = 0, total = 0;
    while (true) {
        double w = 0.0;
        for (std::size_t i : idx) w += ranks[i];
        ++total;
        if (std::abs(w - mu) >= dev) ++extreme;
        // next combination
        std::size_t k = n;
        while (k > 0 && idx[k - 1] == N - n + k - 1) --k;
        if (k == 0) break;
        ++idx[k - 1];
        for (std::size_t j = k; j < n; ++j) idx[j] = idx[j - 1] + 1;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace detail

// Wilcoxon rank-sum (Mann-Whitney) with midrank ties. The approximate path is
// a continuity-corrected normal with tie correction plus an Edgeworth kurtosis
// term; the exact path enumerates all assignments.
inline RankSumResult wilcoxon_ranksum(const std::vector<double>& a, const std::vector<double>& b,
                                      RankSumMethod method = RankSumMethod::automatic) {
    if (a.empty() || b.empty()) throw InvalidSpecError("rank-sum samples must be nonempty");
    const std::size_t n = a.size(), m = b.size(), N = n + m;

    struct Tagged {
        double v;
        bool first;
    };
    std::vector<Tagged> pooled;
    pooled.reserve(N);
    for (double v : a) pooled.push_back({v, true});
    for (double v : b) pooled.push_back({v, false});
    std::stable_sort(pooled.begin(), pooled.end(),
                     [](const Tagged& x, const Tagged& y) { return x.v < y.v; });
    std::vector<double> values(N);
    for (std::size_t i = 0; i < N; ++i) values[i] = pooled[i].v;
    const std::vector<double> ranks = detail::midranks(values);

    RankSumResult out;
    for (std::size_t i = 0; i < N; ++i)
        if (pooled[i].first) out.rank_sum += ranks[i];
    out.u = out.rank_sum - static_cast<double>(n) * (static_cast<double>(n) + 1.0) / 2.0;

    const bool use_exact =
        method == RankSumMethod::exact || (method == RankSumMethod::automatic && n <= 10 && m <= 10);
    if (use_exact) {
        out.exact = true;
        out.p = detail::ranksum_exact_p(ranks, n, out.rank_sum);
        return out;
    }

    const double nn = static_cast<double>(n), mm = static_cast<double>(m),
                 NN = static_cast<double>(N);
    const double mu = nn * (NN + 1.0) / 2.0;
    // tie correction
    double tie_sum = 0.0;
    std::size_t i = 0;
    while (i < N) {
        std::size_t j = i;
        while (j + 1 < N && values[j + 1] == values[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    const double var = nn * mm / 12.0 * ((NN + 1.0) - tie_sum / (NN * (NN - 1.0)));
    if (var <= 0.0) {
        out.p = 1.0;  // all values identical
        return out;
    }
    const double sd = std::sqrt(var);
    const double d = std::abs(out.rank_sum - mu);
    if (d < 0.5) {
        out.p = 1.0;
        return out;
    }
    const double z = (d - 0.5) / sd;
    double upper = 1.0 - normal_cdf(z);
    // Edgeworth term from the exact fourth cumulant of the tie-free rank sum
    const double g2 = -(6.0 / 5.0) * (nn * nn + mm * mm + nn * mm + nn + mm) / (nn * mm * (NN + 1.0));
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    upper += phi * (g2 / 24.0) * (z * z * z - 3.0 * z);
    out.p = std::clamp(2.0 * upper, 0.0, 1.0);
    return out;
}

}  // namespace erase
