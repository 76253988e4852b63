#include "muir/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "muir/errors.hpp"

namespace muir {

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw contract_error("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw contract_error("median of empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double stderr_mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw contract_error("linear_fit: length mismatch");
    if (x.size() < 2) throw contract_error("linear_fit: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw contract_error("linear_fit: degenerate x values");
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ybar = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = fit.intercept + fit.slope * x[i];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r2 = (ss_tot == 0.0) ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

namespace {

bool has_ties(std::vector<double> pooled) {
    std::sort(pooled.begin(), pooled.end());
    for (std::size_t i = 1; i < pooled.size(); ++i)
        if (pooled[i] == pooled[i - 1]) return true;
    return false;
}

// P(U <= u) under H0, exact, no ties.
// f(i, j, u): number of arrangements of i sample-1 and j sample-2 values
// with U = u, where U counts (sample-1, sample-2) pairs won by sample 1.
double exact_cdf(std::size_t n1, std::size_t n2, double u_stat) {
    const std::size_t umax = n1 * n2;
    std::vector<std::vector<std::vector<double>>> f(
        n1 + 1, std::vector<std::vector<double>>(n2 + 1, std::vector<double>(umax + 1, 0.0)));
    for (std::size_t i = 0; i <= n1; ++i)
        for (std::size_t j = 0; j <= n2; ++j) f[i][j][0] = (i == 0 || j == 0) ? 1.0 : 0.0;
    for (std::size_t i = 1; i <= n1; ++i) {
        for (std::size_t j = 1; j <= n2; ++j) {
            for (std::size_t u = 0; u <= i * j; ++u) {
                double v = f[i][j - 1][u];                  // largest value from sample 2
                if (u >= j) v += f[i - 1][j][u - j];        // largest value from sample 1
                f[i][j][u] = v;
            }
        }
    }
    double total = 0.0, below = 0.0;
    for (std::size_t u = 0; u <= umax; ++u) {
        total += f[n1][n2][u];
        if (static_cast<double>(u) <= u_stat + 1e-12) below += f[n1][n2][u];
    }
    return below / total;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

MannWhitneyResult mann_whitney(const std::vector<double>& a, const std::vector<double>& b) {
    MannWhitneyResult res;
    if (a.empty() || b.empty()) {
        res.p_two_sided = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    const std::size_t n1 = a.size(), n2 = b.size();
    // Rank the pooled sample with midranks for ties.
    struct Entry { double v; int which; };
    std::vector<Entry> pool;
    pool.reserve(n1 + n2);
    for (double v : a) pool.push_back({v, 0});
    for (double v : b) pool.push_back({v, 1});
    std::sort(pool.begin(), pool.end(), [](const Entry& x, const Entry& y) { return x.v < y.v; });
    std::vector<double> rank(pool.size());
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < pool.size()) {
        std::size_t j = i;
        while (j < pool.size() && pool[j].v == pool[i].v) ++j;
        const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) rank[k] = r;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    double r1 = 0.0;
    for (std::size_t k = 0; k < pool.size(); ++k)
        if (pool[k].which == 0) r1 += rank[k];
    const double u1 = r1 - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
    res.u = u1;

    std::vector<double> pooled;
    pooled.reserve(n1 + n2);
    for (const auto& e : pool) pooled.push_back(e.v);
    const bool ties = has_ties(pooled);

    if (!ties && n1 * n2 <= 400) {
        res.exact = true;
        const double u_small = std::min(u1, static_cast<double>(n1 * n2) - u1);
        const double p = 2.0 * exact_cdf(n1, n2, u_small);
        res.p_two_sided = std::min(1.0, p);
        return res;
    }
    const double n1d = static_cast<double>(n1), n2d = static_cast<double>(n2);
    const double nd = n1d + n2d;
    const double mu = n1d * n2d / 2.0;
    double var = n1d * n2d / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (var <= 0.0) {
        res.p_two_sided = 1.0;
        return res;
    }
    const double z = (std::abs(u1 - mu) - 0.5) / std::sqrt(var);  // continuity correction
    res.p_two_sided = std::min(1.0, 2.0 * normal_sf(std::max(0.0, z)));
    return res;
}

}  // namespace muir
