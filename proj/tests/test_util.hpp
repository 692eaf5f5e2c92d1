#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "stylegest/core/autograd.hpp"

namespace testutil {

using stylegest::Array;
using stylegest::idx;
using stylegest::ag::Var;

// Central-difference gradient check of a scalar-valued graph builder.
// Relative error per entry, floored at a small multiple of the model's
// gradient scale so exact-zero gradients are not dominated by FD roundoff.
inline double grad_check(std::vector<Var>& params, const std::function<Var()>& build,
                         double h = 1e-6) {
    Var loss = build();
    for (auto& p : params) p.zero_grad();
    stylegest::ag::backward(loss);

    double gmax = 0.0;
    for (auto& p : params) {
        const Array& g = p.grad();
        for (idx i = 0; i < g.size(); ++i) gmax = std::max(gmax, std::abs(g[i]));
    }
    const double floor = 1e-5 * std::max(1.0, gmax);

    double worst = 0.0;
    for (auto& p : params) {
        Array& val = p.mutable_value();
        const Array& g = p.grad();
        for (idx i = 0; i < val.size(); ++i) {
            const double orig = val[i];
            val[i] = orig + h;
            const double fp = build().value()[0];
            val[i] = orig - h;
            const double fm = build().value()[0];
            val[i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double denom = std::max({std::abs(fd), std::abs(g[i]), floor});
            worst = std::max(worst, std::abs(fd - g[i]) / denom);
        }
    }
    return worst;
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t n = a.size(), m = b.size();
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        const double x = std::min(a[i], b[j]);
        while (i < n && a[i] <= x) ++i;
        while (j < m && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    const double ne = std::sqrt(static_cast<double>(n) * m / static_cast<double>(n + m));
    const double lambda = (ne + 0.12 + 0.11 / ne) * d;
    // Kolmogorov distribution tail sum
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy + 1e-30);
}

}  // namespace testutil
