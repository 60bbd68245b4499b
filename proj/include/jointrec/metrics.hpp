#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

#include "jointrec/core.hpp"
#include "jointrec/forward.hpp"

namespace jointrec {

/** Euclidean distance |c - c_ref|_2. */
inline double l2_error(std::span<const double> c, std::span<const double> c_ref) {
    if (c.size() != c_ref.size()) throw std::invalid_argument("l2_error: size mismatch");
    return detail::l2_dist(c, c_ref);
}

/** Residual |S c - u|_2 of the data equation. */
template <Scalar T>
double data_residual(const Matrix<T>& s, std::span<const double> c, std::span<const T> u) {
    if (u.size() != s.rows()) throw std::invalid_argument("data_residual: u size != S rows");
    return std::sqrt(detail::residual_sq(s, c, u));
}

struct SsimOptions {
    std::size_t window = 7;  // uniform sliding window length
    double k1 = 0.01;
    double k2 = 0.03;
    std::optional<double> dynamic_range;  // default: max(c_ref) - min(c_ref)
};

/** Mean structural similarity over all length-`window` sliding windows.
 *
 *  Per window, with uniform weights and population variances:
 *      ssim = (2 mx my + C1)(2 cov + C2) / ((mx^2 + my^2 + C1)(vx + vy + C2))
 *  where C1 = (k1 L)^2, C2 = (k2 L)^2 and L is the dynamic range, taken from
 *  the reference signal unless overridden.
 */
inline double ssim_1d(std::span<const double> c, std::span<const double> c_ref,
                      const SsimOptions& opt = {}) {
    if (c.size() != c_ref.size()) throw std::invalid_argument("ssim_1d: size mismatch");
    if (opt.window < 2) throw std::invalid_argument("ssim_1d: window must be >= 2");
    if (c.size() < opt.window)
        throw std::invalid_argument("ssim_1d: signal shorter than window");

    double range;
    if (opt.dynamic_range) {
        range = *opt.dynamic_range;
    } else {
        const auto [lo, hi] = std::minmax_element(c_ref.begin(), c_ref.end());
        range = *hi - *lo;
    }
    if (!(range > 0.0) || !std::isfinite(range))
        throw std::invalid_argument("ssim_1d: dynamic range must be finite and > 0");

    const double c1 = (opt.k1 * range) * (opt.k1 * range);
    const double c2 = (opt.k2 * range) * (opt.k2 * range);
    const std::size_t w = opt.window;
    const double inv_w = 1.0 / static_cast<double>(w);

    double acc = 0.0;
    const std::size_t count = c.size() - w + 1;
    for (std::size_t i = 0; i < count; ++i) {
        double mx = 0.0, my = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            mx += c[i + j];
            my += c_ref[i + j];
        }
        mx *= inv_w;
        my *= inv_w;
        double vx = 0.0, vy = 0.0, cov = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            const double dx = c[i + j] - mx;
            const double dy = c_ref[i + j] - my;
            vx += dx * dx;
            vy += dy * dy;
            cov += dx * dy;
        }
        vx *= inv_w;
        vy *= inv_w;
        cov *= inv_w;
        acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    return acc / static_cast<double>(count);
}

/** Least-squares slope of log(discrepancy) against log(noise); the noise
 *  levels must be positive and pairwise distinct, the discrepancies positive. */
inline double empirical_rate(std::span<const double> noise,
                             std::span<const double> discrepancy) {
    if (noise.size() != discrepancy.size())
        throw std::invalid_argument("empirical_rate: size mismatch");
    if (noise.size() < 2) throw std::invalid_argument("empirical_rate: need at least 2 levels");
    const std::size_t n = noise.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(noise[i] > 0.0) || !(discrepancy[i] > 0.0))
            throw std::invalid_argument("empirical_rate: values must be > 0");
        lx[i] = std::log(noise[i]);
        ly[i] = std::log(discrepancy[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("empirical_rate: noise levels must differ");
    return sxy / sxx;
}

}  // namespace jointrec
