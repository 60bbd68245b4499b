#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "jointrec/core.hpp"
#include "jointrec/forward.hpp"
#include "jointrec/rng.hpp"

namespace jointrec {

/** Lower-triangular matrix of ones (a discrete integration operator); the
 *  row count equals the image size. */
inline Matrix<double> build_true_operator(std::size_t m) {
    if (m == 0) throw std::invalid_argument("build_true_operator: m must be >= 1");
    Matrix<double> s(m, m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = 0; j <= k; ++j) s(k, j) = 1.0;
    return s;
}

/** Two-to-one aggregation map: column n carries ones at rows 2n and 2n + 1,
 *  so N = M / 2. Requires even M. */
inline ProjectionMap build_projection_map(std::size_t m) {
    if (m == 0 || m % 2 != 0)
        throw std::invalid_argument("build_projection_map: m must be even and >= 2");
    std::vector<std::vector<ProjectionMap::Entry>> cols(m / 2);
    for (std::size_t n = 0; n < m / 2; ++n) cols[n] = {{2 * n, 1.0}, {2 * n + 1, 1.0}};
    return ProjectionMap(m, std::move(cols));
}

/** Block aggregation map with N consecutive groups of size M / N; used by
 *  synthetic instances whose coarse grid is not a plain halving. */
inline ProjectionMap build_block_projection_map(std::size_t m, std::size_t n) {
    if (n == 0 || m % n != 0)
        throw std::invalid_argument("build_block_projection_map: n must divide m");
    const std::size_t group = m / n;
    std::vector<std::vector<ProjectionMap::Entry>> cols(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t g = 0; g < group; ++g) cols[j].push_back({j * group + g, 1.0});
    return ProjectionMap(m, std::move(cols));
}

struct PhantomSegment {
    std::size_t begin;  // inclusive
    std::size_t end;    // exclusive
    double height;
};

/** Piecewise-constant nonnegative phantom. The standard kind places two
 *  plateaus and one spike at positions proportional to the image size:
 *  [m/5, 2m/5) at height 1, [3m/5, 3m/5 + max(1, m/10)) at height 0.5, and a
 *  single spike of height 1.5 at floor(0.84 m). */
struct PhantomSpec {
    enum class Kind { two_blocks_and_spike, custom };
    Kind kind = Kind::two_blocks_and_spike;
    std::vector<PhantomSegment> segments;  // for Kind::custom

    static PhantomSpec standard() { return {}; }

    static PhantomSpec custom(std::vector<PhantomSegment> segs) {
        PhantomSpec p;
        p.kind = Kind::custom;
        p.segments = std::move(segs);
        return p;
    }
};

inline ImageVec make_phantom(std::size_t m, const PhantomSpec& spec = PhantomSpec::standard()) {
    ImageVec c(m, 0.0);
    std::vector<PhantomSegment> segs;
    if (spec.kind == PhantomSpec::Kind::two_blocks_and_spike) {
        if (m < 8)
            throw std::invalid_argument("make_phantom: standard phantom needs m >= 8");
        const std::size_t spike = (84 * m) / 100;
        // the middle plateau keeps width >= 1 so it survives small m
        const std::size_t mid = std::max<std::size_t>(1, m / 10);
        segs = {{m / 5, 2 * m / 5, 1.0},
                {3 * m / 5, 3 * m / 5 + mid, 0.5},
                {spike, spike + 1, 1.5}};
    } else {
        segs = spec.segments;
    }
    for (const PhantomSegment& s : segs) {
        if (s.end > m || s.begin >= s.end)
            throw std::invalid_argument("make_phantom: segment out of range");
        if (!(s.height >= 0.0) || !std::isfinite(s.height))
            throw std::invalid_argument("make_phantom: segment height must be finite and >= 0");
        for (std::size_t i = s.begin; i < s.end; ++i) c[i] = s.height;
    }
    return c;
}

struct NoiseSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline double gaussian_value(GaussianStream& g, double sigma, double) {
    return sigma * g.next();
}

inline std::complex<double> gaussian_value(GaussianStream& g, double sigma,
                                           std::complex<double>) {
    // real draw first, imaginary second
    const double re = sigma * g.next();
    const double im = sigma * g.next();
    return {re, im};
}

}  // namespace detail

/** Adds i.i.d. N(0, sigma^2) noise entrywise, drawing in row-major order;
 *  complex entries receive independent real and imaginary draws. */
template <Scalar T>
Matrix<T> perturb_gaussian(const Matrix<T>& a, const NoiseSpec& noise) {
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
        throw std::invalid_argument("perturb_gaussian: sigma must be finite and >= 0");
    GaussianStream g(noise.seed);
    Matrix<T> out = a;
    for (T& x : out.data()) x += detail::gaussian_value(g, noise.sigma, T{});
    return out;
}

template <Scalar T>
std::vector<T> perturb_gaussian(const std::vector<T>& a, const NoiseSpec& noise) {
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
        throw std::invalid_argument("perturb_gaussian: sigma must be finite and >= 0");
    GaussianStream g(noise.seed);
    std::vector<T> out = a;
    for (T& x : out) x += detail::gaussian_value(g, noise.sigma, T{});
    return out;
}

/** Synthetic integration-operator instance:
 *  s_true is the lower-triangular ones matrix (K = M), q halves the grid,
 *  s_mod = s_true + noise, s_calib = s_true q exactly, u = s_true c + noise.
 *  Operator and measurement noise use independent sub-seeds derived from the
 *  instance seed, so the same seed reproduces the instance bit-exactly.
 */
inline ProblemInstance<double> generate_instance(std::size_t m, double sigma,
                                                 std::uint64_t seed,
                                                 const PhantomSpec& phantom =
                                                     PhantomSpec::standard()) {
    if (m < 8 || m % 2 != 0)
        throw std::invalid_argument("generate_instance: m must be even and >= 8");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("generate_instance: sigma must be finite and >= 0");

    std::uint64_t state = seed;
    const std::uint64_t eta_seed = splitmix64_next(state);
    const std::uint64_t xi_seed = splitmix64_next(state);

    ProblemInstance<double> inst{
        .s_true = std::nullopt,
        .s_mod = {},
        .s_calib = {},
        .q = build_projection_map(m),
        .c_true = std::nullopt,
        .u = {},
        .sigma = sigma,
        .seed = seed,
    };
    Matrix<double> s_true = build_true_operator(m);
    inst.c_true = make_phantom(m, phantom);
    inst.s_mod = perturb_gaussian(s_true, {sigma, eta_seed});
    inst.s_calib = apply_projection(s_true, inst.q);
    Measurement<double> u_exact = apply_forward(s_true, std::span<const double>(*inst.c_true));
    inst.u = perturb_gaussian(u_exact, {sigma, xi_seed});
    inst.s_true = std::move(s_true);
    return inst;
}

/** Random complex instance for exercising the complex solver path: dense
 *  complex s_true with unit-scale Gaussian entries, block aggregation map,
 *  standard phantom, noisy s_mod and u, exact s_calib. */
inline ProblemInstance<std::complex<double>> generate_complex_instance(
    std::size_t k, std::size_t m, std::size_t n, double sigma, std::uint64_t seed) {
    if (m < 8) throw std::invalid_argument("generate_complex_instance: m must be >= 8");
    if (n == 0 || m % n != 0)
        throw std::invalid_argument("generate_complex_instance: n must divide m");

    using C = std::complex<double>;
    std::uint64_t state = seed;
    const std::uint64_t op_seed = splitmix64_next(state);
    const std::uint64_t eta_seed = splitmix64_next(state);
    const std::uint64_t xi_seed = splitmix64_next(state);

    Matrix<C> s_true(k, m, C{});
    GaussianStream g(op_seed);
    for (C& x : s_true.data()) {
        const double re = g.next();
        const double im = g.next();
        x = C{re, im};
    }

    ProblemInstance<C> inst{
        .s_true = std::nullopt,
        .s_mod = {},
        .s_calib = {},
        .q = build_block_projection_map(m, n),
        .c_true = make_phantom(m),
        .u = {},
        .sigma = sigma,
        .seed = seed,
    };
    inst.s_mod = perturb_gaussian(s_true, {sigma, eta_seed});
    inst.s_calib = apply_projection(s_true, inst.q);
    Measurement<C> u_exact = apply_forward(s_true, std::span<const double>(*inst.c_true));
    inst.u = perturb_gaussian(u_exact, {sigma, xi_seed});
    inst.s_true = std::move(s_true);
    return inst;
}

}  // namespace jointrec
