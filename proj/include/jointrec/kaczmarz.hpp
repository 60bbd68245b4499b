#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "jointrec/core.hpp"

namespace jointrec {

/** Cyclic row order g(j) = j mod period. Other orders can be supplied to the
 *  sweeps as any callable with the same signature; only cyclic is shipped. */
struct CyclicOrder {
    std::size_t period;
    std::size_t operator()(std::size_t j) const { return j % period; }
};

/** Orthogonal projection of z onto the hyperplane {z : sum_m a_m z_m = b}.
 *
 *  The defect is measured with the plain bilinear sum; the correction moves
 *  along conj(a), which is the Euclidean-steepest direction for complex z.
 */
template <Scalar T>
std::vector<T> project_hyperplane(std::span<const T> z, std::span<const T> a, T b) {
    if (z.size() != a.size()) throw std::invalid_argument("project_hyperplane: size mismatch");
    const double a_sq = detail::sq_norm(a);
    if (a_sq == 0.0) throw std::domain_error("project_hyperplane: degenerate hyperplane (a = 0)");
    const T defect = detail::dot_plain(a, z) - b;
    std::vector<T> out(z.begin(), z.end());
    const T step = defect / a_sq;
    for (std::size_t m = 0; m < a.size(); ++m) out[m] -= step * detail::conj_val(a[m]);
    return out;
}

/** Iterate plus one auxiliary component per row of the augmented system. */
template <Scalar T>
struct AugmentedRowState {
    std::vector<T> z;
    std::vector<T> v;
};

/** One regularized Kaczmarz step on row (a, rhs) of the system A z = b
 *  augmented with the column eta * I:
 *
 *      f    = tau * (rhs - a . z - eta * v_k) / (eta^2 + |a|^2)
 *      z   += f * conj(a)
 *      v_k += eta * f
 *
 *  Both updates use the residual of the pre-update state. With eta = 0 this
 *  is a classical relaxed Kaczmarz projection step. Returns false without
 *  touching the state when the denominator vanishes (eta = 0 and |a| = 0);
 *  the caller decides the skip policy.
 */
template <Scalar T>
bool regularized_row_step(std::span<T> z, T& v_k, std::span<const T> a, double a_sq_norm,
                          T rhs, double eta, double tau) {
    const double denom = eta * eta + a_sq_norm;
    if (denom == 0.0) return false;
    const T residual = rhs - detail::dot_plain(a, std::span<const T>(z)) - eta * v_k;
    const T f = (tau / denom) * residual;
    for (std::size_t m = 0; m < a.size(); ++m) z[m] += f * detail::conj_val(a[m]);
    v_k += eta * f;
    return true;
}

/** Row update acting on an AugmentedRowState; k selects the auxiliary entry. */
template <Scalar T>
bool regularized_row_update(AugmentedRowState<T>& st, std::span<const T> a, T rhs,
                            std::size_t k, double eta, double tau) {
    if (a.size() != st.z.size())
        throw std::invalid_argument("regularized_row_update: row size != z size");
    if (k >= st.v.size()) throw std::invalid_argument("regularized_row_update: row index out of range");
    return regularized_row_step(std::span<T>(st.z), st.v[k], a, detail::sq_norm(a), rhs, eta, tau);
}

/** Nonnegativity projection: takes the real part entrywise, then clamps
 *  negatives to zero. Idempotent. */
template <Scalar T>
ImageVec project_nonneg(std::span<const T> z) {
    ImageVec out(z.size());
    for (std::size_t m = 0; m < z.size(); ++m) out[m] = std::max(detail::re(z[m]), 0.0);
    return out;
}

/** Entrywise soft threshold T_lambda(x) = (x - lambda)_+ - (-x - lambda)_+. */
inline void soft_threshold_inplace(std::span<double> x, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("soft_threshold: lambda must be finite and >= 0");
    for (double& e : x) {
        const double pos = std::max(e - lambda, 0.0);
        const double neg = std::max(-e - lambda, 0.0);
        e = pos - neg;
    }
}

inline ImageVec soft_threshold(ImageVec x, double lambda) {
    soft_threshold_inplace(std::span<double>(x), lambda);
    return x;
}

}  // namespace jointrec
