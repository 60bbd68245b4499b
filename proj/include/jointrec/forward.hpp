#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "jointrec/core.hpp"

namespace jointrec {

/** Computes u = S c for a real image c. */
template <Scalar T>
Measurement<T> apply_forward(const Matrix<T>& s, std::span<const double> c) {
    if (c.size() != s.cols()) throw std::invalid_argument("apply_forward: c size != S cols");
    Measurement<T> u(s.rows(), T{});
    for (std::size_t k = 0; k < s.rows(); ++k)
        u[k] = detail::dot_plain(s.row(k), c);
    return u;
}

/** Computes S Q column by column; costs O(K * nnz(Q)). */
template <Scalar T>
Matrix<T> apply_projection(const Matrix<T>& s, const ProjectionMap& q) {
    if (q.rows() != s.cols()) throw std::invalid_argument("apply_projection: Q rows != S cols");
    Matrix<T> sq(s.rows(), q.cols(), T{});
    for (std::size_t k = 0; k < s.rows(); ++k) {
        auto srow = s.row(k);
        auto orow = sq.row(k);
        for (std::size_t n = 0; n < q.cols(); ++n) {
            T acc{};
            for (const ProjectionMap::Entry& e : q.column(n)) acc += srow[e.row] * e.value;
            orow[n] = acc;
        }
    }
    return sq;
}

/** Maps a coarse calibration-grid image to the fine grid, c_fine = Q c_coarse. */
inline ImageVec prolongate(const ProjectionMap& q, std::span<const double> coarse) {
    if (coarse.size() != q.cols()) throw std::invalid_argument("prolongate: size != Q cols");
    ImageVec fine(q.rows(), 0.0);
    for (std::size_t n = 0; n < q.cols(); ++n)
        for (const ProjectionMap::Entry& e : q.column(n)) fine[e.row] += e.value * coarse[n];
    return fine;
}

/** Value of an objective split into its additive terms. */
struct FunctionalValue {
    double total = 0.0;
    double data_term = 0.0;
    double model_term = 0.0;
    double calib_term = 0.0;
    double l2_term = 0.0;
    double l1_term = 0.0;
};

namespace detail {

inline void require_finite_value(const FunctionalValue& f, const char* where) {
    if (!std::isfinite(f.total))
        throw std::domain_error(std::string(where) + ": objective value is non-finite");
}

template <Scalar T>
double residual_sq(const Matrix<T>& s, std::span<const double> c, std::span<const T> u) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s.rows(); ++k)
        acc += abs_sq(dot_plain(s.row(k), c) - u[k]);
    return acc;
}

inline double l1_norm(std::span<const double> c) {
    double acc = 0.0;
    for (double x : c) acc += std::abs(x);
    return acc;
}

template <Scalar T>
double frob_dist_sq(const Matrix<T>& a, const Matrix<T>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += abs_sq(a.data()[i] - b.data()[i]);
    return acc;
}

}  // namespace detail

/** Full joint objective
 *      J(c,S) = 1/2 |Sc - u|^2 + gamma/2 |S - S_mod|_F^2
 *             + mu/2 |S Q - S_calib|_F^2 + alpha |c|_2^2 + lambda |c|_1.
 */
template <Scalar T>
FunctionalValue eval_joint(std::span<const double> c, const Matrix<T>& s,
                           const ProblemInstance<T>& inst, const RegParams& p) {
    if (c.size() != s.cols()) throw std::invalid_argument("eval_joint: c size != S cols");
    if (s.rows() != inst.s_mod.rows() || s.cols() != inst.s_mod.cols())
        throw std::invalid_argument("eval_joint: S dimensions != instance dimensions");
    FunctionalValue f;
    f.data_term = 0.5 * detail::residual_sq(s, c, std::span<const T>(inst.u));
    f.model_term = 0.5 * p.gamma * detail::frob_dist_sq(s, inst.s_mod);
    Matrix<T> sq = apply_projection(s, inst.q);
    f.calib_term = 0.5 * p.mu * detail::frob_dist_sq(sq, inst.s_calib);
    f.l2_term = p.alpha * detail::sq_norm(c);
    f.l1_term = p.lambda * detail::l1_norm(c);
    f.total = f.data_term + f.model_term + f.calib_term + f.l2_term + f.l1_term;
    detail::require_finite_value(f, "eval_joint");
    return f;
}

/** Image-step objective Jc(c) = |Sc - u|^2 + alpha_eff^2 |c|_2^2 + lambda |c|_1. */
template <Scalar T>
FunctionalValue eval_c_objective(std::span<const double> c, const Matrix<T>& s,
                                 std::span<const T> u, const RegParams& p) {
    if (c.size() != s.cols()) throw std::invalid_argument("eval_c_objective: c size != S cols");
    if (u.size() != s.rows()) throw std::invalid_argument("eval_c_objective: u size != S rows");
    FunctionalValue f;
    f.data_term = detail::residual_sq(s, c, u);
    f.l2_term = p.alpha_eff * p.alpha_eff * detail::sq_norm(c);
    f.l1_term = p.lambda * detail::l1_norm(c);
    f.total = f.data_term + f.l2_term + f.l1_term;
    detail::require_finite_value(f, "eval_c_objective");
    return f;
}

/** Operator-step objective
 *      Js(S) = |Sc - u|^2 + gamma_eff^2 |S - S_mod|_F^2 + mu_eff^2 |S Q - S_calib|_F^2.
 */
template <Scalar T>
FunctionalValue eval_s_objective(std::span<const double> c, const Matrix<T>& s,
                                 const ProblemInstance<T>& inst, const RegParams& p) {
    if (c.size() != s.cols()) throw std::invalid_argument("eval_s_objective: c size != S cols");
    if (s.rows() != inst.s_mod.rows() || s.cols() != inst.s_mod.cols())
        throw std::invalid_argument("eval_s_objective: S dimensions != instance dimensions");
    FunctionalValue f;
    f.data_term = detail::residual_sq(s, c, std::span<const T>(inst.u));
    f.model_term = p.gamma_eff * p.gamma_eff * detail::frob_dist_sq(s, inst.s_mod);
    Matrix<T> sq = apply_projection(s, inst.q);
    f.calib_term = p.mu_eff * p.mu_eff * detail::frob_dist_sq(sq, inst.s_calib);
    f.total = f.data_term + f.model_term + f.calib_term;
    detail::require_finite_value(f, "eval_s_objective");
    return f;
}

}  // namespace jointrec
