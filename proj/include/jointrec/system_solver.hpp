#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "jointrec/core.hpp"
#include "jointrec/forward.hpp"
#include "jointrec/kaczmarz.hpp"

namespace jointrec {

/** Operator iterate with the auxiliaries of its augmented rows: v holds one
 *  entry per data row, w one entry per (row, calibration column) pair. */
template <Scalar T>
struct SSolveState {
    Matrix<T> s;        // K x M
    std::vector<T> v;   // K
    Matrix<T> w;        // K x N
};

struct SSolveOptions {
    std::size_t sweep_pairs = 0;
    double tau = 1.0;
    bool record_objective = true;
};

template <Scalar T>
struct SSolveResult {
    SSolveState<T> state;
    std::vector<double> per_sweep_objective;
    std::size_t skipped_data_sweeps = 0;
    std::size_t skipped_columns = 0;
};

/** Data pass: for every row k one augmented step with row vector c,
 *  right-hand side u_k, and eta = gamma_eff:
 *
 *      f      = tau * (u_k - S_k . c - gamma_eff * v_k) / (gamma_eff^2 + |c|^2)
 *      S_k   += f * c^T
 *      v_k   += gamma_eff * f
 *
 *  Rows decouple, so processing order across k is irrelevant. The whole pass
 *  is skipped (returns false) when gamma_eff = 0 and c = 0.
 */
template <Scalar T>
bool s_sweep_by_c(SSolveState<T>& st, std::span<const double> c, double c_sq_norm,
                  std::span<const T> u, double gamma_eff, double tau) {
    const double denom = gamma_eff * gamma_eff + c_sq_norm;
    if (denom == 0.0) return false;
    for (std::size_t k = 0; k < st.s.rows(); ++k) {
        auto srow = st.s.row(k);
        const T residual = u[k] - detail::dot_plain(std::span<const T>(srow), c)
                         - gamma_eff * st.v[k];
        const T f = (tau / denom) * residual;
        for (std::size_t mi = 0; mi < srow.size(); ++mi) srow[mi] += f * c[mi];
        st.v[k] += gamma_eff * f;
    }
    return true;
}

/** Calibration pass: for every row k and every column n of Q one augmented
 *  step with row vector mu_eff * Q_n, right-hand side mu_eff * S_calib(k,n),
 *  and eta = gamma_eff:
 *
 *      f       = tau * (mu_eff * (S_calib(k,n) - S_k . Q_n) - gamma_eff * w(k,n))
 *                / (gamma_eff^2 + mu_eff^2 |Q_n|^2)
 *      S_k    += f * mu_eff * Q_n^T
 *      w(k,n) += gamma_eff * f
 *
 *  Columns with a vanishing denominator are skipped and counted.
 */
template <Scalar T>
void s_sweep_by_calib(SSolveState<T>& st, const ProjectionMap& q, const Matrix<T>& s_calib,
                      double gamma_eff, double mu_eff, double tau,
                      std::size_t* skipped_columns = nullptr) {
    const double g_sq = gamma_eff * gamma_eff;
    for (std::size_t k = 0; k < st.s.rows(); ++k) {
        auto srow = st.s.row(k);
        auto wrow = st.w.row(k);
        for (std::size_t n = 0; n < q.cols(); ++n) {
            const double denom = g_sq + mu_eff * mu_eff * q.column_sq_norm(n);
            if (denom == 0.0) {
                if (skipped_columns) ++*skipped_columns;
                continue;
            }
            T acc{};
            for (const ProjectionMap::Entry& e : q.column(n)) acc += srow[e.row] * e.value;
            const T residual = mu_eff * (s_calib(k, n) - acc) - gamma_eff * wrow[n];
            const T f = (tau / denom) * residual;
            for (const ProjectionMap::Entry& e : q.column(n))
                srow[e.row] += f * (mu_eff * e.value);
            wrow[n] += gamma_eff * f;
        }
    }
}

/** Operator reconstruction for fixed image c.
 *
 *  Starts from S = S_mod (or a caller-supplied start), v = 0, w = 0 and
 *  repeats sweep pairs: one data pass followed by one full calibration pass.
 *  Records Js after every pair when requested.
 *
 *  Because the auxiliaries start at zero, the augmented iteration is damped
 *  toward its starting operator: with s_init it converges to the minimizer
 *  of |S_k c - u_k|^2 + mu_eff^2 |S_k Q - S_calib,k|^2
 *  + gamma_eff^2 |S_k - s_init,k|^2 per row, i.e. s_init replaces s_mod as
 *  the proximity center, not just the first iterate.
 *
 *  \param inst   problem data (s_mod, s_calib, q, u)
 *  \param c      fixed image, length M
 *  \param p      penalty weights; gamma_eff and mu_eff drive the sweeps
 *  \param opt    pair budget, relaxation
 *  \param s_init optional starting operator; auxiliaries always restart at 0
 */
template <Scalar T>
SSolveResult<T> solve_s(const ProblemInstance<T>& inst, std::span<const double> c,
                        const RegParams& p, const SSolveOptions& opt,
                        const Matrix<T>* s_init = nullptr) {
    require_valid_instance(inst);
    if (c.size() != inst.m()) throw std::invalid_argument("solve_s: c size != M");
    if (!(opt.tau > 0.0 && opt.tau < 2.0))
        throw std::invalid_argument("solve_s: relaxation_tau outside (0, 2)");
    if (s_init && (s_init->rows() != inst.k() || s_init->cols() != inst.m()))
        throw std::invalid_argument("solve_s: s_init dimensions != K x M");

    SSolveResult<T> res;
    res.state.s = s_init ? *s_init : inst.s_mod;
    res.state.v.assign(inst.k(), T{});
    res.state.w = Matrix<T>(inst.k(), inst.n(), T{});

    const double c_sq = detail::sq_norm(c);
    for (std::size_t pair = 0; pair < opt.sweep_pairs; ++pair) {
        if (!s_sweep_by_c(res.state, c, c_sq, std::span<const T>(inst.u), p.gamma_eff, opt.tau))
            ++res.skipped_data_sweeps;
        s_sweep_by_calib(res.state, inst.q, inst.s_calib, p.gamma_eff, p.mu_eff, opt.tau,
                         &res.skipped_columns);
        if (opt.record_objective)
            res.per_sweep_objective.push_back(eval_s_objective(c, res.state.s, inst, p).total);
    }
    return res;
}

}  // namespace jointrec
