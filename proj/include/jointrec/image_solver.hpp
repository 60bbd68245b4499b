#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "jointrec/core.hpp"
#include "jointrec/forward.hpp"
#include "jointrec/kaczmarz.hpp"

namespace jointrec {

enum class StopReason { sweep_limit, abs_change, rel_change };

inline const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::sweep_limit: return "sweep_limit";
        case StopReason::abs_change: return "abs_change";
        case StopReason::rel_change: return "rel_change";
    }
    return "?";
}

struct CSolveOptions {
    std::size_t max_sweeps = 0;
    double tau = 1.0;
    std::optional<double> stop_abs_change;
    std::optional<double> stop_rel_change;
    bool record_objective = true;  // Jc after every sweep; costs about half a sweep
};

struct CSolveReport {
    ImageVec c_final;
    std::size_t sweeps_run = 0;
    std::vector<double> per_sweep_objective;
    StopReason converged_by = StopReason::sweep_limit;
    std::size_t degenerate_skips = 0;
};

/** One full regularized Kaczmarz pass over the data rows: for each row k the
 *  augmented step with eta = alpha_eff is applied to (c, v). Rows with
 *  alpha_eff = 0 and |S_k| = 0 are skipped and counted. */
template <Scalar T, typename Order = CyclicOrder>
void c_sweep(std::vector<T>& c, std::vector<T>& v, const Matrix<T>& s,
             std::span<const double> row_sq_norms, std::span<const T> u, double alpha_eff,
             double tau, std::size_t* skips = nullptr,
             std::optional<Order> order = std::nullopt) {
    const std::size_t rows = s.rows();
    const Order ord = order ? *order : Order{rows};
    for (std::size_t j = 0; j < rows; ++j) {
        const std::size_t k = ord(j);
        if (!regularized_row_step(std::span<T>(c), v[k], s.row(k), row_sq_norms[k], u[k],
                                  alpha_eff, tau) &&
            skips)
            ++*skips;
    }
}

/** Sparse nonnegative image reconstruction for fixed operator S.
 *
 *  Starts from c = 0, v = 0 (or a caller-supplied warm start for c) and
 *  repeats: one c_sweep, then the nonnegativity projection, then the soft
 *  threshold. Stopping tests compare consecutive post-threshold iterates:
 *      |c_next - c| < stop_abs_change, or
 *      |c_next - c| / max(|c|, 1e-30) < stop_rel_change.
 *
 *  \param s    operator the data term is evaluated with, K x M
 *  \param u    measurement, length K
 *  \param p    penalty weights; alpha_eff drives the augmented rows,
 *              lambda the threshold
 *  \param opt  sweep budget, relaxation, stop rules
 *  \param c_init optional warm start; the auxiliary v always restarts at 0
 */
template <Scalar T>
CSolveReport solve_c(const Matrix<T>& s, std::span<const T> u, const RegParams& p,
                     const CSolveOptions& opt, const ImageVec* c_init = nullptr) {
    if (u.size() != s.rows()) throw std::invalid_argument("solve_c: u size != S rows");
    if (!(opt.tau > 0.0 && opt.tau < 2.0))
        throw std::invalid_argument("solve_c: relaxation_tau outside (0, 2)");
    if (c_init && c_init->size() != s.cols())
        throw std::invalid_argument("solve_c: c_init size != S cols");

    const std::size_t m = s.cols();
    std::vector<T> c(m, T{});
    std::vector<T> v(s.rows(), T{});
    ImageVec c_real(m, 0.0);
    if (c_init) {
        c_real = *c_init;
        for (std::size_t i = 0; i < m; ++i) c[i] = T(c_real[i]);
    }

    std::vector<double> row_sq(s.rows());
    for (std::size_t k = 0; k < s.rows(); ++k) row_sq[k] = detail::sq_norm(s.row(k));

    CSolveReport rep;
    rep.c_final = c_real;
    ImageVec prev = c_real;

    for (std::size_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        c_sweep(c, v, s, std::span<const double>(row_sq), u, p.alpha_eff, opt.tau,
                &rep.degenerate_skips);

        c_real = project_nonneg(std::span<const T>(c));
        soft_threshold_inplace(std::span<double>(c_real), p.lambda);
        for (std::size_t i = 0; i < m; ++i) c[i] = T(c_real[i]);

        ++rep.sweeps_run;
        if (opt.record_objective)
            rep.per_sweep_objective.push_back(eval_c_objective(std::span<const double>(c_real), s, u, p).total);

        const double change = detail::l2_dist(std::span<const double>(c_real),
                                              std::span<const double>(prev));
        if (opt.stop_abs_change && change < *opt.stop_abs_change) {
            rep.converged_by = StopReason::abs_change;
            prev = c_real;
            break;
        }
        const double base = std::max(detail::sq_norm(std::span<const double>(prev)), 0.0);
        if (opt.stop_rel_change &&
            change / std::max(std::sqrt(base), 1e-30) < *opt.stop_rel_change) {
            rep.converged_by = StopReason::rel_change;
            prev = c_real;
            break;
        }
        prev = c_real;
    }

    rep.c_final = prev;
    return rep;
}

}  // namespace jointrec
