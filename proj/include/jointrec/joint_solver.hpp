#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jointrec/core.hpp"
#include "jointrec/forward.hpp"
#include "jointrec/image_solver.hpp"
#include "jointrec/system_solver.hpp"

namespace jointrec {

template <Scalar T>
struct JointOuterRecord {
    std::size_t outer_index = 0;
    ImageVec c;                        // image snapshot after this outer iteration
    std::optional<Matrix<T>> s;        // operator snapshot; kept for first/last or on request
    FunctionalValue objective;         // joint objective at (c, s)
    std::optional<double> l2_error_c;  // |c - c_true|_2 when the truth is known
    double wall_ms = 0.0;
};

enum class JointStop { outer_limit, rel_change };

template <Scalar T>
struct JointHistory {
    std::vector<JointOuterRecord<T>> per_outer;
    ImageVec c_final;
    Matrix<T> s_final;
    JointStop stopped_by = JointStop::outer_limit;
};

struct JointOptions {
    bool snapshot_s = false;      // keep an S snapshot in every record, not just first/last
    bool warm_start_c = false;    // reuse the previous outer c as the image start
    bool record_inner_objective = false;  // per-sweep traces inside the inner solvers
};

/** Contract failure during the outer loop; carries the history up to the
 *  failure point. */
template <Scalar T>
class JointSolveError : public std::runtime_error {
  public:
    JointSolveError(const std::string& msg, JointHistory<T> history)
        : std::runtime_error(msg), history_(std::move(history)) {}

    const JointHistory<T>& history() const { return history_; }

  private:
    JointHistory<T> history_;
};

enum class JointDecision { proceed, stop_outer_limit, stop_rel_change };

/** Stop test for the outer loop: the outer budget, then the relative change
 *  of the image between the last two recorded iterations. */
template <Scalar T>
JointDecision convergence_check(const JointHistory<T>& h, const KaczmarzSchedule& sched) {
    if (h.per_outer.size() >= sched.outer_iterations) return JointDecision::stop_outer_limit;
    if (sched.stop_rel_change && h.per_outer.size() >= 2) {
        const ImageVec& cur = h.per_outer.back().c;
        const ImageVec& prev = h.per_outer[h.per_outer.size() - 2].c;
        const double change = detail::l2_dist(std::span<const double>(cur),
                                              std::span<const double>(prev));
        const double base = std::max(std::sqrt(detail::sq_norm(std::span<const double>(prev))),
                                     1e-30);
        if (change / base < *sched.stop_rel_change) return JointDecision::stop_rel_change;
    }
    return JointDecision::proceed;
}

/** Alternating reconstruction of image and operator.
 *
 *  Each outer iteration first reconstructs the image against the current
 *  operator (fresh start by default), then re-solves the operator subproblem
 *  for the new image. The operator solve always starts from and is damped
 *  toward s_mod: starting the augmented iteration anywhere else would move
 *  its implicit proximity center there, and the center would then drift with
 *  every outer iteration, losing the model term's pull entirely (observable
 *  as a growing objective). Auxiliaries of both inner solvers restart at
 *  zero every outer iteration.
 *
 *  With outer_iterations = 0 the history is empty and the returned pair is
 *  the trivial (c = 0, S = s_mod).
 */
template <Scalar T>
JointHistory<T> solve_joint(const ProblemInstance<T>& inst, const RegParams& p,
                            const KaczmarzSchedule& sched, const JointOptions& opt = {}) {
    require_valid_instance(inst);
    require_valid_schedule(sched);

    JointHistory<T> history;
    history.c_final.assign(inst.m(), 0.0);
    history.s_final = inst.s_mod;
    history.stopped_by = JointStop::outer_limit;
    if (sched.outer_iterations == 0) return history;

    CSolveOptions copt;
    copt.max_sweeps = sched.c_sweeps_per_outer;
    copt.tau = sched.relaxation_tau;
    copt.record_objective = opt.record_inner_objective;

    SSolveOptions sopt;
    sopt.sweep_pairs = sched.s_sweeps_per_outer;
    sopt.tau = sched.relaxation_tau;
    sopt.record_objective = opt.record_inner_objective;

    try {
        Matrix<T> s = inst.s_mod;
        ImageVec c(inst.m(), 0.0);
        const auto u = std::span<const T>(inst.u);

        for (std::size_t outer = 0; outer < sched.outer_iterations; ++outer) {
            const auto t0 = std::chrono::steady_clock::now();

            CSolveReport crep = solve_c(s, u, p, copt, opt.warm_start_c ? &c : nullptr);
            c = crep.c_final;

            SSolveResult<T> sres = solve_s(inst, std::span<const double>(c), p, sopt);
            s = std::move(sres.state.s);

            JointOuterRecord<T> rec;
            rec.outer_index = outer;
            rec.c = c;
            rec.objective = eval_joint(std::span<const double>(c), s, inst, p);
            if (inst.c_true)
                rec.l2_error_c = detail::l2_dist(std::span<const double>(c),
                                                 std::span<const double>(*inst.c_true));
            if (opt.snapshot_s || outer == 0 || outer + 1 == sched.outer_iterations)
                rec.s = s;
            rec.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0).count();
            history.per_outer.push_back(std::move(rec));

            const JointDecision d = convergence_check(history, sched);
            if (d != JointDecision::proceed) {
                if (d == JointDecision::stop_rel_change) history.stopped_by = JointStop::rel_change;
                // keep an S snapshot in the last record even when stopping early
                if (!history.per_outer.back().s) history.per_outer.back().s = s;
                break;
            }
        }

        history.c_final = c;
        history.s_final = std::move(s);
    } catch (const std::exception& e) {
        throw JointSolveError<T>(std::string("solve_joint: ") + e.what(), std::move(history));
    }
    return history;
}

}  // namespace jointrec
