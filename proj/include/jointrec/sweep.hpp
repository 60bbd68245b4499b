#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "jointrec/core.hpp"
#include "jointrec/forward.hpp"
#include "jointrec/image_solver.hpp"
#include "jointrec/joint_solver.hpp"
#include "jointrec/metrics.hpp"

namespace jointrec {

/** Reconstruction variants compared by the parameter sweep: the alternating
 *  joint method and three image-only baselines that fix the operator to the
 *  modelled, the true, or the calibration operator. */
enum class Method { joint, c_with_Seps, c_with_Strue, c_with_Scalib };

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::joint: return "joint";
        case Method::c_with_Seps: return "c_with_Seps";
        case Method::c_with_Strue: return "c_with_Strue";
        case Method::c_with_Scalib: return "c_with_Scalib";
    }
    return "?";
}

inline std::optional<Method> method_from_name(std::string_view name) {
    for (Method m : {Method::joint, Method::c_with_Seps, Method::c_with_Strue,
                     Method::c_with_Scalib})
        if (method_name(m) == name) return m;
    return std::nullopt;
}

/** Cartesian parameter grid. Image-only methods ignore gamma and mu, so they
 *  enumerate alpha x lambda only, with gamma = mu = 0 placeholders. */
struct GridSpec {
    std::vector<double> gamma{1.0};
    std::vector<double> mu{1.0};
    std::vector<double> alpha;
    std::vector<double> lambda;
    std::vector<Method> methods{Method::joint};
};

struct Combo {
    Method method;
    RegParams params;
};

/** Enumerates the grid in a fixed order: methods as listed; within a method
 *  lexicographic by (gamma, mu, alpha, lambda) in the listed value order. */
inline std::vector<Combo> enumerate_grid(const GridSpec& grid) {
    if (grid.alpha.empty() || grid.lambda.empty())
        throw std::invalid_argument("enumerate_grid: alpha and lambda must be non-empty");
    std::vector<Combo> combos;
    for (Method m : grid.methods) {
        if (m == Method::joint) {
            if (grid.gamma.empty() || grid.mu.empty())
                throw std::invalid_argument("enumerate_grid: gamma and mu must be non-empty");
            for (double g : grid.gamma)
                for (double mu : grid.mu)
                    for (double a : grid.alpha)
                        for (double l : grid.lambda)
                            combos.push_back({m, make_reg_params(a, l, g, mu)});
        } else {
            for (double a : grid.alpha)
                for (double l : grid.lambda)
                    combos.push_back({m, make_reg_params(a, l, 0.0, 0.0)});
        }
    }
    return combos;
}

/** One sweep result row; failed runs are kept with ok = false and NaN
 *  metrics rather than dropped. */
struct SweepRecord {
    std::size_t index = 0;  // position in the canonical grid order
    Method method = Method::joint;
    double gamma = 0.0, mu = 0.0, alpha = 0.0, lambda = 0.0;
    std::uint64_t seed = 0;
    std::size_t outer_iters = 0;  // outer iterations for joint, sweeps for image-only runs
    double l2_error = std::numeric_limits<double>::quiet_NaN();
    double ssim = std::numeric_limits<double>::quiet_NaN();
    double data_residual = std::numeric_limits<double>::quiet_NaN();
    double j_final = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
    bool ok = false;
    std::string error;
};

namespace detail {

template <Scalar T>
void run_one_combo(const ProblemInstance<T>& inst, const Combo& combo,
                   const KaczmarzSchedule& sched, SweepRecord& rec) {
    const ImageVec& c_true = *inst.c_true;

    if (combo.method == Method::joint) {
        JointHistory<T> h = solve_joint(inst, combo.params, sched);
        rec.outer_iters = h.per_outer.size();
        rec.l2_error = l2_error(std::span<const double>(h.c_final),
                                std::span<const double>(c_true));
        rec.ssim = ssim_1d(std::span<const double>(h.c_final), std::span<const double>(c_true));
        rec.data_residual = data_residual(h.s_final, std::span<const double>(h.c_final),
                                          std::span<const T>(inst.u));
        rec.j_final = eval_joint(std::span<const double>(h.c_final), h.s_final, inst,
                                 combo.params).total;
        return;
    }

    const Matrix<T>* s = nullptr;
    switch (combo.method) {
        case Method::c_with_Seps: s = &inst.s_mod; break;
        case Method::c_with_Strue:
            if (!inst.s_true)
                throw std::invalid_argument("c_with_Strue requires the true operator");
            s = &*inst.s_true;
            break;
        case Method::c_with_Scalib: s = &inst.s_calib; break;
        default: break;
    }

    // Image-only runs get the same total image-sweep budget as a joint run.
    CSolveOptions copt;
    copt.max_sweeps = sched.outer_iterations * sched.c_sweeps_per_outer;
    copt.tau = sched.relaxation_tau;
    copt.stop_rel_change = sched.stop_rel_change;
    copt.record_objective = false;

    CSolveReport rep = solve_c(*s, std::span<const T>(inst.u), combo.params, copt);
    rec.outer_iters = rep.sweeps_run;

    // The calibration operator reconstructs on the coarse grid; compare on
    // the fine grid through the aggregation map.
    const ImageVec c_fine = combo.method == Method::c_with_Scalib
                                ? prolongate(inst.q, std::span<const double>(rep.c_final))
                                : rep.c_final;
    rec.l2_error = l2_error(std::span<const double>(c_fine), std::span<const double>(c_true));
    rec.ssim = ssim_1d(std::span<const double>(c_fine), std::span<const double>(c_true));
    rec.data_residual = data_residual(*s, std::span<const double>(rep.c_final),
                                      std::span<const T>(inst.u));
    rec.j_final = eval_c_objective(std::span<const double>(rep.c_final), *s,
                                   std::span<const T>(inst.u), combo.params).total;
}

}  // namespace detail

/** Runs every grid combination against one shared instance.
 *
 *  The instance is generated once by the caller; no combination regenerates
 *  noise. Combinations are independent, so they may be distributed over
 *  worker threads; records always come back in canonical grid order and are
 *  identical to a serial run.
 */
template <Scalar T>
std::vector<SweepRecord> run_sweep(const ProblemInstance<T>& inst, const GridSpec& grid,
                                   const KaczmarzSchedule& sched, unsigned workers = 1) {
    require_valid_instance(inst);
    require_valid_schedule(sched);
    if (!inst.c_true)
        throw std::invalid_argument("run_sweep: instance must carry the true image");

    const std::vector<Combo> combos = enumerate_grid(grid);
    std::vector<SweepRecord> records(combos.size());

    auto work = [&](std::size_t i) {
        SweepRecord& rec = records[i];
        const Combo& combo = combos[i];
        rec.index = i;
        rec.method = combo.method;
        rec.gamma = combo.params.gamma;
        rec.mu = combo.params.mu;
        rec.alpha = combo.params.alpha;
        rec.lambda = combo.params.lambda;
        rec.seed = inst.seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            detail::run_one_combo(inst, combo, sched, rec);
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    };

    if (workers <= 1 || combos.size() <= 1) {
        for (std::size_t i = 0; i < combos.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto drain = [&] {
            for (std::size_t i = next.fetch_add(1); i < combos.size(); i = next.fetch_add(1))
                work(i);
        };
        std::vector<std::thread> pool;
        const auto count = static_cast<unsigned>(std::min<std::size_t>(workers, combos.size()));
        pool.reserve(count);
        for (unsigned t = 0; t < count; ++t) pool.emplace_back(drain);
        for (auto& th : pool) th.join();
    }
    return records;
}

enum class SelectMetric { l2, one_minus_ssim };

struct BestSelection {
    SweepRecord best;
    std::vector<std::size_t> tied_indices;  // records sharing the optimal metric value
};

/** Picks the successful record minimizing the metric. Exact ties are broken
 *  lexicographically by (gamma, mu, alpha, lambda), then by method name; all
 *  tied records are reported. */
inline BestSelection select_best(const std::vector<SweepRecord>& records, SelectMetric metric) {
    auto value = [metric](const SweepRecord& r) {
        return metric == SelectMetric::l2 ? r.l2_error : 1.0 - r.ssim;
    };
    auto better = [&](const SweepRecord& a, const SweepRecord& b) {
        const double va = value(a), vb = value(b);
        if (va != vb) return va < vb;
        const auto ka = std::tuple(a.gamma, a.mu, a.alpha, a.lambda, method_name(a.method));
        const auto kb = std::tuple(b.gamma, b.mu, b.alpha, b.lambda, method_name(b.method));
        return ka < kb;
    };

    const SweepRecord* best = nullptr;
    for (const SweepRecord& r : records) {
        if (!r.ok || std::isnan(value(r))) continue;
        if (!best || better(r, *best)) best = &r;
    }
    if (!best) throw std::runtime_error("select_best: no successful records");

    BestSelection sel;
    sel.best = *best;
    for (const SweepRecord& r : records)
        if (r.ok && value(r) == value(*best)) sel.tied_indices.push_back(r.index);
    return sel;
}

}  // namespace jointrec
