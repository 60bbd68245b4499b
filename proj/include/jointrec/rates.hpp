#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "jointrec/core.hpp"
#include "jointrec/forward.hpp"
#include "jointrec/joint_solver.hpp"
#include "jointrec/metrics.hpp"
#include "jointrec/testbed.hpp"

namespace jointrec {

/** Noise-halving convergence study. Level i draws a fresh instance at
 *  sigma_i = start_sigma / 2^i and solves it jointly with alpha_i = 2 sigma_i
 *  (measurement plus operator noise at equal strength), lambda and mu at
 *  fixed ratios to alpha_i, and gamma held constant. */
struct RateExperimentSpec {
    std::size_t m = 50;
    std::uint64_t seed = 1;
    std::size_t levels = 5;
    double start_sigma = 0.08;
    double gamma = 0.5;
    double mu_over_alpha = 6.25;
    double lambda_over_alpha = 0.0625;
};

struct RateLevel {
    double sigma = 0.0;
    double alpha = 0.0, lambda = 0.0, mu = 0.0;
    double discrepancy = 0.0;  // |S_final c_final - u_exact| against noiseless data
    double l2_error = 0.0;     // |c_final - c_true|
    std::size_t outer_iters = 0;
};

struct RateExperimentResult {
    std::vector<RateLevel> levels;
    double slope = 0.0;  // least-squares slope of log discrepancy vs log sigma
};

inline RateExperimentResult run_rate_experiment(const RateExperimentSpec& spec,
                                                const KaczmarzSchedule& sched) {
    if (spec.levels < 2)
        throw std::invalid_argument("run_rate_experiment: need at least two levels");
    if (!(spec.start_sigma > 0.0))
        throw std::invalid_argument("run_rate_experiment: start_sigma must be > 0");
    require_valid_schedule(sched);

    RateExperimentResult result;
    std::vector<double> sigmas, discrepancies;
    double sigma = spec.start_sigma;
    for (std::size_t i = 0; i < spec.levels; ++i, sigma *= 0.5) {
        const auto inst = generate_instance(spec.m, sigma, spec.seed + i);
        const double alpha = 2.0 * sigma;
        const RegParams p = make_reg_params(alpha, spec.lambda_over_alpha * alpha,
                                            spec.gamma, spec.mu_over_alpha * alpha);
        const JointHistory<double> h = solve_joint(inst, p, sched);

        const Measurement<double> u_exact =
            apply_forward(*inst.s_true, std::span<const double>(*inst.c_true));

        RateLevel level;
        level.sigma = sigma;
        level.alpha = alpha;
        level.lambda = p.lambda;
        level.mu = p.mu;
        level.discrepancy = data_residual(h.s_final, std::span<const double>(h.c_final),
                                          std::span<const double>(u_exact));
        level.l2_error = l2_error(std::span<const double>(h.c_final),
                                  std::span<const double>(*inst.c_true));
        level.outer_iters = h.per_outer.size();
        result.levels.push_back(level);

        sigmas.push_back(sigma);
        discrepancies.push_back(level.discrepancy);
    }
    result.slope = empirical_rate(sigmas, discrepancies);
    return result;
}

}  // namespace jointrec
