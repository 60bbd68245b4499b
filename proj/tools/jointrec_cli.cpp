// Command-line front end: generate synthetic instances, run single
// reconstructions, grid-search regularization weights, and study how the
// reconstruction error decays as the noise is halved.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "jointrec/jointrec.hpp"

namespace fs = std::filesystem;
using namespace jointrec;

namespace {

unsigned resolve_workers(unsigned configured) {
    if (configured > 0) return configured;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

const char* joint_stop_name(JointStop s) {
    return s == JointStop::rel_change ? "rel_change" : "outer_limit";
}

std::string g17(double x) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

std::string g6(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.6g", x);
    return b;
}

template <Scalar T>
ProblemInstance<T> load_external_instance(const RunConfig& cfg) {
    ProblemInstance<T> inst{
        .s_true = std::nullopt,
        .s_mod = read_matrix_as<T>(*cfg.paths.s_mod),
        .s_calib = read_matrix_as<T>(*cfg.paths.s_calib),
        .q = ProjectionMap::from_dense(read_matrix_as<double>(*cfg.paths.q)),
        .c_true = std::nullopt,
        .u = read_vector_as<T>(*cfg.paths.u),
        .sigma = cfg.instance.sigma,
        .seed = cfg.instance.seed,
    };
    require_valid_instance(inst);
    return inst;
}

int cmd_generate(const RunConfig& cfg) {
    const auto inst = generate_instance(cfg.instance.m, cfg.instance.sigma,
                                        cfg.instance.seed, cfg.instance.phantom);
    const fs::path out = cfg.paths.out_dir;
    fs::create_directories(out);
    write_matrix(out / "s_true.jsrb", *inst.s_true);
    write_matrix(out / "s_mod.jsrb", inst.s_mod);
    write_matrix(out / "s_calib.jsrb", inst.s_calib);
    write_matrix(out / "q.jsrb", inst.q.to_dense());
    write_vector(out / "u.jsrb", std::span<const double>(inst.u));
    write_vector(out / "c_true.jsrb", std::span<const double>(*inst.c_true));
    std::printf("instance K=%zu M=%zu N=%zu sigma=%s seed=%llu written to %s\n", inst.k(),
                inst.m(), inst.n(), g6(inst.sigma).c_str(),
                static_cast<unsigned long long>(inst.seed), out.string().c_str());
    return 0;
}

template <Scalar T>
void write_history_csv(const fs::path& file, const JointHistory<T>& h) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + file.string());
    out << "outer,J_total,J_data,J_model,J_calib,J_l2,J_l1,l2_error,wall_ms\n";
    for (const auto& r : h.per_outer) {
        out << r.outer_index << ',' << g17(r.objective.total) << ','
            << g17(r.objective.data_term) << ',' << g17(r.objective.model_term) << ','
            << g17(r.objective.calib_term) << ',' << g17(r.objective.l2_term) << ','
            << g17(r.objective.l1_term) << ','
            << (r.l2_error_c ? g17(*r.l2_error_c) : std::string("nan")) << ','
            << g17(r.wall_ms) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

template <Scalar T>
int run_joint_solve(const ProblemInstance<T>& inst, const RunConfig& cfg) {
    const fs::path out = cfg.paths.out_dir;
    fs::create_directories(out);

    const JointHistory<T> h = solve_joint(inst, *cfg.params, cfg.schedule);

    write_vector(out / "c_final.jsrb", std::span<const double>(h.c_final));
    write_matrix(out / "s_final.jsrb", h.s_final);
    write_history_csv(out / "history.csv", h);
    if (!h.per_outer.empty()) emit_plots(h, &inst, out);

    std::printf("joint solve: %zu outer iterations, stopped by %s\n", h.per_outer.size(),
                joint_stop_name(h.stopped_by));
    const FunctionalValue j = eval_joint(std::span<const double>(h.c_final), h.s_final,
                                         inst, *cfg.params);
    const double resid = data_residual(h.s_final, std::span<const double>(h.c_final),
                                       std::span<const T>(inst.u));
    std::printf("J = %s  data residual = %s\n", g6(j.total).c_str(), g6(resid).c_str());
    if (inst.c_true) {
        const double err = l2_error(std::span<const double>(h.c_final),
                                    std::span<const double>(*inst.c_true));
        const double ssim = ssim_1d(std::span<const double>(h.c_final),
                                    std::span<const double>(*inst.c_true));
        std::printf("l2 error = %s  ssim = %s\n", g6(err).c_str(), g6(ssim).c_str());
    }
    std::printf("outputs written to %s\n", out.string().c_str());
    return 0;
}

template <Scalar T>
int run_image_solve(const ProblemInstance<T>& inst, const RunConfig& cfg) {
    const fs::path out = cfg.paths.out_dir;
    fs::create_directories(out);

    const Matrix<T>* s = nullptr;
    switch (cfg.method) {
        case Method::c_with_Seps: s = &inst.s_mod; break;
        case Method::c_with_Strue:
            if (!inst.s_true)
                throw std::runtime_error("c_with_Strue needs a synthetic instance");
            s = &*inst.s_true;
            break;
        case Method::c_with_Scalib: s = &inst.s_calib; break;
        default: break;
    }

    CSolveOptions copt;
    copt.max_sweeps = cfg.schedule.outer_iterations * cfg.schedule.c_sweeps_per_outer;
    copt.tau = cfg.schedule.relaxation_tau;
    copt.stop_rel_change = cfg.schedule.stop_rel_change;
    copt.record_objective = false;

    const CSolveReport rep = solve_c(*s, std::span<const T>(inst.u), *cfg.params, copt);
    const ImageVec c_fine = cfg.method == Method::c_with_Scalib
                                ? prolongate(inst.q, std::span<const double>(rep.c_final))
                                : rep.c_final;
    write_vector(out / "c_final.jsrb", std::span<const double>(c_fine));

    std::vector<std::pair<std::string, ImageVec>> series;
    if (inst.c_true) series.emplace_back("c_true", *inst.c_true);
    series.emplace_back(std::string(method_name(cfg.method)), c_fine);
    write_reconstruction_svg(series, out / "reconstruction.svg");

    std::printf("%s: %zu sweeps, stopped by %s\n", std::string(method_name(cfg.method)).c_str(),
                rep.sweeps_run, stop_reason_name(rep.converged_by));
    const double resid = data_residual(*s, std::span<const double>(rep.c_final),
                                       std::span<const T>(inst.u));
    std::printf("data residual = %s\n", g6(resid).c_str());
    if (inst.c_true) {
        const double err = l2_error(std::span<const double>(c_fine),
                                    std::span<const double>(*inst.c_true));
        const double ssim = ssim_1d(std::span<const double>(c_fine),
                                    std::span<const double>(*inst.c_true));
        std::printf("l2 error = %s  ssim = %s\n", g6(err).c_str(), g6(ssim).c_str());
    }
    std::printf("outputs written to %s\n", out.string().c_str());
    return 0;
}

template <Scalar T>
int run_solve_for(const ProblemInstance<T>& inst, const RunConfig& cfg) {
    return cfg.method == Method::joint ? run_joint_solve(inst, cfg)
                                       : run_image_solve(inst, cfg);
}

int cmd_solve(const RunConfig& cfg) {
    if (cfg.paths.s_mod) {
        // the modelled operator's stored field decides the arithmetic
        AnyMatrix probe = read_matrix(*cfg.paths.s_mod);
        if (std::holds_alternative<Matrix<double>>(probe))
            return run_solve_for(load_external_instance<double>(cfg), cfg);
        return run_solve_for(load_external_instance<std::complex<double>>(cfg), cfg);
    }
    const auto inst = generate_instance(cfg.instance.m, cfg.instance.sigma,
                                        cfg.instance.seed, cfg.instance.phantom);
    return run_solve_for(inst, cfg);
}

int cmd_sweep(const RunConfig& cfg) {
    if (cfg.paths.s_mod)
        throw std::runtime_error(
            "sweep: external instances carry no true image to score against");
    const auto inst = generate_instance(cfg.instance.m, cfg.instance.sigma,
                                        cfg.instance.seed, cfg.instance.phantom);
    const unsigned workers = resolve_workers(cfg.workers);
    const auto records = run_sweep(inst, *cfg.grid, cfg.schedule, workers);

    const fs::path out = cfg.paths.out_dir;
    fs::create_directories(out);
    const fs::path csv = out / cfg.paths.results_csv;
    write_results_csv(csv, records);

    std::size_t failed = 0;
    for (const auto& r : records)
        if (!r.ok) ++failed;
    std::printf("%zu combinations (%u workers), %zu failed; results: %s\n", records.size(),
                workers, failed, csv.string().c_str());

    if (failed < records.size()) {
        for (SelectMetric metric : {SelectMetric::l2, SelectMetric::one_minus_ssim}) {
            const BestSelection sel = select_best(records, metric);
            const SweepRecord& b = sel.best;
            std::printf(
                "best by %s: method=%s gamma=%s mu=%s alpha=%s lambda=%s l2=%s ssim=%s"
                " (ties: %zu)\n",
                metric == SelectMetric::l2 ? "l2_error" : "1-ssim",
                std::string(method_name(b.method)).c_str(), g6(b.gamma).c_str(),
                g6(b.mu).c_str(), g6(b.alpha).c_str(), g6(b.lambda).c_str(),
                g6(b.l2_error).c_str(), g6(b.ssim).c_str(), sel.tied_indices.size());
        }
    } else {
        std::printf("no successful records\n");
    }
    return 0;
}

int cmd_rates(const RunConfig& cfg) {
    RateExperimentSpec spec;
    spec.m = cfg.instance.m;
    spec.seed = cfg.instance.seed;
    spec.levels = cfg.rates.levels;
    spec.start_sigma = cfg.rates.start_sigma;
    spec.gamma = cfg.rates.gamma;
    spec.mu_over_alpha = cfg.rates.mu_over_alpha;
    spec.lambda_over_alpha = cfg.rates.lambda_over_alpha;

    const RateExperimentResult res = run_rate_experiment(spec, cfg.schedule);

    const fs::path out = cfg.paths.out_dir;
    fs::create_directories(out);
    const fs::path csv = out / "rates.csv";
    std::ofstream f(csv, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + csv.string());
    f << "level,sigma,alpha,lambda,mu,discrepancy,l2_error,outer_iters\n";
    for (std::size_t i = 0; i < res.levels.size(); ++i) {
        const RateLevel& l = res.levels[i];
        f << i << ',' << g17(l.sigma) << ',' << g17(l.alpha) << ',' << g17(l.lambda) << ','
          << g17(l.mu) << ',' << g17(l.discrepancy) << ',' << g17(l.l2_error) << ','
          << l.outer_iters << '\n';
        std::printf("level %zu: sigma=%s discrepancy=%s l2_error=%s\n", i,
                    g6(l.sigma).c_str(), g6(l.discrepancy).c_str(), g6(l.l2_error).c_str());
    }
    if (!f) throw std::runtime_error("write failed for " + csv.string());
    std::printf("empirical rate (log-log slope): %s\nresults: %s\n", g6(res.slope).c_str(),
                csv.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"joint image and operator reconstruction"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "JSON run configuration file")
        ->check(CLI::ExistingFile);
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override the instance seed");
    std::optional<unsigned> workers;
    app.add_option("--workers", workers, "override the worker count (0 = hardware)");
    std::optional<std::string> out;
    app.add_option("--out", out, "override the output directory");

    auto* c_gen = app.add_subcommand("generate", "write a synthetic instance to disk");
    auto* c_solve = app.add_subcommand("solve", "run one reconstruction");
    auto* c_sweep = app.add_subcommand("sweep", "grid-search the regularization weights");
    auto* c_rates = app.add_subcommand("rates", "error decay study under noise halving");
    for (CLI::App* sc : {c_gen, c_solve, c_sweep, c_rates}) sc->fallthrough();

    CLI11_PARSE(app, argc, argv);

    RunMode requested = RunMode::generate;
    if (c_solve->parsed()) requested = RunMode::solve;
    else if (c_sweep->parsed()) requested = RunMode::sweep;
    else if (c_rates->parsed()) requested = RunMode::rates;

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            cfg = load_config(config_path);
            if (cfg.mode != requested)
                throw std::runtime_error(std::string("config mode '") +
                                         run_mode_name(cfg.mode) +
                                         "' does not match subcommand '" +
                                         run_mode_name(requested) + "'");
        } else if (requested != RunMode::generate) {
            throw std::runtime_error(std::string(run_mode_name(requested)) +
                                     ": --config is required");
        }
        cfg.mode = requested;
        if (seed) cfg.instance.seed = *seed;
        if (workers) cfg.workers = *workers;
        if (out) cfg.paths.out_dir = *out;

        switch (requested) {
            case RunMode::generate: return cmd_generate(cfg);
            case RunMode::solve: return cmd_solve(cfg);
            case RunMode::sweep: return cmd_sweep(cfg);
            case RunMode::rates: return cmd_rates(cfg);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
