#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "jointrec/io.hpp"
#include "jointrec/jointrec.hpp"

using namespace jointrec;
namespace fs = std::filesystem;
using C = std::complex<double>;
using Catch::Matchers::ContainsSubstring;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("jointrec_io_" + std::to_string(++counter) + "_" +
                std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    REQUIRE(out);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

TEST_CASE("real matrix files round trip bit-exactly") {
    TempDir tmp;
    Matrix<double> a = Matrix<double>::from_rows({
        {0.0, -0.0, 1.0 / 3.0},
        {5e-324, 1e308, -2.2250738585072014e-308},  // denormal, huge, smallest normal
    });
    const fs::path file = tmp.path / "a.jsrb";
    write_matrix(file, a);
    CHECK(fs::file_size(file) == kMatrixHeaderBytes + 6 * 8);

    const Matrix<double> b = read_matrix_as<double>(file);
    REQUIRE(b.rows() == 2);
    REQUIRE(b.cols() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_bits(a.data()[i], b.data()[i]));
}

TEST_CASE("complex matrix files round trip bit-exactly") {
    TempDir tmp;
    Matrix<C> a(2, 2);
    a(0, 0) = {1.5, -2.5};
    a(0, 1) = {-0.0, 5e-324};
    a(1, 0) = {1e308, 0.25};
    a(1, 1) = {0.0, -1.0};
    const fs::path file = tmp.path / "c.jsrb";
    write_matrix(file, a);
    CHECK(fs::file_size(file) == kMatrixHeaderBytes + 4 * 16);

    const Matrix<C> b = read_matrix_as<C>(file);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(same_bits(a.data()[i].real(), b.data()[i].real()));
        CHECK(same_bits(a.data()[i].imag(), b.data()[i].imag()));
    }
}

TEST_CASE("matrix header layout is fixed") {
    TempDir tmp;
    const fs::path file = tmp.path / "h.jsrb";
    write_matrix(file, Matrix<double>(3, 2, 7.0));
    const std::string bytes = slurp(file);
    REQUIRE(bytes.size() == kMatrixHeaderBytes + 48);
    CHECK(bytes.substr(0, 4) == "JSRB");
    CHECK(bytes[4] == 1);  // version, little-endian
    CHECK(bytes[5] == 0);
    CHECK(bytes[6] == 0);  // flags: real
    CHECK(static_cast<unsigned char>(bytes[7]) == 3);   // rows
    CHECK(static_cast<unsigned char>(bytes[15]) == 2);  // cols
}

TEST_CASE("matrix reader rejects malformed files") {
    TempDir tmp;
    const fs::path good = tmp.path / "good.jsrb";
    write_matrix(good, Matrix<double>(2, 2, 1.0));
    const std::string bytes = slurp(good);

    auto corrupt = [&](const std::string& name, auto mutate) {
        const fs::path p = tmp.path / name;
        std::string b = bytes;
        mutate(b);
        spit(p, b);
        return p;
    };

    CHECK_THROWS_WITH(read_matrix(corrupt("t.jsrb", [](std::string& b) { b.resize(10); })),
                      ContainsSubstring("truncated"));
    CHECK_THROWS_WITH(read_matrix(corrupt("m.jsrb", [](std::string& b) { b[0] = 'X'; })),
                      ContainsSubstring("bad magic"));
    CHECK_THROWS_WITH(read_matrix(corrupt("v.jsrb", [](std::string& b) { b[4] = 2; })),
                      ContainsSubstring("unsupported version"));
    CHECK_THROWS_WITH(read_matrix(corrupt("f.jsrb", [](std::string& b) { b[6] = 2; })),
                      ContainsSubstring("unknown flags"));
    CHECK_THROWS_WITH(read_matrix(corrupt("s.jsrb", [](std::string& b) { b.pop_back(); })),
                      ContainsSubstring("expected"));
    CHECK_THROWS_AS(read_matrix(tmp.path / "absent.jsrb"), std::runtime_error);
}

TEST_CASE("scalar field mismatches are detected") {
    TempDir tmp;
    const fs::path file = tmp.path / "cpx.jsrb";
    write_matrix(file, Matrix<C>(2, 2, C{1.0, 0.0}));
    CHECK_THROWS_WITH(read_matrix_as<double>(file), ContainsSubstring("field mismatch"));
    CHECK_NOTHROW(read_matrix_as<C>(file));
}

TEST_CASE("vectors are stored as single-column matrices") {
    TempDir tmp;
    const std::vector<double> x{1.0, -0.0, 3.5};
    const fs::path file = tmp.path / "v.jsrb";
    write_vector(file, std::span<const double>(x));
    const auto y = read_vector_as<double>(file);
    REQUIRE(y.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(same_bits(x[i], y[i]));

    write_matrix(file, Matrix<double>(2, 2, 1.0));
    CHECK_THROWS_WITH(read_vector_as<double>(file), ContainsSubstring("one column"));

    const std::vector<C> z{{1.0, 2.0}, {3.0, -4.0}};
    write_vector(tmp.path / "z.jsrb", std::span<const C>(z));
    CHECK(read_vector_as<C>(tmp.path / "z.jsrb") == z);
}

TEST_CASE("results CSV round trips, including failures") {
    TempDir tmp;
    SweepRecord good;
    good.index = 0;
    good.method = Method::joint;
    good.gamma = 1.0 / 3.0;
    good.mu = 0.0625;
    good.alpha = 2.44140625e-4;
    good.lambda = 0.0009765625;
    good.seed = 42;
    good.outer_iters = 17;
    good.l2_error = 0.123456789012345678;
    good.ssim = 0.87;
    good.data_residual = 1.5e-3;
    good.j_final = 2.25;
    good.wall_ms = 12.5;
    good.ok = true;

    SweepRecord bad;
    bad.index = 1;
    bad.method = Method::c_with_Strue;
    bad.seed = 42;
    bad.ok = false;
    bad.error = "bad, thing\nhappened";

    const fs::path file = tmp.path / "results.csv";
    write_results_csv(file, {good, bad});

    const std::string text = slurp(file);
    CHECK(text.rfind(std::string(kResultsCsvHeader) + "\n", 0) == 0);

    const auto rows = read_results_csv(file);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method == Method::joint);
    CHECK(same_bits(rows[0].gamma, good.gamma));
    CHECK(same_bits(rows[0].l2_error, good.l2_error));
    CHECK(same_bits(rows[0].j_final, good.j_final));
    CHECK(rows[0].seed == 42);
    CHECK(rows[0].outer_iters == 17);
    CHECK(rows[0].ok);
    CHECK(rows[1].method == Method::c_with_Strue);
    CHECK(!rows[1].ok);
    CHECK(rows[1].error == "bad; thing;happened");  // separators sanitized
    CHECK(std::isnan(rows[1].l2_error));
    CHECK(std::isnan(rows[1].ssim));
}

TEST_CASE("results CSV reader insists on the canonical header") {
    TempDir tmp;
    const fs::path file = tmp.path / "r.csv";
    spit(file, "method,gamma\njoint,1\n");
    CHECK_THROWS_WITH(read_results_csv(file), ContainsSubstring("header"));
    spit(file, std::string(kResultsCsvHeader) + "\njoint,1,2\n");
    CHECK_THROWS_WITH(read_results_csv(file), ContainsSubstring("malformed"));
}

TEST_CASE("a complete configuration parses") {
    TempDir tmp;
    const fs::path file = tmp.path / "run.json";
    spit(file, R"({
        "mode": "sweep",
        "instance": {"m": 20, "sigma": 0.025, "seed": 9, "phantom": "two_blocks_and_spike"},
        "grid": {"gamma": [1.0, 0.5], "mu": [0.25], "alpha": [0.01],
                 "lambda": [0.001, 0.002], "methods": ["joint", "c_with_Seps"]},
        "schedule": {"outer_iterations": 10, "c_sweeps_per_outer": 100,
                     "s_sweeps_per_outer": 50, "relaxation_tau": 1.0,
                     "stop_rel_change": 1e-6},
        "paths": {"out_dir": "results", "results_csv": "res.csv"},
        "workers": 2
    })");

    const RunConfig cfg = load_config(file);
    CHECK(cfg.mode == RunMode::sweep);
    CHECK(cfg.instance.m == 20);
    CHECK(cfg.instance.sigma == 0.025);
    CHECK(cfg.instance.seed == 9);
    REQUIRE(cfg.grid.has_value());
    CHECK(cfg.grid->gamma == std::vector<double>{1.0, 0.5});
    CHECK(cfg.grid->mu == std::vector<double>{0.25});
    CHECK(cfg.grid->methods == std::vector<Method>{Method::joint, Method::c_with_Seps});
    CHECK(cfg.schedule.outer_iterations == 10);
    CHECK(cfg.schedule.c_sweeps_per_outer == 100);
    CHECK(cfg.schedule.s_sweeps_per_outer == 50);
    CHECK(cfg.schedule.relaxation_tau == 1.0);
    REQUIRE(cfg.schedule.stop_rel_change.has_value());
    CHECK(*cfg.schedule.stop_rel_change == 1e-6);
    CHECK(cfg.paths.out_dir == "results");
    CHECK(cfg.paths.results_csv == "res.csv");
    CHECK(cfg.workers == 2);
}

TEST_CASE("custom phantom segments parse into the image") {
    TempDir tmp;
    const fs::path file = tmp.path / "run.json";
    spit(file, R"({
        "mode": "generate",
        "instance": {"m": 10, "phantom": {"segments": [[1, 3, 2.0], [5, 6, 0.25]]}}
    })");
    const RunConfig cfg = load_config(file);
    CHECK(make_phantom(10, cfg.instance.phantom) ==
          ImageVec{0.0, 2.0, 2.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("every configuration violation is reported at once") {
    TempDir tmp;
    const fs::path file = tmp.path / "bad.json";
    spit(file, R"({
        "mode": "dance",
        "instance": {"m": 20, "sigma": -1},
        "grid": {"alpha_max": [1], "alpha": [0.1], "lambda": [0.1]},
        "schedule": {"outer_iterations": 1, "c_sweeps_per_outer": 1,
                     "s_sweeps_per_outer": 1, "relaxation_tau": 3.0}
    })");

    try {
        load_config(file);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const auto& v = e.violations();
        REQUIRE(v.size() >= 4);
        auto has = [&](const std::string& needle) {
            for (const auto& s : v)
                if (s.find(needle) != std::string::npos) return true;
            return false;
        };
        CHECK(has("mode"));
        CHECK(has("instance.sigma"));
        CHECK(has("alpha_max"));
        CHECK(has("relaxation_tau"));
    }
}

TEST_CASE("mode requirements are enforced") {
    TempDir tmp;
    auto violations_of = [&](const std::string& text) {
        const fs::path file = tmp.path / "m.json";
        spit(file, text);
        try {
            load_config(file);
        } catch (const ConfigError& e) {
            std::string all;
            for (const auto& s : e.violations()) all += s + "\n";
            return all;
        }
        return std::string{};
    };

    CHECK_THAT(violations_of(R"({"mode": "rates"})"), ContainsSubstring("schedule: required"));
    CHECK_THAT(violations_of(R"({"mode": "sweep",
        "schedule": {"outer_iterations": 1, "c_sweeps_per_outer": 1, "s_sweeps_per_outer": 1}})"),
               ContainsSubstring("grid: required"));
    CHECK_THAT(violations_of(R"({"mode": "solve",
        "schedule": {"outer_iterations": 1, "c_sweeps_per_outer": 1, "s_sweeps_per_outer": 1}})"),
               ContainsSubstring("params: required"));
    CHECK_THAT(violations_of(R"({"mode": "generate", "top_hat": 1})"),
               ContainsSubstring("top_hat: unknown key"));
}

TEST_CASE("external instance paths resolve against the config directory") {
    TempDir tmp;
    write_matrix(tmp.path / "s_mod.jsrb", Matrix<double>(2, 2, 1.0));
    write_matrix(tmp.path / "s_calib.jsrb", Matrix<double>(2, 1, 2.0));
    write_matrix(tmp.path / "q.jsrb", Matrix<double>(2, 1, 1.0));
    std::vector<double> u{1.0, 2.0};
    write_vector(tmp.path / "u.jsrb", std::span<const double>(u));

    const fs::path file = tmp.path / "run.json";
    spit(file, R"({
        "mode": "solve",
        "params": {"alpha": 0.01, "lambda": 0.001, "gamma": 1.0, "mu": 1.0},
        "schedule": {"outer_iterations": 1, "c_sweeps_per_outer": 1, "s_sweeps_per_outer": 1},
        "paths": {"s_mod": "s_mod.jsrb", "s_calib": "s_calib.jsrb",
                  "q": "q.jsrb", "u": "u.jsrb"}
    })");

    const RunConfig cfg = load_config(file);
    REQUIRE(cfg.paths.s_mod.has_value());
    CHECK(fs::path(*cfg.paths.s_mod).is_absolute());
    CHECK(fs::exists(*cfg.paths.s_mod));
    CHECK(fs::exists(*cfg.paths.u));

    // partial external inputs are rejected
    spit(file, R"({
        "mode": "solve",
        "params": {"alpha": 0.01, "lambda": 0.001, "gamma": 1.0, "mu": 1.0},
        "schedule": {"outer_iterations": 1, "c_sweeps_per_outer": 1, "s_sweeps_per_outer": 1},
        "paths": {"s_mod": "s_mod.jsrb"}
    })");
    CHECK_THROWS_WITH(load_config(file), ContainsSubstring("all of"));

    // a missing referenced file is a violation
    spit(file, R"({
        "mode": "solve",
        "params": {"alpha": 0.01, "lambda": 0.001, "gamma": 1.0, "mu": 1.0},
        "schedule": {"outer_iterations": 1, "c_sweeps_per_outer": 1, "s_sweeps_per_outer": 1},
        "paths": {"s_mod": "ghost.jsrb", "s_calib": "s_calib.jsrb",
                  "q": "q.jsrb", "u": "u.jsrb"}
    })");
    CHECK_THROWS_WITH(load_config(file), ContainsSubstring("does not exist"));
}

TEST_CASE("broken JSON and missing config files have distinct errors") {
    TempDir tmp;
    const fs::path file = tmp.path / "nope.json";
    CHECK_THROWS_AS(load_config(file), std::runtime_error);
    spit(file, "{not json");
    CHECK_THROWS_WITH(load_config(file), ContainsSubstring("JSON parse error"));
}

TEST_CASE("plots are emitted for a finished solve") {
    TempDir tmp;
    const auto inst = generate_instance(10, 0.05, 3);
    KaczmarzSchedule sched;
    sched.outer_iterations = 3;
    sched.c_sweeps_per_outer = 30;
    sched.s_sweeps_per_outer = 15;
    const auto h = solve_joint(inst, make_reg_params(0.01, 0.001, 0.5, 0.5), sched);

    const auto files = emit_plots(h, &inst, tmp.path / "plots");
    REQUIRE(files.size() == 2);
    for (const auto& f : files) {
        CHECK(fs::exists(f));
        const std::string svg = slurp(f);
        CHECK_THAT(svg, ContainsSubstring("<svg"));
        CHECK_THAT(svg, ContainsSubstring("polyline"));
    }
    CHECK_THAT(slurp(files[0]), ContainsSubstring("c_true"));
    CHECK_THAT(slurp(files[1]), ContainsSubstring("log10 J"));

    JointHistory<double> empty;
    CHECK_THROWS_AS(emit_plots(empty, &inst, tmp.path / "plots2"), std::invalid_argument);
    CHECK_THROWS_AS(write_reconstruction_svg({}, tmp.path / "r.svg"), std::invalid_argument);
}
