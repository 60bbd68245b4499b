#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "jointrec/core.hpp"
#include "jointrec/joint_solver.hpp"
#include "jointrec/sweep.hpp"
#include "jointrec/testbed.hpp"

namespace jointrec {

// ---------------------------------------------------------------------------
// binary matrix files
//
// layout (all integers little-endian):
//   0  : magic "JSRB"
//   4  : u16 version, currently 1
//   6  : u8 flags, bit 0 set for complex payloads
//   7  : u64 rows
//   15 : u64 cols
//   23 : rows * cols f64 values, row-major; complex entries store re then im
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMatrixHeaderBytes = 23;

namespace detail {

inline void put_u16(std::string& buf, std::uint16_t x) {
    buf.push_back(static_cast<char>(x & 0xff));
    buf.push_back(static_cast<char>((x >> 8) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& buf, double x) {
    put_u64(buf, std::bit_cast<std::uint64_t>(x));
}

inline std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t x = 0;
    for (int i = 7; i >= 0; --i) x = (x << 8) | p[i];
    return x;
}

inline double get_f64(const unsigned char* p) {
    return std::bit_cast<double>(get_u64(p));
}

inline void append_payload(std::string& buf, const Matrix<double>& a) {
    for (double x : a.data()) put_f64(buf, x);
}

inline void append_payload(std::string& buf, const Matrix<std::complex<double>>& a) {
    for (const auto& x : a.data()) {
        put_f64(buf, x.real());
        put_f64(buf, x.imag());
    }
}

}  // namespace detail

template <Scalar T>
void write_matrix(const std::filesystem::path& file, const Matrix<T>& a) {
    std::string buf;
    buf.reserve(kMatrixHeaderBytes + a.size() * sizeof(T));
    buf += "JSRB";
    detail::put_u16(buf, 1);
    buf.push_back(is_complex_v<T> ? char(1) : char(0));
    detail::put_u64(buf, a.rows());
    detail::put_u64(buf, a.cols());
    detail::append_payload(buf, a);

    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_matrix: cannot open " + file.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write_matrix: write failed for " + file.string());
}

using AnyMatrix = std::variant<Matrix<double>, Matrix<std::complex<double>>>;

inline AnyMatrix read_matrix(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("read_matrix: cannot open " + file.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

    if (bytes.size() < kMatrixHeaderBytes)
        throw std::runtime_error("read_matrix: " + file.string() + ": truncated header, expected " +
                                 std::to_string(kMatrixHeaderBytes) + " bytes, got " +
                                 std::to_string(bytes.size()));
    if (std::memcmp(p, "JSRB", 4) != 0)
        throw std::runtime_error("read_matrix: " + file.string() + ": bad magic");
    const std::uint16_t version = detail::get_u16(p + 4);
    if (version != 1)
        throw std::runtime_error("read_matrix: " + file.string() + ": unsupported version " +
                                 std::to_string(version));
    const unsigned char flags = p[6];
    if (flags > 1)
        throw std::runtime_error("read_matrix: " + file.string() + ": unknown flags " +
                                 std::to_string(flags));
    const std::uint64_t rows = detail::get_u64(p + 7);
    const std::uint64_t cols = detail::get_u64(p + 15);
    const bool complex_payload = (flags & 1) != 0;
    const std::uint64_t doubles = rows * cols * (complex_payload ? 2 : 1);
    const std::uint64_t expected = kMatrixHeaderBytes + doubles * 8;
    if (bytes.size() != expected)
        throw std::runtime_error("read_matrix: " + file.string() + ": expected " +
                                 std::to_string(expected) + " bytes, got " +
                                 std::to_string(bytes.size()));

    const unsigned char* payload = p + kMatrixHeaderBytes;
    if (complex_payload) {
        Matrix<std::complex<double>> a(rows, cols);
        for (std::size_t i = 0; i < rows * cols; ++i)
            a.data()[i] = {detail::get_f64(payload + 16 * i),
                           detail::get_f64(payload + 16 * i + 8)};
        return a;
    }
    Matrix<double> a(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) a.data()[i] = detail::get_f64(payload + 8 * i);
    return a;
}

template <Scalar T>
Matrix<T> read_matrix_as(const std::filesystem::path& file) {
    AnyMatrix any = read_matrix(file);
    if (auto* a = std::get_if<Matrix<T>>(&any)) return std::move(*a);
    throw std::runtime_error("read_matrix: " + file.string() + ": scalar field mismatch");
}

template <Scalar T>
void write_vector(const std::filesystem::path& file, std::span<const T> x) {
    Matrix<T> a(x.size(), 1);
    for (std::size_t i = 0; i < x.size(); ++i) a(i, 0) = x[i];
    write_matrix(file, a);
}

template <Scalar T>
std::vector<T> read_vector_as(const std::filesystem::path& file) {
    Matrix<T> a = read_matrix_as<T>(file);
    if (a.cols() != 1)
        throw std::runtime_error("read_vector: " + file.string() + ": expected one column");
    return a.data();
}

// ---------------------------------------------------------------------------
// results CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kResultsCsvHeader =
    "method,gamma,mu,alpha,lambda,seed,outer_iters,l2_error,ssim,data_residual,J_final,"
    "wall_ms,status";

namespace detail {

// 17 significant digits round-trip any finite double exactly.
inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string sanitize_csv_field(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

}  // namespace detail

inline void write_results_csv(const std::filesystem::path& file,
                              const std::vector<SweepRecord>& records) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("write_results_csv: cannot open " + file.string());
    out << kResultsCsvHeader << '\n';
    for (const SweepRecord& r : records) {
        out << method_name(r.method) << ',' << detail::fmt_g17(r.gamma) << ','
            << detail::fmt_g17(r.mu) << ',' << detail::fmt_g17(r.alpha) << ','
            << detail::fmt_g17(r.lambda) << ',' << r.seed << ',' << r.outer_iters << ','
            << detail::fmt_g17(r.l2_error) << ',' << detail::fmt_g17(r.ssim) << ','
            << detail::fmt_g17(r.data_residual) << ',' << detail::fmt_g17(r.j_final) << ','
            << detail::fmt_g17(r.wall_ms) << ','
            << (r.ok ? std::string("ok")
                     : "error:" + detail::sanitize_csv_field(r.error))
            << '\n';
    }
    if (!out) throw std::runtime_error("write_results_csv: write failed for " + file.string());
}

inline std::vector<SweepRecord> read_results_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("read_results_csv: cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line) || line != kResultsCsvHeader)
        throw std::runtime_error("read_results_csv: unexpected header in " + file.string());

    std::vector<SweepRecord> records;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                f.push_back(line.substr(start));
                break;
            }
            f.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (f.size() != 13)
            throw std::runtime_error("read_results_csv: malformed row in " + file.string());
        SweepRecord r;
        r.index = index++;
        const auto m = method_from_name(f[0]);
        if (!m) throw std::runtime_error("read_results_csv: unknown method " + f[0]);
        r.method = *m;
        r.gamma = std::strtod(f[1].c_str(), nullptr);
        r.mu = std::strtod(f[2].c_str(), nullptr);
        r.alpha = std::strtod(f[3].c_str(), nullptr);
        r.lambda = std::strtod(f[4].c_str(), nullptr);
        r.seed = std::strtoull(f[5].c_str(), nullptr, 10);
        r.outer_iters = std::strtoull(f[6].c_str(), nullptr, 10);
        r.l2_error = std::strtod(f[7].c_str(), nullptr);
        r.ssim = std::strtod(f[8].c_str(), nullptr);
        r.data_residual = std::strtod(f[9].c_str(), nullptr);
        r.j_final = std::strtod(f[10].c_str(), nullptr);
        r.wall_ms = std::strtod(f[11].c_str(), nullptr);
        r.ok = f[12] == "ok";
        if (!r.ok && f[12].rfind("error:", 0) == 0) r.error = f[12].substr(6);
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// run configuration
// ---------------------------------------------------------------------------

enum class RunMode { generate, solve, sweep, rates };

inline const char* run_mode_name(RunMode m) {
    switch (m) {
        case RunMode::generate: return "generate";
        case RunMode::solve: return "solve";
        case RunMode::sweep: return "sweep";
        case RunMode::rates: return "rates";
    }
    return "?";
}

struct InstanceConfig {
    std::size_t m = 50;
    double sigma = 0.05;
    std::uint64_t seed = 1;
    PhantomSpec phantom = PhantomSpec::standard();
};

struct PathsConfig {
    std::string out_dir = "out";
    std::string results_csv = "results.csv";
    std::optional<std::string> s_mod, s_calib, q, u;  // external instance inputs
};

/** Noise-halving rate experiment: level i uses sigma_i = start_sigma / 2^i,
 *  regularization alpha_i = 2 sigma_i (measurement plus operator noise), and
 *  the remaining weights at fixed ratios except gamma, which stays fixed. */
struct RatesConfig {
    std::size_t levels = 5;
    double start_sigma = 0.08;
    double gamma = 0.5;
    double mu_over_alpha = 6.25;
    double lambda_over_alpha = 0.0625;
};

struct RunConfig {
    RunMode mode = RunMode::generate;
    InstanceConfig instance;
    std::optional<RegParams> params;
    Method method = Method::joint;
    std::optional<GridSpec> grid;
    KaczmarzSchedule schedule;
    RatesConfig rates;
    PathsConfig paths;
    unsigned workers = 0;  // 0 picks the hardware concurrency
};

/** Invalid configuration; carries every violation found, not just the first. */
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string msg = "invalid config:";
        for (const auto& s : v) msg += "\n  - " + s;
        return msg;
    }
    std::vector<std::string> violations_;
};

namespace detail {

using json = nlohmann::json;

class ConfigParser {
  public:
    explicit ConfigParser(const json& root) : root_(root) {}

    RunConfig parse(const std::filesystem::path& config_dir) {
        RunConfig cfg;
        check_keys(root_, "", {"mode", "instance", "params", "method", "grid", "schedule",
                               "rates", "paths", "workers"});

        const std::string mode = get_string(root_, "", "mode", "");
        if (mode == "generate") cfg.mode = RunMode::generate;
        else if (mode == "solve") cfg.mode = RunMode::solve;
        else if (mode == "sweep") cfg.mode = RunMode::sweep;
        else if (mode == "rates") cfg.mode = RunMode::rates;
        else add("mode: must be one of generate|solve|sweep|rates");

        if (root_.contains("instance")) parse_instance(root_["instance"], cfg.instance);
        if (root_.contains("params")) parse_params(root_["params"], cfg.params);
        if (root_.contains("method")) {
            const std::string name = get_string(root_, "", "method", "joint");
            if (auto m = method_from_name(name)) cfg.method = *m;
            else add("method: unknown method '" + name + "'");
        }
        if (root_.contains("grid")) parse_grid(root_["grid"], cfg.grid);
        if (root_.contains("schedule")) parse_schedule(root_["schedule"], cfg.schedule);
        if (root_.contains("rates")) parse_rates(root_["rates"], cfg.rates);
        if (root_.contains("paths")) parse_paths(root_["paths"], cfg.paths, config_dir);
        if (root_.contains("workers")) {
            if (!root_["workers"].is_number_unsigned())
                add("workers: must be a nonnegative integer");
            else cfg.workers = root_["workers"].get<unsigned>();
        }

        // mode-specific requirements
        const bool needs_schedule = cfg.mode != RunMode::generate;
        if (needs_schedule && !root_.contains("schedule"))
            add("schedule: required for mode " + mode);
        if (cfg.mode == RunMode::sweep && !cfg.grid)
            add("grid: required for mode sweep");
        if (cfg.mode == RunMode::solve && !cfg.params)
            add("params: required for mode solve");
        const int ext = int(bool(cfg.paths.s_mod)) + int(bool(cfg.paths.s_calib)) +
                        int(bool(cfg.paths.q)) + int(bool(cfg.paths.u));
        if (ext != 0 && ext != 4)
            add("paths: external instances need all of s_mod, s_calib, q, u");

        if (!violations_.empty()) throw ConfigError(std::move(violations_));
        return cfg;
    }

  private:
    void add(std::string msg) { violations_.push_back(std::move(msg)); }

    void check_keys(const json& obj, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
        if (!obj.is_object()) {
            add(prefix.empty() ? "config root must be an object" : prefix + ": must be an object");
            return;
        }
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool known = false;
            for (const char* k : allowed)
                if (it.key() == k) { known = true; break; }
            if (!known)
                add((prefix.empty() ? "" : prefix + ".") + it.key() + ": unknown key");
        }
    }

    double get_number(const json& obj, const std::string& prefix, const char* key,
                      double fallback) {
        if (!obj.contains(key)) return fallback;
        if (!obj[key].is_number()) {
            add(prefix + key + ": must be a number");
            return fallback;
        }
        return obj[key].get<double>();
    }

    std::string get_string(const json& obj, const std::string& prefix, const char* key,
                           std::string fallback) {
        if (!obj.contains(key)) return fallback;
        if (!obj[key].is_string()) {
            add(prefix + std::string(key) + ": must be a string");
            return fallback;
        }
        return obj[key].get<std::string>();
    }

    void parse_instance(const json& j, InstanceConfig& out) {
        check_keys(j, "instance", {"m", "sigma", "seed", "phantom"});
        if (!j.is_object()) return;
        if (j.contains("m")) {
            if (!j["m"].is_number_unsigned()) add("instance.m: must be a positive integer");
            else out.m = j["m"].get<std::size_t>();
        }
        out.sigma = get_number(j, "instance.", "sigma", out.sigma);
        if (!(out.sigma >= 0.0) || !std::isfinite(out.sigma))
            add("instance.sigma: must be finite and >= 0");
        if (j.contains("seed")) {
            if (!j["seed"].is_number_unsigned()) add("instance.seed: must be a nonnegative integer");
            else out.seed = j["seed"].get<std::uint64_t>();
        }
        if (j.contains("phantom")) parse_phantom(j["phantom"], out.phantom);
    }

    void parse_phantom(const json& j, PhantomSpec& out) {
        if (j.is_string()) {
            if (j.get<std::string>() != "two_blocks_and_spike")
                add("instance.phantom: unknown phantom '" + j.get<std::string>() + "'");
            return;
        }
        if (!j.is_object()) {
            add("instance.phantom: must be a name or an object with segments");
            return;
        }
        check_keys(j, "instance.phantom", {"segments"});
        if (!j.contains("segments") || !j["segments"].is_array()) {
            add("instance.phantom.segments: must be an array of [begin, end, height]");
            return;
        }
        std::vector<PhantomSegment> segs;
        for (const auto& e : j["segments"]) {
            if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() ||
                !e[1].is_number_unsigned() || !e[2].is_number()) {
                add("instance.phantom.segments: entries must be [begin, end, height]");
                return;
            }
            segs.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(),
                            e[2].get<double>()});
        }
        out = PhantomSpec::custom(std::move(segs));
    }

    void parse_params(const json& j, std::optional<RegParams>& out) {
        check_keys(j, "params", {"alpha", "lambda", "gamma", "mu"});
        if (!j.is_object()) return;
        const double alpha = get_number(j, "params.", "alpha", 0.0);
        const double lambda = get_number(j, "params.", "lambda", 0.0);
        const double gamma = get_number(j, "params.", "gamma", 0.0);
        const double mu = get_number(j, "params.", "mu", 0.0);
        try {
            out = make_reg_params(alpha, lambda, gamma, mu);
        } catch (const std::invalid_argument& e) {
            add(std::string("params: ") + e.what());
        }
    }

    void parse_value_list(const json& j, const char* key, std::vector<double>& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_array() || j[key].empty()) {
            add(std::string("grid.") + key + ": must be a non-empty array of numbers");
            return;
        }
        std::vector<double> vals;
        for (const auto& e : j[key]) {
            if (!e.is_number()) {
                add(std::string("grid.") + key + ": must contain only numbers");
                return;
            }
            vals.push_back(e.get<double>());
        }
        out = std::move(vals);
    }

    void parse_grid(const json& j, std::optional<GridSpec>& out) {
        check_keys(j, "grid", {"gamma", "mu", "alpha", "lambda", "methods"});
        if (!j.is_object()) return;
        GridSpec g;
        parse_value_list(j, "gamma", g.gamma);
        parse_value_list(j, "mu", g.mu);
        g.alpha.clear();
        g.lambda.clear();
        parse_value_list(j, "alpha", g.alpha);
        parse_value_list(j, "lambda", g.lambda);
        if (g.alpha.empty()) add("grid.alpha: required");
        if (g.lambda.empty()) add("grid.lambda: required");
        if (j.contains("methods")) {
            if (!j["methods"].is_array() || j["methods"].empty()) {
                add("grid.methods: must be a non-empty array of method names");
            } else {
                g.methods.clear();
                for (const auto& e : j["methods"]) {
                    if (!e.is_string()) {
                        add("grid.methods: must contain only strings");
                        break;
                    }
                    if (auto m = method_from_name(e.get<std::string>())) g.methods.push_back(*m);
                    else add("grid.methods: unknown method '" + e.get<std::string>() + "'");
                }
            }
        }
        for (double x : g.alpha)
            if (!(x >= 0.0) || !std::isfinite(x)) add("grid.alpha: values must be finite and >= 0");
        for (double x : g.lambda)
            if (!(x >= 0.0) || !std::isfinite(x)) add("grid.lambda: values must be finite and >= 0");
        for (double x : g.gamma)
            if (!(x >= 0.0) || !std::isfinite(x)) add("grid.gamma: values must be finite and >= 0");
        for (double x : g.mu)
            if (!(x >= 0.0) || !std::isfinite(x)) add("grid.mu: values must be finite and >= 0");
        out = std::move(g);
    }

    void parse_schedule(const json& j, KaczmarzSchedule& out) {
        check_keys(j, "schedule", {"outer_iterations", "c_sweeps_per_outer",
                                   "s_sweeps_per_outer", "relaxation_tau", "stop_rel_change"});
        if (!j.is_object()) return;
        auto get_count = [&](const char* key, std::size_t fallback) -> std::size_t {
            if (!j.contains(key)) return fallback;
            if (!j[key].is_number_unsigned()) {
                add(std::string("schedule.") + key + ": must be a nonnegative integer");
                return fallback;
            }
            return j[key].get<std::size_t>();
        };
        out.outer_iterations = get_count("outer_iterations", 0);
        out.c_sweeps_per_outer = get_count("c_sweeps_per_outer", 0);
        out.s_sweeps_per_outer = get_count("s_sweeps_per_outer", 0);
        out.relaxation_tau = get_number(j, "schedule.", "relaxation_tau", 1.0);
        if (j.contains("stop_rel_change") && !j["stop_rel_change"].is_null()) {
            if (!j["stop_rel_change"].is_number())
                add("schedule.stop_rel_change: must be a number or null");
            else out.stop_rel_change = j["stop_rel_change"].get<double>();
        }
        for (const std::string& v : validate_schedule(out)) add("schedule." + v);
    }

    void parse_rates(const json& j, RatesConfig& out) {
        check_keys(j, "rates", {"levels", "start_sigma", "gamma", "mu_over_alpha",
                                "lambda_over_alpha"});
        if (!j.is_object()) return;
        if (j.contains("levels")) {
            if (!j["levels"].is_number_unsigned() || j["levels"].get<std::size_t>() < 2)
                add("rates.levels: must be an integer >= 2");
            else out.levels = j["levels"].get<std::size_t>();
        }
        out.start_sigma = get_number(j, "rates.", "start_sigma", out.start_sigma);
        out.gamma = get_number(j, "rates.", "gamma", out.gamma);
        out.mu_over_alpha = get_number(j, "rates.", "mu_over_alpha", out.mu_over_alpha);
        out.lambda_over_alpha = get_number(j, "rates.", "lambda_over_alpha", out.lambda_over_alpha);
        if (!(out.start_sigma > 0.0)) add("rates.start_sigma: must be > 0");
        if (!(out.gamma >= 0.0)) add("rates.gamma: must be >= 0");
        if (!(out.mu_over_alpha >= 0.0)) add("rates.mu_over_alpha: must be >= 0");
        if (!(out.lambda_over_alpha >= 0.0)) add("rates.lambda_over_alpha: must be >= 0");
    }

    void parse_paths(const json& j, PathsConfig& out, const std::filesystem::path& config_dir) {
        check_keys(j, "paths", {"out_dir", "results_csv", "s_mod", "s_calib", "q", "u"});
        if (!j.is_object()) return;
        out.out_dir = get_string(j, "paths.", "out_dir", out.out_dir);
        out.results_csv = get_string(j, "paths.", "results_csv", out.results_csv);
        auto input = [&](const char* key, std::optional<std::string>& dst) {
            if (!j.contains(key)) return;
            const std::string rel = get_string(j, "paths.", key, "");
            if (rel.empty()) return;
            const std::filesystem::path p = std::filesystem::path(rel).is_absolute()
                                                ? std::filesystem::path(rel)
                                                : config_dir / rel;
            if (!std::filesystem::exists(p))
                add(std::string("paths.") + key + ": file does not exist: " + p.string());
            else dst = p.string();
        };
        input("s_mod", out.s_mod);
        input("s_calib", out.s_calib);
        input("q", out.q);
        input("u", out.u);
    }

    const json& root_;
    std::vector<std::string> violations_;
};

}  // namespace detail

/** Loads and strictly validates a JSON run configuration: unknown keys are
 *  fatal, every violation is collected into the thrown ConfigError, and
 *  referenced input files must exist. Relative input paths resolve against
 *  the config file's directory. */
inline RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("load_config: cannot open " + file.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("JSON parse error: ") + e.what()});
    }
    return detail::ConfigParser(root).parse(std::filesystem::absolute(file).parent_path());
}

// ---------------------------------------------------------------------------
// vector-graphics plots
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_g6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

inline constexpr const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                                "#9467bd", "#ff7f0e", "#8c564b"};

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/** Minimal deterministic SVG line chart: fixed canvas, box axes, min/max
 *  tick labels, legend in the top-right corner. */
inline void write_svg_chart(const std::filesystem::path& file, const std::string& title,
                            const std::vector<PlotSeries>& series) {
    if (series.empty()) throw std::invalid_argument("write_svg_chart: no series");
    constexpr double width = 640, height = 420;
    constexpr double left = 56, right = 612, top = 40, bottom = 384;

    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
    if (first) throw std::invalid_argument("write_svg_chart: empty series");
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;

    auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
    auto sy = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("write_svg_chart: cannot open " + file.string());
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
        << "<text x=\"" << (width / 2) << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n"
        << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << (right - left)
        << "\" height=\"" << (bottom - top) << "\" fill=\"none\" stroke=\"#444\"/>\n";

    // axis extremes
    out << "<text x=\"" << left << "\" y=\"" << (bottom + 16)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_g6(xmin) << "</text>\n"
        << "<text x=\"" << right << "\" y=\"" << (bottom + 16)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_g6(xmax)
        << "</text>\n"
        << "<text x=\"" << (left - 6) << "\" y=\"" << bottom
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_g6(ymin)
        << "</text>\n"
        << "<text x=\"" << (left - 6) << "\" y=\"" << (top + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_g6(ymax)
        << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kSeriesColors[si % std::size(kSeriesColors)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[si].x.size(); ++i) {
            if (i) out << ' ';
            out << fmt_g6(sx(series[si].x[i])) << ',' << fmt_g6(sy(series[si].y[i]));
        }
        out << "\"/>\n";
        const double ly = top + 16 + 16 * static_cast<double>(si);
        out << "<rect x=\"" << (right - 150) << "\" y=\"" << (ly - 9)
            << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n"
            << "<text x=\"" << (right - 134) << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[si].label
            << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error("write_svg_chart: write failed for " + file.string());
}

}  // namespace detail

/** Overlay of image vectors against their index axis. */
inline std::filesystem::path write_reconstruction_svg(
    const std::vector<std::pair<std::string, ImageVec>>& series,
    const std::filesystem::path& file) {
    if (series.empty())
        throw std::invalid_argument("write_reconstruction_svg: no series");
    std::vector<detail::PlotSeries> ps;
    for (const auto& [label, c] : series) {
        detail::PlotSeries s;
        s.label = label;
        for (std::size_t i = 0; i < c.size(); ++i) {
            s.x.push_back(static_cast<double>(i));
            s.y.push_back(c[i]);
        }
        ps.push_back(std::move(s));
    }
    detail::write_svg_chart(file, "reconstruction", ps);
    return file;
}

/** Joint objective and image error (when known) against the outer iteration,
 *  both on a log10 scale. */
template <Scalar T>
std::filesystem::path write_convergence_svg(const JointHistory<T>& h,
                                            const std::filesystem::path& file) {
    if (h.per_outer.empty())
        throw std::invalid_argument("write_convergence_svg: empty history");
    detail::PlotSeries obj{"log10 J", {}, {}};
    detail::PlotSeries err{"log10 l2 error", {}, {}};
    for (const auto& rec : h.per_outer) {
        const double x = static_cast<double>(rec.outer_index);
        obj.x.push_back(x);
        obj.y.push_back(std::log10(std::max(rec.objective.total, 1e-300)));
        if (rec.l2_error_c) {
            err.x.push_back(x);
            err.y.push_back(std::log10(std::max(*rec.l2_error_c, 1e-300)));
        }
    }
    std::vector<detail::PlotSeries> series{obj};
    if (!err.x.empty()) series.push_back(err);
    detail::write_svg_chart(file, "convergence", series);
    return file;
}

/** Standard plot pair for one solve: reconstruction overlay and convergence
 *  curves, written into out_dir. Returns the created files. */
template <Scalar T>
std::vector<std::filesystem::path> emit_plots(const JointHistory<T>& h,
                                              const ProblemInstance<T>* inst,
                                              const std::filesystem::path& out_dir) {
    if (h.per_outer.empty()) throw std::invalid_argument("emit_plots: empty history");
    std::filesystem::create_directories(out_dir);
    std::vector<std::pair<std::string, ImageVec>> series;
    if (inst && inst->c_true) series.emplace_back("c_true", *inst->c_true);
    series.emplace_back("c_final", h.c_final);
    std::vector<std::filesystem::path> files;
    files.push_back(write_reconstruction_svg(series, out_dir / "reconstruction.svg"));
    files.push_back(write_convergence_svg(h, out_dir / "convergence.svg"));
    return files;
}

}  // namespace jointrec
