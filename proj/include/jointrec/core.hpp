#pragma once

#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace jointrec {

template <typename T>
struct is_complex : std::false_type {};

template <typename U>
struct is_complex<std::complex<U>> : std::true_type {};

template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

/** Scalar types the solvers are instantiated with. */
template <typename T>
concept Scalar = std::same_as<T, double> || std::same_as<T, std::complex<double>>;

enum class ScalarField { real, complex };

template <Scalar T>
constexpr ScalarField field_of() {
    return is_complex_v<T> ? ScalarField::complex : ScalarField::real;
}

/** Reconstructed image: always a real coefficient vector. */
using ImageVec = std::vector<double>;

/** Measurement vector; complex for phase-sensitive acquisitions. */
template <Scalar T>
using Measurement = std::vector<T>;

namespace detail {

inline double conj_val(double x) { return x; }
inline std::complex<double> conj_val(const std::complex<double>& x) { return std::conj(x); }

inline double re(double x) { return x; }
inline double re(const std::complex<double>& x) { return x.real(); }

inline double abs_sq(double x) { return x * x; }
inline double abs_sq(const std::complex<double>& x) { return std::norm(x); }

inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(const std::complex<double>& x) {
    return std::isfinite(x.real()) && std::isfinite(x.imag());
}

// Plain bilinear product sum_m a_m z_m; hyperplanes are defined without conjugation.
template <Scalar T, typename U>
T dot_plain(std::span<const T> a, std::span<const U> z) {
    T acc{};
    for (std::size_t m = 0; m < a.size(); ++m) acc += a[m] * z[m];
    return acc;
}

template <Scalar T>
double sq_norm(std::span<const T> a) {
    double acc = 0.0;
    for (const T& x : a) acc += abs_sq(x);
    return acc;
}

template <Scalar T>
double l2_dist(std::span<const T> a, std::span<const T> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += abs_sq(a[i] - b[i]);
    return std::sqrt(acc);
}

}  // namespace detail

/** Dense row-major matrix; rows are contiguous so row actions stay cache-friendly. */
template <Scalar T>
class Matrix {
  public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<T>>& rows) {
        if (rows.empty()) throw std::invalid_argument("Matrix::from_rows: no rows");
        Matrix a(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != a.cols_)
                throw std::invalid_argument("Matrix::from_rows: ragged rows");
            for (std::size_t j = 0; j < a.cols_; ++j) a(i, j) = rows[i][j];
        }
        return a;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool all_finite() const {
        for (const T& x : data_)
            if (!detail::finite(x)) return false;
        return true;
    }

    double frobenius_norm() const {
        return std::sqrt(detail::sq_norm(std::span<const T>(data_)));
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

/** Sparse real projection map stored as per-column index/value lists.
 *
 *  Columns describe how coarse calibration cells aggregate fine image cells;
 *  every column must carry at least one nonzero.
 */
class ProjectionMap {
  public:
    struct Entry {
        std::size_t row;
        double value;
    };

    ProjectionMap(std::size_t rows, std::vector<std::vector<Entry>> columns)
        : rows_(rows), columns_(std::move(columns)) {
        col_sq_norms_.resize(columns_.size());
        for (std::size_t n = 0; n < columns_.size(); ++n) {
            if (columns_[n].empty())
                throw std::invalid_argument("ProjectionMap: column " + std::to_string(n) +
                                            " has no nonzero entries");
            double acc = 0.0;
            for (const Entry& e : columns_[n]) {
                if (e.row >= rows_)
                    throw std::invalid_argument("ProjectionMap: row index out of range in column " +
                                                std::to_string(n));
                if (!std::isfinite(e.value))
                    throw std::invalid_argument("ProjectionMap: non-finite value in column " +
                                                std::to_string(n));
                acc += e.value * e.value;
            }
            col_sq_norms_[n] = acc;
        }
        if (columns_.empty()) throw std::invalid_argument("ProjectionMap: no columns");
    }

    static ProjectionMap from_dense(const Matrix<double>& q) {
        std::vector<std::vector<Entry>> cols(q.cols());
        for (std::size_t n = 0; n < q.cols(); ++n)
            for (std::size_t m = 0; m < q.rows(); ++m)
                if (q(m, n) != 0.0) cols[n].push_back({m, q(m, n)});
        return ProjectionMap(q.rows(), std::move(cols));
    }

    Matrix<double> to_dense() const {
        Matrix<double> q(rows_, columns_.size(), 0.0);
        for (std::size_t n = 0; n < columns_.size(); ++n)
            for (const Entry& e : columns_[n]) q(e.row, n) = e.value;
        return q;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return columns_.size(); }
    std::span<const Entry> column(std::size_t n) const { return columns_[n]; }
    double column_sq_norm(std::size_t n) const { return col_sq_norms_[n]; }

  private:
    std::size_t rows_;
    std::vector<std::vector<Entry>> columns_;
    std::vector<double> col_sq_norms_;
};

/** Penalty weights of the joint functional together with the derived
 *  effective weights used inside the row sweeps.
 *
 *  The sweeps minimize the rescaled objectives
 *      Jc(c) = |Sc - u|^2 + alpha_eff^2 |c|_2^2 + lambda |c|_1
 *      Js(S) = |Sc - u|^2 + gamma_eff^2 |S - S_mod|_F^2 + mu_eff^2 |S Q - S_calib|_F^2
 *  with x_eff = sqrt(x / 2).
 */
struct RegParams {
    double alpha = 0.0;
    double lambda = 0.0;
    double gamma = 0.0;
    double mu = 0.0;

    double alpha_eff = 0.0;
    double gamma_eff = 0.0;
    double mu_eff = 0.0;
};

/** Builds RegParams from the functional weights, deriving the effective
 *  sweep weights x_eff = sqrt(x / 2). All weights must be finite and >= 0. */
inline RegParams make_reg_params(double alpha, double lambda, double gamma, double mu) {
    auto check = [](double x, const char* name) {
        if (!std::isfinite(x) || x < 0.0)
            throw std::invalid_argument(std::string("make_reg_params: ") + name +
                                        " must be finite and >= 0");
    };
    check(alpha, "alpha");
    check(lambda, "lambda");
    check(gamma, "gamma");
    check(mu, "mu");
    RegParams p;
    p.alpha = alpha;
    p.lambda = lambda;
    p.gamma = gamma;
    p.mu = mu;
    p.alpha_eff = std::sqrt(alpha / 2.0);
    p.gamma_eff = std::sqrt(gamma / 2.0);
    p.mu_eff = std::sqrt(mu / 2.0);
    return p;
}

/** Sweep counts and relaxation for the alternating solver. */
struct KaczmarzSchedule {
    std::size_t outer_iterations = 0;
    std::size_t c_sweeps_per_outer = 0;
    std::size_t s_sweeps_per_outer = 0;
    double relaxation_tau = 1.0;  // must lie in (0, 2)
    std::optional<double> stop_rel_change;
};

inline std::vector<std::string> validate_schedule(const KaczmarzSchedule& s) {
    std::vector<std::string> v;
    if (!(s.relaxation_tau > 0.0 && s.relaxation_tau < 2.0))
        v.push_back("relaxation_tau outside (0, 2)");
    if (s.stop_rel_change && !(*s.stop_rel_change > 0.0 && std::isfinite(*s.stop_rel_change)))
        v.push_back("stop_rel_change must be finite and > 0");
    return v;
}

inline void require_valid_schedule(const KaczmarzSchedule& s) {
    auto v = validate_schedule(s);
    if (!v.empty()) throw std::invalid_argument("schedule: " + v.front());
}

/** One reconstruction problem: modelled operator, calibration data,
 *  projection map, measurement, and (for synthetic instances) the truth. */
template <Scalar T>
struct ProblemInstance {
    std::optional<Matrix<T>> s_true;  // K x M, synthetic instances only
    Matrix<T> s_mod;                  // K x M modelled operator
    Matrix<T> s_calib;                // K x N calibration measurements
    ProjectionMap q;                  // M x N
    std::optional<ImageVec> c_true;   // M, synthetic instances only
    Measurement<T> u;                 // K
    double sigma = 0.0;               // noise level used to synthesize the instance
    std::uint64_t seed = 0;

    std::size_t k() const { return s_mod.rows(); }
    std::size_t m() const { return s_mod.cols(); }
    std::size_t n() const { return s_calib.cols(); }
    ScalarField field() const { return field_of<T>(); }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/** Checks dimensional consistency and finiteness of every payload.
 *  All violations are collected, not just the first. */
template <Scalar T>
ValidationReport validate_instance(const ProblemInstance<T>& inst) {
    ValidationReport r;
    auto add = [&r](std::string msg) { r.violations.push_back(std::move(msg)); };

    const std::size_t k = inst.s_mod.rows();
    const std::size_t m = inst.s_mod.cols();
    const std::size_t n = inst.s_calib.cols();

    if (k == 0 || m == 0) add("s_mod must be non-empty (K x M)");
    if (inst.s_calib.rows() != k)
        add("s_calib rows (" + std::to_string(inst.s_calib.rows()) + ") != K (" +
            std::to_string(k) + ")");
    if (inst.q.rows() != m)
        add("q rows (" + std::to_string(inst.q.rows()) + ") != M (" + std::to_string(m) + ")");
    if (inst.q.cols() != n)
        add("q cols (" + std::to_string(inst.q.cols()) + ") != N (" + std::to_string(n) + ")");
    if (inst.u.size() != k)
        add("u size (" + std::to_string(inst.u.size()) + ") != K (" + std::to_string(k) + ")");
    if (inst.s_true) {
        if (inst.s_true->rows() != k || inst.s_true->cols() != m)
            add("s_true dimensions do not match s_mod (K x M)");
        if (!inst.s_true->all_finite()) add("s_true contains non-finite entries");
    }
    if (inst.c_true) {
        if (inst.c_true->size() != m)
            add("c_true size (" + std::to_string(inst.c_true->size()) + ") != M (" +
                std::to_string(m) + ")");
        for (double x : *inst.c_true)
            if (!std::isfinite(x)) {
                add("c_true contains non-finite entries");
                break;
            }
    }
    if (!inst.s_mod.all_finite()) add("s_mod contains non-finite entries");
    if (!inst.s_calib.all_finite()) add("s_calib contains non-finite entries");
    for (const T& x : inst.u)
        if (!detail::finite(x)) {
            add("u contains non-finite entries");
            break;
        }
    if (!(std::isfinite(inst.sigma) && inst.sigma >= 0.0)) add("sigma must be finite and >= 0");
    return r;
}

template <Scalar T>
void require_valid_instance(const ProblemInstance<T>& inst) {
    auto r = validate_instance(inst);
    if (!r.ok()) {
        std::string msg = "invalid instance:";
        for (const auto& v : r.violations) msg += " [" + v + "]";
        throw std::invalid_argument(msg);
    }
}

}  // namespace jointrec
