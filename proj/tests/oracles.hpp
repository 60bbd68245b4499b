#pragma once

// Reference solutions computed with Eigen dense factorizations; these stay
// independent of the row-action solvers under test.

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

#include "jointrec/core.hpp"

namespace oracles {

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using EVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <jointrec::Scalar T>
EMat<T> to_eigen(const jointrec::Matrix<T>& a) {
    EMat<T> e(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) e(i, j) = a(i, j);
    return e;
}

template <jointrec::Scalar T>
EVec<T> to_eigen(std::span<const T> x) {
    EVec<T> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e(i) = x[i];
    return e;
}

template <jointrec::Scalar T>
std::vector<T> from_eigen(const EVec<T>& e) {
    return std::vector<T>(e.data(), e.data() + e.size());
}

/** Minimizer of |A z - b|^2 + eta^2 |z - z0|^2 via the normal equations
 *  (A^H A + eta^2 I) z = A^H b + eta^2 z0. */
template <jointrec::Scalar T>
std::vector<T> regularized_least_squares(const EMat<T>& a, const EVec<T>& b, double eta,
                                         const EVec<T>& z0) {
    const auto m = a.cols();
    EMat<T> lhs = a.adjoint() * a + (eta * eta) * EMat<T>::Identity(m, m);
    EVec<T> rhs = a.adjoint() * b + (eta * eta) * z0;
    EVec<T> z = lhs.ldlt().solve(rhs);
    return from_eigen<T>(z);
}

/** Per-row reference for the operator solve: row k of S minimizes
 *  |S_k c - u_k|^2 + gamma_eff^2 |S_k - S_mod_k|^2 + mu_eff^2 |S_k Q - S_calib_k|^2,
 *  which is a regularized least-squares problem with the stacked rows
 *  [c^T; mu_eff Q_1^T; ...; mu_eff Q_N^T]. */
template <jointrec::Scalar T>
std::vector<T> operator_row_solution(const jointrec::ProblemInstance<T>& inst,
                                     std::span<const double> c, double gamma_eff,
                                     double mu_eff, std::size_t k) {
    const std::size_t m = inst.m();
    const std::size_t n = inst.n();
    EMat<T> a = EMat<T>::Zero(1 + n, m);
    EVec<T> b(1 + n);
    for (std::size_t j = 0; j < m; ++j) a(0, j) = T(c[j]);
    b(0) = inst.u[k];
    const jointrec::Matrix<double> qd = inst.q.to_dense();
    for (std::size_t col = 0; col < n; ++col) {
        for (std::size_t j = 0; j < m; ++j) a(1 + col, j) = T(mu_eff * qd(j, col));
        b(1 + col) = T(mu_eff) * inst.s_calib(k, col);
    }
    EVec<T> z0(m);
    for (std::size_t j = 0; j < m; ++j) z0(j) = inst.s_mod(k, j);
    return regularized_least_squares<T>(a, b, gamma_eff, z0);
}

}  // namespace oracles
