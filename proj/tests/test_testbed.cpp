#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "jointrec/forward.hpp"
#include "jointrec/testbed.hpp"

using namespace jointrec;
using C = std::complex<double>;
using Catch::Matchers::WithinAbs;

TEST_CASE("true operator is the lower-triangular ones matrix") {
    const Matrix<double> s = build_true_operator(4);
    const Matrix<double> expected = Matrix<double>::from_rows({{1.0, 0.0, 0.0, 0.0},
                                                               {1.0, 1.0, 0.0, 0.0},
                                                               {1.0, 1.0, 1.0, 0.0},
                                                               {1.0, 1.0, 1.0, 1.0}});
    CHECK(s == expected);
    CHECK(build_true_operator(50).rows() == 50);  // K = M
    CHECK_THROWS_AS(build_true_operator(0), std::invalid_argument);
}

TEST_CASE("projection map pairs adjacent cells") {
    const ProjectionMap q = build_projection_map(8);
    CHECK(q.rows() == 8);
    CHECK(q.cols() == 4);
    for (std::size_t n = 0; n < 4; ++n) {
        const auto col = q.column(n);
        REQUIRE(col.size() == 2);
        CHECK(col[0].row == 2 * n);
        CHECK(col[1].row == 2 * n + 1);
        CHECK(col[0].value == 1.0);
        CHECK(col[1].value == 1.0);
        CHECK(q.column_sq_norm(n) == 2.0);
    }
    CHECK_THROWS_AS(build_projection_map(7), std::invalid_argument);
}

TEST_CASE("block projection map groups consecutive cells") {
    const ProjectionMap q = build_block_projection_map(36, 9);
    CHECK(q.rows() == 36);
    CHECK(q.cols() == 9);
    for (std::size_t n = 0; n < 9; ++n) {
        REQUIRE(q.column(n).size() == 4);
        CHECK(q.column(n)[0].row == 4 * n);
        CHECK(q.column(n)[3].row == 4 * n + 3);
    }
    CHECK_THROWS_AS(build_block_projection_map(10, 3), std::invalid_argument);
}

TEST_CASE("standard phantom at m = 50") {
    const ImageVec c = make_phantom(50);
    REQUIRE(c.size() == 50);

    std::size_t nonzeros = 0;
    double l1 = 0.0;
    for (double x : c) {
        if (x != 0.0) ++nonzeros;
        l1 += std::abs(x);
    }
    CHECK(nonzeros == 16);
    CHECK(l1 == 14.0);

    for (std::size_t i = 10; i < 20; ++i) CHECK(c[i] == 1.0);
    for (std::size_t i = 30; i < 35; ++i) CHECK(c[i] == 0.5);
    CHECK(c[42] == 1.5);
    CHECK(c[0] == 0.0);
    CHECK(c[25] == 0.0);
    CHECK(c[49] == 0.0);
}

TEST_CASE("phantom validation") {
    CHECK_THROWS_AS(make_phantom(6), std::invalid_argument);
    CHECK_THROWS_AS(make_phantom(10, PhantomSpec::custom({{8, 12, 1.0}})),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_phantom(10, PhantomSpec::custom({{0, 2, -1.0}})),
                    std::invalid_argument);

    const ImageVec c = make_phantom(10, PhantomSpec::custom({{1, 3, 2.0}, {5, 6, 0.25}}));
    CHECK(c == ImageVec{0.0, 2.0, 2.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("gaussian perturbation has the right first two moments") {
    const Matrix<double> zero(200, 200, 0.0);
    const Matrix<double> noisy = perturb_gaussian(zero, {0.05, 99});

    double sum = 0.0;
    for (double x : noisy.data()) sum += x;
    const double mean = sum / static_cast<double>(noisy.size());
    CHECK(std::abs(mean) < 0.002);  // 8 standard errors of the mean

    double var = 0.0;
    for (double x : noisy.data()) var += (x - mean) * (x - mean);
    var /= static_cast<double>(noisy.size() - 1);
    CHECK_THAT(std::sqrt(var), WithinAbs(0.05, 0.003));
}

TEST_CASE("perturbation is reproducible and sigma = 0 is the identity") {
    const Matrix<double> base = build_true_operator(10);
    const Matrix<double> a = perturb_gaussian(base, {0.1, 7});
    const Matrix<double> b = perturb_gaussian(base, {0.1, 7});
    CHECK(a == b);
    const Matrix<double> c = perturb_gaussian(base, {0.1, 8});
    CHECK(!(a == c));
    CHECK(perturb_gaussian(base, {0.0, 7}) == base);
}

TEST_CASE("complex perturbation draws real then imaginary parts") {
    const std::vector<C> zero(4, C{});
    const auto noisy = perturb_gaussian(zero, {1.0, 55});
    GaussianStream g(55);
    for (const C& x : noisy) {
        const double re = g.next();
        const double im = g.next();
        CHECK(x == C{re, im});
    }
}

TEST_CASE("generated instance ties the pieces together") {
    const auto inst = generate_instance(50, 0.05, 1);
    CHECK(validate_instance(inst).ok());
    CHECK(inst.k() == 50);
    CHECK(inst.m() == 50);
    CHECK(inst.n() == 25);
    REQUIRE(inst.s_true.has_value());
    REQUIRE(inst.c_true.has_value());
    CHECK(*inst.s_true == build_true_operator(50));
    CHECK(*inst.c_true == make_phantom(50));

    // calibration data is exact
    CHECK(inst.s_calib == apply_projection(*inst.s_true, inst.q));

    // operator perturbation magnitude: |eta|_F ~ sigma * sqrt(M K)
    double dev = 0.0;
    for (std::size_t i = 0; i < inst.s_mod.size(); ++i)
        dev += detail::abs_sq(inst.s_mod.data()[i] - inst.s_true->data()[i]);
    dev = std::sqrt(dev);
    CHECK_THAT(dev, WithinAbs(0.05 * 50.0, 0.3));

    // measurement noise magnitude: |xi|_2 ~ sigma * sqrt(K)
    const auto u_exact = apply_forward(*inst.s_true, std::span<const double>(*inst.c_true));
    const double xi = detail::l2_dist(std::span<const double>(inst.u),
                                      std::span<const double>(u_exact));
    CHECK_THAT(xi, WithinAbs(0.05 * std::sqrt(50.0), 0.15));
}

TEST_CASE("instance generation is deterministic, noise streams are distinct") {
    const auto a = generate_instance(10, 0.05, 21);
    const auto b = generate_instance(10, 0.05, 21);
    CHECK(a.s_mod == b.s_mod);
    CHECK(a.u == b.u);

    const auto c = generate_instance(10, 0.05, 22);
    CHECK(!(a.s_mod == c.s_mod));

    // operator and measurement noise must not share a stream
    const auto u_exact = apply_forward(*a.s_true, std::span<const double>(*a.c_true));
    for (std::size_t k = 0; k < a.k(); ++k) {
        const double xi_k = a.u[k] - u_exact[k];
        const double eta_k = a.s_mod(0, k) - (*a.s_true)(0, k);
        if (xi_k != eta_k) return;  // streams differ somewhere: pass
    }
    FAIL("measurement noise equals the first operator noise row");
}

TEST_CASE("generate_instance validates its arguments") {
    CHECK_THROWS_AS(generate_instance(7, 0.05, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_instance(6, 0.05, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_instance(50, -0.1, 1), std::invalid_argument);
}

TEST_CASE("complex instance exercises the complex field end to end") {
    const auto inst = generate_complex_instance(12, 10, 5, 0.01, 77);
    CHECK(validate_instance(inst).ok());
    CHECK(inst.k() == 12);
    CHECK(inst.m() == 10);
    CHECK(inst.n() == 5);
    CHECK(inst.field() == ScalarField::complex);
    CHECK(inst.s_calib == apply_projection(*inst.s_true, inst.q));
    const auto again = generate_complex_instance(12, 10, 5, 0.01, 77);
    CHECK(again.s_mod == inst.s_mod);
    CHECK(again.u == inst.u);
}
