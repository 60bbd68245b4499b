#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "jointrec/joint_solver.hpp"
#include "jointrec/testbed.hpp"

using namespace jointrec;

TEST_CASE("noiseless consistent data: image converges, operator stays put") {
    const auto inst = generate_instance(20, 0.0, 11);
    const RegParams p = make_reg_params(0.0, 0.0, 0.5, 0.5);
    const KaczmarzSchedule sched{.outer_iterations = 20,
                                 .c_sweeps_per_outer = 800,
                                 .s_sweeps_per_outer = 50};

    const JointHistory<double> h = solve_joint(inst, p, sched);

    const double c_err = detail::l2_dist(std::span<const double>(h.c_final),
                                         std::span<const double>(*inst.c_true));
    CHECK(c_err < 1e-4);

    double s_dev = 0.0;
    for (std::size_t i = 0; i < h.s_final.size(); ++i)
        s_dev += detail::abs_sq(h.s_final.data()[i] - inst.s_true->data()[i]);
    CHECK(std::sqrt(s_dev) < 1e-4);
}

TEST_CASE("zero outer iterations return the trivial pair") {
    const auto inst = generate_instance(10, 0.05, 12);
    const RegParams p = make_reg_params(1e-4, 1e-4, 0.5, 0.5);
    const KaczmarzSchedule sched{.outer_iterations = 0,
                                 .c_sweeps_per_outer = 10,
                                 .s_sweeps_per_outer = 10};
    const JointHistory<double> h = solve_joint(inst, p, sched);
    CHECK(h.per_outer.empty());
    CHECK(h.c_final == ImageVec(10, 0.0));
    CHECK(h.s_final == inst.s_mod);
}

TEST_CASE("history records index, objective, error, and timing per outer step") {
    const auto inst = generate_instance(12, 0.05, 13);
    const RegParams p = make_reg_params(1e-4, 1e-3, 0.25, 0.5);
    const KaczmarzSchedule sched{.outer_iterations = 5,
                                 .c_sweeps_per_outer = 30,
                                 .s_sweeps_per_outer = 20};
    const JointHistory<double> h = solve_joint(inst, p, sched);

    REQUIRE(h.per_outer.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& rec = h.per_outer[i];
        CHECK(rec.outer_index == i);
        CHECK(rec.c.size() == 12);
        CHECK(std::isfinite(rec.objective.total));
        REQUIRE(rec.l2_error_c.has_value());
        CHECK(std::isfinite(*rec.l2_error_c));
        CHECK(rec.wall_ms >= 0.0);
    }
    CHECK(h.per_outer.back().c == h.c_final);
}

TEST_CASE("operator snapshots default to first and last only") {
    const auto inst = generate_instance(10, 0.05, 14);
    const RegParams p = make_reg_params(1e-4, 1e-3, 0.5, 0.5);
    const KaczmarzSchedule sched{.outer_iterations = 4,
                                 .c_sweeps_per_outer = 10,
                                 .s_sweeps_per_outer = 10};

    const JointHistory<double> h = solve_joint(inst, p, sched);
    REQUIRE(h.per_outer.size() == 4);
    CHECK(h.per_outer[0].s.has_value());
    CHECK(!h.per_outer[1].s.has_value());
    CHECK(!h.per_outer[2].s.has_value());
    CHECK(h.per_outer[3].s.has_value());
    CHECK(*h.per_outer[3].s == h.s_final);

    JointOptions opt;
    opt.snapshot_s = true;
    const JointHistory<double> full = solve_joint(inst, p, sched, opt);
    for (const auto& rec : full.per_outer) CHECK(rec.s.has_value());
}

TEST_CASE("outer relative-change rule stops early") {
    const auto inst = generate_instance(10, 0.0, 15);
    const RegParams p = make_reg_params(0.0, 0.0, 0.5, 0.5);
    KaczmarzSchedule sched{.outer_iterations = 50,
                           .c_sweeps_per_outer = 400,
                           .s_sweeps_per_outer = 30};
    sched.stop_rel_change = 1e-8;

    const JointHistory<double> h = solve_joint(inst, p, sched);
    CHECK(h.stopped_by == JointStop::rel_change);
    CHECK(h.per_outer.size() < 50);
    CHECK(h.per_outer.back().s.has_value());  // early stop still snapshots the last S
}

TEST_CASE("convergence_check decisions") {
    JointHistory<double> h;
    KaczmarzSchedule sched{.outer_iterations = 3, .c_sweeps_per_outer = 1,
                           .s_sweeps_per_outer = 1};
    sched.stop_rel_change = 1e-3;

    JointOuterRecord<double> r0;
    r0.c = {1.0, 1.0};
    h.per_outer.push_back(r0);
    CHECK(convergence_check(h, sched) == JointDecision::proceed);

    JointOuterRecord<double> r1;
    r1.c = {1.0, 1.0 + 1e-6};
    h.per_outer.push_back(r1);
    CHECK(convergence_check(h, sched) == JointDecision::stop_rel_change);

    h.per_outer[1].c = {2.0, 2.0};
    CHECK(convergence_check(h, sched) == JointDecision::proceed);

    h.per_outer.push_back(r0);
    CHECK(convergence_check(h, sched) == JointDecision::stop_outer_limit);
}

TEST_CASE("joint solve is deterministic") {
    const auto inst = generate_instance(10, 0.05, 16);
    const RegParams p = make_reg_params(1e-4, 1e-3, 0.25, 1.0);
    const KaczmarzSchedule sched{.outer_iterations = 3,
                                 .c_sweeps_per_outer = 25,
                                 .s_sweeps_per_outer = 15};
    const JointHistory<double> a = solve_joint(inst, p, sched);
    const JointHistory<double> b = solve_joint(inst, p, sched);
    CHECK(a.c_final == b.c_final);
    CHECK(a.s_final == b.s_final);
}

TEST_CASE("contract errors carry the history accumulated so far") {
    auto inst = generate_instance(10, 0.05, 17);
    for (auto& x : inst.u) x = 1e160;  // finite, but the residual square overflows

    const RegParams p = make_reg_params(1e-4, 1e-3, 0.25, 1.0);
    const KaczmarzSchedule sched{.outer_iterations = 3,
                                 .c_sweeps_per_outer = 5,
                                 .s_sweeps_per_outer = 5};
    try {
        solve_joint(inst, p, sched);
        FAIL("expected JointSolveError");
    } catch (const JointSolveError<double>& e) {
        CHECK(std::string(e.what()).find("solve_joint") != std::string::npos);
        CHECK(e.history().per_outer.size() <= 3);
    }
}

TEST_CASE("invalid schedule or instance is rejected upfront") {
    const auto inst = generate_instance(10, 0.05, 18);
    const RegParams p = make_reg_params(1e-4, 1e-3, 0.25, 1.0);
    KaczmarzSchedule bad{.outer_iterations = 1, .c_sweeps_per_outer = 1,
                         .s_sweeps_per_outer = 1};
    bad.relaxation_tau = 3.0;
    CHECK_THROWS_AS(solve_joint(inst, p, bad), std::invalid_argument);

    auto broken = inst;
    broken.u.pop_back();
    const KaczmarzSchedule ok{.outer_iterations = 1, .c_sweeps_per_outer = 1,
                              .s_sweeps_per_outer = 1};
    CHECK_THROWS_AS(solve_joint(broken, p, ok), std::invalid_argument);
}
