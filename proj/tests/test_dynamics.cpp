#include "helpers.hpp"

#include <koopman/dynamics.hpp>

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace koopman;
using testing::box;
using testing::vec;

TEST_SUITE("dynamics") {

TEST_CASE("origin is a fixed point of the benchmark") {
    const auto sys = benchmark_system();
    const Vector y = step(sys, vec({0, 0}));
    CHECK(y(0) == 0.0);
    CHECK(y(1) == 0.0);
}

TEST_CASE("rk4 on exponential decay") {
    const auto sys = exponential_decay_system(0.1);
    const Vector y = step(sys, vec({1.0}));
    CHECK(std::abs(y(0) - std::exp(-0.1)) <= 1e-7);
}

TEST_CASE("rk4 is fourth order") {
    auto err = [](double dt) {
        const auto sys = exponential_decay_system(dt);
        Vector x = vec({1.0});
        const int n = static_cast<int>(std::lround(1.0 / dt));
        for (int i = 0; i < n; ++i) x = step(sys, x);
        return std::abs(x(0) - std::exp(-1.0));
    };
    const double ratio = err(0.1) / err(0.05);
    CHECK(ratio > 14.0);
    CHECK(ratio < 18.0);
}

TEST_CASE("benchmark field grows at (2,2)") {
    const auto sys = benchmark_system();
    const Vector v = sys.vector_field(vec({2, 2}));
    CHECK(v(0) == doctest::Approx(6.0));
    CHECK(step(sys, vec({2, 2}))(0) > 2.0);
}

TEST_CASE("non-finite step raises divergence") {
    const auto sys = DynamicalSystem::discrete("blowup", 1, [](const Vector& x) {
        return Vector(x * std::numeric_limits<double>::infinity());
    });
    CHECK_THROWS_AS(step(sys, vec({1.0})), DivergenceError);
}

TEST_CASE("simulate labels") {
    const auto sys = benchmark_system();
    SUBCASE("small seed converges") {
        const auto t = simulate(sys, vec({0.1, 0.1}), 500);
        CHECK(t.label == Label::stable);
        CHECK_FALSE(t.diverged);
        CHECK(t.steps() == 500);
        CHECK(t.states.back().norm() < 1e-6);
    }
    SUBCASE("far seed diverges") {
        const auto t = simulate(sys, vec({2, 2}), 500);
        CHECK(t.diverged);
        CHECK(t.label == Label::unstable);
        CHECK(t.steps() < 500);
        for (const auto& s : t.states) CHECK(s.norm() <= kDivergenceBound);
    }
    SUBCASE("equilibrium stays put") {
        const auto t = simulate(sys, vec({0, 0}), 50);
        for (const auto& s : t.states) CHECK(s.norm() == 0.0);
        CHECK(t.label == Label::stable);
    }
}

TEST_CASE("build_dataset counts and partitions") {
    const auto sys = benchmark_system();
    SUBCASE("one trajectory of length 10") {
        const auto r = build_dataset(sys, {vec({0.1, 0.1})}, 10);
        CHECK(r.dataset.size() == 10);
        CHECK(r.dataset.count(Label::stable) == 10);
        for (Eigen::Index i = 0; i < r.dataset.size(); ++i) {
            const Vector fx = step(sys, r.dataset.xk.row(i).transpose());
            CHECK((fx - r.dataset.xkp1.row(i).transpose()).norm() == 0.0);
        }
    }
    SUBCASE("grid over [-1,1]^2 holds both labels") {
        const auto seeds = uniform_grid(box({-1, -1}, {1, 1}), 11);
        CHECK(seeds.size() == 121);
        const auto r = build_dataset(sys, seeds, 100);
        const auto s = r.dataset.partition(Label::stable);
        const auto u = r.dataset.partition(Label::unstable);
        CHECK(s.size() > 0);
        CHECK(u.size() > 0);
        CHECK(s.size() + u.size() == r.dataset.size());
    }
    SUBCASE("deterministic") {
        const auto seeds = uniform_random(box({-1.5, -1.5}, {1.5, 1.5}), 20, 7);
        const auto a = build_dataset(sys, seeds, 30).dataset;
        const auto b = build_dataset(sys, seeds, 30).dataset;
        CHECK(a.xk == b.xk);
        CHECK(a.xkp1 == b.xkp1);
        CHECK(a.labels == b.labels);
    }
    SUBCASE("empty dataset is an error") {
        CHECK_THROWS_AS(build_dataset(sys, {}, 10), PreconditionError);
        CHECK_THROWS_AS(build_dataset(sys, {vec({1e4, 0})}, 10), EmptyDatasetError);
    }
}

TEST_CASE("trajectory and pair csv round trip") {
    const auto sys = benchmark_system();
    const auto r = build_dataset(sys, {vec({0.3, -0.2}), vec({2, 2})}, 20);
    std::stringstream ts;
    write_trajectories_csv(ts, r.trajectories);
    const auto back = read_trajectories_csv(ts, sys.dt.value());
    REQUIRE(back.size() == 2);
    CHECK(back[1].diverged);
    CHECK(back[0].states.back() == r.trajectories[0].states.back());

    std::stringstream ps;
    write_pairs_csv(ps, r.dataset);
    const auto pairs = read_pairs_csv(ps);
    CHECK(pairs.xk == r.dataset.xk);
    CHECK(pairs.xkp1 == r.dataset.xkp1);
    CHECK(pairs.labels == r.dataset.labels);
}

}
