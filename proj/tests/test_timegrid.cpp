#include <doctest.h>

#include <cmath>

#include "dynalg/rng.hpp"
#include "dynalg/timegrid.hpp"
#include "oracles.hpp"

using namespace dynalg;

namespace {
const TimeGrid kGrid(-8.0, 8.0, 2048);
}

TEST_CASE("grid invariants are enforced") {
    CHECK_THROWS_AS(TimeGrid(1.0, -1.0, 64), ArgumentError);
    CHECK_THROWS_AS(TimeGrid(-1.0, 1.0, 8), ArgumentError);
    TimeGrid g(-8.0, 8.0, 2048);
    CHECK(g.dt() == doctest::Approx(16.0 / 2047.0));
}

TEST_CASE("bump constructor samples the mollifier") {
    TimeFunction f = make_bump(kGrid, 0.0, 1.0, 1.0);
    CHECK(f(0.0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(f(1.0)) <= 1e-12);
    CHECK(std::abs(f(-1.0)) <= 1e-12);
    CHECK(f.support().lo == doctest::Approx(-1.0));
    CHECK(f.support().hi == doctest::Approx(1.0));
    CHECK_THROWS_AS(make_bump(kGrid, 7.8, 1.0, 1.0), RangeError);
    CHECK_THROWS_AS(make_bump(kGrid, 0.0, -0.5, 1.0), ArgumentError);
}

TEST_CASE("bump integral matches the adaptive oracle") {
    // oracle: e * int exp(-1/(1-u^2)); the frozen constant came from it
    double reference = std::exp(1.0) *
                       oracles::integrate([](double u) { return std::exp(-1.0 / (1.0 - u * u)); },
                                          -1.0 + 1e-14, 1.0 - 1e-14);
    CHECK(reference == doctest::Approx(oracles::kUnitBumpIntegral).epsilon(1e-9));
    TimeFunction f = make_bump(kGrid, 0.0, 1.0, 1.0);
    CHECK(integrate(f) == doctest::Approx(oracles::kUnitBumpIntegral).epsilon(1e-8));
    // scaling: integral is amplitude * halfwidth * unit value
    TimeFunction g = make_bump(kGrid, 0.4, 1.3, -0.7);
    CHECK(integrate(g) ==
          doctest::Approx(-0.7 * 1.3 * oracles::kUnitBumpIntegral).epsilon(1e-8));
}

TEST_CASE("smooth step hits its plateaus and midpoint") {
    TimeFunction s = make_step(kGrid, 0.0, 1.0);
    CHECK(s(-5.0) == 0.0);
    CHECK(s(5.0) == 1.0);
    CHECK(s(0.5) == doctest::Approx(0.5).epsilon(1e-9));
    // partition symmetry s(u) + s(1-u) = 1 at sample resolution
    for (double u : {0.1, 0.25, 0.65, 0.9})
        CHECK(detail::smooth_partition(u) + detail::smooth_partition(1.0 - u) ==
              doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(make_step(kGrid, 1.0, 1.0), ArgumentError);
}

TEST_CASE("quadrature is linear and positive") {
    Rng rng(11);
    TimeFunction f = make_bump(kGrid, -0.7, 1.1, 0.8);
    TimeFunction g = make_bump(kGrid, 0.9, 0.9, -1.2);
    CHECK(integrate(add(f, g)) ==
          doctest::Approx(integrate(f) + integrate(g)).epsilon(1e-12));
    CHECK(integrate(make_zero(kGrid)) == 0.0);
    for (int i = 0; i < 8; ++i) {
        TimeFunction h = make_bump(kGrid, rng.uniform(-1.5, 1.5), rng.uniform(0.5, 1.5),
                                   rng.uniform(-2.0, 2.0));
        CHECK(integrate(multiply(h, h)) >= 0.0);
    }
}

TEST_CASE("differentiation matches closed forms") {
    CHECK(sup_norm(differentiate(make_zero(kGrid), 1)) == 0.0);
    // even bump has vanishing derivative at its center
    TimeFunction b = make_bump(kGrid, 0.0, 1.0, 1.0);
    CHECK(std::abs(differentiate(b, 1)(0.0)) <= 1e-9);

    // windowed sine over [-4, 4] against the analytic derivative
    double hw = 4.0, k = 2.0;
    TimeFunction w(kGrid, 1);
    auto& v = w.samples(0);
    for (std::size_t i = 0; i < kGrid.n_points; ++i) {
        double t = kGrid.t(i);
        v[i] = oracles::mollifier(t / hw) * std::sin(k * t);
    }
    w.set_support(Support::make(-hw, hw));
    TimeFunction d1 = differentiate(w, 1);
    double err = 0.0;
    for (std::size_t i = 0; i < kGrid.n_points; ++i) {
        double t = kGrid.t(i);
        double ref = oracles::mollifier_d1(t / hw) / hw * std::sin(k * t) +
                     oracles::mollifier(t / hw) * k * std::cos(k * t);
        err = std::max(err, std::abs(d1.samples(0)[i] - ref));
    }
    CHECK(err < 1e-6);

    // second derivative route equals iterated first derivative on a
    // well-resolved windowed oscillation (mollifier edges are intentionally
    // under-resolved, so they are not the right probe here)
    TimeFunction g2(kGrid, 1);
    for (std::size_t i = 0; i < kGrid.n_points; ++i) {
        double t = kGrid.t(i);
        double val = std::exp(-t * t / (2.0 * 0.81)) * std::sin(1.5 * t);
        g2.samples(0)[i] = std::abs(val) > 1e-15 ? val : 0.0;
    }
    g2.set_support(Support::make(-7.5, 7.5));
    TimeFunction d2 = differentiate(g2, 2);
    TimeFunction dd = differentiate(differentiate(g2, 1), 1);
    CHECK(sup_norm(sub(d2, dd)) / sup_norm(d2) < 1e-6);

    CHECK_THROWS_AS(differentiate(make_bump(kGrid, -7.2, 1.0, 1.0), 1), RangeError);
    CHECK_THROWS_AS(differentiate(w, 3), ArgumentError);
}

TEST_CASE("grid-aligned translation shifts samples exactly") {
    // dt = 2^-7 exactly, so shifted centers are representable
    TimeGrid g(-8.0, 8.0, 2049);
    long m = 37;
    double tau = static_cast<double>(m) * g.dt();
    TimeFunction a = make_bump(g, 0.25, 1.25, 0.9);
    TimeFunction b = make_bump(g, 0.25 + tau, 1.25, 0.9);
    for (std::size_t i = 0; i + static_cast<std::size_t>(m) < g.n_points; ++i)
        CHECK(b.samples(0)[i + static_cast<std::size_t>(m)] == a.samples(0)[i]);
}

TEST_CASE("loop synthesis hits prescribed moments") {
    TimeFunction f = make_loop_with_moments(kGrid, 0.8, -0.3, 0.2, 0.9);
    CHECK(integrate(f) == doctest::Approx(0.8).epsilon(1e-9));
    TimeFunction tf = multiply(make_ramp_weight(kGrid), f);
    tf.set_support(f.support());
    CHECK(integrate(tf) == doctest::Approx(-0.3).epsilon(1e-9));
}

TEST_CASE("tail bookkeeping composes under arithmetic") {
    TimeFunction s = make_step(kGrid, -0.5, 0.5);
    CHECK(!s.compact());
    CHECK(s.tail_right(0).intercept == 1.0);
    // 1 - step is a left cutoff
    TimeFunction one_minus = scale(s, -1.0);
    for (auto& x : one_minus.samples(0)) x += 1.0;
    one_minus.tail_left(0) = Tail{0.0, 1.0};
    one_minus.tail_right(0) = Tail{};
    one_minus.set_support(s.support());
    TimeFunction prod = multiply(s, one_minus);
    CHECK(prod.compact());
    CHECK_THROWS_AS(integrate(s), ArgumentError);
    CHECK_THROWS_AS(multiply(make_ramp_weight(kGrid), make_ramp_weight(kGrid)), ArgumentError);
}
