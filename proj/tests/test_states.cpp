#include <doctest.h>

#include <cmath>
#include <complex>

#include "dynalg/rng.hpp"
#include "dynalg/states.hpp"

using namespace dynalg;

namespace {
const TimeGrid kGrid(-8.0, 8.0, 2048);

const RepSpace& rep() {
    static RepSpace r = build_rep(RepConfig{});
    return r;
}
}  // namespace

TEST_CASE("state construction invariants") {
    VectorState g0 = states::ground(rep());
    CHECK(rep().norm(g0.psi) == doctest::Approx(1.0).epsilon(1e-12));
    VectorState c = states::coherent(rep(), {1.0}, {-0.5});
    CHECK(position_expectation(rep(), c).real() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(momentum_expectation(rep(), c).real() == doctest::Approx(-0.5).epsilon(1e-8));
    CHECK_THROWS_AS(states::excited(rep(), 99), ArgumentError);
}

TEST_CASE("expectations are normalized and bounded") {
    VectorState g0 = states::ground(rep());
    GroupWord one = identity_word(Lagrangean::free_particle());
    CHECK(std::abs(expectation(g0, one, rep()) - Complex(1.0, 0.0)) < 1e-14);
    Rng rng(12);
    for (int i = 0; i < 5; ++i) {
        TimeFunction f = make_bump(kGrid, rng.uniform(-1.0, 1.0), rng.uniform(0.8, 1.3),
                                   rng.uniform(-1.2, 1.2));
        CHECK(std::abs(expectation(g0, weyl_word(f), rep())) <= 1.0 + 1e-10);
    }
    // ground-state Weyl overlap has the coherent Gaussian modulus
    TimeFunction f = make_loop_with_moments(kGrid, 0.8, -0.5, 0.0, 0.8);
    Moments m = moments(f);
    double expected = std::exp(-(m.a[0] * m.a[0] + m.b[0] * m.b[0]) / 4.0);
    CHECK(std::abs(expectation(g0, weyl_word(f), rep())) ==
          doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("operations act unitarily on states") {
    VectorState g0 = states::ground(rep());
    GroupWord one = identity_word(Lagrangean::free_particle());
    auto same = apply_operation(g0, one, rep());
    CHECK(same.norm_defect < 1e-12);

    TimeFunction f = make_loop_with_moments(kGrid, 0.7, 0.4, 0.0, 0.8);
    GroupWord w = weyl_word(f);
    auto fwd = apply_operation(g0, w, rep());
    auto back = apply_operation(fwd.state, word_inverse(w), rep());
    Complex phase = rep().inner(g0.psi, back.state.psi);
    phase /= std::abs(phase);
    double d = 0.0;
    for (std::size_t i = 0; i < rep().dim(); ++i)
        d += std::norm(back.state.psi[i] - phase * g0.psi[i]);
    CHECK(std::sqrt(d * rep().weight()) < 1e-6);

    // displaced ground state is the coherent state centred at (-b, a)
    Moments m = moments(f);
    CHECK(position_expectation(rep(), fwd.state).real() ==
          doctest::Approx(-m.b[0]).epsilon(1e-5));
    CHECK(momentum_expectation(rep(), fwd.state).real() ==
          doctest::Approx(m.a[0]).epsilon(1e-5));
}

TEST_CASE("transition probabilities") {
    VectorState g0 = states::ground(rep());
    GroupWord one = identity_word(Lagrangean::free_particle());
    CHECK(transition_probability(g0, one, rep()) == doctest::Approx(1.0).epsilon(1e-12));

    TimeFunction f = make_loop_with_moments(kGrid, -0.6, 0.9, 0.0, 0.8);
    Moments m = moments(f);
    double p = transition_probability(g0, weyl_word(f), rep());
    CHECK(p == doctest::Approx(std::exp(-0.5 * (m.a[0] * m.a[0] + m.b[0] * m.b[0])))
                   .epsilon(1e-6));

    // multiplying by a central phase leaves the probability unchanged
    GroupWord with_phase = word_multiply(
        weyl_word(f),
        generator(Lagrangean::free_particle(), Functional::constant(kGrid, 1, 2.2)));
    CHECK(std::abs(transition_probability(g0, with_phase, rep()) - p) < 1e-10);
    // and it is symmetric under inversion
    CHECK(std::abs(transition_probability(g0, word_inverse(weyl_word(f)), rep()) - p) < 1e-9);
}

TEST_CASE("operation pullback identity omega_S = omega o Ad S^{-1}") {
    VectorState g0 = states::ground(rep());
    Rng rng(77);
    for (int i = 0; i < 3; ++i) {
        TimeFunction fs = make_bump(kGrid, rng.uniform(-0.8, 0.8), 1.1, rng.uniform(-0.9, 0.9));
        TimeFunction fa = make_bump(kGrid, rng.uniform(-0.8, 0.8), 1.0, rng.uniform(-0.9, 0.9));
        GroupWord S = weyl_word(fs), A = weyl_word(fa);
        auto moved = apply_operation(g0, S, rep());
        Complex lhs = expectation(moved.state, A, rep());
        Complex rhs =
            expectation(g0, word_multiply(word_multiply(word_inverse(S), A), S), rep());
        CHECK(std::abs(lhs - rhs) < 1e-6);
    }
}

TEST_CASE("projection steering vignette reaches the window") {
    VectorState g0 = states::ground(rep());
    auto report = steer_into_projection(rep(), g0, rep().k_track() / 2);
    CHECK(report.achieved < 1e-3);
    CHECK_THROWS_AS(steer_into_projection(rep(), g0, 2), ArgumentError);
}
