#include <doctest.h>

#include <cmath>

#include "dynalg/functionals.hpp"
#include "dynalg/rng.hpp"
#include "oracles.hpp"

using namespace dynalg;

namespace {
const TimeGrid kGrid(-8.0, 8.0, 2048);

// orbit built from a couple of bumps, not necessarily a loop of the catalog
TimeFunction random_orbit(Rng& rng) {
    TimeFunction x = make_zero(kGrid);
    for (int i = 0; i < 2; ++i)
        x = add(x, make_bump(kGrid, rng.uniform(-2.0, 2.0), rng.uniform(0.8, 1.6),
                             rng.uniform(-1.0, 1.0)));
    return x;
}

Functional sample_functional(Rng& rng) {
    Functional F(kGrid, 1);
    F.set_linear(make_bump(kGrid, rng.uniform(-0.8, 0.8), 1.1, rng.uniform(-1.0, 1.0)));
    F.add_potential(PotentialTerm{make_bump(kGrid, rng.uniform(-0.6, 0.6), 0.9, 1.0),
                                  Potential::gaussian(0.4, {0.2}, 1.1), std::nullopt});
    F.set_constant(rng.uniform(-1.0, 1.0));
    return F;
}

// fully resolved smooth loop (a mollifier's edge derivatives exceed the
// default grid resolution, which would probe the stencils, not the algebra)
TimeFunction gaussian_loop(double center, double sigma, double amp) {
    TimeFunction f(kGrid, 1);
    double radius = sigma * std::sqrt(2.0 * std::log(std::abs(amp) / 1e-15));
    for (std::size_t i = 0; i < kGrid.n_points; ++i) {
        double t = kGrid.t(i);
        if (std::abs(t - center) >= radius) continue;
        double u = (t - center) / sigma;
        f.samples(0)[i] = amp * std::exp(-0.5 * u * u);
    }
    f.set_support(Support::make(center - radius, center + radius));
    return f;
}
}  // namespace

TEST_CASE("constant functionals evaluate to their constant") {
    Functional Fh = Functional::constant(kGrid, 1, 0.73);
    Rng rng(3);
    CHECK(evaluate(Fh, random_orbit(rng)) == 0.73);
    CHECK(Fh.support().empty);
    CHECK(Fh.is_constant_only());
}

TEST_CASE("linear functionals are pairings") {
    TimeFunction f0 = make_bump(kGrid, 0.2, 1.0, 0.9);
    Functional F = Functional::linear(f0);
    Rng rng(5);
    TimeFunction x = random_orbit(rng);
    CHECK(evaluate(F, x) == doctest::Approx(pairing(f0, IdentityKernel{}, x)).epsilon(1e-12));
    CHECK(F.support().lo == doctest::Approx(f0.support().lo));
}

TEST_CASE("additivity for disjointly supported orbit pieces") {
    Rng rng(17);
    Functional F = sample_functional(rng);
    TimeFunction x1 = make_bump(kGrid, -2.6, 1.0, 0.8);   // disjoint from x2
    TimeFunction x2 = make_bump(kGrid, 2.6, 1.0, -0.7);
    TimeFunction x3 = random_orbit(rng);
    double lhs = evaluate(F, add(add(x1, x2), x3));
    double rhs = evaluate(F, add(x1, x3)) - evaluate(F, x3) + evaluate(F, add(x2, x3));
    CHECK(std::abs(lhs - rhs) < 1e-9);
}

TEST_CASE("shift is a group action absorbed exactly") {
    Rng rng(23);
    Functional F = sample_functional(rng);
    TimeFunction x0 = make_bump(kGrid, 0.3, 1.0, 0.6);
    TimeFunction x = random_orbit(rng);

    CHECK(shift(F, make_zero(kGrid)).structurally_equal(F));
    CHECK(std::abs(evaluate(shift(F, x0), x) - evaluate(F, add(x, x0))) < 1e-10);
    // inverse shift restores evaluations
    Functional back = shift(shift(F, x0), scale(x0, -1.0));
    CHECK(std::abs(evaluate(back, x) - evaluate(F, x)) < 1e-10);
    // action property
    TimeFunction y0 = make_bump(kGrid, -0.5, 0.9, -0.4);
    Functional one_step = shift(F, add(x0, y0));
    Functional two_step = shift(shift(F, x0), y0);
    CHECK(std::abs(evaluate(one_step, x) - evaluate(two_step, x)) < 1e-9);
}

TEST_CASE("support bookkeeping") {
    Functional A = Functional::linear(make_bump(kGrid, 0.0, 0.5, 1.0));
    Functional B = Functional::windowed_potential(make_bump(kGrid, 2.0, 0.5, 1.0),
                                                  Potential::cosine(0.3, {1.0}, 0.0));
    Support hull = add(A, B).support();
    CHECK(hull.lo == doctest::Approx(-0.5));
    CHECK(hull.hi == doctest::Approx(2.5));
    CHECK(lies_in_future(B, A));
    CHECK(!lies_in_future(A, B));
    // empty supports are ordered freely
    CHECK(lies_in_future(Functional::constant(kGrid, 1, 1.0), B));
}

TEST_CASE("relative action of the free Lagrangean") {
    TimeFunction x0 = gaussian_loop(0.1, 0.8, 0.7);
    TimeFunction chi = default_cutoff_for(x0);
    Functional dl = relative_action(Lagrangean::free_particle(), x0, chi);

    // linear part is K x0 (chi is exactly 1 there)
    TimeFunction kx0 = apply_K(x0);
    REQUIRE(dl.linear_part().has_value());
    CHECK(sup_norm(sub(*dl.linear_part(), kx0)) < 1e-13);
    // constant is the kinetic integral int xdot^2/2, checked against an
    // oracle-side 6th-order derivative
    double kin = 0.0;
    for (std::size_t i = 0; i < kGrid.n_points; ++i) {
        double d = oracles::d6(x0.samples(0), static_cast<long>(i), kGrid.dt());
        kin += 0.5 * d * d * kGrid.dt();
    }
    CHECK(dl.constant_part() == doctest::Approx(kin).epsilon(1e-7));
    CHECK(dl.potential_terms().empty());
    // zero loop gives the zero functional
    Functional zero = relative_action(Lagrangean::free_particle(), make_zero(kGrid), chi);
    CHECK(zero.is_constant_only());
    CHECK(zero.constant_part() == 0.0);
    // vanishing moments of the linear part (total-derivative structure)
    double a = integrate(*dl.linear_part());
    TimeFunction tk = multiply(make_ramp_weight(kGrid), *dl.linear_part());
    tk.set_support(dl.linear_part()->support());
    CHECK(std::abs(a) < 1e-8);
    CHECK(std::abs(integrate(tk)) < 1e-8);
}

TEST_CASE("relative action equals the windowed Lagrangean difference") {
    Rng rng(31);
    Potential vi = Potential::sech2(0.5, {0.1}, 1.0);
    Lagrangean L = Lagrangean::with_interaction(vi);
    TimeFunction x0 = gaussian_loop(-0.2, 0.7, 0.5);
    TimeFunction chi = default_cutoff_for(x0);
    Functional dl = relative_action(L, x0, chi);

    for (int trial = 0; trial < 4; ++trial) {
        TimeFunction x = add(make_bump(kGrid, rng.uniform(-1.0, 1.0), rng.uniform(1.3, 1.7),
                                       rng.uniform(-0.5, 0.5)),
                             make_bump(kGrid, rng.uniform(-1.0, 1.0), rng.uniform(1.3, 1.7),
                                       rng.uniform(-0.5, 0.5)));
        // direct quadrature of int chi (L(x+x0) - L(x)) with oracle-side
        // 6th-order derivatives
        TimeFunction integrand(kGrid, 1);
        auto& out = integrand.samples(0);
        for (std::size_t i = 0; i < kGrid.n_points; ++i) {
            double c = chi.samples(0)[i];
            if (c == 0.0) continue;
            double v = x.samples(0)[i], v0 = x0.samples(0)[i];
            double dv = oracles::d6(x.samples(0), static_cast<long>(i), kGrid.dt());
            double dv0 = oracles::d6(x0.samples(0), static_cast<long>(i), kGrid.dt());
            double lag_shift = 0.5 * (dv + dv0) * (dv + dv0) - vi({v + v0});
            double lag = 0.5 * dv * dv - vi({v});
            out[i] = c * (lag_shift - lag);
        }
        integrand.set_support(chi.support());
        CHECK(std::abs(evaluate(dl, x) - integrate(integrand)) < 1e-8);
    }
}

TEST_CASE("relative action is cutoff independent") {
    Rng rng(41);
    Potential vi = Potential::gaussian(0.4, {0.0}, 1.2);
    Lagrangean L = Lagrangean::with_interaction(vi);
    TimeFunction x0 = make_bump(kGrid, 0.0, 0.8, 0.5);
    TimeFunction chi1 = default_cutoff_for(x0, 0.2, 0.4);
    TimeFunction chi2 = make_window(kGrid, -2.6, -1.2, 1.2, 2.9);
    Functional d1 = relative_action(L, x0, chi1);
    Functional d2 = relative_action(L, x0, chi2);
    for (int trial = 0; trial < 10; ++trial) {
        TimeFunction x = random_orbit(rng);
        CHECK(std::abs(evaluate(d1, x) - evaluate(d2, x)) < 1e-9);
    }
}

TEST_CASE("relative action rejects a cutoff that misses the loop") {
    TimeFunction x0 = make_bump(kGrid, 0.0, 1.0, 0.5);
    TimeFunction bad = make_window(kGrid, -0.9, -0.5, 0.5, 0.9);  // not 1 on supp x0
    CHECK_THROWS_AS(relative_action(Lagrangean::free_particle(), x0, bad), PreconditionError);
}

TEST_CASE("catalog potentials are bounded and shift-closed") {
    Potential g = Potential::gaussian(0.7, {0.3}, 1.1);
    Potential c = Potential::cosine(-0.4, {1.3}, 0.2);
    Potential s = Potential::sech2(0.5, {-0.2}, 0.8);
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        double y = rng.uniform(-30.0, 30.0);
        CHECK(std::abs(g({y})) <= g.sup_abs() + 1e-15);
        CHECK(std::abs(c({y})) <= c.sup_abs() + 1e-15);
        CHECK(std::abs(s({y})) <= s.sup_abs() + 1e-15);
    }
    // stored shift loop realizes V(x + x0(t)) exactly at evaluation time
    TimeFunction window = make_bump(kGrid, 0.0, 0.8, 1.0);
    TimeFunction x0 = make_bump(kGrid, 0.1, 0.9, 0.7);
    Functional F = Functional::windowed_potential(window, g);
    Functional Fs = shift(F, x0);
    TimeFunction x = make_bump(kGrid, -0.1, 1.2, 0.4);
    CHECK(std::abs(evaluate(Fs, x) - evaluate(F, add(x, x0))) < 1e-12);
}

TEST_CASE("functional scaling stays in the catalog") {
    Rng rng(9);
    Functional F = sample_functional(rng);
    Functional F2 = scale(F, -1.7);
    TimeFunction x = random_orbit(rng);
    // linear and constant parts scale exactly; potentials scale their strength
    CHECK(F2.constant_part() == doctest::Approx(-1.7 * F.constant_part()));
    CHECK(F2.potential_terms()[0].pot.strength ==
          doctest::Approx(-1.7 * F.potential_terms()[0].pot.strength));
}
