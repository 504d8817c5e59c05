#include <doctest.h>

#include <cmath>
#include <complex>

#include "dynalg/rng.hpp"
#include "dynalg/schrep.hpp"

using namespace dynalg;

namespace {
const TimeGrid kGrid(-8.0, 8.0, 2048);

const RepSpace& default_rep() {
    static RepSpace rep = build_rep(RepConfig{});
    return rep;
}
}  // namespace

TEST_CASE("representation construction and diagnostics") {
    const RepSpace& rep = default_rep();
    const RepDiagnostics& d = rep.diagnostics();
    CHECK(d.tracked_boundary < 1e-10);
    CHECK(d.qp_commutator < 1e-8);
    CHECK(d.u0_roundtrip < 1e-10);
    CHECK(rep.horizon() > 0.0);

    // harmonic levels: H psi_n = (n + 1/2) psi_n for H = (P^2 + Q^2)/2
    for (std::size_t n = 0; n < 10; ++n) {
        CVector psi = rep.tracked()[n];
        CVector p2 = psi;
        rep.apply_P(0, p2);
        rep.apply_P(0, p2);
        CVector q2 = psi;
        rep.mult_coord(0, q2);
        rep.mult_coord(0, q2);
        CVector r(rep.dim());
        for (std::size_t i = 0; i < rep.dim(); ++i)
            r[i] = 0.5 * (p2[i] + q2[i]) - (static_cast<double>(n) + 0.5) * psi[i];
        CHECK(rep.norm(r) < 1e-6);
    }

    // configuration errors
    RepConfig bad;
    bad.n_axis = 200;  // not a power of two
    CHECK_THROWS_AS(build_rep(bad), ConfigError);
    RepConfig small;
    small.x_half = 4.0;
    small.n_axis = 64;
    small.k_track = 24;  // high tracked states cannot decay in this box
    CHECK_THROWS_AS(build_rep(small), ConfigError);
}

TEST_CASE("free Heisenberg motion Q(t) = Q + tP") {
    const RepSpace& rep = default_rep();
    double t = std::min(0.4, rep.horizon());
    RepOperator qt = heisenberg_Q(rep, t);
    RepOperator poly = position_plus_tP(rep, t);
    CHECK(RepOperator::distance(rep, qt, poly) < 1e-6);
    RepOperator q0 = heisenberg_Q(rep, 0.0);
    RepOperator x = position_plus_tP(rep, 0.0);
    CHECK(RepOperator::distance(rep, q0, x) < 1e-12);
    CHECK_THROWS_AS(heisenberg_Q(rep, rep.horizon() + 0.5), RangeError);

    // [Q(t), Q(s)] = i (s - t) on the tracked domain
    double s = -std::min(0.3, rep.horizon());
    RepOperator qs = heisenberg_Q(rep, s);
    RepOperator com = RepOperator::compose(rep, qt, qs);
    RepOperator moc = RepOperator::compose(rep, qs, qt);
    double err = 0.0;
    for (std::size_t j = 0; j < rep.k_track(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rep.dim(); ++i) {
            Complex lhs = com.images()[j][i] - moc.images()[j][i];
            Complex rhs = Complex(0.0, s - t) * rep.tracked()[j][i];
            acc += std::norm(lhs - rhs);
        }
        err = std::max(err, std::sqrt(acc * rep.weight()));
    }
    CHECK(err < 1e-6);
}

TEST_CASE("coherent states follow the classical motion") {
    const RepSpace& rep = default_rep();
    double x0 = 1.1, p0 = -0.7;
    // displaced ground state with center (x0, p0)
    RepOperator w = weyl_from_moments(rep, {p0}, {-x0});
    CVector psi = w.apply(rep, rep.tracked().front());
    double t = std::min(0.4, rep.horizon());
    RepOperator qt = heisenberg_Q(rep, t);
    CVector img = qt.apply(rep, psi);
    Complex expect = rep.inner(psi, img);
    CHECK(expect.real() == doctest::Approx(x0 + t * p0).epsilon(1e-6));
    CHECK(std::abs(expect.imag()) < 1e-8);
}

TEST_CASE("weyl operators satisfy the product phase and dynamical relation") {
    const RepSpace& rep = default_rep();
    // W(K x0) is the identity
    TimeFunction x0 = make_bump(kGrid, 0.2, 1.2, 0.8);
    RepOperator wk = weyl_operator(rep, apply_K(x0));
    CHECK(RepOperator::distance(rep, wk, RepOperator::identity(rep)) < 1e-7);

    // product phase
    double af = 0.7, bf = 0.3, ag = -0.4, bg = 0.9;
    RepOperator wf = weyl_from_moments(rep, {af}, {bf});
    RepOperator wg = weyl_from_moments(rep, {ag}, {bg});
    RepOperator prod = RepOperator::compose(rep, wf, wg);
    RepOperator sum = RepOperator::compose(
        rep, weyl_from_moments(rep, {af + ag}, {bf + bg}),
        RepOperator::make(rep, {}, std::polar(1.0, -0.5 * (af * bg - bf * ag))));
    CHECK(RepOperator::distance(rep, prod, sum) < 1e-6);

    // ground-state overlap is the coherent Gaussian
    CVector img = wf.apply(rep, rep.tracked().front());
    double ov = std::abs(rep.inner(rep.tracked().front(), img));
    CHECK(ov == doctest::Approx(std::exp(-(af * af + bf * bf) / 4.0)).epsilon(1e-6));

    // unitarity within leakage policy
    CHECK(wf.unitarity_defect(rep) < 1e-7 + wf.max_leakage());
}

TEST_CASE("time-ordered exponentials: identity, central phase, series") {
    const RepSpace& rep = default_rep();
    CHECK(RepOperator::distance(rep, dyson_T(rep, Functional(kGrid, 1)),
                                RepOperator::identity(rep)) < 1e-12);
    RepOperator th = dyson_T(rep, Functional::constant(kGrid, 1, 0.63));
    CHECK(RepOperator::distance(rep, th,
                                RepOperator::make(rep, {}, std::polar(1.0, 0.63))) < 1e-8);

    // weak-coupling Dyson series, order 3
    Functional F(kGrid, 1);
    F.add_potential(PotentialTerm{make_bump(kGrid, 0.1, 0.8, 1.0),
                                  Potential::gaussian(0.12, {0.0}, 1.1), std::nullopt});
    RepOperator T = dyson_T(rep, F);
    Batch series = dyson_series_images(rep, F, 3);
    double err = 0.0;
    for (std::size_t j = 0; j < series.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rep.dim(); ++i)
            acc += std::norm(T.images()[j][i] - series[j][i]);
        err = std::max(err, std::sqrt(acc * rep.weight()));
    }
    CHECK(err < 1e-5);
    CHECK(T.unitarity_defect(rep) < 1e-7);
}

TEST_CASE("linear time-ordered exponential: closed form vs direct integration") {
    const RepSpace& rep = default_rep();
    CHECK(RepOperator::distance(rep, tordered_linear(rep, make_zero(kGrid)),
                                RepOperator::identity(rep)) < 1e-12);
    TimeFunction f0 = add(make_bump(kGrid, -0.5, 1.2, 0.35), make_bump(kGrid, 0.4, 1.1, -0.3));
    RepOperator closed = tordered_linear(rep, f0);
    RepOperator direct = tordered_linear_ode(rep, f0);
    CHECK(RepOperator::distance(rep, closed, direct) < 1e-5);

    // T(L_{K x0}) is the pure kinetic phase
    TimeFunction x0 = make_bump(kGrid, 0.0, 1.3, 0.45);
    TimeFunction xdot = differentiate(x0, 1);
    double kin = pairing(xdot, IdentityKernel{}, xdot);
    RepOperator tk = tordered_linear(rep, apply_K(x0));
    CHECK(RepOperator::distance(rep, tk,
                                RepOperator::make(rep, {}, std::polar(1.0, -0.5 * kin))) < 1e-6);
}

TEST_CASE("tbar restricts to both sectors and represents words") {
    const RepSpace& rep = default_rep();
    Functional Fb(kGrid, 1);
    Fb.add_potential(PotentialTerm{make_bump(kGrid, -0.2, 0.8, 1.0),
                                   Potential::sech2(0.25, {0.1}, 1.0), std::nullopt});
    Fb.set_constant(0.2);
    CHECK(RepOperator::distance(rep, tbar(rep, Fb), dyson_T(rep, Fb)) < 1e-12);

    Functional Fl = Functional::linear(make_bump(kGrid, 0.3, 1.2, 0.5));
    CHECK(RepOperator::distance(rep, tbar(rep, Fl),
                                tordered_linear(rep, *Fl.linear_part())) < 1e-12);

    CHECK(RepOperator::distance(rep, represent(rep, identity_word(Lagrangean::free_particle())),
                                RepOperator::identity(rep)) < 1e-15);

    // representation agrees with the Weyl normal form on a linear word
    GroupWord w = word_multiply(weyl_word(make_bump(kGrid, -0.4, 1.0, 0.6)),
                                word_inverse(weyl_word(make_bump(kGrid, 0.5, 1.1, 0.8))));
    WeylElement e = weyl_normal_form(w);
    RepOperator lhs = represent(rep, w);
    RepOperator rhs = RepOperator::compose(
        rep, weyl_from_moments(rep, e.a, e.b),
        RepOperator::make(rep, {}, std::polar(1.0, e.theta)));
    CHECK(RepOperator::distance(rep, lhs, rhs) < 1e-5);

    Lagrangean inter = Lagrangean::with_interaction(Potential::gaussian(0.2, {0.0}, 1.0));
    CHECK_THROWS_AS(represent(rep, identity_word(inter)), ArgumentError);
    CHECK_THROWS_AS(dyson_T(rep, Fl), ArgumentError);
}

TEST_CASE("adjoint relation under Weyl conjugation") {
    const RepSpace& rep = default_rep();
    TimeFunction f0 = make_bump(kGrid, 0.1, 1.3, 0.5);
    Functional F(kGrid, 1);
    F.add_potential(PotentialTerm{make_bump(kGrid, 0.0, 0.9, 1.0),
                                  Potential::gaussian(0.3, {0.2}, 1.1), std::nullopt});
    RepOperator W = weyl_operator(rep, f0);
    RepOperator lhs = RepOperator::product(
        rep, {W, dyson_T(rep, F), RepOperator::inverse(rep, W)});
    RepOperator rhs = dyson_T(rep, shift(F, apply_propagator(KernelKind::Commutator, f0)));
    CHECK(RepOperator::distance(rep, lhs, rhs) < 1e-4);
}

TEST_CASE("regularity probe degenerates correctly at zero") {
    const RepSpace& rep = default_rep();
    RegularityReport r0 = regularity_probe(rep, Functional(kGrid, 1));
    for (double d : r0.distances) CHECK(d < 1e-12);
}

TEST_CASE("two degrees of freedom") {
    RepConfig cfg;
    cfg.x_half = 9.0;
    cfg.n_axis = 64;
    cfg.dof = 2;
    cfg.k_track = 10;
    RepSpace rep = build_rep(cfg);
    CHECK(rep.dim() == 64u * 64u);
    CHECK(rep.diagnostics().qp_commutator < 1e-8);

    // product harmonic levels: H = sum_axes (P^2 + Q^2)/2 has energy n1+n2+1
    // tracked state 4 is the (1,1) product in the quanta ordering
    CVector psi = rep.tracked()[4];
    CVector h(rep.dim(), Complex{});
    for (std::size_t axis = 0; axis < 2; ++axis) {
        CVector p2 = psi;
        rep.apply_P(axis, p2);
        rep.apply_P(axis, p2);
        CVector q2 = psi;
        rep.mult_coord(axis, q2);
        rep.mult_coord(axis, q2);
        for (std::size_t i = 0; i < rep.dim(); ++i) h[i] += 0.5 * (p2[i] + q2[i]);
    }
    CVector r(rep.dim());
    for (std::size_t i = 0; i < rep.dim(); ++i) r[i] = h[i] - 3.0 * psi[i];
    CHECK(rep.norm(r) < 1e-6);

    // two-component Weyl product phase: cross = a . b' - b . a'
    std::vector<double> a1{0.5, -0.3}, b1{0.2, 0.4}, a2{-0.4, 0.6}, b2{0.3, -0.2};
    RepOperator w1 = weyl_from_moments(rep, a1, b1);
    RepOperator w2 = weyl_from_moments(rep, a2, b2);
    double cross = 0.0;
    std::vector<double> asum(2), bsum(2);
    for (std::size_t c = 0; c < 2; ++c) {
        cross += a1[c] * b2[c] - b1[c] * a2[c];
        asum[c] = a1[c] + a2[c];
        bsum[c] = b1[c] + b2[c];
    }
    RepOperator lhs = RepOperator::compose(rep, w1, w2);
    RepOperator rhs = RepOperator::compose(
        rep, weyl_from_moments(rep, asum, bsum),
        RepOperator::make(rep, {}, std::polar(1.0, -0.5 * cross)));
    CHECK(RepOperator::distance(rep, lhs, rhs) < 1e-6);

    RepConfig bad = cfg;
    bad.dof = 3;
    CHECK_THROWS_AS(build_rep(bad), ConfigError);
}
