#include <doctest.h>

#include "dynalg/embedding.hpp"
#include "dynalg/schrep.hpp"

using namespace dynalg;

namespace {
const TimeGrid kGrid(-8.0, 8.0, 2048);
const Potential kVi = Potential::gaussian(0.12, {0.0}, 1.1);

CutoffChain default_chain(const Potential& vi) {
    return CutoffChain(kGrid,
                       {{Support::make(-0.45, 0.45), Support::make(-0.75, 0.75)},
                        {Support::make(-1.0, 1.0), Support::make(-1.3, 1.3)},
                        {Support::make(-1.55, 1.55), Support::make(-1.85, 1.85)}},
                       vi);
}

Functional inner_functional() {
    Functional F(kGrid, 1);
    F.add_potential(PotentialTerm{make_bump(kGrid, 0.05, 0.35, 1.0),
                                  Potential::sech2(0.2, {0.3}, 1.0), std::nullopt});
    return F;
}
}  // namespace

TEST_CASE("chain construction enforces nesting and plateau invariants") {
    CutoffChain chain = default_chain(kVi);
    CHECK(chain.depth() == 3);
    for (std::size_t n = 0; n < chain.depth(); ++n) {
        auto [i0, i1] = detail::support_window(kGrid, chain.level(n).inner);
        for (std::size_t i = i0; i <= i1; ++i)
            CHECK(chain.level(n).chi.samples(0)[i] == doctest::Approx(1.0).epsilon(1e-13));
    }
    CHECK_THROWS_AS(CutoffChain(kGrid,
                                {{Support::make(-1.0, 1.0), Support::make(-0.5, 0.5)}}, kVi),
                    ArgumentError);
    CHECK_THROWS_AS(CutoffChain(kGrid,
                                {{Support::make(-0.5, 0.5), Support::make(-1.0, 1.0)},
                                 {Support::make(-0.8, 0.8), Support::make(-2.0, 2.0)}},
                                kVi),
                    ArgumentError);
}

TEST_CASE("s_chi words reduce and localize") {
    CutoffChain chain = default_chain(kVi);
    GroupWord triv = s_chi(Functional(kGrid, 1), chain.level(0).chi, kVi);
    CHECK(triv.is_scalar());
    Functional F = inner_functional();
    GroupWord w = s_chi(F, chain.level(0).chi, kVi);
    CHECK(w.letters.size() == 2);
    CHECK(chain.level(0).outer.contains(word_support(w)));
}

TEST_CASE("cocycles: trivial cases") {
    CutoffChain chain = default_chain(kVi);
    GroupWord same = cocycle_U(chain.level(0).chi, chain.level(0).chi, kVi,
                               chain.level(0).inner);
    CHECK(same.is_scalar());
    // difference purely in the future of the interval -> trivial cocycle
    TimeFunction chi1 = make_window(kGrid, -1.0, -0.6, 0.6, 1.0);
    TimeFunction chi2 = make_window(kGrid, -1.0, -0.6, 1.2, 1.8);
    GroupWord fut = cocycle_U(chi1, chi2, kVi, Support::make(-0.6, 0.6));
    CHECK(fut.is_scalar());
    // cutoffs that are not 1 on the claimed interval are rejected
    CHECK_THROWS_AS(cocycle_U(chi1, chi2, kVi, Support::make(-2.0, 2.0)), PreconditionError);
}

TEST_CASE("gamma at depth one is the bare cutoff word") {
    CutoffChain chain = default_chain(kVi);
    Functional F = inner_functional();
    GroupWord direct = s_chi(F, chain.level(0).chi, kVi);
    GroupWord g1 = gamma_embedding(F, chain, 1);
    REQUIRE(g1.letters.size() == direct.letters.size());
    for (std::size_t i = 0; i < g1.letters.size(); ++i)
        CHECK(g1.letters[i].functional.structurally_equal(direct.letters[i].functional));
}

TEST_CASE("gamma preconditions and the free case") {
    CutoffChain chain = default_chain(kVi);
    Functional wide(kGrid, 1);
    wide.add_potential(PotentialTerm{make_bump(kGrid, 0.0, 3.0, 1.0),
                                     Potential::gaussian(0.1, {0.0}, 1.0), std::nullopt});
    CHECK_THROWS_AS(gamma_embedding(wide, chain, 3), PreconditionError);
    CHECK_THROWS_AS(gamma_embedding(inner_functional(), chain, 7), ArgumentError);

    CutoffChain free_chain = default_chain(Potential::gaussian(0.0, {0.0}, 1.0));
    Functional F = inner_functional();
    GroupWord g = gamma_embedding(F, free_chain, 3);
    REQUIRE(g.letters.size() == 1);
    CHECK(g.letters[0].functional.structurally_equal(F));
}

TEST_CASE("gamma localizes into the outer interval") {
    CutoffChain chain = default_chain(kVi);
    GroupWord g3 = gamma_embedding(inner_functional(), chain, 3);
    CHECK(chain.level(2).outer.contains(word_support(g3)));
}

TEST_CASE("represented gamma is stable across depth") {
    RepSpace rep = build_rep(RepConfig{});
    CutoffChain chain = default_chain(kVi);
    Functional F = inner_functional();
    RepOperator r2 = represent(rep, gamma_embedding(F, chain, 2));
    RepOperator r3 = represent(rep, gamma_embedding(F, chain, 3));
    CHECK(RepOperator::distance(rep, r2, r3) < 1e-5);
}
