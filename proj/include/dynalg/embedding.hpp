#pragma once

#include <cstddef>
#include <vector>

#include "dynalg/groupalg.hpp"

namespace dynalg {

// ---------------------------------------------------------------------------
// Interaction picture at the algebraic level
// ---------------------------------------------------------------------------

// Nested intervals I_1 c Ihat_1 c I_2 c ... with two-sided cutoffs chi_n
// equal to 1 on a neighbourhood of I_n and supported in Ihat_n, plus the
// interaction V_I being switched on temporarily.
class CutoffChain {
  public:
    struct Level {
        Support inner;   // I_n
        Support outer;   // Ihat_n
        TimeFunction chi;
    };

    CutoffChain(const TimeGrid& grid, const std::vector<std::pair<Support, Support>>& levels,
                Potential interaction)
        : interaction_(std::move(interaction)) {
        if (levels.empty()) throw ArgumentError("CutoffChain: need at least one level");
        for (std::size_t n = 0; n < levels.size(); ++n) {
            const auto& [in, out] = levels[n];
            if (in.empty || out.empty) throw ArgumentError("CutoffChain: empty interval");
            if (!(out.lo < in.lo && in.hi < out.hi))
                throw ArgumentError("CutoffChain: need I strictly inside Ihat");
            if (n > 0) {
                const Support& prev_out = levels[n - 1].second;
                if (!(in.lo < prev_out.lo && prev_out.hi < in.hi))
                    throw ArgumentError("CutoffChain: nesting must be strict");
            }
            // chi = 1 on a neighbourhood of I (margin inside the gap), so the
            // difference of consecutive cutoffs splits cleanly at I.
            double margin_lo = 0.25 * (in.lo - out.lo);
            double margin_hi = 0.25 * (out.hi - in.hi);
            TimeFunction chi = make_window(grid, out.lo, in.lo - margin_lo, in.hi + margin_hi,
                                           out.hi);
            levels_.push_back(Level{in, out, std::move(chi)});
        }
        // invariant: chi_n == 1 on I_n
        for (const auto& lv : levels_) {
            auto [i0, i1] = detail::support_window(grid, lv.inner);
            for (std::size_t i = i0; i <= i1; ++i)
                if (std::abs(lv.chi.samples(0)[i] - 1.0) > 1e-12)
                    throw NumericalError("CutoffChain: chi not 1 on its interval");
        }
    }

    std::size_t depth() const { return levels_.size(); }
    const Level& level(std::size_t n) const { return levels_.at(n); }
    const Potential& interaction() const { return interaction_; }
    bool interaction_is_zero() const { return interaction_.sup_abs() == 0.0; }

  private:
    std::vector<Level> levels_;
    Potential interaction_;
};

// V_I(chi)[x] = int chi(t) V_I(x(t)) dt as a functional.
inline Functional windowed_interaction(const TimeFunction& chi, const Potential& v_i) {
    if (v_i.sup_abs() == 0.0) return Functional(chi.grid(), v_i.components() ? v_i.components() : 1);
    return Functional::windowed_potential(chi, v_i);
}

// S_{L_chi}(F) = S(-V_I(chi))^{-1} S(F - V_I(chi)) in the free algebra.
inline GroupWord s_chi(const Functional& F, const TimeFunction& chi, const Potential& v_i) {
    Lagrangean free = Lagrangean::free_particle();
    if (v_i.sup_abs() == 0.0) return generator(free, F);
    std::size_t d = v_i.components();
    if (F.components() != d) throw ArgumentError("s_chi: component mismatch");
    Functional vchi = windowed_interaction(chi, v_i);
    Functional minus_vchi = scale(vchi, -1.0);
    return word_multiply(word_inverse(generator(free, minus_vchi)),
                         generator(free, add(F, minus_vchi)));
}

// Temporary-cutoff Lagrangean L_chi = L_0 - chi V_I, used for the dynamical
// relation of the embedded generators.
inline Functional relative_action_cutoff(const TimeFunction& chi, const Potential& v_i,
                                         const TimeFunction& x0, const TimeFunction& chi_loop) {
    // delta L_chi(x0) = delta L_0(x0) - V_I^{x0}(chi) + V_I(chi)
    Functional free_part = relative_action(Lagrangean::free_particle(), x0, chi_loop);
    if (v_i.sup_abs() == 0.0) return free_part;
    Functional vchi = windowed_interaction(chi, v_i);
    return add(free_part, add(scale(shift(vchi, x0), -1.0), vchi));
}

// Cocycle U_{chi2,chi1} = S_{L_{chi1}}(-V_I(chi_-))^{-1}, where
// chi2 - chi1 = chi_+ + chi_-, split into the parts after and before the
// common interval on which both cutoffs are 1.
inline GroupWord cocycle_U(const TimeFunction& chi1, const TimeFunction& chi2,
                           const Potential& v_i, const Support& common) {
    if (common.empty) throw ArgumentError("cocycle_U: common interval must be non-empty");
    const TimeGrid& g = chi1.grid();
    // both cutoffs must equal 1 on the common interval
    auto [i0, i1] = detail::support_window(g, common);
    for (std::size_t i = i0; i <= i1; ++i) {
        if (std::abs(chi1.samples(0)[i] - 1.0) > 1e-12 ||
            std::abs(chi2.samples(0)[i] - 1.0) > 1e-12)
            throw PreconditionError("cocycle_U: cutoffs must equal 1 on the common interval");
    }
    if (v_i.sup_abs() == 0.0) return identity_word(Lagrangean::free_particle());
    TimeFunction diff = sub(chi2, chi1);
    // split chi2 - chi1 = chi_+ + chi_- by masking to the two sides of the
    // interval; the remainder on the interval itself must vanish.  Only the
    // past part chi_- enters the cocycle.
    TimeFunction past = diff;
    for (std::size_t i = 0; i < g.n_points; ++i) {
        double t = g.t(i);
        if (t >= common.lo) past.samples(0)[i] = 0.0;
        if (t >= common.lo && t <= common.hi && std::abs(diff.samples(0)[i]) > 1e-12)
            throw PreconditionError("cocycle_U: difference does not split at the interval");
    }
    past = tighten_support(past);
    if (past.support().empty) return identity_word(Lagrangean::free_particle());
    Functional v_past = windowed_interaction(past, v_i);
    return word_inverse(s_chi(scale(v_past, -1.0), chi1, v_i));
}

// gamma at finite depth n: Ad(U_{chi_n,chi_{n-1}} ... U_{chi_2,chi_1})^{-1}
// applied to the S_{L_{chi_n}} word of F.  Requires supp F inside some I_m,
// m <= n; the represented operator is stable in n beyond that depth.
inline GroupWord gamma_embedding(const Functional& F, const CutoffChain& chain, std::size_t n) {
    if (n == 0 || n > chain.depth())
        throw ArgumentError("gamma_embedding: depth out of range");
    Support fs = F.support();
    bool contained = false;
    for (std::size_t m = 0; m < n; ++m)
        if (chain.level(m).inner.contains(fs)) {
            contained = true;
            break;
        }
    if (!contained)
        throw PreconditionError("gamma_embedding: functional support exceeds chain intervals");
    if (chain.interaction_is_zero())
        return generator(Lagrangean::free_particle(), F);
    GroupWord conj = identity_word(Lagrangean::free_particle());
    // U_{chi_n, chi_{n-1}} ... U_{chi_2, chi_1}
    for (std::size_t k = n - 1; k >= 1; --k) {
        GroupWord u = cocycle_U(chain.level(k - 1).chi, chain.level(k).chi, chain.interaction(),
                                chain.level(k - 1).inner);
        conj = word_multiply(conj, u);
    }
    GroupWord core = s_chi(F, chain.level(n - 1).chi, chain.interaction());
    return word_multiply(word_multiply(word_inverse(conj), core), conj);
}

// Letterwise gamma of a word in the interacting algebra (conjugators at one
// common depth, so products map to products).
inline GroupWord gamma_embedding_word(const GroupWord& w, const CutoffChain& chain,
                                      std::size_t n) {
    GroupWord acc = identity_word(Lagrangean::free_particle());
    acc.phase = w.phase;
    for (const auto& letter : w.letters) {
        GroupWord g = gamma_embedding(letter.functional, chain, n);
        if (letter.exponent < 0) g = word_inverse(g);
        acc = word_multiply(acc, g);
    }
    return acc;
}

// Convex hull of the letter supports: the localization of a word.
inline Support word_support(const GroupWord& w) {
    Support s = Support::none();
    for (const auto& l : w.letters) s = Support::hull(s, l.functional.support());
    return s;
}

}  // namespace dynalg
