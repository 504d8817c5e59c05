#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "dynalg/functionals.hpp"
#include "dynalg/propagators.hpp"

namespace dynalg {

// ---------------------------------------------------------------------------
// Words in the dynamical group
// ---------------------------------------------------------------------------

struct Letter {
    Functional functional;
    int exponent = 1;  // +1 or -1
};

// A finite product of generators S(F)^{+-1} for one Lagrangean, together
// with an accumulated central phase (the scalar e^{i phase} 1).  Words are
// never auto-normalized modulo the dynamical and causal relations; relation
// applications are recorded in `notes` and equality is decided downstream,
// by the Weyl normal form in the linear sector or by the Schroedinger
// representation in general.
struct GroupWord {
    Lagrangean lagrangean;
    std::vector<Letter> letters;
    double phase = 0.0;  // accumulated central phase, kept real
    std::vector<std::string> notes;

    std::complex<double> scalar() const { return std::polar(1.0, phase); }
    bool is_scalar() const { return letters.empty(); }
};

// S(F).  Constant functionals are central and fold directly into the scalar:
// S(F_h) = e^{ih} 1, and in particular S(0) = 1.
inline GroupWord generator(const Lagrangean& L, const Functional& F) {
    GroupWord w;
    w.lagrangean = L;
    if (F.is_constant_only()) {
        w.phase = F.constant_part();
    } else {
        w.letters.push_back(Letter{F, +1});
    }
    return w;
}

inline GroupWord identity_word(const Lagrangean& L) {
    GroupWord w;
    w.lagrangean = L;
    return w;
}

namespace detail {
inline void free_reduce(std::vector<Letter>& letters) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i + 1 < letters.size(); ++i) {
            if (letters[i].exponent == -letters[i + 1].exponent &&
                letters[i].functional.structurally_equal(letters[i + 1].functional)) {
                letters.erase(letters.begin() + static_cast<long>(i),
                              letters.begin() + static_cast<long>(i) + 2);
                changed = true;
                break;
            }
        }
    }
}
}  // namespace detail

inline GroupWord word_multiply(const GroupWord& u, const GroupWord& v) {
    if (!(u.lagrangean == v.lagrangean))
        throw ArgumentError("word_multiply: mixed Lagrangean tags");
    GroupWord r;
    r.lagrangean = u.lagrangean;
    r.phase = u.phase + v.phase;
    r.letters = u.letters;
    r.letters.insert(r.letters.end(), v.letters.begin(), v.letters.end());
    detail::free_reduce(r.letters);
    r.notes = u.notes;
    r.notes.insert(r.notes.end(), v.notes.begin(), v.notes.end());
    return r;
}

inline GroupWord word_inverse(const GroupWord& u) {
    GroupWord r;
    r.lagrangean = u.lagrangean;
    r.phase = -u.phase;
    r.letters.assign(u.letters.rbegin(), u.letters.rend());
    for (auto& l : r.letters) l.exponent = -l.exponent;
    r.notes = u.notes;
    return r;
}

// Pull constant-only letters into the central scalar.
inline GroupWord fold_central(const GroupWord& u) {
    GroupWord r = u;
    std::vector<Letter> kept;
    for (const auto& l : r.letters) {
        if (l.functional.is_constant_only())
            r.phase += static_cast<double>(l.exponent) * l.functional.constant_part();
        else
            kept.push_back(l);
    }
    r.letters = std::move(kept);
    detail::free_reduce(r.letters);
    return r;
}

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------

// Dynamical relation: replace the letter's F by F^{x0} + delta L(x0).  The
// result denotes the same group element; the application is recorded.
inline GroupWord reduce_dynamical(const GroupWord& w, const TimeFunction& x0,
                                  std::size_t letter_index) {
    if (letter_index >= w.letters.size())
        throw ArgumentError("reduce_dynamical: letter index out of range");
    if (sup_norm(x0) <= detail::kSupportEps) return w;  // zero loop
    GroupWord r = w;
    const Functional& F = r.letters[letter_index].functional;
    TimeFunction chi = default_cutoff_for(x0);
    Functional replaced = add(shift(F, x0), relative_action(w.lagrangean, x0, chi));
    r.letters[letter_index].functional = std::move(replaced);
    r.notes.push_back("dynamical@" + std::to_string(letter_index));
    r = fold_central(r);
    return r;
}

// Overload applying the relation to S(F) itself (also valid for scalar words,
// where it yields S(delta L(x0)) = 1 semantics).
inline GroupWord reduce_dynamical_generator(const Lagrangean& L, const Functional& F,
                                            const TimeFunction& x0) {
    GroupWord w = generator(L, F);
    if (w.letters.empty()) {
        // S(F_h): relation gives S(F_h^{x0} + delta L(x0)) which again folds
        // to phase h times S(delta L(x0)); the latter equals 1 by relation (i).
        TimeFunction chi = default_cutoff_for(x0);
        GroupWord r = generator(L, add(F, relative_action(L, x0, chi)));
        r.notes.push_back("dynamical@scalar");
        return r;
    }
    return reduce_dynamical(w, x0, 0);
}

// Causal relation, both sides:
//   lhs = S(F1+F2+F3),  rhs = S(F1+F3) S(F3)^{-1} S(F2+F3),
// valid when F1 lies strictly in the future of F2.
struct CausalPair {
    GroupWord lhs;
    GroupWord rhs;
};

inline CausalPair causal_factorize(const Functional& F1, const Functional& F2,
                                   const Functional& F3, const Lagrangean& L) {
    if (!lies_in_future(F1, F2))
        throw CausalityError("causal_factorize: F1 must lie in the future of F2");
    CausalPair p;
    p.lhs = generator(L, add(add(F1, F2), F3));
    p.rhs = word_multiply(word_multiply(generator(L, add(F1, F3)),
                                        word_inverse(generator(L, F3))),
                          generator(L, add(F2, F3)));
    p.lhs.notes.push_back("causal:lhs");
    p.rhs.notes.push_back("causal:rhs");
    return p;
}

// ---------------------------------------------------------------------------
// Moments and the Weyl normal form (free Lagrangean, linear sector)
// ---------------------------------------------------------------------------

// (a, b) = (int f0 dt, int t f0 dt) per component: the complete invariant of
// a loop density modulo K C0.  D_R f0 has the affine tail -a t + b, so f0 is
// of the form K x0 with a loop x0 exactly when a = b = 0.
struct Moments {
    std::vector<double> a;
    std::vector<double> b;
};

inline Moments moments(const TimeFunction& f0) {
    if (!f0.compact()) throw ArgumentError("moments: input must be compactly supported");
    Moments m;
    m.a.resize(f0.components());
    m.b.resize(f0.components());
    // same cumulative engine as the propagators, so the kernel tails and the
    // moment pair agree to machine precision
    const TimeGrid& g = f0.grid();
    for (std::size_t c = 0; c < f0.components(); ++c) {
        auto c0 = detail::cumulative(f0.samples(c), g.dt());
        auto dd = detail::cumulative(c0, g.dt());
        m.a[c] = c0.back();
        m.b[c] = m.a[c] * g.t(g.n_points - 1) - dd.back();
    }
    return m;
}

// Canonical form (phase, a, b) of a free-theory Weyl word:
// W = e^{i theta} exp(i sum_c (a_c Q_c + b_c P_c)).
struct WeylElement {
    double theta = 0.0;
    std::vector<double> a;
    std::vector<double> b;

    static WeylElement identity(std::size_t d) {
        WeylElement e;
        e.a.assign(d, 0.0);
        e.b.assign(d, 0.0);
        return e;
    }

    // Group law: phases add and pick up -(1/2)(a1.b2 - b1.a2), the exact
    // moment form of -(1/2)<f, Delta g>.
    WeylElement compose(const WeylElement& o) const {
        WeylElement r;
        double cross = 0.0;
        r.a.resize(a.size());
        r.b.resize(b.size());
        for (std::size_t c = 0; c < a.size(); ++c) {
            cross += a[c] * o.b[c] - b[c] * o.a[c];
            r.a[c] = a[c] + o.a[c];
            r.b[c] = b[c] + o.b[c];
        }
        r.theta = theta + o.theta - 0.5 * cross;
        return r;
    }

    WeylElement inverse() const {
        WeylElement r = *this;
        r.theta = -theta;
        for (auto& x : r.a) x = -x;
        for (auto& x : r.b) x = -x;
        return r;
    }

    double phase_mod_2pi() const {
        double tau = 2.0 * std::numbers::pi;
        double p = std::fmod(theta, tau);
        if (p < -std::numbers::pi) p += tau;
        if (p > std::numbers::pi) p -= tau;
        return p;
    }

    bool approx_equal(const WeylElement& o, double tol = 1e-9) const {
        double tau = 2.0 * std::numbers::pi;
        double dp = std::fmod(theta - o.theta, tau);
        if (dp < -std::numbers::pi) dp += tau;
        if (dp > std::numbers::pi) dp -= tau;
        if (std::abs(dp) > tol) return false;
        for (std::size_t c = 0; c < a.size(); ++c)
            if (std::abs(a[c] - o.a[c]) > tol || std::abs(b[c] - o.b[c]) > tol) return false;
        return true;
    }

    bool is_identity(double moment_tol = 1e-9, double phase_tol = 1e-9) const {
        if (std::abs(phase_mod_2pi()) > phase_tol) return false;
        for (std::size_t c = 0; c < a.size(); ++c)
            if (std::abs(a[c]) > moment_tol || std::abs(b[c]) > moment_tol) return false;
        return true;
    }
};

// Left-to-right fold of a linear word into its Weyl canonical form.  Each
// letter S(F) with linear part f and constant c is e^{i(c - <f,D_D f>/2)} W(f);
// only the free Lagrangean and potential-free letters are admissible.
inline WeylElement weyl_normal_form(const GroupWord& w) {
    if (w.lagrangean.interaction)
        throw NormalFormError("weyl_normal_form: only defined for the free Lagrangean");
    std::size_t d = 1;
    for (const auto& l : w.letters) d = l.functional.components();
    WeylElement acc = WeylElement::identity(d);
    acc.theta = w.phase;
    for (const auto& l : w.letters) {
        if (!l.functional.potential_terms().empty())
            throw NormalFormError("weyl_normal_form: word has potential terms; use the representation");
        WeylElement e = WeylElement::identity(d);
        e.theta = l.functional.constant_part();
        if (l.functional.linear_part()) {
            const TimeFunction& f = *l.functional.linear_part();
            Moments m = moments(f);
            e.a = m.a;
            e.b = m.b;
            e.theta -= 0.5 * pairing(f, KernelKind::Mean, f);
        }
        if (l.exponent < 0) e = e.inverse();
        acc = acc.compose(e);
    }
    return acc;
}

// The functional F_{f0} = <f0, x> + (1/2)<f0, D_D f0> whose generator is the
// Weyl operator W(f0).
inline Functional weyl_functional(const TimeFunction& f0) {
    Functional F = Functional::linear(f0);
    F.set_constant(0.5 * pairing(f0, KernelKind::Mean, f0));
    return F;
}

inline GroupWord weyl_word(const TimeFunction& f0) {
    return generator(Lagrangean::free_particle(), weyl_functional(f0));
}

// ---------------------------------------------------------------------------
// Future decomposition
// ---------------------------------------------------------------------------

// Split f0 = f0' + K x0 with f0' supported strictly after t_split and x0 a
// loop: f0' = K(chi D_R f0), x0 = (1-chi) D_R f0 for a smooth step chi that
// rises after t_split.  The affine tail of D_R f0 makes (1-chi) D_R f0
// compactly supported.
struct FutureDecomposition {
    TimeFunction f_future;  // f0'
    TimeFunction x_loop;    // x0
};

inline FutureDecomposition decompose_future(const TimeFunction& f0, double t_split,
                                            double ramp_width = 0.8, double gap = 0.05) {
    const TimeGrid& g = f0.grid();
    double r_lo = t_split + gap + 2.0 * g.dt();
    double r_hi = r_lo + ramp_width;
    if (r_hi > g.t_max - 2.0 * g.dt())
        throw RangeError("decompose_future: ramp region outside grid");
    if (!f0.support().empty && f0.support().lo > r_hi) {
        // chi is identically 1 on supp(D_R f0)'s growth region, so the
        // defining formulas give f0' = f0 and x0 = 0 exactly
        return FutureDecomposition{f0, make_zero(g, f0.components())};
    }
    TimeFunction chi = make_step(g, r_lo, r_hi);
    TimeFunction one_minus_chi = scale(chi, -1.0);
    for (auto& v : one_minus_chi.samples(0)) v += 1.0;
    one_minus_chi.tail_left(0) = Tail{0.0, 1.0};
    one_minus_chi.tail_right(0) = Tail{};
    one_minus_chi.set_support(chi.support());

    TimeFunction u = apply_propagator(KernelKind::Retarded, f0);
    FutureDecomposition d;
    d.x_loop = tighten_support(multiply(one_minus_chi, u));
    d.f_future = tighten_support(apply_K(multiply(chi, u)));
    return d;
}

// ---------------------------------------------------------------------------
// Counting state
// ---------------------------------------------------------------------------

// omega(S) = e^{i theta} if S normalizes to a pure scalar, else 0; faithful
// on the group algebra.  Decidable via the normal form, hence restricted to
// the free linear sector.
inline std::complex<double> counting_state(const GroupWord& w, double moment_tol = 1e-9) {
    WeylElement e = weyl_normal_form(w);  // throws NormalFormError when undecidable
    for (std::size_t c = 0; c < e.a.size(); ++c)
        if (std::abs(e.a[c]) > moment_tol || std::abs(e.b[c]) > moment_tol)
            return {0.0, 0.0};
    return std::polar(1.0, e.theta);
}

}  // namespace dynalg
