#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dynalg/propagators.hpp"
#include "dynalg/timegrid.hpp"

namespace dynalg {

// ---------------------------------------------------------------------------
// Bounded potential catalog
// ---------------------------------------------------------------------------

// The catalog is closed: every entry is smooth, bounded by |strength|, and
// closed under configuration-space shifts (the shift is stored, not resampled).
enum class PotentialKind { Gaussian, Cosine, Sech2 };

struct Potential {
    PotentialKind kind = PotentialKind::Gaussian;
    double strength = 0.0;            // v
    std::vector<double> center;       // c (Gaussian, Sech2)
    double width = 1.0;               // w (Gaussian, Sech2)
    std::vector<double> wavevector;   // k (Cosine)
    double phase = 0.0;               // phi (Cosine)

    static Potential gaussian(double v, std::vector<double> c, double w) {
        Potential p;
        p.kind = PotentialKind::Gaussian;
        p.strength = v;
        p.center = std::move(c);
        p.width = w;
        return p;
    }
    static Potential cosine(double v, std::vector<double> k, double phi) {
        Potential p;
        p.kind = PotentialKind::Cosine;
        p.strength = v;
        p.wavevector = std::move(k);
        p.phase = phi;
        return p;
    }
    static Potential sech2(double v, std::vector<double> c, double w) {
        Potential p;
        p.kind = PotentialKind::Sech2;
        p.strength = v;
        p.center = std::move(c);
        p.width = w;
        return p;
    }

    std::size_t components() const {
        return kind == PotentialKind::Cosine ? wavevector.size() : center.size();
    }

    double sup_abs() const { return std::abs(strength); }

    // V(y), y in R^d.
    double operator()(const std::vector<double>& y) const {
        switch (kind) {
            case PotentialKind::Gaussian: {
                double q = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) {
                    double u = y[i] - center[i];
                    q += u * u;
                }
                return strength * std::exp(-q / (width * width));
            }
            case PotentialKind::Cosine: {
                double arg = phase;
                for (std::size_t i = 0; i < y.size(); ++i) arg += wavevector[i] * y[i];
                return strength * std::cos(arg);
            }
            case PotentialKind::Sech2: {
                double q = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) {
                    double u = y[i] - center[i];
                    q += u * u;
                }
                double c = std::cosh(std::sqrt(q) / width);
                return strength / (c * c);
            }
        }
        return 0.0;
    }

    Potential scaled(double s) const {
        Potential p = *this;
        p.strength *= s;
        return p;
    }

    bool operator==(const Potential& o) const {
        return kind == o.kind && strength == o.strength && center == o.center &&
               width == o.width && wavevector == o.wavevector && phase == o.phase;
    }
};

// One windowed term g(t) V(x(t) + shift(t)).  The shift loop realizes
// configuration-space translated potentials exactly (composition of shifts
// is addition of loops, no resampling).
struct PotentialTerm {
    TimeFunction window;                  // scalar test function g, compact
    Potential pot;                        // catalog entry V
    std::optional<TimeFunction> shift;    // d-component offset loop

    bool operator==(const PotentialTerm& o) const {
        if (!(pot == o.pot)) return false;
        if (shift.has_value() != o.shift.has_value()) return false;
        auto eq = [](const TimeFunction& a, const TimeFunction& b) {
            if (!a.same_layout(b)) return false;
            for (std::size_t c = 0; c < a.components(); ++c)
                if (a.samples(c) != b.samples(c)) return false;
            return true;
        };
        if (!eq(window, o.window)) return false;
        if (shift && !eq(*shift, *o.shift)) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Localized functionals F[x] = <f0,x> + sum_k int g_k V_k(x) + h
// ---------------------------------------------------------------------------

class Functional {
  public:
    Functional() = default;
    Functional(TimeGrid grid, std::size_t components) : grid_(grid), components_(components) {}

    static Functional constant(TimeGrid grid, std::size_t components, double h) {
        Functional f(grid, components);
        f.constant_ = h;
        return f;
    }
    static Functional linear(TimeFunction f0) {
        Functional f(f0.grid(), f0.components());
        f.set_linear(std::move(f0));
        return f;
    }
    static Functional windowed_potential(TimeFunction window, Potential pot) {
        Functional f(window.grid(), pot.components());
        f.add_potential(PotentialTerm{std::move(window), std::move(pot), std::nullopt});
        return f;
    }

    const TimeGrid& grid() const { return grid_; }
    std::size_t components() const { return components_; }
    double constant_part() const { return constant_; }
    void set_constant(double h) { constant_ = h; }
    const std::optional<TimeFunction>& linear_part() const { return linear_; }
    const std::vector<PotentialTerm>& potential_terms() const { return potentials_; }

    void set_linear(TimeFunction f0) {
        if (f0.components() != components_)
            throw ArgumentError("Functional: linear part component mismatch");
        if (!f0.compact()) throw ArgumentError("Functional: linear part must be a loop");
        if (sup_norm(f0) <= detail::kSupportEps) {
            linear_.reset();  // zero linear part contributes nothing
        } else {
            linear_ = std::move(f0);
        }
    }

    void add_potential(PotentialTerm term) {
        if (term.window.components() != 1)
            throw ArgumentError("Functional: window must be scalar");
        if (!term.window.compact())
            throw ArgumentError("Functional: window must be compactly supported");
        if (term.pot.components() != components_)
            throw ArgumentError("Functional: potential component mismatch");
        potentials_.push_back(std::move(term));
    }

    bool is_constant_only() const { return !linear_ && potentials_.empty(); }

    // Convex hull of the supports of the linear part and all windows;
    // constants have empty support.
    Support support() const {
        Support s = Support::none();
        if (linear_) s = Support::hull(s, linear_->support());
        for (const auto& p : potentials_) s = Support::hull(s, p.window.support());
        return s;
    }

    double sup_potential() const {
        double m = 0.0;
        for (const auto& p : potentials_) m += p.pot.sup_abs() * sup_norm(p.window);
        return m;
    }

    bool structurally_equal(const Functional& o) const {
        if (components_ != o.components_ || constant_ != o.constant_) return false;
        if (linear_.has_value() != o.linear_.has_value()) return false;
        if (linear_) {
            if (!linear_->same_layout(*o.linear_)) return false;
            for (std::size_t c = 0; c < linear_->components(); ++c)
                if (linear_->samples(c) != o.linear_->samples(c)) return false;
        }
        return potentials_ == o.potentials_;
    }

  private:
    TimeGrid grid_;
    std::size_t components_ = 1;
    std::optional<TimeFunction> linear_;
    std::vector<PotentialTerm> potentials_;
    double constant_ = 0.0;
};

// F[x] by quadrature; the orbit may carry affine tails.
inline double evaluate(const Functional& F, const TimeFunction& orbit) {
    if (orbit.components() != F.components())
        throw ArgumentError("evaluate: orbit component mismatch");
    double acc = F.constant_part();
    if (F.linear_part()) acc += pairing(*F.linear_part(), IdentityKernel{}, orbit);
    for (const auto& term : F.potential_terms()) {
        const TimeGrid& g = term.window.grid();
        TimeFunction integrand(g, 1);
        auto& out = integrand.samples(0);
        const auto& w = term.window.samples(0);
        auto [i0, i1] = detail::support_window(g, term.window.support());
        std::vector<double> y(F.components());
        for (std::size_t i = i0; i <= i1 && i < g.n_points; ++i) {
            if (w[i] == 0.0) continue;
            for (std::size_t c = 0; c < F.components(); ++c) {
                y[c] = orbit.samples(c)[i];
                if (term.shift) y[c] += term.shift->samples(c)[i];
            }
            out[i] = w[i] * term.pot(y);
        }
        integrand.set_support(term.window.support());
        acc += integrate(integrand, 0);
    }
    return acc;
}

// Componentwise sum of functionals (concatenates potential term lists).
inline Functional add(const Functional& a, const Functional& b) {
    if (a.components() != b.components())
        throw ArgumentError("add: functional component mismatch");
    Functional r(a.grid(), a.components());
    r.set_constant(a.constant_part() + b.constant_part());
    if (a.linear_part() && b.linear_part())
        r.set_linear(add(*a.linear_part(), *b.linear_part()));
    else if (a.linear_part())
        r.set_linear(*a.linear_part());
    else if (b.linear_part())
        r.set_linear(*b.linear_part());
    for (const auto& p : a.potential_terms()) r.add_potential(p);
    for (const auto& p : b.potential_terms()) r.add_potential(p);
    return r;
}

// c*F (catalog-closed: windows keep their shape, strengths scale).
inline Functional scale(const Functional& F, double c) {
    Functional r(F.grid(), F.components());
    r.set_constant(c * F.constant_part());
    if (F.linear_part()) r.set_linear(scale(*F.linear_part(), c));
    for (const auto& p : F.potential_terms()) {
        PotentialTerm t = p;
        t.pot = t.pot.scaled(c);
        r.add_potential(std::move(t));
    }
    return r;
}

// F^{x0}[x] = F[x + x0]: the linear pairing with x0 moves into the constant,
// potential terms absorb x0 into their shift loops.
inline Functional shift(const Functional& F, const TimeFunction& x0) {
    if (x0.components() != F.components())
        throw ArgumentError("shift: loop component mismatch");
    if (sup_norm(x0) <= detail::kSupportEps) return F;
    Functional r(F.grid(), F.components());
    double c = F.constant_part();
    if (F.linear_part()) {
        r.set_linear(*F.linear_part());
        c += pairing(*F.linear_part(), IdentityKernel{}, x0);
    }
    r.set_constant(c);
    for (const auto& p : F.potential_terms()) {
        PotentialTerm t = p;
        TimeFunction s = t.shift ? add(*t.shift, x0) : x0;
        if (sup_norm(s) <= detail::kSupportEps)
            t.shift.reset();  // shifts cancelled exactly
        else
            t.shift = std::move(s);
        r.add_potential(std::move(t));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Lagrangeans and relative actions
// ---------------------------------------------------------------------------

// L(x) = xdot^2/2 - V_I(x), unit mass; the free Lagrangean has no interaction.
struct Lagrangean {
    std::optional<Potential> interaction;

    static Lagrangean free_particle() { return Lagrangean{}; }
    static Lagrangean with_interaction(Potential v) { return Lagrangean{std::move(v)}; }

    bool operator==(const Lagrangean& o) const {
        if (interaction.has_value() != o.interaction.has_value()) return false;
        return !interaction || *interaction == *o.interaction;
    }
};

// delta L(x0)[x] = int chi (L(x+x0) - L(x)):
// linear part chi * K x0, constant int chi xdot0^2/2, and for interacting L
// the windowed difference -chi V_I(.+x0) + chi V_I.
// chi must be a compactly supported test function equal to 1 on supp x0.
inline Functional relative_action(const Lagrangean& L, const TimeFunction& x0,
                                  const TimeFunction& chi) {
    if (chi.components() != 1) throw ArgumentError("relative_action: chi must be scalar");
    if (!chi.compact()) throw PreconditionError("relative_action: chi must be a test function");
    if (!x0.compact()) throw ArgumentError("relative_action: x0 must be a loop");
    // chi == 1 on supp x0
    if (!x0.support().empty) {
        auto [i0, i1] = detail::support_window(x0.grid(), x0.support());
        for (std::size_t i = i0; i <= i1; ++i)
            if (std::abs(chi.samples(0)[i] - 1.0) > 1e-12)
                throw PreconditionError("relative_action: chi != 1 on supp x0");
    }
    Functional r(x0.grid(), x0.components());
    if (x0.support().empty) return r;  // zero loop: zero functional

    // kinetic constant int xdot0^2/2, evaluated in the partially integrated
    // form <x0, K x0>/2 so that shifting by x0 and then by -x0 cancels the
    // accumulated constants exactly
    TimeFunction kx0 = apply_K(x0);
    r.set_constant(0.5 * pairing(x0, IdentityKernel{}, kx0));
    r.set_linear(tighten_support(multiply(chi, kx0)));
    if (L.interaction) {
        r.add_potential(PotentialTerm{scale(chi, -1.0), *L.interaction, x0});
        r.add_potential(PotentialTerm{chi, *L.interaction, std::nullopt});
    }
    return r;
}

// Canonical chi for a loop: 1 on supp x0 with margin, smooth ramps inside the
// grid.  Deterministic given the loop's support.
inline TimeFunction default_cutoff_for(const TimeFunction& x0, double margin = 0.25,
                                       double ramp = 0.5) {
    if (x0.support().empty) {
        double mid = 0.5 * (x0.grid().t_min + x0.grid().t_max);
        return make_window(x0.grid(), mid - 2.0 * ramp, mid - ramp, mid + ramp, mid + 2.0 * ramp);
    }
    const TimeGrid& g = x0.grid();
    double lo = x0.support().lo - margin, hi = x0.support().hi + margin;
    double a = std::max(g.t_min + 2.0 * g.dt(), lo - ramp);
    double b = std::min(g.t_max - 2.0 * g.dt(), hi + ramp);
    if (!(a < lo && hi < b))
        throw RangeError("default_cutoff_for: no room for cutoff ramps inside grid");
    return make_window(g, a, lo, hi, b);
}

// inf supp F1 > sup supp F2, strictly; Empty supports are ordered freely.
inline bool lies_in_future(const Functional& F1, const Functional& F2) {
    return F1.support().strictly_after(F2.support());
}

}  // namespace dynalg
