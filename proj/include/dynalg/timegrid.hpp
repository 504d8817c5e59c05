#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "dynalg/errors.hpp"

namespace dynalg {

// ---------------------------------------------------------------------------
// Uniform time grid
// ---------------------------------------------------------------------------

struct TimeGrid {
    double t_min = -8.0;
    double t_max = 8.0;
    std::size_t n_points = 2048;

    TimeGrid() = default;
    TimeGrid(double lo, double hi, std::size_t n) : t_min(lo), t_max(hi), n_points(n) {
        if (!(t_min < t_max)) throw ArgumentError("TimeGrid: need t_min < t_max");
        if (n_points < 16) throw ArgumentError("TimeGrid: need n_points >= 16");
    }

    double dt() const { return (t_max - t_min) / static_cast<double>(n_points - 1); }
    double t(std::size_t i) const { return t_min + static_cast<double>(i) * dt(); }

    // Nearest grid index to time t, clamped.
    std::size_t index_near(double time) const {
        double x = (time - t_min) / dt();
        if (x <= 0.0) return 0;
        auto i = static_cast<std::size_t>(std::llround(x));
        return std::min(i, n_points - 1);
    }

    bool operator==(const TimeGrid& o) const {
        return t_min == o.t_min && t_max == o.t_max && n_points == o.n_points;
    }
};

// ---------------------------------------------------------------------------
// Support intervals
// ---------------------------------------------------------------------------

// Closed interval on the time axis; the distinguished Empty value is used for
// constant functionals.
struct Support {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = true;

    static Support make(double lo, double hi) {
        if (!(lo <= hi)) throw ArgumentError("Support: lo > hi");
        Support s;
        s.lo = lo;
        s.hi = hi;
        s.empty = false;
        return s;
    }
    static Support none() { return Support{}; }

    static Support hull(const Support& a, const Support& b) {
        if (a.empty) return b;
        if (b.empty) return a;
        return make(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
    }

    // Strictly later than `other`; Empty supports are ordered freely.
    bool strictly_after(const Support& other) const {
        if (empty || other.empty) return true;
        return lo > other.hi;
    }

    bool contains(const Support& inner) const {
        if (inner.empty) return true;
        if (empty) return false;
        return lo <= inner.lo && inner.hi <= hi;
    }
};

// ---------------------------------------------------------------------------
// Sampled functions of time
// ---------------------------------------------------------------------------

// Affine continuation value(t) = slope*t + intercept declared on one side of
// the core interval.  Zero tails mean compact support; a cutoff carries a
// constant right tail 1; retarded/advanced propagator images carry genuinely
// affine tails.
struct Tail {
    double slope = 0.0;
    double intercept = 0.0;

    bool is_zero() const { return slope == 0.0 && intercept == 0.0; }
    bool is_const() const { return slope == 0.0; }
    double at(double t) const { return slope * t + intercept; }

    Tail operator+(const Tail& o) const { return Tail{slope + o.slope, intercept + o.intercept}; }
    Tail scaled(double s) const { return Tail{slope * s, intercept * s}; }
};

// A d-component sampled function of time.  Samples cover the whole grid;
// outside the core support the values coincide with the declared tails.
// Values are immutable after construction in normal use; all operations on
// them are pure.
class TimeFunction {
  public:
    TimeFunction() = default;
    TimeFunction(TimeGrid grid, std::size_t components)
        : grid_(grid), values_(components, std::vector<double>(grid.n_points, 0.0)),
          tails_left_(components), tails_right_(components), support_(Support::none()) {}

    const TimeGrid& grid() const { return grid_; }
    std::size_t components() const { return values_.size(); }
    const Support& support() const { return support_; }
    void set_support(Support s) { support_ = s; }

    std::vector<double>& samples(std::size_t c) { return values_.at(c); }
    const std::vector<double>& samples(std::size_t c) const { return values_.at(c); }

    Tail& tail_left(std::size_t c) { return tails_left_.at(c); }
    Tail& tail_right(std::size_t c) { return tails_right_.at(c); }
    const Tail& tail_left(std::size_t c) const { return tails_left_.at(c); }
    const Tail& tail_right(std::size_t c) const { return tails_right_.at(c); }

    bool compact() const {
        for (std::size_t c = 0; c < components(); ++c)
            if (!tails_left_[c].is_zero() || !tails_right_[c].is_zero()) return false;
        return true;
    }

    // Sample access extended past the grid ends by the declared tails;
    // signed index arithmetic keeps finite-difference stencils simple.
    double sample_ext(std::size_t c, long i) const {
        long n = static_cast<long>(grid_.n_points);
        if (i < 0) return tails_left_[c].at(grid_.t_min + static_cast<double>(i) * grid_.dt());
        if (i >= n) return tails_right_[c].at(grid_.t_min + static_cast<double>(i) * grid_.dt());
        return values_[c][static_cast<std::size_t>(i)];
    }

    // Value at arbitrary time by 4-point (cubic) interpolation inside the
    // grid, tails outside.  Matches the O(dt^4) budget of the stencils.
    double value(double t, std::size_t c = 0) const {
        if (t < grid_.t_min) return tails_left_.at(c).at(t);
        if (t > grid_.t_max) return tails_right_.at(c).at(t);
        double x = (t - grid_.t_min) / grid_.dt();
        long i1 = static_cast<long>(std::floor(x));
        long n = static_cast<long>(grid_.n_points);
        i1 = std::clamp(i1, 1l, n - 3);
        double u = x - static_cast<double>(i1);
        double f0 = sample_ext(c, i1 - 1), f1 = sample_ext(c, i1);
        double f2 = sample_ext(c, i1 + 1), f3 = sample_ext(c, i1 + 2);
        // Lagrange cubic through nodes -1,0,1,2.
        double a0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
        double a1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
        double a2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
        double a3 = (u + 1.0) * u * (u - 1.0) / 6.0;
        return a0 * f0 + a1 * f1 + a2 * f2 + a3 * f3;
    }

    double operator()(double t, std::size_t c = 0) const { return value(t, c); }

    bool same_layout(const TimeFunction& o) const {
        return grid_ == o.grid_ && components() == o.components();
    }

  private:
    TimeGrid grid_;
    std::vector<std::vector<double>> values_;
    std::vector<Tail> tails_left_, tails_right_;
    Support support_;
};

namespace detail {

// Index window [i0,i1] covering the support, clamped to the grid.
inline std::pair<std::size_t, std::size_t> support_window(const TimeGrid& g, const Support& s) {
    if (s.empty) return {1, 0};  // empty window
    double dt = g.dt();
    auto lo = static_cast<long>(std::floor((s.lo - g.t_min) / dt));
    auto hi = static_cast<long>(std::ceil((s.hi - g.t_min) / dt));
    lo = std::clamp(lo, 0l, static_cast<long>(g.n_points - 1));
    hi = std::clamp(hi, 0l, static_cast<long>(g.n_points - 1));
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Composite quadrature over samples [i0..i1]: trapezoid with Euler-Maclaurin
// endpoint corrections from 4th-order difference stencils,
//   int = T - dt^2/12 (v' | endpoints) + dt^4/720 (v''' | endpoints).
// On the smoothly vanishing integrands produced by the constructors the
// correction terms vanish and the rule superconverges; in general it is
// O(dt^4) with a smooth error, which keeps quadrature and the stencil
// operators mutually consistent.
inline double end_slope(const std::vector<double>& v, long i, double dt) {
    long n = static_cast<long>(v.size());
    i = std::clamp(i, 2l, n - 3);
    return (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * dt);
}
inline double end_third(const std::vector<double>& v, long i, double dt) {
    long n = static_cast<long>(v.size());
    i = std::clamp(i, 2l, n - 3);
    return (v[i + 2] - 2.0 * v[i + 1] + 2.0 * v[i - 1] - v[i - 2]) / (2.0 * dt * dt * dt);
}
inline double window_integral(const std::vector<double>& v, std::size_t i0, std::size_t i1,
                              double dt) {
    if (i1 <= i0) return 0.0;
    double acc = 0.5 * (v[i0] + v[i1]);
    for (std::size_t i = i0 + 1; i < i1; ++i) acc += v[i];
    acc *= dt;
    long a = static_cast<long>(i0), b = static_cast<long>(i1);
    acc -= dt * dt / 12.0 * (end_slope(v, b, dt) - end_slope(v, a, dt));
    acc += dt * dt * dt * dt / 720.0 * (end_third(v, b, dt) - end_third(v, a, dt));
    return acc;
}

constexpr double kSupportEps = 1e-14;

}  // namespace detail

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

// Standard mollifier bump: amplitude * exp(1 - 1/(1-u^2)), u = (t-center)/hw.
inline TimeFunction make_bump(const TimeGrid& grid, double center, double halfwidth,
                              double amplitude = 1.0, std::size_t component = 0,
                              std::size_t components = 1) {
    if (!(halfwidth > 0.0)) throw ArgumentError("make_bump: halfwidth must be positive");
    if (center - halfwidth < grid.t_min || center + halfwidth > grid.t_max)
        throw RangeError("make_bump: support outside grid");
    if (component >= components) throw ArgumentError("make_bump: component index out of range");
    TimeFunction f(grid, components);
    auto& v = f.samples(component);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        double u = (grid.t(i) - center) / halfwidth;
        if (std::abs(u) < 1.0) v[i] = amplitude * std::exp(1.0 - 1.0 / (1.0 - u * u));
    }
    f.set_support(Support::make(center - halfwidth, center + halfwidth));
    return f;
}

namespace detail {
// B(u) = exp(-1/u) for u > 0, else 0; s(u) = B(u)/(B(u)+B(1-u)).
inline double smooth_partition(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    double a = std::exp(-1.0 / u);
    double b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}
}  // namespace detail

// Smooth step: 0 below ramp_lo, 1 above ramp_hi (right tail is the constant 1).
inline TimeFunction make_step(const TimeGrid& grid, double ramp_lo, double ramp_hi) {
    if (!(ramp_lo < ramp_hi)) throw ArgumentError("make_step: degenerate ramp");
    if (ramp_lo < grid.t_min || ramp_hi > grid.t_max)
        throw RangeError("make_step: ramp outside grid");
    TimeFunction f(grid, 1);
    auto& v = f.samples(0);
    for (std::size_t i = 0; i < grid.n_points; ++i)
        v[i] = detail::smooth_partition((grid.t(i) - ramp_lo) / (ramp_hi - ramp_lo));
    f.tail_right(0) = Tail{0.0, 1.0};
    f.set_support(Support::make(ramp_lo, ramp_hi));
    return f;
}

// Two-sided smooth characteristic function: 0 outside [lo_start, hi_end],
// exactly 1 on [lo_end, hi_start].
inline TimeFunction make_window(const TimeGrid& grid, double lo_start, double lo_end,
                                double hi_start, double hi_end) {
    if (!(lo_start < lo_end && lo_end <= hi_start && hi_start < hi_end))
        throw ArgumentError("make_window: ramps must be ordered");
    if (lo_start < grid.t_min || hi_end > grid.t_max)
        throw RangeError("make_window: support outside grid");
    TimeFunction f(grid, 1);
    auto& v = f.samples(0);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        double t = grid.t(i);
        double up = detail::smooth_partition((t - lo_start) / (lo_end - lo_start));
        double dn = detail::smooth_partition((hi_end - t) / (hi_end - hi_start));
        v[i] = up * dn;
    }
    f.set_support(Support::make(lo_start, hi_end));
    return f;
}

inline TimeFunction make_zero(const TimeGrid& grid, std::size_t components = 1) {
    return TimeFunction(grid, components);
}

// ---------------------------------------------------------------------------
// Arithmetic
// ---------------------------------------------------------------------------

inline TimeFunction add(const TimeFunction& a, const TimeFunction& b) {
    if (!a.same_layout(b)) throw ArgumentError("add: mismatched grids or component counts");
    TimeFunction r(a.grid(), a.components());
    for (std::size_t c = 0; c < a.components(); ++c) {
        auto& rv = r.samples(c);
        const auto& av = a.samples(c);
        const auto& bv = b.samples(c);
        for (std::size_t i = 0; i < rv.size(); ++i) rv[i] = av[i] + bv[i];
        r.tail_left(c) = a.tail_left(c) + b.tail_left(c);
        r.tail_right(c) = a.tail_right(c) + b.tail_right(c);
    }
    r.set_support(Support::hull(a.support(), b.support()));
    return r;
}

inline TimeFunction scale(const TimeFunction& a, double s) {
    TimeFunction r = a;
    for (std::size_t c = 0; c < r.components(); ++c) {
        for (auto& x : r.samples(c)) x *= s;
        r.tail_left(c) = r.tail_left(c).scaled(s);
        r.tail_right(c) = r.tail_right(c).scaled(s);
    }
    if (s == 0.0) r.set_support(Support::none());
    return r;
}

inline TimeFunction sub(const TimeFunction& a, const TimeFunction& b) { return add(a, scale(b, -1.0)); }

namespace detail {
inline Tail tail_product(const Tail& a, const Tail& b) {
    if (a.is_zero() || b.is_zero()) return Tail{};
    if (a.is_const()) return b.scaled(a.intercept);
    if (b.is_const()) return a.scaled(b.intercept);
    throw ArgumentError("multiply: product of two affine tails is not representable");
}
}  // namespace detail

// Pointwise product.  A scalar (1-component) factor broadcasts across the
// components of the other.  Tail algebra: zero*any = zero, const*affine =
// scaled affine; affine*affine is rejected.
inline TimeFunction multiply(const TimeFunction& a, const TimeFunction& b) {
    if (!(a.grid() == b.grid())) throw ArgumentError("multiply: mismatched grids");
    const TimeFunction* sc = nullptr;
    const TimeFunction* vec = nullptr;
    if (a.components() == b.components()) {
        sc = &a;
        vec = &b;
    } else if (a.components() == 1) {
        sc = &a;
        vec = &b;
    } else if (b.components() == 1) {
        sc = &b;
        vec = &a;
    } else {
        throw ArgumentError("multiply: incompatible component counts");
    }
    TimeFunction r(vec->grid(), vec->components());
    for (std::size_t c = 0; c < vec->components(); ++c) {
        std::size_t cs = (sc->components() == 1) ? 0 : c;
        auto& rv = r.samples(c);
        const auto& f = sc->samples(cs);
        const auto& g = vec->samples(c);
        for (std::size_t i = 0; i < rv.size(); ++i) rv[i] = f[i] * g[i];
        r.tail_left(c) = detail::tail_product(sc->tail_left(cs), vec->tail_left(c));
        r.tail_right(c) = detail::tail_product(sc->tail_right(cs), vec->tail_right(c));
    }
    r.set_support(Support::hull(a.support(), b.support()));
    return r;
}

// Shrink the declared support to the sample range where any component
// exceeds the 1e-14 support threshold.  Only valid on a side whose tail is
// zero; used by constructors that assemble functions from masked pieces.
inline TimeFunction tighten_support(const TimeFunction& f) {
    if (f.support().empty) return f;
    bool left_zero = true, right_zero = true;
    for (std::size_t c = 0; c < f.components(); ++c) {
        left_zero = left_zero && f.tail_left(c).is_zero();
        right_zero = right_zero && f.tail_right(c).is_zero();
    }
    auto [i0, i1] = detail::support_window(f.grid(), f.support());
    auto big = [&](std::size_t i) {
        for (std::size_t c = 0; c < f.components(); ++c)
            if (std::abs(f.samples(c)[i]) > detail::kSupportEps) return true;
        return false;
    };
    std::size_t lo = i0, hi = i1;
    if (left_zero)
        while (lo < hi && !big(lo)) ++lo;
    if (right_zero)
        while (hi > lo && !big(hi)) --hi;
    TimeFunction r = f;
    if (lo >= hi && !big(lo)) {
        r.set_support(Support::none());
    } else {
        r.set_support(Support::make(f.grid().t(lo), f.grid().t(hi)));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Quadrature and differentiation
// ---------------------------------------------------------------------------

// Integral of one component over its support (composite quadrature on the
// grid).  Requires zero tails: with a non-zero tail the integral would not
// exist.
inline double integrate(const TimeFunction& f, std::size_t component = 0) {
    if (!f.tail_left(component).is_zero() || !f.tail_right(component).is_zero())
        throw ArgumentError("integrate: function has non-zero tails");
    if (f.support().empty) return 0.0;
    auto [i0, i1] = detail::support_window(f.grid(), f.support());
    // one padding sample on each side keeps the window clear of the
    // support-threshold cut
    if (i0 > 0) --i0;
    if (i1 + 1 < f.grid().n_points) ++i1;
    return detail::window_integral(f.samples(component), i0, i1, f.grid().dt());
}

// 4th-order centred finite differences, order 1 or 2.  Tails are used to
// extend the stencil past the grid ends: d/dt maps an affine tail to its
// (constant) slope and d^2/dt^2 maps it to zero.  For compactly supported
// input the support must keep a 2-sample margin from the grid ends.
inline TimeFunction differentiate(const TimeFunction& f, int order) {
    if (order != 1 && order != 2) throw ArgumentError("differentiate: order must be 1 or 2");
    const TimeGrid& g = f.grid();
    double dt = g.dt();
    if (f.compact() && !f.support().empty) {
        if (f.support().lo < g.t_min + 2.0 * dt || f.support().hi > g.t_max - 2.0 * dt)
            throw RangeError("differentiate: support touches grid boundary");
    }
    TimeFunction r(g, f.components());
    long n = static_cast<long>(g.n_points);
    for (std::size_t c = 0; c < f.components(); ++c) {
        auto& rv = r.samples(c);
        for (long i = 0; i < n; ++i) {
            double fm2 = f.sample_ext(c, i - 2), fm1 = f.sample_ext(c, i - 1);
            double fp1 = f.sample_ext(c, i + 1), fp2 = f.sample_ext(c, i + 2);
            if (order == 1) {
                rv[static_cast<std::size_t>(i)] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * dt);
            } else {
                double f0 = f.sample_ext(c, i);
                rv[static_cast<std::size_t>(i)] =
                    (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * dt * dt);
            }
        }
        if (order == 1) {
            r.tail_left(c) = Tail{0.0, f.tail_left(c).slope};
            r.tail_right(c) = Tail{0.0, f.tail_right(c).slope};
        }  // order 2: tails stay zero
    }
    if (!f.support().empty) {
        double lo = std::max(f.support().lo - 2.0 * dt, g.t_min);
        double hi = std::min(f.support().hi + 2.0 * dt, g.t_max);
        r.set_support(Support::make(lo, hi));
    }
    return r;
}

// Sup norm over the grid samples (all components).
inline double sup_norm(const TimeFunction& f) {
    double m = 0.0;
    for (std::size_t c = 0; c < f.components(); ++c)
        for (double v : f.samples(c)) m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------------------
// Loop synthesis helpers (artifact plumbing)
// ---------------------------------------------------------------------------

// t as a sampled weight (support = whole grid, used only inside products that
// are then integrated over a compact support).
inline TimeFunction make_ramp_weight(const TimeGrid& grid) {
    TimeFunction w(grid, 1);
    auto& v = w.samples(0);
    for (std::size_t i = 0; i < grid.n_points; ++i) v[i] = grid.t(i);
    w.tail_left(0) = Tail{1.0, 0.0};
    w.tail_right(0) = Tail{1.0, 0.0};
    w.set_support(Support::make(grid.t_min, grid.t_max));
    return w;
}

// A compactly supported loop density with prescribed moments
// (a, b) = (integral f, integral t f), built from two bumps around `center`.
inline TimeFunction make_loop_with_moments(const TimeGrid& grid, double a, double b, double center,
                                           double spread, double halfwidth = 0.35,
                                           std::size_t component = 0, std::size_t components = 1) {
    if (!(spread > 0.0)) throw ArgumentError("make_loop_with_moments: spread must be positive");
    double c1 = center - spread, c2 = center + spread;
    TimeFunction u1 = make_bump(grid, c1, halfwidth, 1.0, component, components);
    TimeFunction u2 = make_bump(grid, c2, halfwidth, 1.0, component, components);
    double i1 = integrate(u1, component), i2 = integrate(u2, component);
    double m1 = integrate(multiply(make_ramp_weight(grid), u1), component);
    double m2 = integrate(multiply(make_ramp_weight(grid), u2), component);
    // Solve alpha*i1 + beta*i2 = a ; alpha*m1 + beta*m2 = b.
    double det = i1 * m2 - i2 * m1;
    if (std::abs(det) < 1e-12) throw ArgumentError("make_loop_with_moments: singular placement");
    double alpha = (a * m2 - i2 * b) / det;
    double beta = (i1 * b - a * m1) / det;
    return add(scale(u1, alpha), scale(u2, beta));
}

}  // namespace dynalg
