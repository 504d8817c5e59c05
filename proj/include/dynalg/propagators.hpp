#pragma once

#include <cmath>
#include <vector>

#include "dynalg/timegrid.hpp"

namespace dynalg {

// Green's functions of K = -d^2/dt^2 acting on loops:
//   Retarded    D_R(t,t') = -Theta(t-t') (t-t')
//   Advanced    D_A(t,t') =  Theta(t'-t) (t-t')
//   Mean        D_D = (D_R + D_A)/2 = -|t-t'|/2
//   Commutator  D   = D_R - D_A = t' - t
// Theta(0) = 1/2 by convention (immaterial here: the kernels vanish at
// coincidence, fixed only for bit-exactness).
enum class KernelKind { Retarded, Advanced, Mean, Commutator };

// Identity marker for plain L^2 pairings.
struct IdentityKernel {};

inline TimeFunction apply_K(const TimeFunction& f) { return scale(differentiate(f, 2), -1.0); }

namespace detail {

// Cumulative integral c[i] = int_{t_min}^{t_i} v by Euler-Maclaurin
// corrected trapezoid:
//   int = T - dt^2/12 (v' | endpoints) + dt^4/720 (v''' | endpoints).
// The remaining error is a smooth function of the endpoint, so second
// derivatives of the result do not amplify quadrature noise.
inline std::vector<double> cumulative(const std::vector<double>& v, double dt) {
    std::size_t n = v.size();
    std::vector<double> c(n, 0.0), d1(n, 0.0), d3(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= 2 && i + 2 < n) {
            d1[i] = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * dt);
            d3[i] = (v[i + 2] - 2.0 * v[i + 1] + 2.0 * v[i - 1] - v[i - 2]) / (2.0 * dt * dt * dt);
        }
    }
    // one-sided continuation at the ends (inputs are flat there)
    d1[0] = d1[1] = d1[2];
    d3[0] = d3[1] = d3[2];
    d1[n - 1] = d1[n - 2] = d1[n - 3];
    d3[n - 1] = d3[n - 2] = d3[n - 3];
    double trap = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        trap += 0.5 * dt * (v[i - 1] + v[i]);
        c[i] = trap - dt * dt / 12.0 * (d1[i] - d1[0]) +
               dt * dt * dt * dt / 720.0 * (d3[i] - d3[0]);
    }
    return c;
}

}  // namespace detail

// g(t) = int dt' kernel(t,t') f(t') for compactly supported f.  All four
// kernels derive from one double cumulative integral,
//   D_R f (t) = -int^t C0,  C0(t) = int^t f,
// so the relations D = D_R - D_A and D_D = (D_R + D_A)/2 hold exactly at the
// sample level.  Results are in general not compactly supported: they carry
// declared affine tails fixed by the moments a = int f, b = int t f:
//   Retarded:  0 before supp f,      -a t + b after;
//   Advanced:  a t - b before,        0 after;
//   Mean:      the average of the two;
//   Commutator: b - a t globally.
inline TimeFunction apply_propagator(KernelKind kind, const TimeFunction& f) {
    if (!f.compact()) throw ArgumentError("apply_propagator: input must be compactly supported");
    const TimeGrid& g = f.grid();
    double dt = g.dt();
    TimeFunction r(g, f.components());
    for (std::size_t c = 0; c < f.components(); ++c) {
        const auto& v = f.samples(c);
        auto c0 = detail::cumulative(v, dt);
        auto dd = detail::cumulative(c0, dt);  // int^t C0 = int (t-t') f
        double a = c0.back();
        // Beyond supp f the discrete D grows exactly linearly, so this b makes
        // samples and the declared affine tail agree to machine precision.
        double b = a * g.t(g.n_points - 1) - dd.back();
        auto& rv = r.samples(c);
        for (std::size_t i = 0; i < v.size(); ++i) {
            double t = g.t(i);
            double ret = -dd[i];
            double com = b - a * t;
            switch (kind) {
                case KernelKind::Retarded: rv[i] = ret; break;
                case KernelKind::Advanced: rv[i] = ret - com; break;
                case KernelKind::Mean: rv[i] = ret - 0.5 * com; break;
                case KernelKind::Commutator: rv[i] = com; break;
            }
        }
        switch (kind) {
            case KernelKind::Retarded:
                r.tail_right(c) = Tail{-a, b};
                break;
            case KernelKind::Advanced:
                r.tail_left(c) = Tail{a, -b};
                break;
            case KernelKind::Mean:
                r.tail_left(c) = Tail{0.5 * a, -0.5 * b};
                r.tail_right(c) = Tail{-0.5 * a, 0.5 * b};
                break;
            case KernelKind::Commutator:
                r.tail_left(c) = Tail{-a, b};
                r.tail_right(c) = Tail{-a, b};
                break;
        }
    }
    r.set_support(f.support());
    return r;
}

// <f, kernel g> = sum over components of the double integral
// int int f(t) kernel(t,t') g(t') dt dt', evaluated as iterated single
// quadratures on the shared grid.
inline double pairing(const TimeFunction& f, KernelKind kind, const TimeFunction& g) {
    if (f.components() != g.components())
        throw ArgumentError("pairing: component count mismatch");
    if (!f.compact()) throw ArgumentError("pairing: left factor must be compactly supported");
    TimeFunction prod = multiply(f, apply_propagator(kind, g));
    prod.set_support(f.support());
    double acc = 0.0;
    for (std::size_t c = 0; c < f.components(); ++c) acc += integrate(prod, c);
    return acc;
}

// <f, g> = sum_c int f_c g_c.  One factor may carry tails (an orbit); the
// integral then runs over the compact factor's support.
inline double pairing(const TimeFunction& f, IdentityKernel, const TimeFunction& g) {
    if (f.components() != g.components())
        throw ArgumentError("pairing: component count mismatch");
    if (!f.compact() && !g.compact())
        throw ArgumentError("pairing: need at least one compactly supported factor");
    TimeFunction prod = multiply(f, g);
    prod.set_support(f.compact() ? f.support() : g.support());
    double acc = 0.0;
    for (std::size_t c = 0; c < f.components(); ++c) acc += integrate(prod, c);
    return acc;
}

}  // namespace dynalg
