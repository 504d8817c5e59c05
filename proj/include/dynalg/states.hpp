#pragma once

#include <complex>
#include <string>
#include <vector>

#include "dynalg/schrep.hpp"

namespace dynalg {

// ---------------------------------------------------------------------------
// Vector states and operations on them
// ---------------------------------------------------------------------------

struct VectorState {
    CVector psi;
    std::string label;
};

namespace states {

inline VectorState normalized(const RepSpace& rep, CVector v, std::string label) {
    double n = rep.norm(v);
    if (n <= 0.0) throw ArgumentError("VectorState: zero vector");
    for (auto& x : v) x /= n;
    if (rep.boundary_amplitude(v) > 1e-8)
        throw ConfigError("VectorState: boundary amplitude above 1e-8");
    return VectorState{std::move(v), std::move(label)};
}

inline VectorState ground(const RepSpace& rep) {
    return normalized(rep, rep.tracked().front(), "ground");
}

inline VectorState excited(const RepSpace& rep, std::size_t n) {
    if (n >= rep.tracked().size()) throw ArgumentError("excited: level outside tracked set");
    return normalized(rep, rep.tracked()[n], "excited-" + std::to_string(n));
}

// Coherent state centred at (x0, p0): displaced ground state
// exp(i(aQ + bP)) psi_0 with a = p0, b = -x0 per component.
inline VectorState coherent(const RepSpace& rep, const std::vector<double>& x0,
                            const std::vector<double>& p0) {
    std::vector<double> a = p0, b(x0.size());
    for (std::size_t c = 0; c < x0.size(); ++c) b[c] = -x0[c];
    RepOperator w = weyl_from_moments(rep, a, b);
    return normalized(rep, w.apply(rep, rep.tracked().front()), "coherent");
}

}  // namespace states

// omega(S) = <psi, pi(S) psi>.
inline Complex expectation(const VectorState& state, const GroupWord& w, const RepSpace& rep) {
    OpChain c = chains::word(rep, w);
    CVector v = state.psi;
    Batch b{std::move(v)};
    for (const auto& f : c.factors) f.fwd(rep, b);
    for (auto& x : b.front()) x *= c.scalar;
    return rep.inner(state.psi, b.front());
}

struct OperationResult {
    VectorState state;
    double norm_defect = 0.0;  // |1 - ||pi(S) psi|||, reported as leakage
};

// omega -> omega_S: the state vector pi(S) psi, renormalized; the norm
// defect (integration loss) is reported and large defects are rejected.
inline OperationResult apply_operation(const VectorState& state, const GroupWord& w,
                                       const RepSpace& rep) {
    OpChain c = chains::word(rep, w);
    Batch b{state.psi};
    for (const auto& f : c.factors) f.fwd(rep, b);
    for (auto& x : b.front()) x *= c.scalar;
    double n = rep.norm(b.front());
    double defect = std::abs(1.0 - n);
    if (defect > rep.config().leak_reject)
        throw NumericalError("apply_operation: norm defect " + std::to_string(defect) +
                             " above policy");
    for (auto& x : b.front()) x /= n;
    return OperationResult{VectorState{std::move(b.front()), state.label + "+op"}, defect};
}

// omega . omega_S = |omega(S)|^2.
inline double transition_probability(const VectorState& state, const GroupWord& w,
                                     const RepSpace& rep) {
    return std::norm(expectation(state, w, rep));
}

inline Complex position_expectation(const RepSpace& rep, const VectorState& s,
                                    std::size_t axis = 0) {
    CVector v = s.psi;
    rep.mult_coord(axis, v);
    return rep.inner(s.psi, v);
}

inline Complex momentum_expectation(const RepSpace& rep, const VectorState& s,
                                    std::size_t axis = 0) {
    CVector v = s.psi;
    rep.apply_P(axis, v);
    return rep.inner(s.psi, v);
}

// ---------------------------------------------------------------------------
// Projection-steering vignette
// ---------------------------------------------------------------------------

// Finite-dimensional illustration of operations steering a state into the
// range of a projection: E projects onto the first `rank` tracked states and
// a deterministic grid-plus-refinement search over the Weyl family looks for
// S with omega_S(1 - E) below epsilon.  Reports the best achieved value.
struct SteeringReport {
    double best_a = 0.0;
    double best_b = 0.0;
    double achieved = 1.0;  // omega_S(1-E)
    double overlap_probe = 0.0;  // |omega(S)|^2 at the optimum
};

inline double projection_complement_mass(const RepSpace& rep, const CVector& v,
                                         std::size_t rank) {
    double total = rep.norm(v);
    double captured = 0.0;
    for (std::size_t i = 0; i < rank && i < rep.tracked().size(); ++i)
        captured += std::norm(rep.inner(rep.tracked()[i], v));
    return std::max(total * total - captured, 0.0);
}

inline SteeringReport steer_into_projection(const RepSpace& rep, const VectorState& state,
                                            std::size_t rank) {
    if (rank < rep.k_track() / 2)
        throw ArgumentError("steer_into_projection: projection rank below K/2 vignette bound");
    SteeringReport rpt;
    auto try_point = [&](double a, double b) {
        RepOperator w = weyl_from_moments(rep, std::vector<double>(rep.dof(), a),
                                          std::vector<double>(rep.dof(), b));
        CVector img = w.apply(rep, state.psi);
        double miss = projection_complement_mass(rep, img, rank);
        if (miss < rpt.achieved) {
            rpt.achieved = miss;
            rpt.best_a = a;
            rpt.best_b = b;
            rpt.overlap_probe = std::norm(rep.inner(state.psi, img));
        }
    };
    for (double a = -1.5; a <= 1.5 + 1e-12; a += 0.5)
        for (double b = -1.5; b <= 1.5 + 1e-12; b += 0.5) try_point(a, b);
    double step = 0.25;
    for (int level = 0; level < 3; ++level) {
        double ca = rpt.best_a, cb = rpt.best_b;
        for (int da = -2; da <= 2; ++da)
            for (int db = -2; db <= 2; ++db)
                try_point(ca + step * da, cb + step * db);
        step *= 0.25;
    }
    return rpt;
}

}  // namespace dynalg
