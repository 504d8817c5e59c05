#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "dynalg/fft.hpp"
#include "dynalg/groupalg.hpp"
#include "dynalg/linalg.hpp"

namespace dynalg {

using Batch = std::vector<CVector>;  // columns of grid vectors

// ---------------------------------------------------------------------------
// Discretized Schroedinger representation
// ---------------------------------------------------------------------------

struct RepConfig {
    double x_half = 12.0;      // position box [-x_half, x_half)
    std::size_t n_axis = 256;  // grid points per axis (power of two)
    std::size_t dof = 1;       // degrees of freedom d (1 or 2)
    std::size_t k_track = 24;  // tracked low harmonic-oscillator states
    double boundary_tol = 1e-10;  // build-time boundary decay requirement
    double ode_tol = 1e-6;        // time-ordered integrator tolerance
    double leak_reject = 1e-3;    // state-operation rejection threshold
};

struct RepDiagnostics {
    double tracked_boundary = 0.0;  // max tracked amplitude at the box edge
    double qp_commutator = 0.0;     // max ||([Q,P]-i) psi|| over tracked
    double u0_roundtrip = 0.0;      // ||U0(t)U0(-t)psi - psi||
    double horizon = 0.0;           // grid-safe free-evolution horizon
};

class RepSpace {
  public:
    explicit RepSpace(RepConfig cfg) : cfg_(cfg) {
        if (cfg_.n_axis == 0 || (cfg_.n_axis & (cfg_.n_axis - 1)) != 0)
            throw ConfigError("RepSpace: n_axis must be a power of two");
        if (cfg_.dof < 1 || cfg_.dof > 2)
            throw ConfigError("RepSpace: only d = 1 or 2 supported");
        if (cfg_.k_track < 1) throw ConfigError("RepSpace: need k_track >= 1");
        dim_ = 1;
        for (std::size_t c = 0; c < cfg_.dof; ++c) dim_ *= cfg_.n_axis;
        dx_ = 2.0 * cfg_.x_half / static_cast<double>(cfg_.n_axis);
        weight_ = std::pow(dx_, static_cast<double>(cfg_.dof));
        build_coords();
        build_tracked();
        run_diagnostics();
    }

    const RepConfig& config() const { return cfg_; }
    std::size_t dim() const { return dim_; }
    std::size_t dof() const { return cfg_.dof; }
    std::size_t k_track() const { return cfg_.k_track; }
    double weight() const { return weight_; }
    double horizon() const { return diag_.horizon; }
    const RepDiagnostics& diagnostics() const { return diag_; }
    const std::vector<CVector>& tracked() const { return tracked_; }

    Complex inner(const CVector& u, const CVector& v) const {
        return dynalg::inner(u, v) * weight_;
    }
    double norm(const CVector& u) const { return norm2(u) * std::sqrt(weight_); }

    double coord(std::size_t axis, std::size_t flat_index) const {
        return x_axis_[axis_index(axis, flat_index)];
    }

    // --- primitive actions -------------------------------------------------

    void mult_coord(std::size_t axis, CVector& v) const {
        for (std::size_t i = 0; i < dim_; ++i) v[i] *= x_axis_[axis_index(axis, i)];
    }

    // exp(i s x_axis) as a diagonal phase
    void phase_coord(std::size_t axis, double s, CVector& v) const {
        for (std::size_t i = 0; i < dim_; ++i)
            v[i] *= std::polar(1.0, s * x_axis_[axis_index(axis, i)]);
    }

    void apply_P(std::size_t axis, CVector& v) const {
        axis_fft(axis, v, true);
        for (std::size_t i = 0; i < dim_; ++i) v[i] *= k_axis_[axis_index(axis, i)];
        axis_fft(axis, v, false);
    }

    // translation exp(i b P_axis): psi(x) -> psi(x + b)
    void shift_coord(std::size_t axis, double b, CVector& v) const {
        axis_fft(axis, v, true);
        for (std::size_t i = 0; i < dim_; ++i)
            v[i] *= std::polar(1.0, b * k_axis_[axis_index(axis, i)]);
        axis_fft(axis, v, false);
    }

    // exp(-i t k^2/2) multiplier on the momentum grid
    CVector drift_phases(double t) const {
        CVector mult(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            double k2 = 0.0;
            for (std::size_t axis = 0; axis < cfg_.dof; ++axis) {
                double k = k_axis_[axis_index(axis, i)];
                k2 += k * k;
            }
            mult[i] = std::polar(1.0, -0.5 * k2 * t);
        }
        return mult;
    }

    // free evolution U0(t) = exp(-i t P^2/2)
    void free_evolve(double t, CVector& v) const {
        CVector mult = drift_phases(t);
        for (std::size_t axis = 0; axis < cfg_.dof; ++axis) axis_fft(axis, v, true);
        for (std::size_t i = 0; i < dim_; ++i) v[i] *= mult[i];
        for (std::size_t axis = 0; axis < cfg_.dof; ++axis) axis_fft(axis, v, false);
    }

    void free_evolve_batch(double t, Batch& b) const {
        CVector mult = drift_phases(t);
        for (auto& v : b) {
            for (std::size_t axis = 0; axis < cfg_.dof; ++axis) axis_fft(axis, v, true);
            for (std::size_t i = 0; i < dim_; ++i) v[i] *= mult[i];
            for (std::size_t axis = 0; axis < cfg_.dof; ++axis) axis_fft(axis, v, false);
        }
    }

    // value of a catalog potential on the grid with a configuration offset
    std::vector<double> potential_values(const Potential& pot,
                                         const std::vector<double>& offset) const {
        std::vector<double> out(dim_);
        std::vector<double> y(cfg_.dof);
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t axis = 0; axis < cfg_.dof; ++axis)
                y[axis] = x_axis_[axis_index(axis, i)] + offset[axis];
            out[i] = pot(y);
        }
        return out;
    }

    double boundary_amplitude(const CVector& v) const {
        double m = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t axis = 0; axis < cfg_.dof; ++axis) {
                std::size_t j = axis_index(axis, i);
                if (j == 0 || j + 1 == cfg_.n_axis) {
                    m = std::max(m, std::abs(v[i]));
                    break;
                }
            }
        }
        return m;
    }

  private:
    std::size_t axis_index(std::size_t axis, std::size_t flat) const {
        // row-major: axis 0 is the slowest
        std::size_t stride = 1;
        for (std::size_t a = cfg_.dof; a-- > axis + 1;) stride *= cfg_.n_axis;
        return (flat / stride) % cfg_.n_axis;
    }

    void axis_fft(std::size_t axis, CVector& v, bool forward) const {
        std::size_t n = cfg_.n_axis;
        if (cfg_.dof == 1) {
            detail::fft_pow2(v.data(), n, forward ? -1 : +1);
            return;
        }
        // d = 2: row-major [i0][i1]
        if (axis == 1) {
            for (std::size_t r = 0; r < n; ++r)
                detail::fft_pow2(v.data() + r * n, n, forward ? -1 : +1);
        } else {
            CVector line(n);
            for (std::size_t colm = 0; colm < n; ++colm) {
                for (std::size_t r = 0; r < n; ++r) line[r] = v[r * n + colm];
                detail::fft_pow2(line.data(), n, forward ? -1 : +1);
                for (std::size_t r = 0; r < n; ++r) v[r * n + colm] = line[r];
            }
        }
    }

    void build_coords() {
        std::size_t n = cfg_.n_axis;
        x_axis_.resize(n);
        k_axis_.resize(n);
        double dk = std::numbers::pi / cfg_.x_half;
        for (std::size_t j = 0; j < n; ++j) {
            x_axis_[j] = -cfg_.x_half + static_cast<double>(j) * dx_;
            long f = static_cast<long>(j);
            if (j >= n / 2) f -= static_cast<long>(n);
            k_axis_[j] = dk * static_cast<double>(f);
        }
    }

    // Normalized harmonic-oscillator states on the grid (Hermite recurrence),
    // orthonormalized in the discrete inner product.
    void build_tracked() {
        std::size_t n = cfg_.n_axis;
        std::size_t max_n = cfg_.k_track;  // enough 1d levels for either dof
        std::vector<std::vector<double>> herm(max_n, std::vector<double>(n));
        for (std::size_t j = 0; j < n; ++j) {
            double x = x_axis_[j];
            herm[0][j] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
            if (max_n > 1) herm[1][j] = std::sqrt(2.0) * x * herm[0][j];
        }
        for (std::size_t m = 2; m < max_n; ++m) {
            double c1 = std::sqrt(2.0 / static_cast<double>(m));
            double c2 = std::sqrt(static_cast<double>(m - 1) / static_cast<double>(m));
            for (std::size_t j = 0; j < n; ++j)
                herm[m][j] = c1 * x_axis_[j] * herm[m - 1][j] - c2 * herm[m - 2][j];
        }
        tracked_.clear();
        quanta_.clear();
        if (cfg_.dof == 1) {
            for (std::size_t m = 0; m < cfg_.k_track; ++m) {
                CVector v(dim_);
                for (std::size_t j = 0; j < n; ++j) v[j] = herm[m][j];
                tracked_.push_back(std::move(v));
                quanta_.push_back({m});
            }
        } else {
            // enumerate product states by total quanta
            for (std::size_t q = 0; tracked_.size() < cfg_.k_track; ++q) {
                for (std::size_t m0 = 0; m0 <= q && tracked_.size() < cfg_.k_track; ++m0) {
                    std::size_t m1 = q - m0;
                    if (m0 >= max_n || m1 >= max_n) continue;
                    CVector v(dim_);
                    for (std::size_t i0 = 0; i0 < n; ++i0)
                        for (std::size_t i1 = 0; i1 < n; ++i1)
                            v[i0 * n + i1] = herm[m0][i0] * herm[m1][i1];
                    tracked_.push_back(std::move(v));
                    quanta_.push_back({m0, m1});
                }
            }
        }
        mgs_orthonormalize(tracked_, weight_);
    }

    void run_diagnostics() {
        for (const auto& psi : tracked_)
            diag_.tracked_boundary = std::max(diag_.tracked_boundary, boundary_amplitude(psi));
        if (diag_.tracked_boundary > cfg_.boundary_tol)
            throw ConfigError("RepSpace: box too small, tracked boundary leakage " +
                              std::to_string(diag_.tracked_boundary));
        // [Q,P] psi = i psi on the tracked domain
        for (const auto& psi : tracked_) {
            for (std::size_t axis = 0; axis < cfg_.dof; ++axis) {
                CVector qp = psi, pq = psi;
                apply_P(axis, qp);
                mult_coord(axis, qp);  // Q P psi
                mult_coord(axis, pq);
                apply_P(axis, pq);     // P Q psi
                CVector r(dim_);
                for (std::size_t i = 0; i < dim_; ++i)
                    r[i] = (qp[i] - pq[i]) - Complex(0.0, 1.0) * psi[i];
                diag_.qp_commutator = std::max(diag_.qp_commutator, norm(r));
            }
        }
        {
            CVector v = tracked_.front();
            free_evolve(0.7, v);
            free_evolve(-0.7, v);
            CVector r(dim_);
            for (std::size_t i = 0; i < dim_; ++i) r[i] = v[i] - tracked_.front()[i];
            diag_.u0_roundtrip = norm(r);
        }
        // grid-safe horizon: largest ladder time keeping evolved tracked
        // states below 1e-8 at the boundary
        diag_.horizon = 0.0;
        for (double t = 2.0; t >= 0.24; t -= 0.25) {
            double amp = 0.0;
            for (const auto& psi : tracked_) {
                CVector v = psi;
                free_evolve(t, v);
                amp = std::max(amp, boundary_amplitude(v));
                CVector u = psi;
                free_evolve(-t, u);
                amp = std::max(amp, boundary_amplitude(u));
            }
            if (amp < 1e-8) {
                diag_.horizon = t;
                break;
            }
        }
    }

    RepConfig cfg_;
    std::size_t dim_ = 0;
    double dx_ = 0.0, weight_ = 0.0;
    std::vector<double> x_axis_, k_axis_;
    std::vector<CVector> tracked_;
    std::vector<std::vector<std::size_t>> quanta_;
    RepDiagnostics diag_;
};

inline RepSpace build_rep(const RepConfig& cfg) { return RepSpace(cfg); }

// ---------------------------------------------------------------------------
// Grid operators
// ---------------------------------------------------------------------------

// One invertible factor of an operator chain acting on batches of columns.
struct GridFactor {
    std::function<void(const RepSpace&, Batch&)> fwd;
    std::function<void(const RepSpace&, Batch&)> inv;
};

// A finite window onto B(H): lazily composed operator chain together with the
// materialized K x K compression onto the tracked subspace, its full-grid
// images, and per-column leakage out of the window.
class RepOperator {
  public:
    RepOperator() = default;

    static RepOperator make(const RepSpace& rep, std::vector<GridFactor> chain,
                            Complex scalar = {1.0, 0.0}) {
        RepOperator op;
        op.chain_ = std::move(chain);
        op.scalar_ = scalar;
        op.materialize(rep);
        return op;
    }

    static RepOperator identity(const RepSpace& rep) { return make(rep, {}); }

    // A * B: B acts first.  The product window is materialized by pushing
    // B's images through A's chain, so every factor integrates exactly once.
    static RepOperator compose(const RepSpace& rep, const RepOperator& A, const RepOperator& B) {
        RepOperator r;
        r.chain_ = B.chain_;
        r.chain_.insert(r.chain_.end(), A.chain_.begin(), A.chain_.end());
        r.scalar_ = A.scalar_ * B.scalar_;
        Batch b = B.images_;  // already carries B's scalar
        for (const auto& f : A.chain_) f.fwd(rep, b);
        if (A.scalar_ != Complex{1.0, 0.0})
            for (auto& col : b)
                for (auto& x : col) x *= A.scalar_;
        r.window_from_images(rep, std::move(b));
        return r;
    }

    // Right-fold product ops[0] * ops[1] * ... * ops[n-1].
    static RepOperator product(const RepSpace& rep, const std::vector<RepOperator>& ops) {
        if (ops.empty()) return identity(rep);
        RepOperator acc = ops.back();
        for (std::size_t i = ops.size() - 1; i-- > 0;) acc = compose(rep, ops[i], acc);
        return acc;
    }

    static RepOperator inverse(const RepSpace& rep, const RepOperator& A) {
        std::vector<GridFactor> chain;
        chain.reserve(A.chain_.size());
        for (auto it = A.chain_.rbegin(); it != A.chain_.rend(); ++it)
            chain.push_back(GridFactor{it->inv, it->fwd});
        return make(rep, std::move(chain), std::conj(A.scalar_) / std::norm(A.scalar_));
    }

    CVector apply(const RepSpace& rep, const CVector& v) const {
        Batch b{v};
        apply_batch(rep, b);
        return b.front();
    }

    void apply_batch(const RepSpace& rep, Batch& b) const {
        for (const auto& f : chain_) f.fwd(rep, b);
        if (scalar_ != Complex{1.0, 0.0})
            for (auto& col : b)
                for (auto& x : col) x *= scalar_;
    }

    const CMatrix& window() const { return window_; }
    const std::vector<CVector>& images() const { return images_; }
    const std::vector<double>& leakage() const { return leakage_; }
    double max_leakage() const {
        double m = 0.0;
        for (double l : leakage_) m = std::max(m, l);
        return m;
    }
    Complex scalar() const { return scalar_; }

    // max over tracked psi of || (A-B) psi || (full-grid images)
    static double distance(const RepSpace& rep, const RepOperator& A, const RepOperator& B) {
        double m = 0.0;
        for (std::size_t j = 0; j < A.images_.size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < A.images_[j].size(); ++i)
                s += std::norm(A.images_[j][i] - B.images_[j][i]);
            m = std::max(m, std::sqrt(s * rep.weight()));
        }
        return m;
    }

    // max over tracked psi of | ||A psi|| - 1 |
    double unitarity_defect(const RepSpace& rep) const {
        double m = 0.0;
        for (const auto& img : images_) m = std::max(m, std::abs(rep.norm(img) - 1.0));
        return m;
    }

  private:
    void materialize(const RepSpace& rep) {
        Batch b = rep.tracked();
        apply_batch(rep, b);
        window_from_images(rep, std::move(b));
    }

    void window_from_images(const RepSpace& rep, Batch b) {
        const auto& basis = rep.tracked();
        images_ = std::move(b);
        std::size_t k = basis.size();
        window_ = CMatrix(k, k);
        leakage_.assign(k, 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            double captured = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                Complex w = rep.inner(basis[i], images_[j]);
                window_(i, j) = w;
                captured += std::norm(w);
            }
            double total = rep.norm(images_[j]);
            leakage_[j] = std::sqrt(std::max(total * total - captured, 0.0));
        }
    }

    std::vector<GridFactor> chain_;
    Complex scalar_{1.0, 0.0};
    CMatrix window_;
    std::vector<CVector> images_;
    std::vector<double> leakage_;
};

// ---------------------------------------------------------------------------
// Factor builders
// ---------------------------------------------------------------------------

namespace repops {

inline GridFactor diag_phase_coord(std::size_t axis, double s) {
    return GridFactor{
        [axis, s](const RepSpace& rep, Batch& b) {
            for (auto& col : b) rep.phase_coord(axis, s, col);
        },
        [axis, s](const RepSpace& rep, Batch& b) {
            for (auto& col : b) rep.phase_coord(axis, -s, col);
        }};
}

inline GridFactor translation(std::size_t axis, double shift) {
    return GridFactor{
        [axis, shift](const RepSpace& rep, Batch& b) {
            for (auto& col : b) rep.shift_coord(axis, shift, col);
        },
        [axis, shift](const RepSpace& rep, Batch& b) {
            for (auto& col : b) rep.shift_coord(axis, -shift, col);
        }};
}

inline GridFactor free_evolution(double t) {
    return GridFactor{
        [t](const RepSpace& rep, Batch& b) {
            for (auto& col : b) rep.free_evolve(t, col);
        },
        [t](const RepSpace& rep, Batch& b) {
            for (auto& col : b) rep.free_evolve(-t, col);
        }};
}

}  // namespace repops

// ---------------------------------------------------------------------------
// Representation operations
// ---------------------------------------------------------------------------

// Unmaterialized operator: factor chain (applied left to right) + scalar.
struct OpChain {
    std::vector<GridFactor> factors;
    Complex scalar{1.0, 0.0};

    // this * other (other acts first)
    OpChain after(const OpChain& other) const {
        OpChain r = other;
        r.factors.insert(r.factors.end(), factors.begin(), factors.end());
        r.scalar *= scalar;
        return r;
    }

    OpChain inverted() const {
        OpChain r;
        r.factors.reserve(factors.size());
        for (auto it = factors.rbegin(); it != factors.rend(); ++it)
            r.factors.push_back(GridFactor{it->inv, it->fwd});
        r.scalar = std::conj(scalar) / std::norm(scalar);
        return r;
    }
};

namespace chains {

// exp(i sum_c (a_c Q_c + b_c P_c)) via the exact spectral factorization
// e^{i a b/2} e^{iaQ} e^{ibP} per component.
inline OpChain weyl(const RepSpace& rep, const std::vector<double>& a,
                    const std::vector<double>& b) {
    if (a.size() != rep.dof() || b.size() != rep.dof())
        throw ArgumentError("weyl: moment dimension mismatch");
    OpChain c;
    for (std::size_t axis = 0; axis < rep.dof(); ++axis) {
        c.scalar *= std::polar(1.0, 0.5 * a[axis] * b[axis]);
        c.factors.push_back(repops::translation(axis, b[axis]));  // applied first
        c.factors.push_back(repops::diag_phase_coord(axis, a[axis]));
    }
    return c;
}

}  // namespace chains

inline RepOperator weyl_from_moments(const RepSpace& rep, const std::vector<double>& a,
                                     const std::vector<double>& b) {
    OpChain c = chains::weyl(rep, a, b);
    return RepOperator::make(rep, std::move(c.factors), c.scalar);
}

// W(f0) = exp(i (a Q + b P)) with (a,b) = moments(f0).
inline RepOperator weyl_operator(const RepSpace& rep, const TimeFunction& f0) {
    Moments m = moments(f0);
    return weyl_from_moments(rep, m.a, m.b);
}

// Q_axis(t) = e^{itP^2/2} Q_axis e^{-itP^2/2}; only valid inside the
// grid-safe horizon reported by the representation.
inline RepOperator heisenberg_Q(const RepSpace& rep, double t, std::size_t axis = 0) {
    if (std::abs(t) > rep.horizon())
        throw RangeError("heisenberg_Q: |t| exceeds grid-safe horizon " +
                         std::to_string(rep.horizon()));
    std::vector<GridFactor> chain;
    chain.push_back(repops::free_evolution(t));
    GridFactor mult{[axis](const RepSpace& r, Batch& b) {
                        for (auto& col : b) r.mult_coord(axis, col);
                    },
                    [](const RepSpace&, Batch&) {
                        throw NumericalError("heisenberg_Q: multiplication is not invertible");
                    }};
    chain.push_back(mult);
    chain.push_back(repops::free_evolution(-t));
    return RepOperator::make(rep, std::move(chain));
}

// Q_axis + t P_axis applied to a batch (free-solution form of Q(t)).
inline RepOperator position_plus_tP(const RepSpace& rep, double t, std::size_t axis = 0) {
    GridFactor f{[axis, t](const RepSpace& r, Batch& b) {
                     for (auto& col : b) {
                         CVector pcol = col;
                         r.apply_P(axis, pcol);
                         r.mult_coord(axis, col);
                         for (std::size_t i = 0; i < col.size(); ++i) col[i] += t * pcol[i];
                     }
                 },
                 [](const RepSpace&, Batch&) {
                     throw NumericalError("position_plus_tP: not invertible");
                 }};
    return RepOperator::make(rep, {f});
}

namespace detail_ode {

// Time-dependent generator interface: y' = i G(t) y on batches.
using Generator = std::function<void(const RepSpace&, double, const Batch&, Batch&)>;

inline void axpy(Batch& y, Complex a, const Batch& x) {
    for (std::size_t j = 0; j < y.size(); ++j)
        for (std::size_t i = 0; i < y[j].size(); ++i) y[j][i] += a * x[j][i];
}

inline double batch_dist(const Batch& a, const Batch& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a[j].size(); ++i) s += std::norm(a[j][i] - b[j][i]);
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

// One classical RK4 step of y' = i G(t) y.
inline void rk4_step(const RepSpace& rep, const Generator& gen, double t, double h, Batch& y) {
    Batch k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size());
    Batch tmp = y;
    gen(rep, t, y, k1);
    tmp = y;
    axpy(tmp, Complex(0.5 * h, 0.0), k1);
    gen(rep, t + 0.5 * h, tmp, k2);
    tmp = y;
    axpy(tmp, Complex(0.5 * h, 0.0), k2);
    gen(rep, t + 0.5 * h, tmp, k3);
    tmp = y;
    axpy(tmp, Complex(h, 0.0), k3);
    gen(rep, t + h, tmp, k4);
    axpy(y, Complex(h / 6.0, 0.0), k1);
    axpy(y, Complex(h / 3.0, 0.0), k2);
    axpy(y, Complex(h / 3.0, 0.0), k3);
    axpy(y, Complex(h / 6.0, 0.0), k4);
}

// Adaptive RK4 with step doubling from t0 to t1 (either direction).
inline void integrate(const RepSpace& rep, const Generator& gen, double t0, double t1, Batch& y,
                      double tol) {
    double span = t1 - t0;
    if (span == 0.0) return;
    double t = t0;
    double h = span / 32.0;
    double hmin = std::abs(span) * 1e-10;
    int guard = 0;
    while ((span > 0.0) ? (t < t1) : (t > t1)) {
        if (++guard > 2000000) throw NumericalError("ode: step limit exceeded");
        if ((span > 0.0) ? (t + h > t1) : (t + h < t1)) h = t1 - t;
        Batch y_full = y;
        rk4_step(rep, gen, t, h, y_full);
        Batch y_half = y;
        rk4_step(rep, gen, t, 0.5 * h, y_half);
        rk4_step(rep, gen, t + 0.5 * h, 0.5 * h, y_half);
        double err = batch_dist(y_full, y_half) / 15.0;
        double tol_step = tol * std::abs(h) / std::abs(span);
        if (err <= tol_step) {
            // accept with local extrapolation
            for (std::size_t j = 0; j < y.size(); ++j)
                for (std::size_t i = 0; i < y[j].size(); ++i)
                    y[j][i] = y_half[j][i] + (y_half[j][i] - y_full[j][i]) / 15.0;
            t += h;
            double grow = (err > 0.0) ? 0.9 * std::pow(tol_step / err, 0.2) : 2.0;
            h *= std::min(2.0, std::max(0.5, grow));
        } else {
            h *= std::max(0.1, 0.9 * std::pow(tol_step / err, 0.25));
            if (std::abs(h) < hmin) throw NumericalError("ode: step-size underflow");
        }
    }
}

}  // namespace detail_ode

namespace detail_ode {

// Time-dependent diagonal D(t) on the position grid (the multiplication part
// of a lab-frame Hamiltonian P^2/2 - D(t)).
using DiagDriver = std::function<void(const RepSpace&, double, std::vector<double>&)>;

// One time-symmetric Strang step s -> s+tau of the lab-frame equation
// phi' = i (D(t) - P^2/2) phi: endpoint half-kicks around an exact drift.
inline void strang_step(const RepSpace& rep, const DiagDriver& driver, double s, double tau,
                        Batch& b, std::vector<double>& diag, CVector& kick) {
    driver(rep, s, diag);
    for (std::size_t i = 0; i < diag.size(); ++i) kick[i] = std::polar(1.0, 0.5 * tau * diag[i]);
    for (auto& col : b)
        for (std::size_t i = 0; i < col.size(); ++i) col[i] *= kick[i];
    rep.free_evolve_batch(tau, b);
    driver(rep, s + tau, diag);
    for (std::size_t i = 0; i < diag.size(); ++i) kick[i] = std::polar(1.0, 0.5 * tau * diag[i]);
    for (auto& col : b)
        for (std::size_t i = 0; i < col.size(); ++i) col[i] *= kick[i];
}

// 4th-order Yoshida composition of Strang steps, fixed step count.
inline void yoshida_run(const RepSpace& rep, const DiagDriver& driver, double t0, double t1,
                        std::size_t steps, Batch& b) {
    static const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
    static const double w0 = 1.0 - 2.0 * w1;
    std::vector<double> diag(rep.dim());
    CVector kick(rep.dim());
    double h = (t1 - t0) / static_cast<double>(steps);
    double s = t0;
    for (std::size_t k = 0; k < steps; ++k) {
        strang_step(rep, driver, s, w1 * h, b, diag, kick);
        s += w1 * h;
        strang_step(rep, driver, s, w0 * h, b, diag, kick);
        s += w0 * h;
        strang_step(rep, driver, s, w1 * h, b, diag, kick);
        s = t0 + static_cast<double>(k + 1) * h;
    }
}

// Lab-frame propagation with step-doubling validation: runs with n and 2n
// steps and accepts when the batch difference is below tol.
inline void lab_split_integrate(const RepSpace& rep, const DiagDriver& driver, double t0,
                                double t1, Batch& b, double tol) {
    if (t0 == t1) return;
    std::size_t n = std::max<std::size_t>(32, static_cast<std::size_t>(std::abs(t1 - t0) / 0.01));
    for (int attempt = 0; attempt < 8; ++attempt) {
        Batch coarse = b;
        yoshida_run(rep, driver, t0, t1, n, coarse);
        Batch fine = b;
        yoshida_run(rep, driver, t0, t1, 2 * n, fine);
        if (batch_dist(coarse, fine) <= tol) {
            b = std::move(fine);
            return;
        }
        n *= 2;
    }
    throw NumericalError("split-step: step budget exhausted before reaching tolerance");
}

}  // namespace detail_ode

namespace repops {

// Lab-frame diagonal of a bounded functional: D(t) = sum_m g_m(t) V_m(x + s_m(t)).
inline detail_ode::DiagDriver bounded_diag_driver(const Functional& F) {
    return [F](const RepSpace& rep, double t, std::vector<double>& diag) {
        std::fill(diag.begin(), diag.end(), 0.0);
        std::vector<double> offset(rep.dof(), 0.0);
        for (const auto& term : F.potential_terms()) {
            double g = term.window.value(t);
            if (g == 0.0) continue;
            for (std::size_t c = 0; c < rep.dof(); ++c)
                offset[c] = term.shift ? term.shift->value(t, c) : 0.0;
            std::vector<double> vals = rep.potential_values(term.pot, offset);
            for (std::size_t i = 0; i < rep.dim(); ++i) diag[i] += g * vals[i];
        }
    };
}

// Interaction-picture time-ordered exponential of a bounded functional as a
// chain factor: U0(t1)^dag T_lab(t1 <- t0) U0(t0), the free evolutions exact.
inline GridFactor split_step_factor(detail_ode::DiagDriver driver, double t_lo, double t_hi,
                                    double tol) {
    auto d = std::make_shared<detail_ode::DiagDriver>(std::move(driver));
    return GridFactor{
        [d, t_lo, t_hi, tol](const RepSpace& rep, Batch& b) {
            rep.free_evolve_batch(t_lo, b);
            detail_ode::lab_split_integrate(rep, *d, t_lo, t_hi, b, tol);
            rep.free_evolve_batch(-t_hi, b);
        },
        [d, t_lo, t_hi, tol](const RepSpace& rep, Batch& b) {
            rep.free_evolve_batch(t_hi, b);
            detail_ode::lab_split_integrate(rep, *d, t_hi, t_lo, b, tol);
            rep.free_evolve_batch(-t_lo, b);
        }};
}

// Interaction-picture generator of a bounded functional, including the i:
// y' = i sum_m g_m(t) e^{itP^2/2} V_m(Q + s_m(t)) e^{-itP^2/2} y.
// Retained for the Dyson-series cross-check route.
inline detail_ode::Generator bounded_generator(const Functional& F) {
    return [F](const RepSpace& rep, double t, const Batch& y, Batch& out) {
        out.assign(y.size(), CVector(rep.dim(), Complex{}));
        // assemble the diagonal at this instant
        std::vector<double> diag(rep.dim(), 0.0);
        bool any = false;
        std::vector<double> offset(rep.dof(), 0.0);
        for (const auto& term : F.potential_terms()) {
            double g = term.window.value(t);
            if (g == 0.0) continue;
            any = true;
            for (std::size_t c = 0; c < rep.dof(); ++c)
                offset[c] = term.shift ? term.shift->value(t, c) : 0.0;
            std::vector<double> vals = rep.potential_values(term.pot, offset);
            for (std::size_t i = 0; i < rep.dim(); ++i) diag[i] += g * vals[i];
        }
        if (!any) return;
        for (std::size_t j = 0; j < y.size(); ++j) {
            CVector v = y[j];
            rep.free_evolve(t, v);
            for (std::size_t i = 0; i < rep.dim(); ++i) v[i] *= Complex(0.0, 1.0) * diag[i];
            rep.free_evolve(-t, v);
            out[j] = std::move(v);
        }
    };
}

// Generator of the linear sector in free-solution form:
// G(t) = sum_c f_c(t) (Q_c + t P_c).
inline detail_ode::Generator linear_generator(const TimeFunction& f0) {
    return [f0](const RepSpace& rep, double t, const Batch& y, Batch& out) {
        out.assign(y.size(), CVector(rep.dim(), Complex{}));
        for (std::size_t c = 0; c < rep.dof(); ++c) {
            double fc = f0.value(t, c);
            if (fc == 0.0) continue;
            for (std::size_t j = 0; j < y.size(); ++j) {
                CVector qv = y[j];
                rep.mult_coord(c, qv);
                CVector pv = y[j];
                rep.apply_P(c, pv);
                for (std::size_t i = 0; i < rep.dim(); ++i)
                    out[j][i] += Complex(0.0, fc) * (qv[i] + t * pv[i]);
            }
        }
    };
}

inline GridFactor ode_factor(detail_ode::Generator gen, double t_lo, double t_hi, double tol) {
    auto g = std::make_shared<detail_ode::Generator>(std::move(gen));
    return GridFactor{
        [g, t_lo, t_hi, tol](const RepSpace& rep, Batch& b) {
            detail_ode::integrate(rep, *g, t_lo, t_hi, b, tol);
        },
        [g, t_lo, t_hi, tol](const RepSpace& rep, Batch& b) {
            detail_ode::integrate(rep, *g, t_hi, t_lo, b, tol);
        }};
}

}  // namespace repops

namespace detail_ode {
// Integration span for a functional's windows / a loop's support, padded.
inline std::pair<double, double> time_span(const Support& s, const TimeGrid& g) {
    if (s.empty) return {0.0, 0.0};
    double pad = 2.0 * g.dt();
    return {s.lo - pad, s.hi + pad};
}
}  // namespace detail_ode

// (dyson_T is defined below once the chain builders are in scope.)

// Truncated Dyson series for bounded F: 1 + sum_{k<=order} (iA)_k, computed
// by integrating the triangular hierarchy S_k' = i G S_{k-1}.  Cross-check
// oracle for weak couplings; returns tracked images only.
inline Batch dyson_series_images(const RepSpace& rep, const Functional& F, int order,
                                 std::size_t steps = 160) {
    if (F.linear_part()) throw ArgumentError("dyson_series_images: bounded functionals only");
    Batch base = rep.tracked();
    Support s = F.support();
    if (s.empty || F.potential_terms().empty()) return base;
    auto [lo, hi] = detail_ode::time_span(s, F.grid());
    auto gen = repops::bounded_generator(F);
    std::size_t kcols = base.size();
    std::vector<Batch> levels(static_cast<std::size_t>(order) + 1);
    levels[0] = base;
    for (int k = 1; k <= order; ++k)
        levels[static_cast<std::size_t>(k)].assign(kcols, CVector(rep.dim(), Complex{}));
    double h = (hi - lo) / static_cast<double>(steps);
    // RK4 on the stacked triangular system
    for (std::size_t step = 0; step < steps; ++step) {
        double t = lo + static_cast<double>(step) * h;
        std::vector<Batch> k1(levels.size()), k2(levels.size()), k3(levels.size()),
            k4(levels.size());
        auto deriv = [&](double tt, const std::vector<Batch>& st, std::vector<Batch>& d) {
            d.assign(levels.size(), Batch{});
            d[0].assign(kcols, CVector(rep.dim(), Complex{}));  // S0' = 0
            for (std::size_t k = 1; k < levels.size(); ++k) gen(rep, tt, st[k - 1], d[k]);
        };
        auto advance = [&](const std::vector<Batch>& st, const std::vector<Batch>& d,
                           double fac) {
            std::vector<Batch> r = st;
            for (std::size_t k = 0; k < r.size(); ++k)
                detail_ode::axpy(r[k], Complex(fac, 0.0), d[k]);
            return r;
        };
        deriv(t, levels, k1);
        auto s2 = advance(levels, k1, 0.5 * h);
        deriv(t + 0.5 * h, s2, k2);
        auto s3 = advance(levels, k2, 0.5 * h);
        deriv(t + 0.5 * h, s3, k3);
        auto s4 = advance(levels, k3, h);
        deriv(t + h, s4, k4);
        for (std::size_t k = 0; k < levels.size(); ++k) {
            detail_ode::axpy(levels[k], Complex(h / 6.0, 0.0), k1[k]);
            detail_ode::axpy(levels[k], Complex(h / 3.0, 0.0), k2[k]);
            detail_ode::axpy(levels[k], Complex(h / 3.0, 0.0), k3[k]);
            detail_ode::axpy(levels[k], Complex(h / 6.0, 0.0), k4[k]);
        }
    }
    Batch out = levels[0];
    for (std::size_t k = 1; k < levels.size(); ++k)
        detail_ode::axpy(out, Complex(1.0, 0.0), levels[k]);
    // asymmetric phase: constant part of F
    if (F.constant_part() != 0.0) {
        Complex ph = std::polar(1.0, F.constant_part());
        for (auto& col : out)
            for (auto& x : col) x *= ph;
    }
    return out;
}

namespace chains {

inline OpChain dyson(const RepSpace& rep, const Functional& F) {
    if (F.linear_part()) throw ArgumentError("dyson: functional must be bounded");
    OpChain c;
    c.scalar = std::polar(1.0, F.constant_part());
    Support s = F.support();
    if (s.empty || F.potential_terms().empty()) return c;
    auto [lo, hi] = detail_ode::time_span(s, F.grid());
    c.factors.push_back(
        repops::split_step_factor(repops::bounded_diag_driver(F), lo, hi, rep.config().ode_tol));
    return c;
}

// T(L_{f0}) = W(f0) e^{-(i/2) <f0, D_D f0>} (closed form).
inline OpChain tordered_linear(const RepSpace& rep, const TimeFunction& f0) {
    Moments m = moments(f0);
    OpChain c = weyl(rep, m.a, m.b);
    c.scalar *= std::polar(1.0, -0.5 * pairing(f0, KernelKind::Mean, f0));
    return c;
}

// Tbar(L_{f0} + F_b + h) = e^{ih} T(F_b^{-D_A f0}) T(L_{f0}): the unique
// linear/bounded decomposition is structural in the functional type.
inline OpChain tbar(const RepSpace& rep, const Functional& F) {
    Functional bounded(F.grid(), F.components());
    for (const auto& p : F.potential_terms()) bounded.add_potential(p);
    if (!F.linear_part()) {
        bounded.set_constant(F.constant_part());
        return dyson(rep, bounded);
    }
    const TimeFunction& f0 = *F.linear_part();
    TimeFunction orbit = scale(apply_propagator(KernelKind::Advanced, f0), -1.0);
    Functional shifted = shift(bounded, orbit);
    shifted.set_constant(F.constant_part());
    return dyson(rep, shifted).after(tordered_linear(rep, f0));
}

inline OpChain word(const RepSpace& rep, const GroupWord& w) {
    if (w.lagrangean.interaction)
        throw ArgumentError("represent: interacting words must be embedded first");
    OpChain acc;
    acc.scalar = w.scalar();
    for (const auto& letter : w.letters) {
        OpChain op = tbar(rep, letter.functional);
        if (letter.exponent < 0) op = op.inverted();
        acc = acc.after(op);
    }
    return acc;
}

}  // namespace chains

// T(F) for bounded F (zero linear part): time-ordered exponential of
// i int F(Q(t)) dt by adaptive RK4 integration in the interaction picture.
// The constant part contributes the central phase e^{ih}.
inline RepOperator dyson_T(const RepSpace& rep, const Functional& F) {
    OpChain c = chains::dyson(rep, F);
    return RepOperator::make(rep, std::move(c.factors), c.scalar);
}

// Closed form of the linear time-ordered exponential:
// T(L_{f0}) = W(f0) e^{-(i/2) <f0, D_D f0>}.
inline RepOperator tordered_linear(const RepSpace& rep, const TimeFunction& f0) {
    OpChain c = chains::tordered_linear(rep, f0);
    return RepOperator::make(rep, std::move(c.factors), c.scalar);
}

// Same operator by direct integration of dT/dt = i f0(t) Q(t) T with
// Q(t) = Q + tP; the independent route for cross-validation.  The generator
// is unbounded on the tracked states, so the default tolerance is set for
// the 1e-5 cross-check rather than the bounded-sector 1e-9.
inline RepOperator tordered_linear_ode(const RepSpace& rep, const TimeFunction& f0,
                                       double tol = 1e-6) {
    Support s = f0.support();
    if (s.empty) return RepOperator::identity(rep);
    auto [lo, hi] = detail_ode::time_span(s, f0.grid());
    return RepOperator::make(rep,
                             {repops::ode_factor(repops::linear_generator(f0), lo, hi, tol)});
}

inline RepOperator tbar(const RepSpace& rep, const Functional& F) {
    OpChain c = chains::tbar(rep, F);
    return RepOperator::make(rep, std::move(c.factors), c.scalar);
}

// pi_S on group words: product over letters of Tbar(F)^{+-1} times the
// central scalar, assembled as one chain and materialized once.  Only the
// free Lagrangean is represented directly; interacting words go through the
// embedding first.
inline RepOperator represent(const RepSpace& rep, const GroupWord& w) {
    OpChain c = chains::word(rep, w);
    return RepOperator::make(rep, std::move(c.factors), c.scalar);
}

// ---------------------------------------------------------------------------
// Regularity probe
// ---------------------------------------------------------------------------

struct RegularityReport {
    std::vector<double> separations;
    std::vector<double> distances;
    double slope = 0.0;  // log-log fit
};

// Modulus of continuity of c -> pi_S(S(cF)) around c0: distances for a
// halving sequence of separations plus the fitted decay slope.
inline RegularityReport regularity_probe(const RepSpace& rep, const Functional& F, double c0 = 0.7,
                                         double delta0 = 0.2, int levels = 4) {
    RegularityReport rpt;
    RepOperator base = represent(rep, generator(Lagrangean::free_particle(), scale(F, c0)));
    double delta = delta0;
    for (int k = 0; k < levels; ++k) {
        RepOperator noisy =
            represent(rep, generator(Lagrangean::free_particle(), scale(F, c0 + delta)));
        rpt.separations.push_back(delta);
        rpt.distances.push_back(RepOperator::distance(rep, base, noisy));
        delta *= 0.5;
    }
    // least-squares slope of log d vs log sep
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = rpt.separations.size();
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::log(rpt.separations[i]);
        double y = std::log(std::max(rpt.distances[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double dn = static_cast<double>(n);
    rpt.slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
    return rpt;
}

// ---------------------------------------------------------------------------
// Irreducibility certificate
// ---------------------------------------------------------------------------

struct CommutantCertificate {
    double identity_residual = 0.0;  // ||A vec(I)|| (should vanish)
    double lambda2_lower = 0.0;      // certified spectral gap on traceless part
    std::size_t generators = 0;
};

// Least-squares commutant of a spanning family of Weyl windows: assembles
// A = sum_i L_i^* L_i with L_i(X) = W_i X - X W_i on the K x K window space
// and certifies, via Cholesky, a lower bound on the smallest eigenvalue
// orthogonal to the identity.
inline CommutantCertificate commutant_certificate(const RepSpace& rep,
                                                  const std::vector<RepOperator>& weyls) {
    std::size_t k = rep.k_track();
    std::size_t n2 = k * k;
    CMatrix A(n2, n2);
    auto kron = [&](const CMatrix& X, const CMatrix& Y) {
        CMatrix r(n2, n2);
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t r1 = 0; r1 < k; ++r1) {
                Complex x = X(p, r1);
                if (x == Complex{}) continue;
                for (std::size_t q = 0; q < k; ++q)
                    for (std::size_t s = 0; s < k; ++s)
                        r(p * k + q, r1 * k + s) += x * Y(q, s);
            }
        return r;
    };
    CMatrix I = CMatrix::identity(k);
    for (const auto& wop : weyls) {
        // vec(WX - XW) = (kron(W, I) - kron(I, W^T)) vec(X), row-major vec
        CMatrix WT(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) WT(i, j) = wop.window()(j, i);
        CMatrix L = kron(wop.window(), I) - kron(I, WT);
        A = A + L.adjoint() * L;
    }
    CommutantCertificate cert;
    cert.generators = weyls.size();
    // identity direction
    CVector vid(n2, Complex{});
    for (std::size_t i = 0; i < k; ++i) vid[i * k + i] = 1.0 / std::sqrt(static_cast<double>(k));
    cert.identity_residual = norm2(A.apply(vid));
    // certified gap: largest sigma in a fixed ladder with A + mu P_I - sigma I >= 0
    const double mu = 16.0;
    CMatrix base = A;
    for (std::size_t i = 0; i < n2; ++i)
        for (std::size_t j = 0; j < n2; ++j) base(i, j) += mu * vid[i] * std::conj(vid[j]);
    double lo = 0.0;
    for (double sigma : {4.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001}) {
        CMatrix test = base;
        for (std::size_t i = 0; i < n2; ++i) test(i, i) -= sigma;
        if (cholesky_psd(test, 1e-11)) {
            lo = sigma;
            break;
        }
    }
    cert.lambda2_lower = lo;
    return cert;
}

}  // namespace dynalg
