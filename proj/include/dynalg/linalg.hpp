#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "dynalg/errors.hpp"

namespace dynalg {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

// Dense row-major complex matrix; small sizes only (tracked windows and the
// commutant certificate).
class CMatrix {
  public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), d_(rows * cols) {}

    static CMatrix identity(std::size_t n) {
        CMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Complex& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }

    CMatrix adjoint() const {
        CMatrix r(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
        return r;
    }

    CMatrix operator*(const CMatrix& o) const {
        if (cols_ != o.rows_) throw ArgumentError("CMatrix: shape mismatch in product");
        CMatrix r(rows_, o.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                Complex a = (*this)(i, k);
                if (a == Complex{}) continue;
                for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
            }
        return r;
    }

    CMatrix operator+(const CMatrix& o) const {
        CMatrix r = *this;
        for (std::size_t i = 0; i < d_.size(); ++i) r.d_[i] += o.d_[i];
        return r;
    }
    CMatrix operator-(const CMatrix& o) const {
        CMatrix r = *this;
        for (std::size_t i = 0; i < d_.size(); ++i) r.d_[i] -= o.d_[i];
        return r;
    }
    CMatrix scaled(Complex s) const {
        CMatrix r = *this;
        for (auto& x : r.d_) x *= s;
        return r;
    }

    CVector apply(const CVector& v) const {
        if (v.size() != cols_) throw ArgumentError("CMatrix: vector length mismatch");
        CVector r(rows_, Complex{});
        for (std::size_t i = 0; i < rows_; ++i) {
            Complex acc{};
            for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
            r[i] = acc;
        }
        return r;
    }

    double frobenius() const {
        double s = 0.0;
        for (const auto& x : d_) s += std::norm(x);
        return std::sqrt(s);
    }

    const std::vector<Complex>& data() const { return d_; }
    std::vector<Complex>& data() { return d_; }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Complex> d_;
};

inline double dot_real(const CVector& a, const CVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (std::conj(a[i]) * b[i]).real();
    return s;
}

inline Complex inner(const CVector& a, const CVector& b) {
    Complex s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline double norm2(const CVector& a) {
    double s = 0.0;
    for (const auto& x : a) s += std::norm(x);
    return std::sqrt(s);
}

// Hermitian Cholesky with failure signal; M is overwritten conceptually (we
// copy).  Returns false when a pivot dips below -pivot_floor, i.e. M is not
// PSD at that resolution.  Certifies positive semidefiniteness as
// chol(M + eps I) success.
inline bool cholesky_psd(CMatrix m, double pivot_floor = 0.0) {
    std::size_t n = m.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double diag = m(j, j).real();
        for (std::size_t k = 0; k < j; ++k) diag -= std::norm(m(j, k));
        if (diag < -pivot_floor) return false;
        double piv = std::sqrt(std::max(diag, 0.0));
        m(j, j) = piv;
        for (std::size_t i = j + 1; i < n; ++i) {
            Complex acc = m(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= m(i, k) * std::conj(m(j, k));
            m(i, j) = piv > 0.0 ? acc / piv : Complex{};
        }
    }
    return true;
}

// Modified Gram-Schmidt on columns stored as vectors with a caller-supplied
// inner product weight; orthonormalizes in place.
inline void mgs_orthonormalize(std::vector<CVector>& cols, double weight) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            Complex proj = inner(cols[k], cols[j]);
            proj *= weight;
            for (std::size_t i = 0; i < cols[j].size(); ++i) cols[j][i] -= proj * cols[k][i];
        }
        double nrm = norm2(cols[j]) * std::sqrt(weight);
        if (nrm <= 0.0) throw NumericalError("mgs: dependent column");
        for (auto& x : cols[j]) x /= nrm;
    }
}

}  // namespace dynalg
