// Copyright 2026 The sqzmoments Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Structural matrices of the bosonic operator vector
//   a = (a_1, ..., a_n, a_1^+, ..., a_n^+)^T,
// tilde conjugation, and validated quadratic generators H with their jump
// matrices S = exp(iJH), which act as U^+ a U = S a for U = exp(-(i/2) a^T H a).

#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sqzmoments/common.hpp"
#include "sqzmoments/linalg.hpp"

namespace sqz {

inline constexpr double kValidationTol = 1e-12;
inline constexpr double kStructureTol = 1e-10;

struct StructMatrices {
    int n = 0;
    CMatrix J;
    CMatrix E;
};

inline StructMatrices build_struct_matrices(int n) {
    if (n < 1) throw Error(ErrorCode::InvalidDimension, "mode count must be >= 1, got " + std::to_string(n));
    StructMatrices m;
    m.n = n;
    m.J = CMatrix::Zero(2 * n, 2 * n);
    m.E = CMatrix::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        m.J(i, n + i) = -1.0;
        m.J(n + i, i) = 1.0;
        m.E(i, n + i) = 1.0;
        m.E(n + i, i) = 1.0;
    }
    return m;
}

inline int mode_count_of(Eigen::Index dim, const char* what) {
    if (dim < 2 || dim % 2 != 0) {
        throw Error(ErrorCode::Dimension, std::string(what) + " must have even positive size 2n, got " +
                                              std::to_string(dim));
    }
    return static_cast<int>(dim / 2);
}

/// E conj(g): swaps the annihilation and creation halves and conjugates.
inline CVector tilde_vec(const CVector& g) {
    const int n = mode_count_of(g.size(), "tilde_vec input");
    CVector r(2 * n);
    r.head(n) = g.tail(n).conjugate();
    r.tail(n) = g.head(n).conjugate();
    return r;
}

/// E conj(K) E.
inline CMatrix tilde_mat(const CMatrix& k) {
    if (k.rows() != k.cols()) {
        throw Error(ErrorCode::Dimension, "tilde_mat needs a square matrix, got " + std::to_string(k.rows()) +
                                              "x" + std::to_string(k.cols()));
    }
    const int n = mode_count_of(k.rows(), "tilde_mat input");
    CMatrix r(2 * n, 2 * n);
    r.topLeftCorner(n, n) = k.bottomRightCorner(n, n).conjugate();
    r.topRightCorner(n, n) = k.bottomLeftCorner(n, n).conjugate();
    r.bottomLeftCorner(n, n) = k.topRightCorner(n, n).conjugate();
    r.bottomRightCorner(n, n) = k.topLeftCorner(n, n).conjugate();
    return r;
}

/// Component index i in {0..2n-1}: i < n is a_{i+1}, i >= n is a_{i-n+1}^+.
/// Flat index of (i_1..i_M) is sum_m i_m (2n)^{M-m}.
class IndexScheme {
  public:
    IndexScheme(int n, int order) : n_(n), order_(order) {
        if (n < 1) throw Error(ErrorCode::InvalidDimension, "mode count must be >= 1");
        if (order < 1) throw Error(ErrorCode::InvalidDimension, "moment order must be >= 1");
        const std::size_t full = checked_pow(static_cast<std::size_t>(2 * n), order, Budget{}.tensor_dim);
        if (full > Budget{}.tensor_dim) {
            throw Error(ErrorCode::Capacity, "moment tensor (2n)^M = " + std::to_string(2 * n) + "^" +
                                                 std::to_string(order) + " is too large");
        }
        size_ = static_cast<Eigen::Index>(full);
    }

    int modes() const { return n_; }
    int order() const { return order_; }
    int base() const { return 2 * n_; }
    Eigen::Index size() const { return size_; }

    Eigen::Index flat(const std::vector<int>& multi) const {
        if (static_cast<int>(multi.size()) != order_) {
            throw Error(ErrorCode::Dimension, "multi-index has " + std::to_string(multi.size()) +
                                                  " slots, expected " + std::to_string(order_));
        }
        Eigen::Index f = 0;
        for (int i : multi) {
            if (i < 0 || i >= base()) throw Error(ErrorCode::Dimension, "component index out of range");
            f = f * base() + i;
        }
        return f;
    }

    std::vector<int> multi(Eigen::Index flat) const {
        if (flat < 0 || flat >= size_) throw Error(ErrorCode::Dimension, "flat index out of range");
        std::vector<int> idx(order_);
        for (int m = order_ - 1; m >= 0; --m) {
            idx[m] = static_cast<int>(flat % base());
            flat /= base();
        }
        return idx;
    }

    /// "a1", "a1+", joined with '.' across slots.
    std::string label(Eigen::Index flat) const {
        std::string out;
        for (int i : multi(flat)) {
            if (!out.empty()) out += '.';
            out += component_label(i);
        }
        return out;
    }

    std::string component_label(int i) const {
        return i < n_ ? "a" + std::to_string(i + 1) : "a" + std::to_string(i - n_ + 1) + "+";
    }

    /// Swaps annihilation and creation halves of a single component index.
    int dagger(int i) const { return (i + n_) % base(); }

  private:
    int n_;
    int order_;
    Eigen::Index size_ = 0;
};

/// A 2n x 2n complex H with H = H^T = tilde(H), together with S = exp(iJH).
/// Only obtainable through validate_generator.
class QuadraticGenerator {
  public:
    int modes() const { return n_; }
    const CMatrix& h() const { return h_; }
    const CMatrix& jump() const { return s_; }

  private:
    friend QuadraticGenerator validate_generator(int n, const CMatrix& h);
    QuadraticGenerator(int n, CMatrix h, CMatrix s) : n_(n), h_(std::move(h)), s_(std::move(s)) {}

    int n_;
    CMatrix h_;
    CMatrix s_;
};

struct GeneratorResiduals {
    double symmetry = 0.0;      // ||H - H^T||_inf
    double tilde = 0.0;         // ||tilde(H) - H||_inf
    double scale = 0.0;         // 1 + ||H||_inf
    double symplectic = 0.0;    // ||S^T J S - J||_inf
    double jump_tilde = 0.0;    // ||tilde(S) - S||_inf
    double spectral_radius = 0.0;
    bool exponentiated = false;

    bool symmetric() const { return symmetry <= kValidationTol * scale; }
    bool tilde_real() const { return tilde <= kValidationTol * scale; }
};

namespace detail {

inline std::string describe_entry(const CMatrix& m, Eigen::Index i, Eigen::Index j) {
    std::ostringstream os;
    os.precision(17);
    os << "H[" << i << "][" << j << "] = " << m(i, j).real() << (m(i, j).imag() < 0 ? "" : "+") << m(i, j).imag()
       << "i";
    return os.str();
}

inline double structure_tolerance(const CMatrix& s) {
    const double norm = inf_norm(s);
    return kStructureTol * std::max(1.0, norm * norm);
}

inline void check_square_generator(int n, const CMatrix& h) {
    if (n < 1) throw Error(ErrorCode::InvalidDimension, "mode count must be >= 1, got " + std::to_string(n));
    if (h.rows() != 2 * n || h.cols() != 2 * n) {
        throw Error(ErrorCode::Dimension, "generator must be " + std::to_string(2 * n) + "x" +
                                              std::to_string(2 * n) + ", got " + std::to_string(h.rows()) + "x" +
                                              std::to_string(h.cols()));
    }
    if (!all_finite(h)) throw Error(ErrorCode::InvalidInput, "generator has non-finite entries");
}

}  // namespace detail

inline CMatrix jump_matrix(const CMatrix& h) {
    const StructMatrices st = build_struct_matrices(mode_count_of(h.rows(), "generator"));
    return mat_exp(Complex(0.0, 1.0) * st.J * h);
}

inline QuadraticGenerator validate_generator(int n, const CMatrix& h) {
    detail::check_square_generator(n, h);
    const double scale = 1.0 + inf_norm(h);

    const CMatrix asym = h - h.transpose();
    Eigen::Index ai = 0, aj = 0;
    const double worst_sym = asym.cwiseAbs().maxCoeff(&ai, &aj);
    if (inf_norm(asym) > kValidationTol * scale) {
        std::ostringstream os;
        os.precision(3);
        os << "H is not symmetric: max deviation " << worst_sym << " at " << detail::describe_entry(h, ai, aj)
           << " vs " << detail::describe_entry(h, aj, ai);
        throw Error(ErrorCode::SymmetryViolation, os.str());
    }

    const CMatrix tilde_dev = tilde_mat(h) - h;
    if (inf_norm(tilde_dev) > kValidationTol * scale) {
        Eigen::Index ti = 0, tj = 0;
        const double worst = tilde_dev.cwiseAbs().maxCoeff(&ti, &tj);
        std::ostringstream os;
        os.precision(3);
        os << "H differs from E conj(H) E (max deviation " << worst << " at H[" << ti << "][" << tj
           << "]); the quadratic form is not self-adjoint and the jump is not unitary";
        throw Error(ErrorCode::TildeViolation, os.str());
    }

    const StructMatrices st = build_struct_matrices(n);
    CMatrix s = mat_exp(Complex(0.0, 1.0) * st.J * h);
    const double tol = detail::structure_tolerance(s);
    const double symp = inf_norm(CMatrix(s.transpose() * st.J * s - st.J));
    const double stil = inf_norm(CMatrix(tilde_mat(s) - s));
    if (symp > tol || stil > tol) {
        std::ostringstream os;
        os.precision(3);
        os << "exp(iJH) lost structure: ||S^T J S - J|| = " << symp << ", ||tilde(S) - S|| = " << stil
           << " (tolerance " << tol << ")";
        throw Error(ErrorCode::Conditioning, os.str());
    }
    return QuadraticGenerator(n, h, std::move(s));
}

/// Non-throwing diagnostics for reporting; exponentiates only when H is finite.
inline GeneratorResiduals inspect_generator(int n, const CMatrix& h) {
    detail::check_square_generator(n, h);
    GeneratorResiduals r;
    r.scale = 1.0 + inf_norm(h);
    r.symmetry = inf_norm(CMatrix(h - h.transpose()));
    r.tilde = inf_norm(CMatrix(tilde_mat(h) - h));
    const StructMatrices st = build_struct_matrices(n);
    const CMatrix s = mat_exp(Complex(0.0, 1.0) * st.J * h);
    r.exponentiated = true;
    r.symplectic = inf_norm(CMatrix(s.transpose() * st.J * s - st.J));
    r.jump_tilde = inf_norm(CMatrix(tilde_mat(s) - s));
    Eigen::ComplexEigenSolver<CMatrix> es(s, false);
    r.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
    return r;
}

/// Single-mode squeeze on `mode`: H_{jj} = i r, H_{n+j,n+j} = -i r, giving
/// S = [[cosh r, -sinh r], [-sinh r, cosh r]] on that mode.
inline CMatrix squeeze_h(int n, int mode, double r) {
    CMatrix h = CMatrix::Zero(2 * n, 2 * n);
    h(mode, mode) = Complex(0.0, r);
    h(n + mode, n + mode) = Complex(0.0, -r);
    return h;
}

/// Phase rotation on `mode`: H_{j,n+j} = H_{n+j,j} = omega, S = diag(e^{-i omega}, e^{i omega}).
inline CMatrix rotation_h(int n, int mode, double omega) {
    CMatrix h = CMatrix::Zero(2 * n, 2 * n);
    h(mode, n + mode) = omega;
    h(n + mode, mode) = omega;
    return h;
}

}  // namespace sqz
