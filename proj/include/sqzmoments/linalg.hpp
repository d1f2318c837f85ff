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

#pragma once

#include <array>
#include <cmath>
#include <string>

#include "sqzmoments/common.hpp"

namespace sqz {

namespace detail {

// Pade coefficients b_0..b_m for the [m/m] approximant of exp, with the 1-norm
// thresholds theta_m below which no scaling is needed in double precision.
inline constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
inline constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
inline constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                                 25200.0,    1512.0,    56.0,      1.0};
inline constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                                  302702400.0,   30270240.0,   2162160.0,
                                                  110880.0,      3960.0,       90.0,
                                                  1.0};
inline constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e0;
inline constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
CMatrix pade_low(const CMatrix& a, const std::array<double, N>& b) {
    const Eigen::Index d = a.rows();
    const CMatrix id = CMatrix::Identity(d, d);
    const CMatrix a2 = a * a;
    CMatrix u_even = b[1] * id;
    CMatrix v = b[0] * id;
    CMatrix power = id;
    for (std::size_t k = 2; k < N; k += 2) {
        power = power * a2;
        u_even += b[k + 1] * power;
        v += b[k] * power;
    }
    const CMatrix u = a * u_even;
    return (v - u).partialPivLu().solve(v + u);
}

inline CMatrix pade13(const CMatrix& a) {
    const auto& b = kPade13;
    const Eigen::Index d = a.rows();
    const CMatrix id = CMatrix::Identity(d, d);
    const CMatrix a2 = a * a;
    const CMatrix a4 = a2 * a2;
    const CMatrix a6 = a4 * a2;
    const CMatrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
    const CMatrix u = a * (u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    const CMatrix v_inner = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2);
    const CMatrix v = v_inner + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
    return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with a diagonal Pade approximant.
/// The approximant degree and the number of squarings are selected from the
/// 1-norm of `a`, so exp(0) evaluates to the identity exactly.
inline CMatrix mat_exp(const CMatrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw Error(ErrorCode::Dimension, "mat_exp needs a non-empty square matrix, got " +
                                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    if (!all_finite(a)) throw Error(ErrorCode::InvalidInput, "mat_exp input has non-finite entries");

    const double norm = one_norm(a);
    if (norm <= detail::kTheta3) return detail::pade_low(a, detail::kPade3);
    if (norm <= detail::kTheta5) return detail::pade_low(a, detail::kPade5);
    if (norm <= detail::kTheta7) return detail::pade_low(a, detail::kPade7);
    if (norm <= detail::kTheta9) return detail::pade_low(a, detail::kPade9);

    int squarings = 0;
    if (norm > detail::kTheta13) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / detail::kTheta13))));
    }
    const CMatrix scaled = a / std::ldexp(1.0, squarings);
    CMatrix r = detail::pade13(scaled);
    for (int s = 0; s < squarings; ++s) r = r * r;
    if (!all_finite(r)) throw Error(ErrorCode::Range, "mat_exp overflowed (1-norm " + std::to_string(norm) + ")");
    return r;
}

/// A^{(x)M} with the leftmost factor most significant in the flat index, i.e.
/// kron_power(A, 2) = A (x) A in the usual Kronecker layout.
inline CMatrix kron_power(const CMatrix& a, int order, std::size_t budget = Budget{}.dense_dim) {
    if (order < 1) throw Error(ErrorCode::InvalidDimension, "kron_power order must be >= 1");
    if (a.rows() != a.cols() || a.rows() == 0) throw Error(ErrorCode::Dimension, "kron_power needs a square matrix");
    const std::size_t d = static_cast<std::size_t>(a.rows());
    const std::size_t full = checked_pow(d, order, budget);
    if (full > budget) {
        throw Error(ErrorCode::Capacity, "Kronecker power of dimension " + std::to_string(d) + "^" +
                                             std::to_string(order) + " exceeds the dense budget of " +
                                             std::to_string(budget) + "; use the matrix-free path");
    }
    CMatrix r = a;
    for (int m = 1; m < order; ++m) {
        CMatrix next(r.rows() * a.rows(), r.cols() * a.cols());
        for (Eigen::Index i = 0; i < r.rows(); ++i)
            for (Eigen::Index j = 0; j < r.cols(); ++j)
                next.block(i * a.rows(), j * a.cols(), a.rows(), a.cols()) = r(i, j) * a;
        r = std::move(next);
    }
    return r;
}

/// Applies `a` to tensor slot `slot` (0-based, leftmost most significant) of a
/// flat order-`order` tensor with per-slot dimension a.rows().
inline void apply_to_slot(const CMatrix& a, int slot, int order, CVector& v) {
    const Eigen::Index d = a.rows();
    Eigen::Index right = 1;
    for (int m = slot + 1; m < order; ++m) right *= d;
    const Eigen::Index left = v.size() / (d * right);
    CVector column(d);
    CVector mapped(d);
    for (Eigen::Index l = 0; l < left; ++l) {
        const Eigen::Index base = l * d * right;
        for (Eigen::Index r = 0; r < right; ++r) {
            for (Eigen::Index i = 0; i < d; ++i) column(i) = v(base + i * right + r);
            mapped.noalias() = a * column;
            for (Eigen::Index i = 0; i < d; ++i) v(base + i * right + r) = mapped(i);
        }
    }
}

/// A^{(x)M} v without forming the Kronecker matrix: one d x d product per slot.
inline CVector apply_kron_power(const CMatrix& a, int order, const CVector& v) {
    if (order < 1) throw Error(ErrorCode::InvalidDimension, "apply_kron_power order must be >= 1");
    const std::size_t d = static_cast<std::size_t>(a.rows());
    if (a.rows() != a.cols() || checked_pow(d, order, static_cast<std::size_t>(v.size())) !=
                                    static_cast<std::size_t>(v.size())) {
        throw Error(ErrorCode::Dimension, "apply_kron_power: vector length " + std::to_string(v.size()) +
                                              " is not " + std::to_string(d) + "^" + std::to_string(order));
    }
    CVector out = v;
    for (int m = 0; m < order; ++m) apply_to_slot(a, m, order, out);
    return out;
}

}  // namespace sqz
