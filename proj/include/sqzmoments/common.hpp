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

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace sqz {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr const char* kVersion = "0.1.0";

enum class ErrorCode {
    InvalidDimension,   // n = 0, M = 0
    Dimension,          // shape mismatch
    SymmetryViolation,  // H != H^T
    TildeViolation,     // H != E conj(H) E
    Conditioning,       // post-exponentiation structure check failed
    InvalidInput,       // non-finite data, unordered jumps, bad arguments
    Configuration,      // inconsistent channels, grids, state specs
    Parse,              // malformed config text
    Capacity,           // memory/time budget exceeded
    Accuracy,           // series failed to converge within budget
    Range,              // moment overflow
    Margin,             // Fock cutoff too close to the occupied support
    Truncation,         // Fock leakage above the strict threshold
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidDimension: return "invalid-dimension";
        case ErrorCode::Dimension: return "dimension";
        case ErrorCode::SymmetryViolation: return "symmetry-violation";
        case ErrorCode::TildeViolation: return "tilde-violation";
        case ErrorCode::Conditioning: return "numerical-conditioning";
        case ErrorCode::InvalidInput: return "invalid-input";
        case ErrorCode::Configuration: return "configuration";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::Capacity: return "capacity";
        case ErrorCode::Accuracy: return "accuracy";
        case ErrorCode::Range: return "range";
        case ErrorCode::Margin: return "margin";
        case ErrorCode::Truncation: return "truncation";
    }
    return "unknown";
}

/// Single exception type for the library; `code()` classifies the failure.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + " error: " + message), code_(code), message_(message) {}

    ErrorCode code() const noexcept { return code_; }
    /// what() without the classification prefix.
    const std::string& message() const noexcept { return message_; }

  private:
    ErrorCode code_;
    std::string message_;
};

/// Errors caused by the caller's configuration map to 2, numerical trouble to 3.
inline bool is_configuration_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidDimension:
        case ErrorCode::Dimension:
        case ErrorCode::SymmetryViolation:
        case ErrorCode::TildeViolation:
        case ErrorCode::InvalidInput:
        case ErrorCode::Configuration:
        case ErrorCode::Parse:
        case ErrorCode::Margin:
            return true;
        default:
            return false;
    }
}

/// Size caps shared by the dense moment path, Kronecker materialization and the
/// Fock oracle. `SQZ_CAPACITY` overrides both the dense (2n)^M cap and the Fock
/// dimension cap.
struct Budget {
    std::size_t dense_dim = 4096;
    std::size_t fock_dim = 4096;
    std::size_t tensor_dim = std::size_t{1} << 24;  // matrix-free flat vectors

    static Budget from_env() {
        Budget b;
        if (const char* env = std::getenv("SQZ_CAPACITY"); env != nullptr && *env != '\0') {
            char* end = nullptr;
            unsigned long long v = std::strtoull(env, &end, 10);
            if (end == env || *end != '\0' || v == 0) {
                throw Error(ErrorCode::Configuration,
                            "SQZ_CAPACITY must be a positive integer, got '" + std::string(env) + "'");
            }
            b.dense_dim = static_cast<std::size_t>(v);
            b.fock_dim = static_cast<std::size_t>(v);
        }
        return b;
    }
};

/// base^exp, saturating to SIZE_MAX once the result would pass `limit`.
inline std::size_t checked_pow(std::size_t base, int exp, std::size_t limit) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) {
        if (base != 0 && r > limit / base) return std::numeric_limits<std::size_t>::max();
        r *= base;
    }
    return r;
}

/// Induced infinity norm (max absolute row sum).
template <typename Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& a) {
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Induced 1-norm (max absolute column sum).
template <typename Derived>
double one_norm(const Eigen::MatrixBase<Derived>& a) {
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().colwise().sum().maxCoeff();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            auto v = a(i, j);
            if (!std::isfinite(std::real(v)) || !std::isfinite(std::imag(v))) return false;
        }
    return true;
}

}  // namespace sqz
