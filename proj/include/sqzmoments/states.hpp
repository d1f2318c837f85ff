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

// Initial moment tensors for vacuum, coherent, number and pure Gaussian states.
//
// Gaussian states are described by their mean vector m = <a> and the centered
// slot-ordered covariance C_ij = <a_i a_j> - m_i m_j. Higher moments follow from
// the ordered Wick rule: sum over partitions of the slots into singletons and
// pairs (p < q) of prod m_{i_s} * prod C_{i_p i_q}.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sqzmoments/common.hpp"
#include "sqzmoments/moments.hpp"
#include "sqzmoments/symplectic.hpp"

namespace sqz {

enum class StateKind { Vacuum, Coherent, Fock, GaussianPure };

inline std::string_view to_string(StateKind k) {
    switch (k) {
        case StateKind::Vacuum: return "vacuum";
        case StateKind::Coherent: return "coherent";
        case StateKind::Fock: return "fock";
        case StateKind::GaussianPure: return "gaussian-pure";
    }
    return "unknown";
}

inline StateKind state_kind_from_string(std::string_view s) {
    if (s == "vacuum") return StateKind::Vacuum;
    if (s == "coherent") return StateKind::Coherent;
    if (s == "fock") return StateKind::Fock;
    if (s == "gaussian-pure") return StateKind::GaussianPure;
    throw Error(ErrorCode::Configuration, "unknown state kind '" + std::string(s) +
                                              "' (expected vacuum, coherent, fock or gaussian-pure)");
}

/// gaussian-pure is U_sq D(alpha)|0>, i.e. the squeeze acts after displacement.
struct StateSpec {
    StateKind kind = StateKind::Vacuum;
    int n = 1;
    std::vector<Complex> alpha;                 // coherent, gaussian-pure (optional there)
    std::optional<QuadraticGenerator> squeeze;  // gaussian-pure
    std::vector<int> occupations;               // fock

    static StateSpec vacuum(int n) { return StateSpec{StateKind::Vacuum, n, {}, std::nullopt, {}}; }
    static StateSpec coherent(std::vector<Complex> alpha) {
        const int n = static_cast<int>(alpha.size());
        return StateSpec{StateKind::Coherent, n, std::move(alpha), std::nullopt, {}};
    }
    static StateSpec fock(std::vector<int> occupations) {
        const int n = static_cast<int>(occupations.size());
        return StateSpec{StateKind::Fock, n, {}, std::nullopt, std::move(occupations)};
    }
    static StateSpec gaussian_pure(QuadraticGenerator squeeze, std::vector<Complex> alpha = {}) {
        const int n = squeeze.modes();
        return StateSpec{StateKind::GaussianPure, n, std::move(alpha), std::move(squeeze), {}};
    }

    void validate() const {
        if (n < 1) throw Error(ErrorCode::InvalidDimension, "state mode count must be >= 1");
        const auto require = [&](bool ok, const std::string& what) {
            if (!ok) throw Error(ErrorCode::Configuration, std::string(to_string(kind)) + " state: " + what);
        };
        switch (kind) {
            case StateKind::Vacuum:
                require(alpha.empty() && !squeeze && occupations.empty(), "takes no parameters");
                break;
            case StateKind::Coherent:
                require(static_cast<int>(alpha.size()) == n, "alpha must have one amplitude per mode");
                require(!squeeze && occupations.empty(), "only alpha is allowed");
                break;
            case StateKind::Fock:
                require(static_cast<int>(occupations.size()) == n, "occupations must have one entry per mode");
                require(alpha.empty() && !squeeze, "only occupations are allowed");
                for (int o : occupations) require(o >= 0, "occupations must be nonnegative");
                break;
            case StateKind::GaussianPure:
                require(squeeze.has_value(), "squeeze_H is required");
                require(squeeze->modes() == n, "squeeze_H acts on the wrong number of modes");
                require(alpha.empty() || static_cast<int>(alpha.size()) == n,
                        "alpha must be empty or have one amplitude per mode");
                require(occupations.empty(), "occupations are not allowed");
                break;
        }
        for (const auto& a : alpha) {
            if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
                throw Error(ErrorCode::InvalidInput, "alpha has non-finite entries");
            }
        }
    }

    bool is_gaussian() const { return kind != StateKind::Fock; }
};

/// Mean vector and centered ordered covariance of a Gaussian state.
struct GaussianData {
    CVector mean;
    CMatrix cov;
};

/// <0| a a^T |0> = [[0, I], [0, 0]].
inline CMatrix vacuum_covariance(int n) {
    CMatrix c = CMatrix::Zero(2 * n, 2 * n);
    c.topRightCorner(n, n).setIdentity();
    return c;
}

inline GaussianData gaussian_data(const StateSpec& spec) {
    spec.validate();
    if (!spec.is_gaussian()) throw Error(ErrorCode::Configuration, "fock states are not Gaussian");
    const int n = spec.n;
    GaussianData g{CVector::Zero(2 * n), vacuum_covariance(n)};
    for (std::size_t j = 0; j < spec.alpha.size(); ++j) {
        g.mean(j) = spec.alpha[j];
        g.mean(n + j) = std::conj(spec.alpha[j]);
    }
    if (spec.kind == StateKind::GaussianPure) {
        // U^+ a U = S a, so <a> -> S <a> and C -> S C S^T.
        const CMatrix& s = spec.squeeze->jump();
        g.mean = s * g.mean;
        g.cov = s * g.cov * s.transpose();
    }
    return g;
}

inline std::pair<MomentTensor, MomentTensor> first_two_moments(const StateSpec& spec) {
    spec.validate();
    const int n = spec.n;
    const int d = 2 * n;
    MomentTensor mu1(n, 1);
    MomentTensor mu2(n, 2);
    if (spec.kind == StateKind::Fock) {
        for (int j = 0; j < n; ++j) {
            mu2.data(j * d + (n + j)) = static_cast<double>(spec.occupations[j] + 1);  // <a a^+>
            mu2.data((n + j) * d + j) = static_cast<double>(spec.occupations[j]);      // <a^+ a>
        }
        return {mu1, mu2};
    }
    const GaussianData g = gaussian_data(spec);
    mu1.data = g.mean;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) mu2.data(i * d + j) = g.mean(i) * g.mean(j) + g.cov(i, j);
    return {mu1, mu2};
}

/// Ordered Wick expansion of one moment. Subsets of slots are bitmasks; the
/// lowest remaining slot is either a singleton or paired with a later slot.
inline Complex wick_moment(const GaussianData& g, const std::vector<int>& components) {
    const int order = static_cast<int>(components.size());
    const unsigned full = (1u << order) - 1u;
    std::vector<Complex> memo(std::size_t{1} << order);
    memo[full] = 1.0;
    // memo[mask] = Wick sum over the slots not in mask; fill from fuller masks down.
    for (int mask = static_cast<int>(full) - 1; mask >= 0; --mask) {
        const unsigned used = static_cast<unsigned>(mask);
        int p = 0;
        while (used & (1u << p)) ++p;
        const int ip = components[p];
        Complex acc = g.mean(ip) * memo[used | (1u << p)];
        for (int q = p + 1; q < order; ++q) {
            if (used & (1u << q)) continue;
            acc += g.cov(ip, components[q]) * memo[used | (1u << p) | (1u << q)];
        }
        memo[used] = acc;
    }
    return memo[0];
}

inline MomentTensor gaussian_moments(const StateSpec& spec, int order, const Budget& budget = Budget{}) {
    if (order < 1) throw Error(ErrorCode::InvalidDimension, "moment order must be >= 1");
    if (order > 24) throw Error(ErrorCode::Capacity, "Wick expansion order above 24 is not supported");
    const std::size_t size = checked_pow(static_cast<std::size_t>(2 * spec.n), order, budget.tensor_dim);
    if (size > budget.tensor_dim) throw Error(ErrorCode::Capacity, "moment tensor exceeds the tensor budget");
    const GaussianData g = gaussian_data(spec);
    MomentTensor mu(spec.n, order);
    const IndexScheme sc = mu.scheme();
    for (Eigen::Index f = 0; f < sc.size(); ++f) mu.data(f) = wick_moment(g, sc.multi(f));
    return mu;
}

}  // namespace sqz
