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

// Exact moment dynamics under Poisson-distributed squeeze jumps.
//
// For channels (lambda_k, H_k) with S_k = exp(iJH_k), the order-M moment tensor
// mu_{i_1..i_M}(t) = <a_{i_1} ... a_{i_M}>_t obeys the linear ODE
//   d mu / dt = G mu,   G = sum_k lambda_k (S_k^{(x)M} - I),
// so mu(t) = exp(G t) mu(0). G is materialized when (2n)^M fits the dense
// budget; otherwise it is applied slot by slot and exp(G t) mu is evaluated by
// a scaled truncated Taylor series.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sqzmoments/common.hpp"
#include "sqzmoments/linalg.hpp"
#include "sqzmoments/symplectic.hpp"

namespace sqz {

inline constexpr double kOverflowLimit = 1e300;

struct Channel {
    double rate = 0.0;  // 1/time
    QuadraticGenerator generator;
};

class ChannelSet {
  public:
    explicit ChannelSet(std::vector<Channel> channels) : channels_(std::move(channels)) {
        if (channels_.empty()) throw Error(ErrorCode::Configuration, "channel list is empty");
        n_ = channels_.front().generator.modes();
        for (std::size_t k = 0; k < channels_.size(); ++k) {
            const auto& c = channels_[k];
            if (!(c.rate > 0.0) || !std::isfinite(c.rate)) {
                throw Error(ErrorCode::Configuration,
                            "channel " + std::to_string(k) + " rate must be positive and finite");
            }
            if (c.generator.modes() != n_) {
                throw Error(ErrorCode::Configuration, "channel " + std::to_string(k) + " acts on " +
                                                          std::to_string(c.generator.modes()) +
                                                          " modes, channel 0 on " + std::to_string(n_));
            }
        }
    }

    int modes() const { return n_; }
    std::size_t size() const { return channels_.size(); }
    const Channel& operator[](std::size_t k) const { return channels_[k]; }
    auto begin() const { return channels_.begin(); }
    auto end() const { return channels_.end(); }

    double total_rate() const {
        double r = 0.0;
        for (const auto& c : channels_) r += c.rate;
        return r;
    }

  private:
    std::vector<Channel> channels_;
    int n_ = 0;
};

/// Flat order-M tensor of slot-ordered moments <a_{i_1} ... a_{i_M}>.
struct MomentTensor {
    int n = 0;
    int order = 0;
    CVector data;

    MomentTensor() = default;
    MomentTensor(int modes, int m) : n(modes), order(m) { data = CVector::Zero(scheme().size()); }
    MomentTensor(int modes, int m, CVector values) : n(modes), order(m), data(std::move(values)) {
        if (data.size() != scheme().size()) {
            throw Error(ErrorCode::Dimension, "moment tensor of order " + std::to_string(m) + " on " +
                                                  std::to_string(modes) + " modes needs " +
                                                  std::to_string(scheme().size()) + " entries, got " +
                                                  std::to_string(data.size()));
        }
    }

    IndexScheme scheme() const { return IndexScheme(n, order); }
    Complex& at(const std::vector<int>& idx) { return data(scheme().flat(idx)); }
    Complex at(const std::vector<int>& idx) const { return data(scheme().flat(idx)); }
};

/// (P_sigma mu)_{i_1..i_M} = mu_{i_{sigma(1)}..i_{sigma(M)}}.
inline MomentTensor permute_slots(const MomentTensor& mu, const std::vector<int>& sigma) {
    const IndexScheme sc = mu.scheme();
    if (static_cast<int>(sigma.size()) != mu.order) throw Error(ErrorCode::Dimension, "permutation size mismatch");
    std::vector<bool> seen(sigma.size(), false);
    for (int s : sigma) {
        if (s < 0 || s >= mu.order || seen[s]) throw Error(ErrorCode::InvalidInput, "not a permutation");
        seen[s] = true;
    }
    MomentTensor out(mu.n, mu.order);
    std::vector<int> src(mu.order);
    for (Eigen::Index f = 0; f < sc.size(); ++f) {
        const auto idx = sc.multi(f);
        for (int m = 0; m < mu.order; ++m) src[m] = idx[sigma[m]];
        out.data(f) = mu.data(sc.flat(src));
    }
    return out;
}

/// max |conj(mu_{i_1..i_M}) - mu_{t(i_M)..t(i_1)}|, t swapping a <-> a^+.
inline double conjugation_reversal_residual(const MomentTensor& mu) {
    const IndexScheme sc = mu.scheme();
    double worst = 0.0;
    std::vector<int> mirror(mu.order);
    for (Eigen::Index f = 0; f < sc.size(); ++f) {
        const auto idx = sc.multi(f);
        for (int m = 0; m < mu.order; ++m) mirror[m] = sc.dagger(idx[mu.order - 1 - m]);
        worst = std::max(worst, std::abs(std::conj(mu.data(f)) - mu.data(sc.flat(mirror))));
    }
    return worst;
}

/// max |mu_ij - mu_ji + J_ij| for an order-2 tensor.
inline double ccr_residual(const MomentTensor& mu) {
    if (mu.order != 2) throw Error(ErrorCode::Dimension, "CCR residual needs an order-2 tensor");
    const StructMatrices st = build_struct_matrices(mu.n);
    const int d = 2 * mu.n;
    double worst = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            worst = std::max(worst, std::abs(mu.data(i * d + j) - mu.data(j * d + i) + st.J(i, j)));
    return worst;
}

class MomentGenerator {
  public:
    int modes() const { return n_; }
    int order() const { return order_; }
    bool is_dense() const { return dense_.has_value(); }
    const CMatrix& dense() const { return *dense_; }
    Eigen::Index dim() const { return dim_; }

    /// G v, dense or slot by slot.
    CVector apply(const CVector& v) const {
        if (v.size() != dim_) throw Error(ErrorCode::Dimension, "generator/vector size mismatch");
        if (dense_) return *dense_ * v;
        CVector out = CVector::Zero(dim_);
        for (const auto& [rate, jump] : factors_) out += rate * (apply_kron_power(jump, order_, v) - v);
        return out;
    }

    /// Upper bound on ||G||_1 from the factors.
    double norm_bound() const {
        if (dense_) return one_norm(*dense_);
        double b = 0.0;
        for (const auto& [rate, jump] : factors_) b += rate * (std::pow(one_norm(jump), order_) + 1.0);
        return b;
    }

    const std::vector<std::pair<double, CMatrix>>& factors() const { return factors_; }

  private:
    friend MomentGenerator build_generator(const ChannelSet&, int, const Budget&);
    int n_ = 0;
    int order_ = 0;
    Eigen::Index dim_ = 0;
    std::vector<std::pair<double, CMatrix>> factors_;
    std::optional<CMatrix> dense_;
};

inline MomentGenerator build_generator(const ChannelSet& channels, int order, const Budget& budget = Budget{}) {
    const IndexScheme sc(channels.modes(), order);
    MomentGenerator g;
    g.n_ = channels.modes();
    g.order_ = order;
    g.dim_ = sc.size();
    for (const auto& c : channels) g.factors_.emplace_back(c.rate, c.generator.jump());
    if (static_cast<std::size_t>(sc.size()) <= budget.dense_dim) {
        CMatrix dense = CMatrix::Zero(sc.size(), sc.size());
        for (const auto& [rate, jump] : g.factors_) dense += rate * kron_power(jump, order, budget.dense_dim);
        dense.diagonal().array() -= Complex(channels.total_rate(), 0.0);
        g.dense_ = std::move(dense);
    }
    return g;
}

namespace detail {

inline constexpr int kMaxSeriesTerms = 60;
inline constexpr double kSeriesStepTol = 1e-12;
inline constexpr double kSeriesStepNorm = 1.0;
inline constexpr long kMaxSeriesSteps = 1'000'000;

/// exp(G t) v via s steps of a truncated Taylor series with ||G t / s||_1 <= 1.
inline CVector expm_action(const MomentGenerator& g, const CVector& v, double t) {
    if (t == 0.0) return v;
    const double beta = g.norm_bound() * t;
    const double steps_real = std::ceil(beta / kSeriesStepNorm);
    if (steps_real > static_cast<double>(kMaxSeriesSteps)) {
        throw Error(ErrorCode::Accuracy, "exp action needs " + std::to_string(steps_real) +
                                             " series steps; beyond the step budget");
    }
    const long steps = std::max(1L, static_cast<long>(steps_real));
    const double h = t / static_cast<double>(steps);
    CVector x = v;
    for (long s = 0; s < steps; ++s) {
        CVector term = x;
        CVector sum = x;
        int small_run = 0;
        double achieved = 1.0;
        int k = 1;
        for (; k <= kMaxSeriesTerms; ++k) {
            term = g.apply(term) * (h / k);
            sum += term;
            const double sn = sum.cwiseAbs().maxCoeff();
            achieved = sn > 0.0 ? term.cwiseAbs().maxCoeff() / sn : term.cwiseAbs().maxCoeff();
            small_run = achieved <= kSeriesStepTol ? small_run + 1 : 0;
            if (small_run >= 2) break;
        }
        if (k > kMaxSeriesTerms) {
            std::ostringstream os;
            os << "Taylor series did not converge in " << kMaxSeriesTerms << " terms; achieved relative "
               << achieved << " vs " << kSeriesStepTol;
            throw Error(ErrorCode::Accuracy, os.str());
        }
        x = std::move(sum);
    }
    return x;
}

inline void check_range(const CVector& v, double t) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (!std::isfinite(a) || a > kOverflowLimit) {
            std::ostringstream os;
            os.precision(17);
            os << "moment magnitude exceeds " << kOverflowLimit << " at t = " << t;
            throw Error(ErrorCode::Range, os.str());
        }
    }
}

inline void check_moment_input(const MomentGenerator& g, const MomentTensor& mu0) {
    if (mu0.n != g.modes() || mu0.order != g.order()) {
        throw Error(ErrorCode::Dimension, "moment tensor (n=" + std::to_string(mu0.n) + ", M=" +
                                              std::to_string(mu0.order) + ") does not match generator (n=" +
                                              std::to_string(g.modes()) + ", M=" + std::to_string(g.order()) + ")");
    }
    if (!all_finite(mu0.data)) throw Error(ErrorCode::InvalidInput, "initial moments contain non-finite values");
}

}  // namespace detail

/// The propagator exp(G t) as a dense matrix (dense generators only).
inline CMatrix propagator_matrix(const MomentGenerator& g, double t) {
    if (!g.is_dense()) throw Error(ErrorCode::Capacity, "generator is matrix-free; no dense propagator");
    return mat_exp(g.dense() * t);
}

inline MomentTensor propagate(const MomentGenerator& g, const MomentTensor& mu0, double t) {
    detail::check_moment_input(g, mu0);
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidInput, "time must be finite and >= 0");
    if (t == 0.0) return mu0;
    CVector out = g.is_dense() ? CVector(propagator_matrix(g, t) * mu0.data) : detail::expm_action(g, mu0.data, t);
    detail::check_range(out, t);
    return MomentTensor(mu0.n, mu0.order, std::move(out));
}

/// mu(t_j) for every grid time, stepping with exp(G dt) between samples.
inline std::vector<MomentTensor> propagate_series(const MomentGenerator& g, const MomentTensor& mu0,
                                                  const std::vector<double>& grid) {
    detail::check_moment_input(g, mu0);
    if (grid.empty()) throw Error(ErrorCode::Configuration, "time grid is empty");
    if (!(grid.front() >= 0.0)) throw Error(ErrorCode::Configuration, "time grid must start at t >= 0");
    for (std::size_t j = 1; j < grid.size(); ++j) {
        if (!(grid[j] > grid[j - 1])) {
            throw Error(ErrorCode::Configuration, "time grid must be strictly increasing (index " +
                                                      std::to_string(j) + ")");
        }
    }

    std::vector<MomentTensor> out;
    out.reserve(grid.size());
    out.push_back(propagate(g, mu0, grid.front()));

    // Uniform grids differ only in the last bits of dt; reuse the step matrix.
    std::optional<std::pair<double, CMatrix>> cached_step;
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double dt = grid[j] - grid[j - 1];
        CVector next;
        if (g.is_dense()) {
            if (!cached_step || std::abs(cached_step->first - dt) > 1e-13 * dt) {
                cached_step.emplace(dt, propagator_matrix(g, dt));
            }
            next = cached_step->second * out.back().data;
        } else {
            next = detail::expm_action(g, out.back().data, dt);
        }
        detail::check_range(next, grid[j]);
        out.emplace_back(mu0.n, mu0.order, std::move(next));
    }
    return out;
}

/// Order-1 and order-2 moments at time t.
inline std::pair<MomentTensor, MomentTensor> first_second_moments(const ChannelSet& channels,
                                                                  const MomentTensor& mu1_0,
                                                                  const MomentTensor& mu2_0, double t) {
    if (mu1_0.order != 1 || mu2_0.order != 2) {
        throw Error(ErrorCode::Dimension, "first_second_moments expects tensors of order 1 and 2");
    }
    const int n = channels.modes();
    CMatrix g1 = CMatrix::Zero(2 * n, 2 * n);
    CMatrix g2 = CMatrix::Zero(4 * n * n, 4 * n * n);
    for (const auto& c : channels) {
        const CMatrix& s = c.generator.jump();
        g1 += c.rate * s;
        g2 += c.rate * kron_power(s, 2);
    }
    g1.diagonal().array() -= Complex(channels.total_rate(), 0.0);
    g2.diagonal().array() -= Complex(channels.total_rate(), 0.0);
    if (mu1_0.n != n || mu2_0.n != n) throw Error(ErrorCode::Dimension, "mode count mismatch");
    if (!all_finite(mu1_0.data) || !all_finite(mu2_0.data)) {
        throw Error(ErrorCode::InvalidInput, "initial moments contain non-finite values");
    }
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidInput, "time must be finite and >= 0");
    if (t == 0.0) return {mu1_0, mu2_0};
    CVector m1 = mat_exp(g1 * t) * mu1_0.data;
    CVector m2 = mat_exp(g2 * t) * mu2_0.data;
    detail::check_range(m1, t);
    detail::check_range(m2, t);
    return {MomentTensor(n, 1, std::move(m1)), MomentTensor(n, 2, std::move(m2))};
}

}  // namespace sqz
