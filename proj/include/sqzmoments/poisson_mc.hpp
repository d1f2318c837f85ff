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

// Monte Carlo over the classical Poisson jump process. Along one trajectory
// with jumps k_1 < ... < k_m (chronological), the Heisenberg-picture moment
// tensor is (S_{k_m} ... S_{k_1})^{(x)M} mu0: the latest jump multiplies on the
// left. Averaging over trajectories reproduces exp(G t) mu0.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "sqzmoments/common.hpp"
#include "sqzmoments/linalg.hpp"
#include "sqzmoments/moments.hpp"

namespace sqz {

struct McConfig {
    std::size_t trajectories = 1;
    std::uint64_t seed = 0;
    std::vector<double> t_grid = {0.0};
    unsigned threads = 1;
};

struct Jump {
    double time = 0.0;
    int channel = 0;
};

struct TrajectoryEstimate {
    double time = 0.0;
    MomentTensor mean;
    RVector stderr_re;  // standard error of the mean, real parts
    RVector stderr_im;  // and imaginary parts
    std::size_t trajectories = 0;
};

using McEngine = std::mt19937_64;

/// Independent stream for trajectory j, derived from (seed, j) alone.
inline McEngine trajectory_engine(std::uint64_t seed, std::uint64_t j) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j >> 32)};
    return McEngine(seq);
}

/// Merged Poisson process of total rate sum(lambda_k); each event is labelled k
/// with probability lambda_k / total.
inline std::vector<Jump> sample_trajectory(const ChannelSet& channels, double t_max, McEngine& rng) {
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw Error(ErrorCode::InvalidInput, "t_max must be finite and >= 0");
    std::vector<Jump> jumps;
    const double total = channels.total_rate();
    if (total * t_max == 0.0) return jumps;
    std::exponential_distribution<double> wait(total);
    std::vector<double> weights;
    for (const auto& c : channels) weights.push_back(c.rate);
    std::discrete_distribution<int> label(weights.begin(), weights.end());
    double t = wait(rng);
    while (t <= t_max) {
        jumps.push_back({t, label(rng)});
        t += wait(rng);
    }
    return jumps;
}

/// (S_{k_m} ... S_{k_1}) for chronologically ordered jumps.
inline CMatrix accumulated_jump(const ChannelSet& channels, const std::vector<Jump>& jumps) {
    const int d = 2 * channels.modes();
    CMatrix p = CMatrix::Identity(d, d);
    for (std::size_t j = 0; j < jumps.size(); ++j) {
        if (j > 0 && jumps[j].time < jumps[j - 1].time) {
            throw Error(ErrorCode::InvalidInput, "jumps must be chronologically ordered (index " +
                                                     std::to_string(j) + ")");
        }
        if (jumps[j].channel < 0 || static_cast<std::size_t>(jumps[j].channel) >= channels.size()) {
            throw Error(ErrorCode::InvalidInput, "jump channel index out of range");
        }
        p = channels[jumps[j].channel].generator.jump() * p;
    }
    return p;
}

inline MomentTensor trajectory_moment(const ChannelSet& channels, const std::vector<Jump>& jumps,
                                      const MomentTensor& mu0) {
    if (mu0.n != channels.modes()) throw Error(ErrorCode::Dimension, "moment tensor/channel mode count mismatch");
    return MomentTensor(mu0.n, mu0.order, apply_kron_power(accumulated_jump(channels, jumps), mu0.order, mu0.data));
}

namespace detail {

/// Running mean and sum of squared deviations, separately for re and im.
struct MomentStats {
    std::size_t count = 0;
    CVector mean;
    RVector m2_re;
    RVector m2_im;

    explicit MomentStats(Eigen::Index size)
        : mean(CVector::Zero(size)), m2_re(RVector::Zero(size)), m2_im(RVector::Zero(size)) {}

    void add(const CVector& x) {
        ++count;
        const CVector delta = x - mean;
        mean += delta / static_cast<double>(count);
        const CVector delta2 = x - mean;
        m2_re.array() += delta.real().array() * delta2.real().array();
        m2_im.array() += delta.imag().array() * delta2.imag().array();
    }

    // Chan et al. pairwise combination.
    static MomentStats merge(const MomentStats& a, const MomentStats& b) {
        if (a.count == 0) return b;
        if (b.count == 0) return a;
        MomentStats r(a.mean.size());
        r.count = a.count + b.count;
        const double na = static_cast<double>(a.count);
        const double nb = static_cast<double>(b.count);
        const double n = static_cast<double>(r.count);
        const CVector delta = b.mean - a.mean;
        r.mean = a.mean + delta * (nb / n);
        r.m2_re = a.m2_re + b.m2_re + (delta.real().array().square() * (na * nb / n)).matrix();
        r.m2_im = a.m2_im + b.m2_im + (delta.imag().array().square() * (na * nb / n)).matrix();
        return r;
    }
};

inline constexpr std::size_t kChunk = 4096;
inline constexpr double kMaxMcWork = 2e11;

inline std::vector<MomentStats> reduce_pairwise(std::vector<std::vector<MomentStats>> chunks) {
    while (chunks.size() > 1) {
        std::vector<std::vector<MomentStats>> next;
        for (std::size_t i = 0; i + 1 < chunks.size(); i += 2) {
            std::vector<MomentStats> merged;
            for (std::size_t g = 0; g < chunks[i].size(); ++g) {
                merged.push_back(MomentStats::merge(chunks[i][g], chunks[i + 1][g]));
            }
            next.push_back(std::move(merged));
        }
        if (chunks.size() % 2 == 1) next.push_back(std::move(chunks.back()));
        chunks = std::move(next);
    }
    return std::move(chunks.front());
}

}  // namespace detail

/// Trajectory averages of the moment tensor at every grid time. Results depend
/// only on (seed, trajectories, grid): chunks are fixed-size and merged in a
/// fixed pairwise order whatever the thread count.
inline std::vector<TrajectoryEstimate> estimate(const ChannelSet& channels, const MomentTensor& mu0,
                                                const McConfig& cfg) {
    if (cfg.trajectories < 1) throw Error(ErrorCode::Configuration, "trajectories must be >= 1");
    if (cfg.t_grid.empty() || cfg.t_grid.front() != 0.0) {
        throw Error(ErrorCode::Configuration, "Monte Carlo grid must start at 0");
    }
    for (std::size_t j = 1; j < cfg.t_grid.size(); ++j) {
        if (!(cfg.t_grid[j] > cfg.t_grid[j - 1])) {
            throw Error(ErrorCode::Configuration, "Monte Carlo grid must be strictly increasing");
        }
    }
    if (mu0.n != channels.modes()) throw Error(ErrorCode::Dimension, "moment tensor/channel mode count mismatch");
    if (!all_finite(mu0.data)) throw Error(ErrorCode::InvalidInput, "initial moments contain non-finite values");

    const int d = 2 * channels.modes();
    const double work = static_cast<double>(cfg.trajectories) * static_cast<double>(cfg.t_grid.size()) *
                        static_cast<double>(mu0.data.size()) * mu0.order * d;
    if (work > detail::kMaxMcWork) {
        throw Error(ErrorCode::Capacity, "Monte Carlo workload of " + std::to_string(work) +
                                             " multiply-adds exceeds the cap; reduce trajectories or order");
    }

    const double t_max = cfg.t_grid.back();
    const std::size_t n_grid = cfg.t_grid.size();
    const std::size_t n_chunks = (cfg.trajectories + detail::kChunk - 1) / detail::kChunk;
    std::vector<std::vector<detail::MomentStats>> chunks(
        n_chunks, std::vector<detail::MomentStats>(n_grid, detail::MomentStats(mu0.data.size())));

    auto run_chunk = [&](std::size_t c) {
        const std::size_t first = c * detail::kChunk;
        const std::size_t last = std::min(cfg.trajectories, first + detail::kChunk);
        auto& stats = chunks[c];
        for (std::size_t j = first; j < last; ++j) {
            McEngine rng = trajectory_engine(cfg.seed, j);
            const std::vector<Jump> jumps = sample_trajectory(channels, t_max, rng);
            CMatrix p = CMatrix::Identity(d, d);
            CVector value = mu0.data;
            std::size_t next_jump = 0;
            for (std::size_t g = 0; g < n_grid; ++g) {
                bool moved = false;
                while (next_jump < jumps.size() && jumps[next_jump].time <= cfg.t_grid[g]) {
                    p = channels[jumps[next_jump].channel].generator.jump() * p;
                    ++next_jump;
                    moved = true;
                }
                if (moved) value = apply_kron_power(p, mu0.order, mu0.data);
                stats[g].add(value);
            }
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(n_chunks)));
    if (threads == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < n_chunks; c += threads) run_chunk(c);
            });
        }
        for (auto& th : pool) th.join();
    }

    const std::vector<detail::MomentStats> total = detail::reduce_pairwise(std::move(chunks));
    std::vector<TrajectoryEstimate> out;
    out.reserve(n_grid);
    const double t_count = static_cast<double>(cfg.trajectories);
    const double denom = std::max(1.0, t_count - 1.0) * t_count;
    for (std::size_t g = 0; g < n_grid; ++g) {
        TrajectoryEstimate e;
        e.time = cfg.t_grid[g];
        e.mean = MomentTensor(mu0.n, mu0.order, total[g].mean);
        e.stderr_re = (total[g].m2_re.array().max(0.0) / denom).sqrt().matrix();
        e.stderr_im = (total[g].m2_im.array().max(0.0) / denom).sqrt().matrix();
        e.trajectories = cfg.trajectories;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace sqz
