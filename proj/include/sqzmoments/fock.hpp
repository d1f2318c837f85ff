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

// Density-matrix reference for the jump master equation
//   d rho / dt = sum_k lambda_k (U_k rho U_k^+ - rho)
// on a truncated Fock space. U_k is obtained by exponentiating the truncated
// Hermitian quadratic Hamiltonian, so it is unitary on the truncated space and
// the truncated dynamics are exactly trace preserving; the only modelling error
// is the cutoff, monitored through the population of the top two levels.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "sqzmoments/common.hpp"
#include "sqzmoments/linalg.hpp"
#include "sqzmoments/moments.hpp"
#include "sqzmoments/states.hpp"
#include "sqzmoments/symplectic.hpp"

namespace sqz {

using SparseCMatrix = Eigen::SparseMatrix<Complex>;

inline constexpr double kLeakageThreshold = 1e-6;
inline constexpr double kSupportTailTol = 1e-6;  // same scale as the leakage threshold

/// n bosonic modes, each truncated to occupations 0..cutoff. Basis states are
/// ordered with mode 1 most significant.
class FockSpace {
  public:
    FockSpace(int n, int cutoff, const Budget& budget = Budget{}) : n_(n), cutoff_(cutoff) {
        if (n < 1) throw Error(ErrorCode::InvalidDimension, "mode count must be >= 1");
        if (cutoff < 1) throw Error(ErrorCode::InvalidDimension, "Fock cutoff must be >= 1");
        const std::size_t d = checked_pow(static_cast<std::size_t>(cutoff + 1), n, budget.fock_dim);
        if (d > budget.fock_dim) {
            throw Error(ErrorCode::Capacity, "Fock dimension (" + std::to_string(cutoff + 1) + ")^" +
                                                 std::to_string(n) + " exceeds the cap of " +
                                                 std::to_string(budget.fock_dim));
        }
        dim_ = static_cast<Eigen::Index>(d);
        ladders_.reserve(2 * n);
        for (int j = 0; j < n; ++j) ladders_.push_back(build_annihilation(j));
        for (int j = 0; j < n; ++j) ladders_.push_back(SparseCMatrix(ladders_[j].adjoint()));
    }

    int modes() const { return n_; }
    int cutoff() const { return cutoff_; }
    Eigen::Index dim() const { return dim_; }

    /// Truncated operator for component i of a (annihilators then creators).
    const SparseCMatrix& ladder(int i) const { return ladders_.at(i); }

    int occupation(Eigen::Index basis, int mode) const {
        Eigen::Index stride = 1;
        for (int m = n_ - 1; m > mode; --m) stride *= cutoff_ + 1;
        return static_cast<int>((basis / stride) % (cutoff_ + 1));
    }

    Eigen::Index basis_index(const std::vector<int>& occupations) const {
        Eigen::Index f = 0;
        for (int o : occupations) f = f * (cutoff_ + 1) + o;
        return f;
    }

  private:
    SparseCMatrix build_annihilation(int mode) const {
        std::vector<Eigen::Triplet<Complex>> trips;
        Eigen::Index stride = 1;
        for (int m = n_ - 1; m > mode; --m) stride *= cutoff_ + 1;
        for (Eigen::Index b = 0; b < dim_; ++b) {
            const int occ = occupation(b, mode);
            if (occ > 0) trips.emplace_back(b - stride, b, std::sqrt(static_cast<double>(occ)));
        }
        SparseCMatrix a(dim_, dim_);
        a.setFromTriplets(trips.begin(), trips.end());
        return a;
    }

    int n_;
    int cutoff_;
    Eigen::Index dim_ = 0;
    std::vector<SparseCMatrix> ladders_;
};

struct FockState {
    CMatrix rho;
    double leakage = 0.0;
    bool leakage_exceeded = false;
};

/// Population of basis states with any mode in the top two levels.
inline double leakage(const FockSpace& fs, const CMatrix& rho) {
    double total = 0.0;
    for (Eigen::Index b = 0; b < fs.dim(); ++b) {
        bool edge = false;
        for (int m = 0; m < fs.modes() && !edge; ++m) edge = fs.occupation(b, m) >= fs.cutoff() - 1;
        if (edge) total += rho(b, b).real();
    }
    return total;
}

inline FockState make_fock_state(const FockSpace& fs, CMatrix rho) {
    FockState s;
    s.leakage = leakage(fs, rho);
    s.leakage_exceeded = s.leakage > kLeakageThreshold;
    s.rho = std::move(rho);
    return s;
}

/// (1/2) sum_ij H_ij a_i a_j with truncated ladder operators.
inline CMatrix build_quadratic_hamiltonian(const FockSpace& fs, const QuadraticGenerator& gen) {
    if (gen.modes() != fs.modes()) {
        throw Error(ErrorCode::Configuration, "generator acts on " + std::to_string(gen.modes()) +
                                                  " modes, Fock space has " + std::to_string(fs.modes()));
    }
    const int d = 2 * fs.modes();
    SparseCMatrix acc(fs.dim(), fs.dim());
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const Complex h = gen.h()(i, j);
            if (h == Complex(0.0, 0.0)) continue;
            acc += SparseCMatrix((0.5 * h) * (fs.ladder(i) * fs.ladder(j)));
        }
    return CMatrix(acc);
}

/// exp(-i H_hat) of the truncated Hamiltonian.
inline CMatrix build_jump_unitary(const FockSpace& fs, const QuadraticGenerator& gen) {
    return mat_exp(Complex(0.0, -1.0) * build_quadratic_hamiltonian(fs, gen));
}

/// Rates and truncated unitaries for every channel.
struct FockModel {
    FockSpace space;
    std::vector<std::pair<double, CMatrix>> jumps;

    double total_rate() const {
        double r = 0.0;
        for (const auto& j : jumps) r += j.first;
        return r;
    }
};

inline FockModel build_fock_model(const FockSpace& fs, const ChannelSet& channels) {
    if (channels.modes() != fs.modes()) throw Error(ErrorCode::Configuration, "channel/Fock mode count mismatch");
    FockModel model{fs, {}};
    for (const auto& c : channels) model.jumps.emplace_back(c.rate, build_jump_unitary(fs, c.generator));
    return model;
}

namespace detail {
inline void check_rho_shape(const FockModel& model, const CMatrix& rho) {
    if (rho.rows() != model.space.dim() || rho.cols() != model.space.dim()) {
        throw Error(ErrorCode::Dimension, "density matrix is " + std::to_string(rho.rows()) + "x" +
                                              std::to_string(rho.cols()) + ", Fock space has dimension " +
                                              std::to_string(model.space.dim()));
    }
}
}  // namespace detail

/// sum_k lambda_k (U_k rho U_k^+ - rho).
inline CMatrix gksl_rhs(const FockModel& model, const CMatrix& rho) {
    detail::check_rho_shape(model, rho);
    CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
    for (const auto& [rate, u] : model.jumps) {
        out.noalias() += rate * (u * rho * u.adjoint());
        out -= rate * rho;
    }
    return out;
}

/// Lindblad form with L_k = sqrt(lambda_k) U_k; equals gksl_rhs when U_k is unitary.
inline CMatrix gksl_standard_form(const FockModel& model, const CMatrix& rho) {
    detail::check_rho_shape(model, rho);
    CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
    for (const auto& [rate, u] : model.jumps) {
        const CMatrix l = std::sqrt(rate) * u;
        const CMatrix ldl = l.adjoint() * l;
        out.noalias() += l * rho * l.adjoint();
        out.noalias() -= 0.5 * (ldl * rho);
        out.noalias() -= 0.5 * (rho * ldl);
    }
    return out;
}

/// Smallest per-mode level L such that each mode's marginal population above L
/// is at most kSupportTailTol.
inline int occupied_support(const FockSpace& fs, const CMatrix& rho) {
    int support = 0;
    for (int m = 0; m < fs.modes(); ++m) {
        std::vector<double> marginal(fs.cutoff() + 1, 0.0);
        for (Eigen::Index b = 0; b < fs.dim(); ++b) marginal[fs.occupation(b, m)] += rho(b, b).real();
        double tail = 0.0;
        int level = fs.cutoff();
        while (level > 0 && tail + marginal[level] <= kSupportTailTol) {
            tail += marginal[level];
            --level;
        }
        support = std::max(support, level);
    }
    return support;
}

/// tr(rho a_{i_1} ... a_{i_M}), products taken left to right with shared prefixes.
inline MomentTensor extract_moments(const FockSpace& fs, const FockState& state, int order) {
    if (order < 1) throw Error(ErrorCode::InvalidDimension, "moment order must be >= 1");
    if (state.rho.rows() != fs.dim() || state.rho.cols() != fs.dim()) {
        throw Error(ErrorCode::Dimension, "density matrix does not match the Fock space");
    }
    const int support = occupied_support(fs, state.rho);
    if (fs.cutoff() < support + order + 2) {
        throw Error(ErrorCode::Margin, "cutoff " + std::to_string(fs.cutoff()) + " leaves less than M + 2 = " +
                                           std::to_string(order + 2) + " levels above the occupied support " +
                                           std::to_string(support));
    }
    MomentTensor mu(fs.modes(), order);
    const int d = 2 * fs.modes();
    std::function<void(const CMatrix&, int, Eigen::Index)> descend = [&](const CMatrix& prefix, int depth,
                                                                         Eigen::Index flat) {
        for (int i = 0; i < d; ++i) {
            const Eigen::Index f = flat * d + i;
            if (depth + 1 == order) {
                // tr(X a_i) = sum over nonzeros (r, c) of a_i of X(c, r) a_i(r, c).
                Complex tr = 0.0;
                const SparseCMatrix& a = fs.ladder(i);
                for (Eigen::Index c = 0; c < a.outerSize(); ++c)
                    for (SparseCMatrix::InnerIterator it(a, c); it; ++it) tr += prefix(c, it.row()) * it.value();
                mu.data(f) = tr;
            } else {
                const CMatrix next = prefix * fs.ladder(i);
                descend(next, depth + 1, f);
            }
        }
    };
    descend(state.rho, 0, 0);
    return mu;
}

/// Truncated, renormalized initial density matrix for a state spec.
inline FockState prepare_state(const FockSpace& fs, const StateSpec& spec) {
    spec.validate();
    if (spec.n != fs.modes()) throw Error(ErrorCode::Configuration, "state/Fock mode count mismatch");
    CVector psi = CVector::Zero(fs.dim());
    if (spec.kind == StateKind::Fock) {
        for (int o : spec.occupations) {
            if (o > fs.cutoff() - 2) {
                throw Error(ErrorCode::Margin, "occupation " + std::to_string(o) + " too close to the cutoff " +
                                                   std::to_string(fs.cutoff()));
            }
        }
        psi(fs.basis_index(spec.occupations)) = 1.0;
    } else {
        // Product of truncated coherent amplitudes e^{-|a|^2/2} a^k / sqrt(k!).
        std::vector<std::vector<Complex>> amps(fs.modes());
        for (int m = 0; m < fs.modes(); ++m) {
            const Complex a = spec.alpha.empty() ? Complex(0.0, 0.0) : spec.alpha[m];
            auto& v = amps[m];
            v.resize(fs.cutoff() + 1);
            v[0] = std::exp(-0.5 * std::norm(a));
            for (int k = 1; k <= fs.cutoff(); ++k) v[k] = v[k - 1] * a / std::sqrt(static_cast<double>(k));
        }
        for (Eigen::Index b = 0; b < fs.dim(); ++b) {
            Complex c = 1.0;
            for (int m = 0; m < fs.modes(); ++m) c *= amps[m][fs.occupation(b, m)];
            psi(b) = c;
        }
        psi /= psi.norm();
        if (spec.kind == StateKind::GaussianPure) {
            psi = build_jump_unitary(fs, *spec.squeeze) * psi;
            psi /= psi.norm();
        }
    }
    return make_fock_state(fs, psi * psi.adjoint());
}

struct IntegrateOptions {
    std::vector<int> orders = {1, 2};  // moments watched by the step-halving test
    bool strict = false;
    double halving_tol = 1e-8;
    int max_halvings = 14;
    bool cross_check = true;      // exact exp-action comparison when D^2 <= cross_check_dim
    std::size_t cross_check_dim = 4096;
    double cross_check_tol = 1e-9;
};

struct FockTrajectory {
    std::vector<double> times;
    std::vector<FockState> states;
    double step = 0.0;                                              // accepted RK4 step
    double cross_check_deviation = std::numeric_limits<double>::quiet_NaN();  // max |rho_rk4 - rho_exact|
};

namespace detail {

inline CMatrix rk4_advance(const FockModel& model, CMatrix rho, double dt, double h_max) {
    const long steps = std::max(1L, static_cast<long>(std::ceil(dt / h_max - 1e-12)));
    const double h = dt / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
        const CMatrix k1 = gksl_rhs(model, rho);
        const CMatrix k2 = gksl_rhs(model, rho + 0.5 * h * k1);
        const CMatrix k3 = gksl_rhs(model, rho + 0.5 * h * k2);
        const CMatrix k4 = gksl_rhs(model, rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return rho;
}

inline std::vector<CMatrix> rk4_run(const FockModel& model, const CMatrix& rho0, const std::vector<double>& grid,
                                    double h_max) {
    std::vector<CMatrix> out;
    out.reserve(grid.size());
    out.push_back(rk4_advance(model, rho0, grid.front(), h_max));
    for (std::size_t j = 1; j < grid.size(); ++j) {
        out.push_back(rk4_advance(model, out.back(), grid[j] - grid[j - 1], h_max));
    }
    return out;
}

inline double watched_moment_change(const FockSpace& fs, const std::vector<CMatrix>& coarse,
                                    const std::vector<CMatrix>& fine, const std::vector<int>& orders) {
    double worst = 0.0;
    for (std::size_t j = 0; j < coarse.size(); ++j) {
        for (int order : orders) {
            // Moment change only; the margin check belongs to the final extraction.
            const IndexScheme sc(fs.modes(), order);
            for (Eigen::Index f = 0; f < sc.size(); ++f) {
                const auto idx = sc.multi(f);
                CMatrix xa = coarse[j];
                CMatrix xb = fine[j];
                for (int i : idx) {
                    xa = xa * fs.ladder(i);
                    xb = xb * fs.ladder(i);
                }
                const Complex ma = xa.trace();
                const Complex mb = xb.trace();
                worst = std::max(worst, std::abs(ma - mb) / std::max(1.0, std::abs(mb)));
            }
        }
    }
    return worst;
}

}  // namespace detail

/// exp(L t) rho by a scaled Taylor series of the superoperator action. ||L|| is
/// at most 2 * sum lambda_k in trace norm, so a handful of steps suffice.
inline CMatrix evolve_exact(const FockModel& model, const CMatrix& rho, double t) {
    detail::check_rho_shape(model, rho);
    if (t == 0.0) return rho;
    const double bound = 2.0 * model.total_rate() * t;
    const long steps = std::max(1L, static_cast<long>(std::ceil(bound / 0.5)));
    const double h = t / static_cast<double>(steps);
    CMatrix x = rho;
    for (long s = 0; s < steps; ++s) {
        CMatrix term = x;
        CMatrix sum = x;
        int k = 1;
        for (; k <= 60; ++k) {
            term = gksl_rhs(model, term) * (h / k);
            sum += term;
            if (term.cwiseAbs().maxCoeff() <= 1e-17 * std::max(1.0, sum.cwiseAbs().maxCoeff())) break;
        }
        x = std::move(sum);
    }
    return x;
}

/// RK4 on the master equation with step halving until the watched moments move
/// by less than `halving_tol` (relative to max(1, |moment|)).
inline FockTrajectory integrate(const FockModel& model, const FockState& rho0, const std::vector<double>& grid,
                                const IntegrateOptions& opts = {}) {
    detail::check_rho_shape(model, rho0.rho);
    if (grid.empty()) throw Error(ErrorCode::Configuration, "time grid is empty");
    if (grid.front() != 0.0) throw Error(ErrorCode::Configuration, "Fock integration grid must start at 0");
    for (std::size_t j = 1; j < grid.size(); ++j) {
        if (!(grid[j] > grid[j - 1])) throw Error(ErrorCode::Configuration, "time grid must be strictly increasing");
    }
    const FockSpace& fs = model.space;
    const double rate = model.total_rate();

    double min_dt = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < grid.size(); ++j) min_dt = std::min(min_dt, grid[j] - grid[j - 1]);
    double h = std::min(min_dt, rate > 0.0 ? 0.1 / rate : min_dt);
    if (!std::isfinite(h)) h = 1.0;

    std::vector<CMatrix> coarse = detail::rk4_run(model, rho0.rho, grid, h);
    std::vector<CMatrix> fine;
    double change = std::numeric_limits<double>::infinity();
    int halvings = 0;
    for (; halvings < opts.max_halvings; ++halvings) {
        fine = detail::rk4_run(model, rho0.rho, grid, h / 2);
        change = detail::watched_moment_change(fs, coarse, fine, opts.orders);
        h /= 2;
        if (change < opts.halving_tol) break;
        coarse = std::move(fine);
    }
    if (halvings == opts.max_halvings) {
        std::ostringstream os;
        os << "RK4 step halving did not settle: last change " << change << " at h = " << h;
        throw Error(ErrorCode::Accuracy, os.str());
    }

    // Exact reference when the superoperator is small; refine further until
    // the accepted trajectory also matches it.
    const auto d2 = static_cast<std::size_t>(fs.dim()) * static_cast<std::size_t>(fs.dim());
    double deviation = std::numeric_limits<double>::quiet_NaN();
    if (opts.cross_check && d2 <= opts.cross_check_dim) {
        std::vector<CMatrix> exact;
        CMatrix x = rho0.rho;
        double t_prev = 0.0;
        for (double t : grid) {
            x = evolve_exact(model, x, t - t_prev);
            t_prev = t;
            exact.push_back(x);
        }
        const auto worst_gap = [&] {
            double w = 0.0;
            for (std::size_t j = 0; j < grid.size(); ++j) w = std::max(w, (exact[j] - fine[j]).cwiseAbs().maxCoeff());
            return w;
        };
        deviation = worst_gap();
        while (deviation > opts.cross_check_tol && halvings < opts.max_halvings) {
            h /= 2;
            ++halvings;
            fine = detail::rk4_run(model, rho0.rho, grid, h);
            deviation = worst_gap();
        }
        if (deviation > opts.cross_check_tol) {
            std::ostringstream os;
            os << "RK4 and exact exponential disagree by " << deviation << " (tolerance " << opts.cross_check_tol
               << ")";
            throw Error(ErrorCode::Accuracy, os.str());
        }
    }

    FockTrajectory out;
    out.times = grid;
    out.step = h;
    out.cross_check_deviation = deviation;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        FockState s = make_fock_state(fs, std::move(fine[j]));
        if (opts.strict && s.leakage_exceeded) {
            std::ostringstream os;
            os << "leakage " << s.leakage << " exceeds " << kLeakageThreshold << " at t = " << grid[j]
               << "; raise the cutoff";
            throw Error(ErrorCode::Truncation, os.str());
        }
        out.states.push_back(std::move(s));
    }
    return out;
}

}  // namespace sqz
