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

// Independent reference computations shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "sqzmoments/fock.hpp"
#include "sqzmoments/linalg.hpp"
#include "sqzmoments/moments.hpp"
#include "sqzmoments/states.hpp"
#include "sqzmoments/symplectic.hpp"

namespace sqz::testing {

inline CMatrix random_matrix(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
    return a;
}

/// Valid by construction: symmetrize, then tilde-symmetrize, then rescale to
/// ||H||_inf = target.
inline CMatrix random_generator_h(int n, std::mt19937_64& rng, double target) {
    const CMatrix a = random_matrix(2 * n, rng);
    CMatrix h = 0.5 * (a + a.transpose());
    h = 0.5 * (h + tilde_mat(h));
    return h * (target / inf_norm(h));
}

inline QuadraticGenerator random_generator(int n, std::mt19937_64& rng, double max_norm = 2.0) {
    std::uniform_real_distribution<double> u(0.1, max_norm);
    return validate_generator(n, random_generator_h(n, rng, u(rng)));
}

/// Plain truncated power series, no scaling.
inline CMatrix taylor_exp(const CMatrix& a, int terms) {
    CMatrix sum = CMatrix::Identity(a.rows(), a.cols());
    CMatrix term = sum;
    for (int k = 1; k < terms; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

/// Kronecker product by explicit index arithmetic.
inline CMatrix kron_naive(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index k = 0; k < b.rows(); ++k)
                for (Eigen::Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

/// Wick sum by enumerating every permutation and keeping the involutions:
/// fixed points are singletons, 2-cycles are contractions C(i_min, i_max).
inline Complex brute_force_wick(const GaussianData& g, const std::vector<int>& comps) {
    const int m = static_cast<int>(comps.size());
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    Complex total = 0.0;
    do {
        bool involution = true;
        for (int p = 0; p < m && involution; ++p) involution = perm[perm[p]] == p;
        if (!involution) continue;
        Complex term = 1.0;
        for (int p = 0; p < m; ++p) {
            if (perm[p] == p) {
                term *= g.mean(comps[p]);
            } else if (perm[p] > p) {
                term *= g.cov(comps[p], comps[perm[p]]);
            }
        }
        total += term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

/// tr(rho a_{i1} ... a_{iM}) with dense products, no prefix sharing.
inline Complex dense_trace_moment(const FockSpace& fs, const CMatrix& rho, const std::vector<int>& comps) {
    CMatrix prod = rho;
    for (int i : comps) prod = prod * CMatrix(fs.ladder(i));
    return prod.trace();
}

inline double max_abs(const CVector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Random density matrix concentrated on low Fock levels.
inline CMatrix random_density(Eigen::Index dim, std::mt19937_64& rng, int rank = 3) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix psi(dim, rank);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (int r = 0; r < rank; ++r) psi(i, r) = Complex(g(rng), g(rng)) * std::exp(-0.3 * static_cast<double>(i));
    CMatrix rho = psi * psi.adjoint();
    return rho / rho.trace();
}

}  // namespace sqz::testing
