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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "sqzmoments/moments.hpp"
#include "sqzmoments/states.hpp"
#include "support.hpp"

namespace {

using namespace sqz;
using sqz::testing::max_abs;
using sqz::testing::random_generator;

const Complex I(0.0, 1.0);

// exp(exp(-0.5) - 1): squeeze r = 0.5, lambda = 1, t = 1, mu0 = (1, 1)
constexpr double kSqueezeClosedForm = 0.6747120037358997;
// exp(-2)
constexpr double kExpMinus2 = 0.1353352832366127;

ChannelSet single(const CMatrix& h, double rate = 1.0) {
    const int n = static_cast<int>(h.rows() / 2);
    return ChannelSet({Channel{rate, validate_generator(n, h)}});
}

MomentTensor random_tensor(int n, int m, std::mt19937_64& rng) {
    MomentTensor mu(n, m);
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < mu.data.size(); ++i) mu.data(i) = Complex(g(rng), g(rng));
    return mu;
}

double rel_err(const CVector& a, const CVector& b) { return max_abs(a - b) / std::max(1.0, max_abs(b)); }

TEST(ChannelSet, Validation) {
    const QuadraticGenerator g1 = validate_generator(1, squeeze_h(1, 0, 0.1));
    const QuadraticGenerator g2 = validate_generator(2, CMatrix::Zero(4, 4));
    EXPECT_THROW(ChannelSet({}), Error);
    EXPECT_THROW(ChannelSet({Channel{0.0, g1}}), Error);
    EXPECT_THROW(ChannelSet({Channel{-1.0, g1}}), Error);
    EXPECT_THROW(ChannelSet({Channel{std::nan(""), g1}}), Error);
    EXPECT_THROW(ChannelSet({Channel{1.0, g1}, Channel{1.0, g2}}), Error);
    const ChannelSet ok({Channel{1.5, g1}, Channel{0.5, g1}});
    EXPECT_DOUBLE_EQ(ok.total_rate(), 2.0);
    EXPECT_EQ(ok.modes(), 1);
}

TEST(MomentTensor, SizeChecked) {
    EXPECT_THROW(MomentTensor(1, 2, CVector::Zero(3)), Error);
    EXPECT_EQ(MomentTensor(2, 2).data.size(), 16);
}

TEST(Propagate, TimeZeroIsIdentity) {
    std::mt19937_64 rng(1);
    const ChannelSet ch = single(squeeze_h(1, 0, 0.4));
    const MomentTensor mu = random_tensor(1, 2, rng);
    const MomentGenerator g = build_generator(ch, 2);
    EXPECT_EQ(propagate(g, mu, 0.0).data, mu.data);
}

TEST(Propagate, RotationClosedForm) {
    for (double w : {M_PI / 2, M_PI}) {
        for (double lt : {0.25, 1.0, 2.0}) {
            const MomentGenerator g = build_generator(single(rotation_h(1, 0, w)), 1);
            MomentTensor mu(1, 1);
            mu.data << Complex(0.7, -0.2), Complex(0.7, 0.2);
            const Complex want = std::exp(lt * (std::exp(-I * w) - 1.0)) * mu.data(0);
            const MomentTensor out = propagate(g, mu, lt);
            EXPECT_LE(std::abs(out.data(0) - want), 1e-12) << "w=" << w << " lt=" << lt;
            EXPECT_LE(std::abs(out.data(1) - std::conj(want)), 1e-12);
        }
    }
}

TEST(Propagate, RotationPiAtUnitTime) {
    const MomentGenerator g = build_generator(single(rotation_h(1, 0, M_PI)), 1);
    MomentTensor mu(1, 1);
    mu.data << 1.0, 1.0;
    EXPECT_NEAR(propagate(g, mu, 1.0).data(0).real(), kExpMinus2, 1e-12);
}

TEST(Propagate, CoherentQuarterTurn) {
    const MomentGenerator g = build_generator(single(rotation_h(1, 0, M_PI / 2)), 1);
    MomentTensor mu(1, 1);
    mu.data << 0.5, 0.5;
    const Complex out = propagate(g, mu, 1.0).data(0);
    EXPECT_NEAR(out.real(), 0.09938305517320649, 1e-12);
    EXPECT_NEAR(out.imag(), -0.1547799378265561, 1e-12);
}

TEST(Propagate, SqueezeClosedForm) {
    const MomentGenerator g = build_generator(single(squeeze_h(1, 0, 0.5)), 1);
    MomentTensor mu(1, 1);
    mu.data << 1.0, 1.0;
    const MomentTensor out = propagate(g, mu, 1.0);
    EXPECT_NEAR(out.data(0).real(), kSqueezeClosedForm, 1e-12);
    EXPECT_NEAR(out.data(1).real(), kSqueezeClosedForm, 1e-12);
    EXPECT_NEAR(out.data(0).imag(), 0.0, 1e-14);
}

TEST(Propagate, ZeroGeneratorFixedPoint) {
    std::mt19937_64 rng(2);
    for (int m = 1; m <= 3; ++m) {
        const MomentTensor mu = random_tensor(2, m, rng);
        const ChannelSet ch({Channel{1.0, validate_generator(2, CMatrix::Zero(4, 4))},
                             Channel{2.5, validate_generator(2, CMatrix::Zero(4, 4))}});
        const MomentGenerator g = build_generator(ch, m);
        EXPECT_LE(max_abs(propagate(g, mu, 1.7).data - mu.data), 1e-14 * max_abs(mu.data));
    }
}

TEST(Propagate, Semigroup) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 1 + trial % 2;
        const int m = 1 + trial % 3;
        const ChannelSet ch({Channel{0.7, random_generator(n, rng, 0.5)}, Channel{0.4, random_generator(n, rng, 0.5)}});
        const MomentGenerator g = build_generator(ch, m);
        const MomentTensor mu = random_tensor(n, m, rng);
        const double t1 = u(rng), t2 = u(rng);
        const CVector two_step = propagate(g, propagate(g, mu, t1), t2).data;
        const CVector one_step = propagate(g, mu, t1 + t2).data;
        EXPECT_LE(rel_err(two_step, one_step), 1e-10);
    }
}

TEST(Propagate, PermutationEquivariance) {
    std::mt19937_64 rng(4);
    std::vector<int> sigma = {0, 1, 2};
    const ChannelSet ch({Channel{1.0, random_generator(1, rng, 1.0)}, Channel{0.5, random_generator(1, rng, 1.0)}});
    const MomentGenerator g = build_generator(ch, 3);
    const MomentTensor mu = random_tensor(1, 3, rng);
    do {
        const CVector lhs = propagate(g, permute_slots(mu, sigma), 0.8).data;
        const CVector rhs = permute_slots(propagate(g, mu, 0.8), sigma).data;
        EXPECT_LE(max_abs(lhs - rhs), 1e-10 * std::max(1.0, max_abs(rhs)));
    } while (std::next_permutation(sigma.begin(), sigma.end()));
}

TEST(Propagate, CcrAndRealityPreserved) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 1 + trial % 2;
        const ChannelSet ch({Channel{1.0, random_generator(n, rng, 0.6)}, Channel{0.3, random_generator(n, rng, 0.6)}});
        std::vector<Complex> alpha(n);
        for (auto& a : alpha) a = Complex(0.3 * (trial + 1) / 6.0, -0.1);
        const auto [mu1, mu2] = first_two_moments(StateSpec::coherent(alpha));
        ASSERT_LE(ccr_residual(mu2), 1e-15);
        const MomentGenerator g2 = build_generator(ch, 2);
        const MomentGenerator g3 = build_generator(ch, 3);
        const MomentTensor mu3 = gaussian_moments(StateSpec::coherent(alpha), 3);
        for (double t : {0.3, 1.0, 2.0}) {
            const MomentTensor out2 = propagate(g2, mu2, t);
            EXPECT_LE(ccr_residual(out2), 1e-8);
            EXPECT_LE(conjugation_reversal_residual(out2), 1e-8);
            EXPECT_LE(conjugation_reversal_residual(propagate(g3, mu3, t)), 1e-8);
        }
    }
}

TEST(Propagate, CorollaryMatchesGeneric) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 1 + trial % 2;
        const ChannelSet ch({Channel{0.8, random_generator(n, rng)}, Channel{1.1, random_generator(n, rng)}});
        const MomentTensor m1 = random_tensor(n, 1, rng);
        const MomentTensor m2 = random_tensor(n, 2, rng);
        const auto [a, b] = first_second_moments(ch, m1, m2, 0.9);
        const CVector r1 = propagate(build_generator(ch, 1), m1, 0.9).data;
        const CVector r2 = propagate(build_generator(ch, 2), m2, 0.9).data;
        EXPECT_LE(rel_err(a.data, r1), 1e-12);
        EXPECT_LE(rel_err(b.data, r2), 1e-12);
    }
}

TEST(Propagate, MatrixFreeMatchesDense) {
    std::mt19937_64 rng(7);
    Budget tiny;
    tiny.dense_dim = 1;
    for (int m = 1; m <= 4; ++m) {
        const int n = m <= 2 ? 2 : 1;
        const ChannelSet ch({Channel{1.0, random_generator(n, rng, 0.8)}, Channel{0.6, random_generator(n, rng, 0.8)}});
        const MomentTensor mu = random_tensor(n, m, rng);
        const MomentGenerator dense = build_generator(ch, m);
        const MomentGenerator free = build_generator(ch, m, tiny);
        ASSERT_TRUE(dense.is_dense());
        ASSERT_FALSE(free.is_dense());
        EXPECT_LE(max_abs(free.apply(mu.data) - dense.apply(mu.data)), 1e-12 * (1 + max_abs(dense.apply(mu.data))));
        for (double t : {0.2, 1.5}) {
            EXPECT_LE(rel_err(propagate(free, mu, t).data, propagate(dense, mu, t).data), 1e-10);
        }
    }
}

TEST(Propagate, DenseThresholdAt4096) {
    const ChannelSet ch = single(squeeze_h(1, 0, 0.1));
    EXPECT_TRUE(build_generator(ch, 12).is_dense());
    EXPECT_FALSE(build_generator(ch, 13).is_dense());
}

TEST(Propagate, MatrixFreeHighOrderVacuumRotation) {
    // Rotation on vacuum-normal-ordered tensors: <a^k a+^k> pattern. Use the
    // closed form for a diagonal jump: each component scales by
    // exp(lambda t (phase - 1)) with phase = prod of per-slot phases.
    const ChannelSet ch = single(rotation_h(1, 0, 0.4));
    const int m = 13;
    std::mt19937_64 rng(8);
    const MomentTensor mu = random_tensor(1, m, rng);
    const MomentTensor out = propagate(build_generator(ch, m), mu, 0.5);
    const IndexScheme sc = mu.scheme();
    double worst = 0.0;
    for (Eigen::Index f = 0; f < sc.size(); f += 97) {
        int net = 0;
        for (int i : sc.multi(f)) net += i == 0 ? -1 : 1;
        const Complex phase = std::exp(I * (0.4 * net));
        const Complex want = std::exp(0.5 * (phase - 1.0)) * mu.data(f);
        worst = std::max(worst, std::abs(out.data(f) - want));
    }
    EXPECT_LE(worst, 1e-11);
}

TEST(Propagate, OverflowNamesTime) {
    const ChannelSet ch = single(squeeze_h(1, 0, 3.0));
    const MomentGenerator g = build_generator(ch, 1);
    MomentTensor mu(1, 1);
    mu.data << 1.0, 1.0;
    std::vector<double> grid(61);
    std::iota(grid.begin(), grid.end(), 0.0);
    try {
        propagate_series(g, mu, grid);
        FAIL() << "expected range error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Range);
        EXPECT_NE(std::string(e.what()).find("t = "), std::string::npos) << e.what();
    }
}

TEST(Propagate, InputErrors) {
    const MomentGenerator g = build_generator(single(squeeze_h(1, 0, 0.1)), 2);
    EXPECT_THROW(propagate(g, MomentTensor(1, 1), 1.0), Error);
    EXPECT_THROW(propagate(g, MomentTensor(1, 2), -1.0), Error);
    MomentTensor bad(1, 2);
    bad.data(0) = std::nan("");
    EXPECT_THROW(propagate(g, bad, 1.0), Error);
    EXPECT_THROW(propagate_series(g, MomentTensor(1, 2), {0.0, 0.5, 0.5}), Error);
    EXPECT_THROW(propagate_series(g, MomentTensor(1, 2), {}), Error);
}

TEST(Propagate, SeriesMatchesPointwise) {
    std::mt19937_64 rng(9);
    const ChannelSet ch({Channel{1.0, random_generator(1, rng)}, Channel{1.0, random_generator(1, rng)}});
    const MomentGenerator g = build_generator(ch, 2);
    const MomentTensor mu = random_tensor(1, 2, rng);
    const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0, 1.6};
    const auto series = propagate_series(g, mu, grid);
    ASSERT_EQ(series.size(), grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        EXPECT_LE(rel_err(series[j].data, propagate(g, mu, grid[j]).data), 1e-12);
    }
}

TEST(Structure, PermuteSlotsAndResiduals) {
    MomentTensor mu(1, 2);
    mu.data << 1.0, 2.0, 3.0, 4.0;
    const MomentTensor sw = permute_slots(mu, {1, 0});
    EXPECT_EQ(sw.data(1), Complex(3.0));
    EXPECT_EQ(sw.data(2), Complex(2.0));
    EXPECT_THROW(permute_slots(mu, {0, 0}), Error);
    MomentTensor vac(1, 2);
    vac.data << 0.0, 1.0, 0.0, 0.0;
    EXPECT_EQ(ccr_residual(vac), 0.0);
    EXPECT_EQ(conjugation_reversal_residual(vac), 0.0);
    vac.data(1) = 2.0;
    EXPECT_DOUBLE_EQ(ccr_residual(vac), 1.0);
}

}  // namespace
