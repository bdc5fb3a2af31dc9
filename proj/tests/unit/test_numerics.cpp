// SPDX-License-Identifier: Apache-2.0
//
// risvcom - RIS-aided vehicular MIMO estimation and beamforming library
// Copyright (C) 2026 The risvcom authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "check.hpp"
#include "oracles.hpp"

#include "risvcom/numerics.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace risvcom;
using namespace risvcom::testing;

namespace
{

CMatrix random_matrix(Eigen::Index r, Eigen::Index c, RngStream &rng)
{
    return sample_cscg(1.0, r, c, rng);
}

} // namespace

TEST_CASE("kron of identities and scalars", "[numerics]")
{
    CHECK(kron(CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)).isApprox(CMatrix::Identity(6, 6)));
    RngStream rng(1, 0);
    const CMatrix B = random_matrix(3, 2, rng);
    CMatrix two(1, 1);
    two(0, 0) = 2.0;
    CHECK((kron(two, B) - 2.0 * B).norm() == 0.0);
}

TEST_CASE("kron matches the index formula", "[numerics]")
{
    RngStream rng(2, 0);
    for (int trial = 0; trial < 10; ++trial)
    {
        const CMatrix A = random_matrix(2, 3, rng), B = random_matrix(2, 2, rng);
        CHECK((kron(A, B) - kron_by_index(A, B)).norm() < 1e-14);
    }
}

TEST_CASE("khatri_rao columns and errors", "[numerics]")
{
    RngStream rng(3, 0);
    const CMatrix a = random_matrix(3, 1, rng), b = random_matrix(2, 1, rng);
    CHECK((khatri_rao(a, b) - kron(a, b)).norm() == 0.0);

    CMatrix sel = CMatrix::Zero(4, 2);
    sel(0, 0) = 1.0;
    sel(3, 1) = 1.0;
    CHECK(khatri_rao(CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)) == sel);

    const CMatrix A = random_matrix(3, 4, rng), B = random_matrix(2, 4, rng);
    const CMatrix K = khatri_rao(A, B);
    REQUIRE(K.rows() == 6);
    for (int j = 0; j < 4; ++j)
        CHECK((K.col(j) - kron_by_index(A.col(j), B.col(j))).norm() < 1e-14);

    CHECK(error_code_of([&] { khatri_rao(A, random_matrix(2, 3, rng)); }) == ErrorCode::ColumnMismatch);
}

TEST_CASE("mixed-product identities", "[numerics]")
{
    RngStream rng(4, 0);
    for (int trial = 0; trial < 10; ++trial)
    {
        const CMatrix A = random_matrix(2, 3, rng), B = random_matrix(3, 4, rng);
        const CMatrix C = random_matrix(3, 2, rng), D = random_matrix(2, 4, rng);
        CHECK((khatri_rao(A * B, C * D) - kron(A, C) * khatri_rao(B, D)).norm() < 1e-10);
        const CMatrix D2 = random_matrix(2, 2, rng);
        CHECK((kron(A * B, C * D2) - kron(A, C) * kron(B, D2)).norm() < 1e-10);
    }
}

TEST_CASE("vec is column-major and invertible", "[numerics]")
{
    CMatrix A(2, 2);
    A << 1.0, 2.0, 3.0, 4.0;
    const CMatrix v = vec(A);
    CHECK(v(0, 0) == cd(1.0));
    CHECK(v(1, 0) == cd(3.0));
    CHECK(v(2, 0) == cd(2.0));
    CHECK(v(3, 0) == cd(4.0));

    RngStream rng(5, 0);
    const CMatrix R = random_matrix(3, 5, rng);
    CHECK(unvec(vec(R), 3, 5) == R);
    CHECK(error_code_of([&] { unvec(vec(R), 4, 4); }) == ErrorCode::SizeMismatch);

    const CMatrix P = random_matrix(2, 2, rng), X = random_matrix(2, 2, rng), Q = random_matrix(2, 2, rng);
    CHECK((vec(P * X * Q) - kron(Q.transpose(), P) * vec(X)).norm() < 1e-12);
}

TEST_CASE("sample_cscg variance, determinism and stream independence", "[numerics]")
{
    RngStream zero(6, 0);
    CHECK(sample_cscg(0.0, 3, 3, zero).norm() == 0.0);
    CHECK(error_code_of([&] { sample_cscg(-1.0, 1, 1, zero); }) == ErrorCode::NegativeVariance);

    RngStream rng(7, 0);
    const CMatrix s = sample_cscg(2.0, 100000, 1, rng);
    const double var = s.squaredNorm() / 1e5;
    CHECK(std::abs(var - 2.0) < 0.05);
    const double re_var = s.real().squaredNorm() / 1e5;
    CHECK(std::abs(re_var - 1.0) < 0.03);

    RngStream a(8, 3), b(8, 3);
    CHECK(sample_cscg(1.0, 4, 4, a) == sample_cscg(1.0, 4, 4, b));

    RngStream c(9, 1), d(9, 2);
    const CMatrix x = sample_cscg(1.0, 100000, 1, c), y = sample_cscg(1.0, 100000, 1, d);
    const double rho = std::abs(x.col(0).dot(y.col(0))) / (x.norm() * y.norm());
    CHECK(rho < 0.02);
}

TEST_CASE("logdet_hpd", "[numerics]")
{
    CHECK(logdet_hpd(CMatrix::Identity(4, 4)) == 0.0);
    CMatrix D = CMatrix::Zero(2, 2);
    D(0, 0) = 2.0;
    D(1, 1) = 3.0;
    CHECK(std::abs(logdet_hpd(D) - std::log(6.0)) < 1e-14);

    RngStream rng(10, 0);
    for (int trial = 0; trial < 10; ++trial)
    {
        const CMatrix X = random_matrix(4, 3, rng);
        const CMatrix A = CMatrix::Identity(4, 4) + X * X.adjoint();
        CHECK(rel_err(logdet_hpd(A), logdet_by_eigen(A)) < 1e-10);

        const CMatrix Y = random_matrix(2, 2, rng);
        const CMatrix B = CMatrix::Identity(2, 2) + Y * Y.adjoint();
        CMatrix blk = CMatrix::Zero(6, 6);
        blk.topLeftCorner(4, 4) = A;
        blk.bottomRightCorner(2, 2) = B;
        CHECK(std::abs(logdet_hpd(A) + logdet_hpd(B) - logdet_hpd(blk)) < 1e-10);
    }
    CMatrix bad = CMatrix::Identity(2, 2);
    bad(1, 1) = -1.0;
    CHECK(error_code_of([&] { logdet_hpd(bad); }) == ErrorCode::NotHPD);
}

TEST_CASE("svd", "[numerics]")
{
    CMatrix D = CMatrix::Zero(3, 3);
    D(0, 0) = -1.0;
    D(1, 1) = 3.0;
    D(2, 2) = 2.0;
    const SvdResult s = svd(D);
    CHECK(std::abs(s.sigma(0) - 3.0) < 1e-12);
    CHECK(std::abs(s.sigma(1) - 2.0) < 1e-12);
    CHECK(std::abs(s.sigma(2) - 1.0) < 1e-12);

    RngStream rng(11, 0);
    const CMatrix u = random_matrix(3, 1, rng), v = random_matrix(2, 1, rng);
    const SvdResult r1 = svd(u * v.adjoint());
    CHECK(std::abs(r1.sigma(0) - u.norm() * v.norm()) < 1e-12);
    CHECK(r1.sigma(1) < 1e-12);

    const CMatrix A = random_matrix(4, 3, rng);
    const SvdResult f = svd(A);
    CMatrix S = CMatrix::Zero(4, 3);
    for (int i = 0; i < 3; ++i)
        S(i, i) = f.sigma(i);
    CHECK((f.u * S * f.v.adjoint() - A).norm() / A.norm() < 1e-9);
    CHECK((f.u.adjoint() * f.u - CMatrix::Identity(4, 4)).norm() < 1e-10);
    CHECK((f.v.adjoint() * f.v - CMatrix::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("water_fill", "[numerics]")
{
    const double one_gain[] = {3.0};
    CHECK(std::abs(water_fill(one_gain, 1.0, 2.5)[0] - 2.5) < 1e-12);

    const double equal[] = {2.0, 2.0};
    const auto p_eq = water_fill(equal, 1.0, 1.0);
    CHECK(std::abs(p_eq[0] - 0.5) < 1e-9);
    CHECK(std::abs(p_eq[1] - 0.5) < 1e-9);

    const double g[] = {4.0, 1.0};
    const auto p = water_fill(g, 1.0, 1.0);
    const double rate = std::log2(1.0 + 4.0 * p[0]) + std::log2(1.0 + p[1]);
    CHECK(std::abs(rate - two_stream_grid_best(4.0, 1.0, 1.0, 1.0, 100000)) < 1e-4);

    const double zeros[] = {0.0, 0.0};
    CHECK(error_code_of([&] { water_fill(zeros, 1.0, 1.0); }) == ErrorCode::AllZeroGains);
}

TEST_CASE("water_fill satisfies the KKT conditions", "[numerics][property]")
{
    RngStream rng(12, 0);
    for (int trial = 0; trial < 50; ++trial)
    {
        std::vector<double> gains(5);
        for (auto &x : gains)
            x = std::exp(3.0 * rng.normal());
        const double noise = 0.5, budget = 0.1 + rng.uniform() * 10.0;
        const auto p = water_fill(gains, noise, budget);
        double sum = 0.0, level = -1.0;
        for (std::size_t r = 0; r < p.size(); ++r)
        {
            CHECK(p[r] >= 0.0);
            sum += p[r];
            if (p[r] > 0.0)
                level = p[r] + noise / gains[r];
        }
        CHECK(std::abs(sum - budget) <= 1e-9 * budget);
        REQUIRE(level > 0.0);
        for (std::size_t r = 0; r < p.size(); ++r)
        {
            if (p[r] > 0.0)
                CHECK(std::abs(p[r] + noise / gains[r] - level) < 1e-8 * level);
            else
                CHECK(noise / gains[r] >= level * (1.0 - 1e-9));
        }
    }
}
