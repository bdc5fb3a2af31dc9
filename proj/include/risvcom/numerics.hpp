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

#ifndef RISVCOM_NUMERICS_HPP
#define RISVCOM_NUMERICS_HPP

#include "risvcom/error.hpp"

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace risvcom
{

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double speed_of_light = 3.0e8; // m/s, rounded as in the link budget

// Three-way tensor stored as a list of d1 x d2 frontal slices
struct CTensor3
{
    std::vector<CMatrix> slices;

    Eigen::Index d1() const { return slices.empty() ? 0 : slices.front().rows(); }
    Eigen::Index d2() const { return slices.empty() ? 0 : slices.front().cols(); }
    Eigen::Index d3() const { return static_cast<Eigen::Index>(slices.size()); }
};

// Reproducible random stream. The engine state is derived from (seed, stream) only,
// so every task of a parallel sweep can own an independent, replayable stream.
class RngStream
{
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    double normal();          // N(0, 1)
    double uniform();         // U[0, 1)
    double uniform_phase();   // U[0, 2pi)
    std::uint64_t next_u64(); // raw engine output

    // Derive a child stream; children of distinct tags never collide with each other
    RngStream split(std::uint64_t tag) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

CMatrix kron(const CMatrix &a, const CMatrix &b);

// Column-wise Kronecker product; throws ColumnMismatch
CMatrix khatri_rao(const CMatrix &a, const CMatrix &b);

// Column-stacking vectorization (column-major), returned as an n x 1 matrix
CMatrix vec(const CMatrix &a);
CMatrix unvec(const CMatrix &v, Eigen::Index rows, Eigen::Index cols);

// I.i.d. CSCG entries with total variance `variance` (variance/2 per real dimension)
CMatrix sample_cscg(double variance, Eigen::Index rows, Eigen::Index cols, RngStream &rng);

// Natural-log determinant of a Hermitian positive definite matrix (Cholesky based)
double logdet_hpd(const CMatrix &a);

struct SvdResult
{
    CMatrix u;      // full left singular vectors
    RVector sigma;  // descending, length min(rows, cols)
    CMatrix v;      // full right singular vectors
};

SvdResult svd(const CMatrix &a);

// Water-filling over parallel channels with power gains `gains`: maximizes
// sum log2(1 + g_r p_r / noise) subject to sum p_r = budget, p_r >= 0.
std::vector<double> water_fill(std::span<const double> gains, double noise, double budget);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

} // namespace risvcom

#endif
