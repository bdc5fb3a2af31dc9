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

#include "risvcom/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace risvcom
{

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

namespace
{
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream)
{
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(stream ^ 0xD1B54A32D192ED03ULL);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}
} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream))
{
}

double RngStream::normal() { return normal_(engine_); }
double RngStream::uniform() { return uniform_(engine_); }
double RngStream::uniform_phase() { return 2.0 * pi * uniform_(engine_); }
std::uint64_t RngStream::next_u64() { return engine_(); }

RngStream RngStream::split(std::uint64_t tag) const
{
    return RngStream(seed_, splitmix64(stream_ * 0x100000001B3ULL + splitmix64(tag)));
}

CMatrix kron(const CMatrix &a, const CMatrix &b)
{
    const Eigen::Index br = b.rows(), bc = b.cols();
    CMatrix out(a.rows() * br, a.cols() * bc);
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.block(i * br, j * bc, br, bc) = a(i, j) * b;
    return out;
}

CMatrix khatri_rao(const CMatrix &a, const CMatrix &b)
{
    if (a.cols() != b.cols())
        throw Error(ErrorCode::ColumnMismatch, "khatri_rao needs equal column counts, got " +
                                                   std::to_string(a.cols()) + " and " + std::to_string(b.cols()));
    const Eigen::Index br = b.rows();
    CMatrix out(a.rows() * br, a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.col(j).segment(i * br, br) = a(i, j) * b.col(j);
    return out;
}

CMatrix vec(const CMatrix &a)
{
    // Eigen storage is column-major, so the raw buffer already is vec(A)
    return Eigen::Map<const CMatrix>(a.data(), a.size(), 1);
}

CMatrix unvec(const CMatrix &v, Eigen::Index rows, Eigen::Index cols)
{
    if (v.size() != rows * cols)
        throw Error(ErrorCode::SizeMismatch, "unvec: " + std::to_string(v.size()) + " entries cannot fill " +
                                                 std::to_string(rows) + "x" + std::to_string(cols));
    CMatrix out(rows, cols);
    for (Eigen::Index k = 0; k < v.size(); ++k)
        out(k % rows, k / rows) = v(k);
    return out;
}

CMatrix sample_cscg(double variance, Eigen::Index rows, Eigen::Index cols, RngStream &rng)
{
    if (variance < 0.0 || !std::isfinite(variance))
        throw Error(ErrorCode::NegativeVariance, "variance must be finite and >= 0");
    const double s = std::sqrt(variance / 2.0);
    CMatrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            const double re = rng.normal();
            const double im = rng.normal();
            out(i, j) = cd(s * re, s * im);
        }
    return out;
}

double logdet_hpd(const CMatrix &a)
{
    if (a.rows() != a.cols())
        throw Error(ErrorCode::SizeMismatch, "logdet_hpd needs a square matrix");
    Eigen::LLT<CMatrix> llt(a);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotHPD, "Cholesky factorization failed");
    const auto diag = llt.matrixLLT().diagonal().real();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < diag.size(); ++i)
    {
        if (!(diag(i) > 0.0))
            throw Error(ErrorCode::NotHPD, "non-positive Cholesky pivot");
        acc += std::log(diag(i));
    }
    return 2.0 * acc;
}

SvdResult svd(const CMatrix &a)
{
    Eigen::JacobiSVD<CMatrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::NoConvergence, "Jacobi SVD did not converge");
    return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

std::vector<double> water_fill(std::span<const double> gains, double noise, double budget)
{
    if (!(budget > 0.0))
        throw Error(ErrorCode::BadRange, "water_fill budget must be positive");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double g : gains)
    {
        if (g < 0.0)
            throw Error(ErrorCode::BadRange, "water_fill gains must be non-negative");
        if (g > 0.0)
        {
            lo = std::min(lo, noise / g);
            hi = std::max(hi, noise / g);
        }
    }
    if (!std::isfinite(lo))
        throw Error(ErrorCode::AllZeroGains, "no stream has a positive gain");

    auto allocate = [&](double level, std::vector<double> &p)
    {
        double total = 0.0;
        for (std::size_t r = 0; r < gains.size(); ++r)
        {
            p[r] = gains[r] > 0.0 ? std::max(level - noise / gains[r], 0.0) : 0.0;
            total += p[r];
        }
        return total;
    };

    std::vector<double> p(gains.size(), 0.0);
    hi += budget;
    for (int it = 0; it < 200; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (allocate(mid, p) > budget)
            hi = mid;
        else
            lo = mid;
    }
    const double total = allocate(0.5 * (lo + hi), p);

    // Remove the last few ulps of bisection residue from the active set
    if (total > 0.0)
        for (double &x : p)
            x *= budget / total;
    return p;
}

} // namespace risvcom
