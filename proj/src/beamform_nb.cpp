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

#include "risvcom/beamform_nb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace risvcom
{

namespace
{
constexpr double ln2 = 0.69314718055994530942;
}

GroupChannels group_channels(const CMatrix &H_agg, int N_r, int N_t, std::vector<int> sizes)
{
    if (H_agg.cols() != static_cast<Eigen::Index>(N_r) * N_t)
        throw Error(ErrorCode::SizeMismatch, "aggregated rows must have N_t * N_r entries");
    if (sizes.empty())
        sizes.assign(H_agg.rows(), 1);
    if (static_cast<Eigen::Index>(sizes.size()) != H_agg.rows())
        throw Error(ErrorCode::LengthMismatch, "one group size per aggregated row expected");
    GroupChannels gc;
    gc.sizes = std::move(sizes);
    gc.slices.reserve(H_agg.rows());
    for (Eigen::Index i = 0; i < H_agg.rows(); ++i)
        gc.slices.push_back(unvec(H_agg.row(i).transpose(), N_r, N_t));
    return gc;
}

EquivalentChannel make_equivalent(const GroupChannels &gc, const CMatrix &F, CsiSource source)
{
    EquivalentChannel ec;
    ec.F_used = F;
    ec.source = source;
    ec.slices.reserve(gc.slices.size());
    for (const auto &s : gc.slices)
        ec.slices.push_back(s * F);
    return ec;
}

CMatrix combine(const PhaseVector &theta, const std::vector<CMatrix> &slices)
{
    if (theta.size() != slices.size() || slices.empty())
        throw Error(ErrorCode::LengthMismatch, "phase vector length " + std::to_string(theta.size()) +
                                                   " does not match " + std::to_string(slices.size()) + " slices");
    CMatrix out = theta[0] * slices[0];
    for (std::size_t i = 1; i < slices.size(); ++i)
        out += theta[i] * slices[i];
    return out;
}

CMatrix effective_mimo(const PhaseVector &theta, const EquivalentChannel &ec)
{
    return combine(theta, ec.slices);
}

double mimo_rate(const CMatrix &H, double sigma2)
{
    if (!(sigma2 > 0.0))
        throw Error(ErrorCode::BadRange, "noise variance must be positive");
    CMatrix K = CMatrix::Identity(H.rows(), H.rows());
    K.noalias() += H * H.adjoint() / sigma2;
    return logdet_hpd(K) / ln2;
}

double rate_nb(const PhaseVector &theta, const EquivalentChannel &ec, double sigma2)
{
    return mimo_rate(effective_mimo(theta, ec), sigma2);
}

CMatrix opt_active_waterfill(const CMatrix &H_eff, double sigma2, double P_t)
{
    const SvdResult d = svd(H_eff);
    if (d.sigma.size() == 0 || !(d.sigma(0) > 0.0))
        throw Error(ErrorCode::ZeroChannel, "effective channel is identically zero");
    std::vector<double> gains(d.sigma.size());
    for (Eigen::Index r = 0; r < d.sigma.size(); ++r)
        gains[r] = d.sigma(r) * d.sigma(r);
    const auto p = water_fill(gains, sigma2, P_t);
    const Eigen::Index n_t = H_eff.cols();
    CMatrix F = CMatrix::Zero(n_t, n_t);
    for (Eigen::Index r = 0; r < d.sigma.size(); ++r)
        F.col(r) = d.v.col(r) * std::sqrt(p[r]);
    return F;
}

PhaseSubproblem phase_subproblem_matrices(int i, const PhaseVector &theta, const EquivalentChannel &ec, double sigma2)
{
    if (i < 0 || i >= ec.I())
        throw Error(ErrorCode::OutOfRange, "group index " + std::to_string(i) + " out of range");
    if (theta.size() != ec.slices.size())
        throw Error(ErrorCode::LengthMismatch, "phase vector length mismatch");
    const CMatrix &Hi = ec.slices[i];
    CMatrix rest = CMatrix::Zero(Hi.rows(), Hi.cols());
    for (int n = 0; n < ec.I(); ++n)
        if (n != i)
            rest += theta[n] * ec.slices[n];
    PhaseSubproblem sp;
    sp.A = CMatrix::Identity(Hi.rows(), Hi.rows()) + (Hi * Hi.adjoint() + rest * rest.adjoint()) / sigma2;
    sp.B = Hi * rest.adjoint() / sigma2;
    return sp;
}

double subproblem_rate(const PhaseSubproblem &sp, cd theta)
{
    const CMatrix X = sp.A + theta * sp.B + std::conj(theta) * sp.B.adjoint();
    return logdet_hpd(X) / ln2;
}

cd opt_theta_closed(const CMatrix &A, const CMatrix &B)
{
    const CMatrix C = A.llt().solve(B);
    const RVector s = Eigen::JacobiSVD<CMatrix>(C).singularValues();
    if (s.size() == 0 || s(0) == 0.0)
        return {1.0, 0.0};
    if (s.size() > 1 && s(1) > 1e-8 * s(0))
        throw Error(ErrorCode::RankTooHigh, "A^-1 B has numerical rank above one");
    // For a rank-one matrix the only nonzero eigenvalue is the trace
    const cd lambda = C.trace();
    if (std::abs(lambda) <= 1e-12)
        return {1.0, 0.0};
    return std::polar(1.0, -std::arg(lambda));
}

double phase_derivative(const PhaseSubproblem &sp, cd theta)
{
    const CMatrix X = sp.A + theta * sp.B + std::conj(theta) * sp.B.adjoint();
    // (j / ln2) tr(X^-1 (theta B - theta* B^H)) = -2 Im(theta tr(X^-1 B)) / ln2
    const cd t = X.llt().solve(sp.B).trace();
    return -2.0 * std::imag(theta * t) / ln2;
}

ThetaResult opt_theta_gradient(const PhaseSubproblem &sp, cd theta0, const GradientOptions &opt)
{
    double phi = std::arg(theta0);
    double f = subproblem_rate(sp, std::polar(1.0, phi));
    double d = phase_derivative(sp, std::polar(1.0, phi));
    double beta = opt.beta;
    int it = 0;
    for (; it < opt.max_iters; ++it)
    {
        if (std::abs(d) < opt.tol)
            break;
        double step = beta * d;
        double phi_new = phi;
        double f_new = f;
        bool accepted = false;
        for (int h = 0; h < 60; ++h)
        {
            phi_new = phi + step;
            f_new = subproblem_rate(sp, std::polar(1.0, phi_new));
            if (f_new >= f)
            {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            break;
        const double d_new = phase_derivative(sp, std::polar(1.0, phi_new));
        // Secant estimate of the inverse curvature, kept only while it points uphill
        const double s = phi_new - phi;
        const double y = d_new - d;
        if (s * y < 0.0)
            beta = std::clamp(-s / y, 1e-6, 1e3);
        else
            beta = std::min(2.0 * beta, 1e3);
        phi = phi_new;
        f = f_new;
        d = d_new;
    }
    return {std::polar(1.0, phi), it};
}

ThetaResult opt_theta_gradient(int i, const PhaseVector &theta, const EquivalentChannel &ec, double sigma2,
                               const GradientOptions &opt)
{
    return opt_theta_gradient(phase_subproblem_matrices(i, theta, ec, sigma2), theta.at(i), opt);
}

cd opt_theta_exhaustive(const PhaseSubproblem &sp, int bits)
{
    if (bits < 1 || bits > 20)
        throw Error(ErrorCode::BadRange, "phase resolution must be 1..20 bits");
    const int levels = 1 << bits;
    cd best{1.0, 0.0};
    double best_rate = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < levels; ++k)
    {
        const cd th = std::polar(1.0, 2.0 * pi * k / levels);
        const double r = subproblem_rate(sp, th);
        if (r > best_rate)
        {
            best_rate = r;
            best = th;
        }
    }
    return best;
}

cd opt_theta_exhaustive(int i, const PhaseVector &theta, const EquivalentChannel &ec, double sigma2, int bits)
{
    return opt_theta_exhaustive(phase_subproblem_matrices(i, theta, ec, sigma2), bits);
}

namespace
{

bool numerically_rank_one(const CMatrix &m)
{
    const RVector s = Eigen::JacobiSVD<CMatrix>(m).singularValues();
    return s.size() < 2 || s(1) <= 1e-10 * s(0);
}

} // namespace

NBSolution alternating_optimize(const GroupChannels &csi, double sigma2, double P_t, PhaseVector theta0,
                                const NBOptions &opt)
{
    const int I = csi.I();
    if (I < 1 || static_cast<int>(theta0.size()) != I)
        throw Error(ErrorCode::LengthMismatch, "initial phase vector must have one entry per group");
    for (auto &t : theta0)
        t /= std::abs(t);

    std::vector<bool> rank_one(I);
    for (int i = 0; i < I; ++i)
        rank_one[i] = numerically_rank_one(csi.slices[i]);
    if (opt.mode == PassiveMode::ClosedForm)
        for (int i = 0; i < I; ++i)
            if (csi.sizes[i] > 1 && csi.n_r() > 2)
                throw Error(ErrorCode::ConfigError,
                            "closed-form phases are unavailable for multi-element groups with N_r > 2");

    auto update = [&](const PhaseSubproblem &sp, int i, cd current) -> cd
    {
        switch (opt.mode)
        {
        case PassiveMode::Gradient:
            return opt_theta_gradient(sp, current, opt.gradient).theta;
        case PassiveMode::Exhaustive:
            return opt_theta_exhaustive(sp, opt.bits);
        case PassiveMode::ClosedForm:
            // Rank-two slices can only appear here for N_r <= 2; a fine grid stands in for the quartic
            return rank_one[i] ? opt_theta_closed(sp.A, sp.B) : opt_theta_exhaustive(sp, 12);
        case PassiveMode::Auto:
        default:
            if (rank_one[i])
                return opt_theta_closed(sp.A, sp.B);
            return I <= 64 ? opt_theta_exhaustive(sp, opt.bits) : opt_theta_gradient(sp, current, opt.gradient).theta;
        }
    };

    NBSolution sol;
    sol.theta = std::move(theta0);
    double rate = -std::numeric_limits<double>::infinity();
    double round_ref = 0.0;
    int inner = 0;
    for (int outer = 1; outer <= std::max(1, opt.max_outer); ++outer)
    {
        const CMatrix F = opt_active_waterfill(combine(sol.theta, csi.slices), sigma2, P_t);
        EquivalentChannel ec = make_equivalent(csi, F);
        const double r_f = rate_nb(sol.theta, ec, sigma2);
        if (outer == 1 || r_f >= rate)
        {
            sol.F = F;
            rate = r_f;
        }
        else
        {
            ec = make_equivalent(csi, sol.F);
        }
        if (outer == 1)
            round_ref = rate;
        sol.trace.push_back({outer, inner, true, rate});

        bool changed = false;
        for (int i = 0; i < I; ++i)
        {
            const PhaseSubproblem sp = phase_subproblem_matrices(i, sol.theta, ec, sigma2);
            const cd cand = update(sp, i, sol.theta[i]);
            ++inner;
            if (std::abs(cand - sol.theta[i]) > 1e-12)
            {
                const cd keep = sol.theta[i];
                sol.theta[i] = cand;
                const double r = rate_nb(sol.theta, ec, sigma2);
                if (r >= rate)
                {
                    rate = r;
                    changed = true;
                }
                else
                {
                    sol.theta[i] = keep;
                }
            }
            sol.trace.push_back({outer, inner, false, rate});
        }
        sol.outer_iterations = outer;
        if (!changed || rate - round_ref <= opt.rel_tol * std::abs(round_ref))
            break;
        round_ref = rate;
    }
    sol.rate = rate;
    sol.inner_iterations = inner;
    return sol;
}

PhaseVector random_phases(int I, RngStream &rng)
{
    PhaseVector out(I);
    for (auto &t : out)
        t = std::polar(1.0, rng.uniform_phase());
    return out;
}

double achievable_rate(double R, double T_e, double T_c)
{
    if (T_e < 0.0 || !(T_c > 0.0))
        throw Error(ErrorCode::BadRange, "need T_e >= 0 and T_c > 0");
    return T_e >= T_c ? 0.0 : (1.0 - T_e / T_c) * R;
}

} // namespace risvcom
