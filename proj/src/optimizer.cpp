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

#include "risvcom/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace risvcom
{

RVector project_box_sum(const RVector &x, const RVector &lo, const RVector &hi, double total)
{
    if (lo.size() != x.size() || hi.size() != x.size())
        throw Error(ErrorCode::SizeMismatch, "bounds must match the variable length");
    if ((lo.array() > hi.array()).any() || lo.sum() > total)
        throw Error(ErrorCode::InfeasibleRegion, "box and sum bounds admit no point");
    auto clipped = [&](double tau) { return (x.array() - tau).max(lo.array()).min(hi.array()).matrix().eval(); };
    RVector y = clipped(0.0);
    if (y.sum() <= total)
        return y;
    // sum(clip(x - tau)) is non-increasing in tau; find where it meets the budget
    double a = 0.0;
    double b = (x - lo).maxCoeff();
    for (int it = 0; it < 200 && b - a > 1e-16 * (1.0 + std::abs(b)); ++it)
    {
        const double mid = 0.5 * (a + b);
        if (clipped(mid).sum() > total)
            a = mid;
        else
            b = mid;
    }
    return clipped(b);
}

RMatrix project_simplex_columns(const RMatrix &rho)
{
    RMatrix out(rho.rows(), rho.cols());
    std::vector<double> u(rho.rows());
    for (Eigen::Index n = 0; n < rho.cols(); ++n)
    {
        for (Eigen::Index k = 0; k < rho.rows(); ++k)
            u[k] = rho(k, n);
        std::sort(u.begin(), u.end(), std::greater<>());
        double cum = 0.0;
        double tau = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j)
        {
            cum += u[j];
            const double t = (cum - 1.0) / static_cast<double>(j + 1);
            if (u[j] - t > 0.0)
                tau = t;
        }
        for (Eigen::Index k = 0; k < rho.rows(); ++k)
            out(k, n) = std::max(rho(k, n) - tau, 0.0);
    }
    return out;
}

namespace
{

// Projection of (a, r) onto the wedge {0 <= p <= c * rho}
inline void wedge(double a, double r, double c, double &p_out, double &r_out)
{
    if (a <= 0.0)
    {
        p_out = 0.0;
        r_out = std::max(r, 0.0);
    }
    else if (a <= c * r)
    {
        p_out = a;
        r_out = r;
    }
    else
    {
        const double s = std::max((c * a + r) / (c * c + 1.0), 0.0);
        p_out = c * s;
        r_out = s;
    }
}

// Column multiplier nu such that sum_k rho_k(nu) = 1, rho_k being the wedge projection
// of (a_k, b_k - nu). The sum is piecewise linear in nu, so the root is found exactly
// from the sorted breakpoints.
double column_multiplier(const double *a, const double *b, int K, double c, std::vector<double> &bp)
{
    auto total = [&](double nu)
    {
        double s = 0.0, p, r;
        for (int k = 0; k < K; ++k)
        {
            wedge(a[k], b[k] - nu, c, p, r);
            s += r;
        }
        return s;
    };
    bp.clear();
    for (int k = 0; k < K; ++k)
    {
        if (a[k] <= 0.0)
            bp.push_back(b[k]);
        else
        {
            bp.push_back(b[k] - a[k] / c);
            bp.push_back(b[k] + c * a[k]);
        }
    }
    std::sort(bp.begin(), bp.end());
    double prev_nu = std::numeric_limits<double>::quiet_NaN();
    double prev_s = 0.0;
    for (double t : bp)
    {
        const double s = total(t);
        if (s <= 1.0)
        {
            if (std::isnan(prev_nu))
            {
                // Left of every breakpoint each entry has slope -1
                double sb = 0.0;
                for (int k = 0; k < K; ++k)
                    sb += b[k];
                return (sb - 1.0) / K;
            }
            if (prev_s == s)
                return t;
            return prev_nu + (prev_s - 1.0) * (t - prev_nu) / (prev_s - s);
        }
        prev_nu = t;
        prev_s = s;
    }
    return bp.back(); // unreachable: the sum vanishes past the last breakpoint
}

} // namespace

void project_coupled(RMatrix &p, RMatrix &rho, double p_max, double p_total)
{
    if (p.rows() != rho.rows() || p.cols() != rho.cols())
        throw Error(ErrorCode::SizeMismatch, "power and indicator blocks differ in shape");
    if (!(p_max > 0.0) || p_total < 0.0)
        throw Error(ErrorCode::InfeasibleRegion, "coupled region needs p_max > 0 and p_total >= 0");
    const int K = static_cast<int>(p.rows());
    const int N = static_cast<int>(p.cols());
    const RMatrix a0 = p;
    const RMatrix b0 = rho;
    std::vector<double> a(K), b(K), bp;
    RMatrix p_out(K, N), r_out(K, N);

    auto solve = [&](double mu)
    {
        double sum = 0.0;
        for (int n = 0; n < N; ++n)
        {
            for (int k = 0; k < K; ++k)
            {
                a[k] = a0(k, n) - mu;
                b[k] = b0(k, n);
            }
            const double nu = column_multiplier(a.data(), b.data(), K, p_max, bp);
            for (int k = 0; k < K; ++k)
            {
                wedge(a[k], b[k] - nu, p_max, p_out(k, n), r_out(k, n));
                sum += p_out(k, n);
            }
        }
        return sum;
    };

    const double s0 = solve(0.0);
    if (s0 > p_total)
    {
        // The total is piecewise linear and non-increasing in mu, so Illinois-style
        // regula falsi settles on the active piece in a few steps.
        double lo = 0.0, f_lo = s0 - p_total;
        double hi = std::max(a0.maxCoeff(), 0.0);
        double f_hi = solve(hi) - p_total;
        int side = 0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it)
        {
            double mid = lo + f_lo * (hi - lo) / (f_lo - f_hi);
            if (!(mid > lo && mid < hi))
                mid = 0.5 * (lo + hi);
            const double f_mid = solve(mid) - p_total;
            if (f_mid > 0.0)
            {
                lo = mid;
                f_lo = f_mid;
                if (side == -1)
                    f_hi *= 0.5;
                side = -1;
            }
            else
            {
                hi = mid;
                f_hi = f_mid;
                if (f_mid >= -1e-15 * (1.0 + p_total))
                    break;
                if (side == 1)
                    f_lo *= 0.5;
                side = 1;
            }
        }
        solve(hi);
    }
    // Large inputs leave rounding residue of order eps * |input| on the multiplier shifts
    rho = r_out.cwiseMax(0.0).cwiseMin(1.0);
    p = p_out.cwiseMax(0.0).cwiseMin(p_max * rho);
}

RVector stack_allocation(const RMatrix &p, const RMatrix &rho)
{
    RVector x(p.size() + rho.size());
    x.head(p.size()) = Eigen::Map<const RVector>(p.data(), p.size());
    x.tail(rho.size()) = Eigen::Map<const RVector>(rho.data(), rho.size());
    return x;
}

void unstack_allocation(const RVector &x, int K, int N, RMatrix &p, RMatrix &rho)
{
    const Eigen::Index n = static_cast<Eigen::Index>(K) * N;
    if (x.size() != 2 * n)
        throw Error(ErrorCode::SizeMismatch, "stacked allocation has the wrong length");
    p = Eigen::Map<const RMatrix>(x.data(), K, N);
    rho = Eigen::Map<const RMatrix>(x.data() + n, K, N);
}

RVector FeasibleRegion::project(const RVector &x) const
{
    RMatrix p, rho;
    unstack_allocation(x, K, N, p, rho);
    if (coupled)
    {
        project_coupled(p, rho, p_max, p_total);
    }
    else
    {
        const Eigen::Index n = p.size();
        const RVector flat = Eigen::Map<const RVector>(p.data(), n);
        const RVector proj = project_box_sum(flat, RVector::Zero(n), RVector::Constant(n, p_max), p_total);
        p = Eigen::Map<const RMatrix>(proj.data(), K, N);
        rho = project_simplex_columns(rho);
    }
    return stack_allocation(p, rho);
}

double FeasibleRegion::residual(const RVector &x) const
{
    RMatrix p, rho;
    unstack_allocation(x, K, N, p, rho);
    double worst = 0.0;
    worst = std::max(worst, -p.minCoeff());
    worst = std::max(worst, p.maxCoeff() - p_max);
    worst = std::max(worst, p.sum() - p_total);
    worst = std::max(worst, -rho.minCoeff());
    worst = std::max(worst, rho.maxCoeff() - 1.0);
    for (int n = 0; n < N; ++n)
        worst = std::max(worst, std::abs(rho.col(n).sum() - 1.0));
    if (coupled)
        worst = std::max(worst, (p - p_max * rho).maxCoeff());
    return std::max(worst, 0.0);
}

void FeasibleRegion::check_nonempty() const
{
    if (K < 1 || N < 1 || p_max < 0.0 || p_total < 0.0)
        throw Error(ErrorCode::InfeasibleRegion, "region dimensions or bounds are invalid");
}

RVector pga_maximize(const ObjectiveFn &f, const GradientFn &grad, const ProjectionFn &project, const RVector &x0,
                     SolveReport &report, const PgaOptions &opt)
{
    report = SolveReport{};
    RVector x = project(x0);
    double fx = f(x);
    RVector g = grad(x);
    double step = 1.0;
    report.objective_trace.push_back(fx);

    for (int it = 0; it < opt.max_iters; ++it)
    {
        report.gradient_mapping_norm = (project(x + g) - x).norm();
        if (report.gradient_mapping_norm < opt.tol * (1.0 + std::abs(fx)))
            break;

        const RVector d = project(x + step * g) - x;
        const double slope = g.dot(d);
        if (!(slope > 0.0))
            break;
        double t = 1.0;
        RVector x_new;
        double f_new = fx;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls)
        {
            x_new = x + t * d;
            f_new = f(x_new);
            if (f_new >= fx + opt.armijo_slope * t * slope)
            {
                accepted = true;
                break;
            }
            t *= opt.shrink;
        }
        if (!accepted)
        {
            report.line_search_stall = true;
            break;
        }
        const RVector g_new = grad(x_new);
        const RVector s = x_new - x;
        const RVector y = g_new - g;
        const double sy = s.dot(y);
        // Barzilai-Borwein step for ascent: s's / (-s'y) when the curvature is negative
        step = sy < 0.0 ? std::clamp(s.squaredNorm() / -sy, opt.step_min, opt.step_max) : opt.step_max;
        x = x_new;
        fx = f_new;
        g = g_new;
        report.iterations = it + 1;
        report.objective_trace.push_back(fx);
        report.step_trace.push_back(t * step);
    }
    report.objective = fx;
    return x;
}

BruteForceResult brute_force_alloc(const BroadbandScenario &scen, const BeamState &beams, int levels)
{
    const int K = scen.K;
    const int N = scen.N;
    if (levels < 2)
        throw Error(ErrorCode::BadRange, "power grid needs at least two levels");
    const double combos = std::pow(double(K), N) * std::pow(double(levels), N);
    if (combos > 1e7)
        throw Error(ErrorCode::TooLarge, "brute force would visit " + std::to_string(combos) + " allocations");

    // Beams are fixed, so each (k, n) rate only needs the eigenvalues of H H^H
    std::vector<std::vector<RVector>> eig(K, std::vector<RVector>(N));
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
        {
            const CMatrix Hc = effective_bb(k, n, beams, scen);
            Eigen::SelfAdjointEigenSolver<CMatrix> es(Hc * Hc.adjoint(), Eigen::EigenvaluesOnly);
            eig[k][n] = es.eigenvalues().cwiseMax(0.0);
        }

    BruteForceResult best;
    best.throughput = -1.0;
    std::vector<int> owner(N, 0), level(N, 0);
    Allocation a{RMatrix::Zero(K, N), RMatrix::Zero(K, N)};
    const double step = scen.P_max / (levels - 1);
    long long count = 0;
    std::vector<double> per_vue(K);
    for (;;)
    {
        std::fill(level.begin(), level.end(), 0);
        for (;;)
        {
            a.rho.setZero();
            a.p.setZero();
            double used = 0.0;
            for (int n = 0; n < N; ++n)
            {
                a.rho(owner[n], n) = 1.0;
                a.p(owner[n], n) = level[n] * step;
                used += level[n] * step;
            }
            ++count;
            if (used <= scen.P_tot * (1.0 + 1e-12))
            {
                const RMatrix interference = ici_all(a.p, scen);
                std::fill(per_vue.begin(), per_vue.end(), 0.0);
                double total = 0.0;
                for (int n = 0; n < N; ++n)
                {
                    const int k = owner[n];
                    const double pw = a.p(k, n);
                    if (pw <= 0.0)
                        continue;
                    const double scale = pw / (interference(k, n) + scen.noise());
                    double c = 0.0;
                    for (Eigen::Index r = 0; r < eig[k][n].size(); ++r)
                        c += std::log2(1.0 + scale * eig[k][n](r));
                    c *= scen.delta_f;
                    per_vue[k] += c;
                    total += c;
                }
                bool qos_ok = true;
                for (int k = 0; k < K; ++k)
                    qos_ok = qos_ok && per_vue[k] >= scen.C_min * (1.0 - 1e-9);
                if (qos_ok && total > best.throughput)
                {
                    best.throughput = total;
                    best.alloc = a;
                }
            }
            int pos = N - 1;
            while (pos >= 0 && ++level[pos] == levels)
                level[pos--] = 0;
            if (pos < 0)
                break;
        }
        int pos = N - 1;
        while (pos >= 0 && ++owner[pos] == K)
            owner[pos--] = 0;
        if (pos < 0)
            break;
    }
    best.evaluated = count;
    if (best.throughput < 0.0)
        throw Error(ErrorCode::QoSInfeasible, "no grid allocation meets the constraints");
    return best;
}

} // namespace risvcom
