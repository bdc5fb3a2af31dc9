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

#include "risvcom/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace risvcom
{

std::vector<int> GroupingScheme::membership(int b) const
{
    std::vector<int> out(M, -1);
    const auto &groups = blocks.at(b);
    for (int k = 0; k < static_cast<int>(groups.size()); ++k)
        for (int m = groups[k].begin; m < groups[k].end; ++m)
            out[m] = k;
    return out;
}

GroupingScheme GroupingScheme::prefix(int I) const
{
    if (I < 1 || I > this->I())
        throw Error(ErrorCode::BadRange, "prefix length " + std::to_string(I) + " outside 1.." + std::to_string(this->I()));
    GroupingScheme out;
    out.M = M;
    out.blocks.assign(blocks.begin(), blocks.begin() + I);
    out.split.assign(split.begin(), split.begin() + I);
    return out;
}

GroupingScheme build_grouping(int M, int I_max)
{
    if (M < 1 || I_max < 1 || I_max > M)
        throw Error(ErrorCode::BadRange, "need 1 <= I_max <= M, got I_max=" + std::to_string(I_max) +
                                             " M=" + std::to_string(M));
    GroupingScheme gs;
    gs.M = M;
    gs.blocks.push_back({Range{0, M}});
    gs.split.push_back(-1);
    while (gs.I() < I_max)
    {
        const auto &prev = gs.blocks.back();
        int j = 0;
        for (int k = 1; k < static_cast<int>(prev.size()); ++k)
            if (prev[k].size() > prev[j].size())
                j = k;
        std::vector<Range> next;
        next.reserve(prev.size() + 1);
        next.insert(next.end(), prev.begin(), prev.begin() + j);
        const int first = (prev[j].size() + 1) / 2;
        next.push_back({prev[j].begin, prev[j].begin + first});
        next.push_back({prev[j].begin + first, prev[j].end});
        next.insert(next.end(), prev.begin() + j + 1, prev.end());
        gs.blocks.push_back(std::move(next));
        gs.split.push_back(j);
    }
    return gs;
}

CMatrix dft_pilot(int N_t, int T, double P_u)
{
    if (N_t < 1 || T < N_t)
        throw Error(ErrorCode::BadRange, "pilot needs T >= N_t >= 1");
    if (!(P_u > 0.0))
        throw Error(ErrorCode::BadRange, "pilot power must be positive");
    const double amp = std::sqrt(P_u / N_t);
    CMatrix X(N_t, T);
    for (int n = 0; n < N_t; ++n)
        for (int t = 0; t < T; ++t)
            X(n, t) = amp * std::polar(1.0, -2.0 * pi * n * t / T);
    return X;
}

namespace
{

// Psi(i, k) = phase that block i applies to final group k
// Only the first `rows` blocks are stacked when rows >= 0
CMatrix stack_psi(const std::vector<CVector> &psi, const GroupingScheme &gs, int I, int rows = -1)
{
    const auto &final_groups = gs.blocks.at(I - 1);
    if (rows < 0)
        rows = I;
    CMatrix Psi(rows, I);
    for (int i = 0; i < rows; ++i)
    {
        const auto member = gs.membership(i);
        for (int k = 0; k < I; ++k)
            Psi(i, k) = psi[i](member[final_groups[k].begin]);
    }
    return Psi;
}

cd draw_phase(RngStream &rng, int bits)
{
    double phi = rng.uniform_phase();
    if (bits > 0)
    {
        const double levels = std::ldexp(1.0, bits);
        phi = 2.0 * pi * std::floor(phi / (2.0 * pi) * levels) / levels;
    }
    return std::polar(1.0, phi);
}

// Inverse energy of [Q; r^T] as a function of the new last row r. With z spanning the
// null space of Q and Q+ its pseudo-inverse,
//   ||[Q; r^T]^-1||_F^2 = ||Q+||_F^2 + (1 + ||r^T Q+||^2) / |r^T z|^2.
class RowScore
{
public:
    explicit RowScore(const CMatrix &Q)
    {
        Eigen::JacobiSVD<CMatrix> svd(Q, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const RVector sv = svd.singularValues();
        const Eigen::Index n = Q.rows();
        z_ = svd.matrixV().col(n);
        pinv_ = svd.matrixV().leftCols(n) * sv.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
        base_ = sv.cwiseInverse().squaredNorm();
    }

    double operator()(const CVector &r) const
    {
        const double pivot = std::norm(r.dot(z_.conjugate()));
        if (!(pivot > 0.0))
            return std::numeric_limits<double>::infinity();
        return base_ + (1.0 + (r.transpose() * pinv_).squaredNorm()) / pivot;
    }

private:
    CVector z_;
    CMatrix pinv_;
    double base_ = 0.0;
};

// Greedy coordinate search on the phases of the new row against the prefix inverse energy
void refine_row(CVector &row, double &score, const RowScore &energy, const PilotOptions &opt)
{
    const int levels = opt.psi_bits > 0 ? (1 << opt.psi_bits) : opt.refine_levels;
    CVector trial = row;
    for (int sweep = 0; sweep < opt.refine_sweeps; ++sweep)
    {
        bool moved = false;
        for (Eigen::Index k = 0; k < trial.size(); ++k)
        {
            cd keep = trial(k);
            for (int a = 0; a < levels; ++a)
            {
                trial(k) = std::polar(1.0, 2.0 * pi * a / levels);
                const double v = energy(trial);
                if (v < score * (1.0 - 1e-12))
                {
                    score = v;
                    keep = trial(k);
                    moved = true;
                }
            }
            trial(k) = keep;
        }
        if (!moved)
            break;
    }
    row = trial;
}

} // namespace

PilotSchedule build_pilots(const GroupingScheme &grouping, int T, int N_t, RngStream &rng, const PilotOptions &opt)
{
    if (grouping.I() < 1)
        throw Error(ErrorCode::BadRange, "grouping has no blocks");
    PilotSchedule s;
    s.X = dft_pilot(N_t, T, opt.P_u);
    s.X_pinv = s.X.adjoint() * (s.X * s.X.adjoint()).inverse();
    s.grouping = grouping;

    s.psi.push_back(CVector::Constant(1, draw_phase(rng, opt.psi_bits)));
    for (int i = 1; i < grouping.I(); ++i)
    {
        const int j = grouping.split[i];
        // Expanding along the duplicated column gives
        // |det Psi^i| = |psi_{j+1} - psi_j| * |det Psi^{i-1}|, so only that pivot can fail.
        CVector best;
        double best_score = std::numeric_limits<double>::infinity();
        int accepted = 0;
        CVector row(i + 1);
        // Rows of the earlier blocks, mapped onto the i + 1 groups of block i
        const RowScore energy(stack_psi(s.psi, grouping, i + 1, i));
        for (int attempt = 0; attempt < opt.max_redraws && accepted < opt.candidates; ++attempt)
        {
            for (int k = 0; k <= i; ++k)
                row(k) = draw_phase(rng, opt.psi_bits);
            if (std::abs(row(j + 1) - row(j)) < opt.pivot_floor)
                continue;
            ++accepted;
            const double score = energy(row);
            if (score < best_score)
            {
                best_score = score;
                best = row;
            }
        }
        if (accepted == 0)
        {
            row(j + 1) = -row(j);
            best = row;
            ++s.fallbacks;
        }
        if (accepted > 0 && i + 1 <= opt.refine_max_rows)
            refine_row(best, best_score, energy, opt);
        s.psi.push_back(best);
    }

    s.Psi = stack_psi(s.psi, grouping, grouping.I());
    Eigen::FullPivLU<CMatrix> lu(s.Psi);
    if (!lu.isInvertible())
        throw Error(ErrorCode::SingularPsi, "stacked group-phase matrix is singular");
    return s;
}

CMatrix PilotSchedule::element_phases() const
{
    const int I = this->I();
    CMatrix out(I, grouping.M);
    for (int i = 0; i < I; ++i)
    {
        const auto member = grouping.membership(i);
        for (int m = 0; m < grouping.M; ++m)
            out(i, m) = psi[i](member[m]);
    }
    return out;
}

CMatrix psi_prefix(const PilotSchedule &sched, int I)
{
    if (I < 1 || I > sched.I())
        throw Error(ErrorCode::BadRange, "prefix outside schedule");
    return stack_psi(sched.psi, sched.grouping, I);
}

CMatrix cascaded_channel(const CMatrix &H, const CMatrix &G)
{
    return khatri_rao(H.transpose(), G).transpose();
}

CMatrix aggregate_truth(const CMatrix &cascaded, const std::vector<Range> &groups)
{
    CMatrix out(static_cast<Eigen::Index>(groups.size()), cascaded.cols());
    for (std::size_t k = 0; k < groups.size(); ++k)
        out.row(k) = cascaded.middleRows(groups[k].begin, groups[k].size()).colwise().sum();
    return out;
}

CMatrix expand_to_elements(const CMatrix &agg, const std::vector<Range> &groups, int M)
{
    if (agg.rows() != static_cast<Eigen::Index>(groups.size()))
        throw Error(ErrorCode::SizeMismatch, "one aggregated row per group expected");
    CMatrix out(M, agg.cols());
    for (std::size_t k = 0; k < groups.size(); ++k)
        for (int m = groups[k].begin; m < groups[k].end; ++m)
            out.row(m) = agg.row(k) / static_cast<double>(groups[k].size());
    return out;
}

CTensor3 simulate_training_rx(const CMatrix &H, const CMatrix &G, const PilotSchedule &sched, double sigma2,
                              RngStream &rng)
{
    if (H.rows() != G.cols() || H.rows() != sched.grouping.M || H.cols() != sched.X.rows())
        throw Error(ErrorCode::SizeMismatch, "channel and pilot dimensions disagree");
    const CMatrix theta = sched.element_phases();
    const CMatrix HX = H * sched.X;
    CTensor3 Y;
    Y.slices.reserve(sched.I());
    for (int i = 0; i < sched.I(); ++i)
    {
        const CMatrix GPhi = G * theta.row(i).transpose().asDiagonal();
        Y.slices.push_back(GPhi * HX + sample_cscg(sigma2, G.rows(), sched.X.cols(), rng));
    }
    return Y;
}

CTensor3 simulate_training_rx(const ChannelSet &cs, const PilotSchedule &sched, double sigma2, RngStream &rng)
{
    return simulate_training_rx(cs.H(), cs.G, sched, sigma2, rng);
}

CMatrix unfold(const CTensor3 &Y)
{
    CMatrix out(Y.d3(), Y.d1() * Y.d2());
    for (Eigen::Index i = 0; i < Y.d3(); ++i)
        out.row(i) = vec(Y.slices[i]).transpose();
    return out;
}

CMatrix unfold_and_equalize(const CTensor3 &Y, const CMatrix &X)
{
    if (X.cols() < X.rows() || Y.d2() != X.cols())
        throw Error(ErrorCode::RankDeficientPilot, "pilot must be N_t x T with T >= N_t matching the tensor");
    const CMatrix gram = X * X.adjoint();
    Eigen::FullPivLU<CMatrix> lu(gram);
    if (lu.rank() < X.rows())
        throw Error(ErrorCode::RankDeficientPilot, "pilot matrix does not have full row rank");
    const CMatrix X_pinv = X.adjoint() * lu.inverse();
    CMatrix out(Y.d3(), Y.d1() * X.rows());
    for (Eigen::Index i = 0; i < Y.d3(); ++i)
        out.row(i) = vec(Y.slices[i] * X_pinv).transpose();
    return out;
}

namespace
{
CMatrix solve_checked(const CMatrix &A, const CMatrix &rhs)
{
    if (A.rows() != A.cols() || A.rows() != rhs.rows())
        throw Error(ErrorCode::SizeMismatch, "square system with matching right-hand side expected");
    Eigen::FullPivLU<CMatrix> check(A);
    if (!check.isInvertible())
        throw Error(ErrorCode::SingularPsi, "phase matrix is not invertible");
    return A.partialPivLu().solve(rhs);
}
} // namespace

AggregatedEstimate estimate_aggregated(const CMatrix &Ybar, const CMatrix &Psi, const std::vector<Range> &groups)
{
    if (Psi.rows() != static_cast<Eigen::Index>(groups.size()))
        throw Error(ErrorCode::SizeMismatch, "Psi order must equal the number of groups");
    AggregatedEstimate est;
    est.H_agg = solve_checked(Psi, Ybar);
    est.groups = groups;
    return est;
}

CMatrix plain_ls_estimate(const CMatrix &Ybar, const CMatrix &element_phases)
{
    return solve_checked(element_phases, Ybar);
}

AggregatedEstimate estimate_los(const std::vector<CMatrix> &Ybars, const CMatrix &Psi, const std::vector<Range> &groups)
{
    if (Ybars.empty())
        throw Error(ErrorCode::BadRange, "at least one block is required");
    CMatrix mean = Ybars.front();
    for (std::size_t t = 1; t < Ybars.size(); ++t)
        mean += Ybars[t];
    mean /= static_cast<double>(Ybars.size());
    AggregatedEstimate est = estimate_aggregated(mean, Psi, groups);
    est.timescale = Timescale::Los;
    est.t_count = static_cast<int>(Ybars.size());
    return est;
}

double nmse(const CMatrix &est, const CMatrix &truth)
{
    if (est.rows() != truth.rows() || est.cols() != truth.cols())
        throw Error(ErrorCode::SizeMismatch, "nmse operands differ in shape");
    const double ref = truth.squaredNorm();
    if (!(ref > 0.0))
        throw Error(ErrorCode::ZeroTruth, "reference channel has zero energy");
    return (est - truth).squaredNorm() / ref;
}

int select_pilot_blocks(double v, const SelectorParams &params, const std::function<double(int)> &rate_of,
                        const std::vector<int> &candidates)
{
    if (candidates.empty())
        throw Error(ErrorCode::NoFeasibleCandidate, "empty candidate list");
    const double t_coh = coherence_from_speed(v, params.f_c);
    int best = -1;
    double best_rate = -std::numeric_limits<double>::infinity();
    std::vector<int> sorted = candidates;
    std::sort(sorted.begin(), sorted.end());
    for (int I : sorted)
    {
        const double overhead = I * params.T * params.slot;
        if (I > 0 && overhead >= t_coh)
            continue;
        const double r = (1.0 - overhead / t_coh) * rate_of(I);
        if (r > best_rate)
        {
            best_rate = r;
            best = I;
        }
    }
    if (best < 0)
        throw Error(ErrorCode::NoFeasibleCandidate, "training overhead exceeds the coherence time for every candidate");
    return best;
}

} // namespace risvcom
