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

#ifndef RISVCOM_ESTIMATION_HPP
#define RISVCOM_ESTIMATION_HPP

#include "risvcom/channel.hpp"

#include <functional>
#include <vector>

namespace risvcom
{

// Contiguous element range [begin, end), 0-based
struct Range
{
    int begin = 0;
    int end = 0;
    int size() const { return end - begin; }
    bool operator==(const Range &) const = default;
};

// Recursive partition of the M passive elements. blocks[i] (0-based) holds the
// i + 1 groups used in training block i + 1; split[i] is the index of the group
// of blocks[i - 1] that was halved to obtain blocks[i] (split[0] = -1).
struct GroupingScheme
{
    int M = 0;
    std::vector<std::vector<Range>> blocks;
    std::vector<int> split;

    int I() const { return static_cast<int>(blocks.size()); }
    const std::vector<Range> &final_groups() const { return blocks.back(); }

    // For every element, the index of its group in block b (0-based)
    std::vector<int> membership(int b) const;

    // Truncated scheme holding only the first I blocks
    GroupingScheme prefix(int I) const;
};

GroupingScheme build_grouping(int M, int I_max);

struct PilotOptions
{
    double P_u = 1.0;         // pilot transmit power in W
    int psi_bits = 0;         // 0 = continuous phases, b > 0 = 2^b phase levels
    int max_redraws = 64;     // attempts per new row before the antipodal fallback
    int candidates = 8;       // acceptable draws compared per row, best conditioned kept
    double pivot_floor = 1e-6;
    // Coordinate passes over the phases of each new row, on a grid of refine_levels angles
    // (2^psi_bits when quantized). Rows beyond refine_max_rows keep the best random draw.
    int refine_sweeps = 3;
    int refine_levels = 16;
    int refine_max_rows = 32;
};

struct PilotSchedule
{
    CMatrix X;      // N_t x T pilot
    CMatrix X_pinv; // T x N_t right pseudo-inverse
    std::vector<CVector> psi; // psi[i] has i + 1 unit-modulus entries
    CMatrix Psi;    // I x I stacked group-phase matrix
    GroupingScheme grouping;
    int fallbacks = 0; // rows that needed the deterministic fallback

    int I() const { return static_cast<int>(Psi.rows()); }

    // I x M matrix of element phases; row i is the RIS configuration of block i
    CMatrix element_phases() const;
};

PilotSchedule build_pilots(const GroupingScheme &grouping, int T, int N_t, RngStream &rng,
                           const PilotOptions &opt = {});

// T-point DFT rows scaled to per-slot transmit power P_u
CMatrix dft_pilot(int N_t, int T, double P_u);

// Stacked group-phase matrix over the first I blocks of a schedule, reusing its
// psi rows. Lets one training run be evaluated at every I <= sched.I().
CMatrix psi_prefix(const PilotSchedule &sched, int I);

// Cascaded channel (H^T khatri-rao G)^T, M x (N_t N_r). Row m is vec(g_m h_m)^T.
CMatrix cascaded_channel(const CMatrix &H, const CMatrix &G);

// Row-sums of the cascaded channel over each group
CMatrix aggregate_truth(const CMatrix &cascaded, const std::vector<Range> &groups);

// Spreads each aggregated row evenly over its member elements (row / group size)
CMatrix expand_to_elements(const CMatrix &agg, const std::vector<Range> &groups, int M);

// Received pilot tensor, one N_r x T slice per block
CTensor3 simulate_training_rx(const ChannelSet &cs, const PilotSchedule &sched, double sigma2, RngStream &rng);
CTensor3 simulate_training_rx(const CMatrix &H, const CMatrix &G, const PilotSchedule &sched, double sigma2,
                              RngStream &rng);

// I x (N_r N_t) matrix whose row i is vec(Y_i X^+)^T
CMatrix unfold_and_equalize(const CTensor3 &Y, const CMatrix &X);

// PARAFAC mode unfolding Y~ = [vec(Y_1), ..., vec(Y_I)]^T without equalization
CMatrix unfold(const CTensor3 &Y);

enum class Timescale
{
    Small,
    Los
};

struct AggregatedEstimate
{
    CMatrix H_agg; // I x (N_t N_r)
    std::vector<Range> groups;
    Timescale timescale = Timescale::Small;
    int t_count = 1;
};

AggregatedEstimate estimate_aggregated(const CMatrix &Ybar, const CMatrix &Psi, const std::vector<Range> &groups);

// Element-level least squares on the unfolded data, Xi^T Hbar = Ybar, for I == M
CMatrix plain_ls_estimate(const CMatrix &Ybar, const CMatrix &element_phases);

// LoS estimate from several equalized blocks sharing one Psi
AggregatedEstimate estimate_los(const std::vector<CMatrix> &Ybars, const CMatrix &Psi,
                                const std::vector<Range> &groups);

double nmse(const CMatrix &est, const CMatrix &truth);

struct SelectorParams
{
    int T = 1;
    double slot = 1e-6;
    double f_c = 3.5e9;
};

// Picks the candidate I maximizing (1 - I T slot / T_coh(v)) * rate_of(I); I = 0 means
// statistical CSI only and carries no overhead. Ties go to the smaller I.
int select_pilot_blocks(double v, const SelectorParams &params, const std::function<double(int)> &rate_of,
                        const std::vector<int> &candidates);

} // namespace risvcom

#endif
