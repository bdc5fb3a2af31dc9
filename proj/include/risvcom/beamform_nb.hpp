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

#ifndef RISVCOM_BEAMFORM_NB_HPP
#define RISVCOM_BEAMFORM_NB_HPP

#include "risvcom/numerics.hpp"

#include <vector>

namespace risvcom
{

using PhaseVector = std::vector<cd>;

// Per-group cascaded channels with the active beamformer not yet applied.
// slices[i] = reshape(aggregated row i, N_r, N_t); sizes[i] = elements in group i.
struct GroupChannels
{
    std::vector<CMatrix> slices;
    std::vector<int> sizes;

    int I() const { return static_cast<int>(slices.size()); }
    Eigen::Index n_r() const { return slices.front().rows(); }
    Eigen::Index n_t() const { return slices.front().cols(); }
};

GroupChannels group_channels(const CMatrix &H_agg, int N_r, int N_t, std::vector<int> sizes);

enum class CsiSource
{
    Perfect,
    EstimatedSmall,
    EstimatedLos
};

// Equivalent channels H~^i_e = slice_i * F
struct EquivalentChannel
{
    std::vector<CMatrix> slices;
    CMatrix F_used;
    CsiSource source = CsiSource::Perfect;

    int I() const { return static_cast<int>(slices.size()); }
};

EquivalentChannel make_equivalent(const GroupChannels &gc, const CMatrix &F, CsiSource source = CsiSource::Perfect);

// sum_i theta_i * slices[i]; works for both GroupChannels and EquivalentChannel slices
CMatrix combine(const PhaseVector &theta, const std::vector<CMatrix> &slices);
CMatrix effective_mimo(const PhaseVector &theta, const EquivalentChannel &ec);

// log2 det(I + H H^H / sigma2)
double mimo_rate(const CMatrix &H, double sigma2);
double rate_nb(const PhaseVector &theta, const EquivalentChannel &ec, double sigma2);

// Eigenbeamformer F = V diag(sqrt(p)) with water-filled p; N_t x N_t
CMatrix opt_active_waterfill(const CMatrix &H_eff, double sigma2, double P_t);

struct PhaseSubproblem
{
    CMatrix A;
    CMatrix B;
};

PhaseSubproblem phase_subproblem_matrices(int i, const PhaseVector &theta, const EquivalentChannel &ec, double sigma2);

// log2 det(A + theta B + conj(theta) B^H)
double subproblem_rate(const PhaseSubproblem &sp, cd theta);

// Optimal unit-modulus phase when A^{-1} B has rank <= 1
cd opt_theta_closed(const CMatrix &A, const CMatrix &B);

// d rate / d phi_i at the current theta
double phase_derivative(const PhaseSubproblem &sp, cd theta);

struct GradientOptions
{
    double beta = 0.1;
    int max_iters = 500;
    double tol = 1e-6;
};

struct ThetaResult
{
    cd theta;
    int iterations = 0;
};

ThetaResult opt_theta_gradient(int i, const PhaseVector &theta, const EquivalentChannel &ec, double sigma2,
                               const GradientOptions &opt = {});
ThetaResult opt_theta_gradient(const PhaseSubproblem &sp, cd theta0, const GradientOptions &opt = {});

cd opt_theta_exhaustive(int i, const PhaseVector &theta, const EquivalentChannel &ec, double sigma2, int bits);
cd opt_theta_exhaustive(const PhaseSubproblem &sp, int bits);

enum class PassiveMode
{
    Auto,       // closed form on rank-1 groups, else exhaustive (I <= 64) or gradient
    ClosedForm, // rejected when a multi-element group meets N_r > 2
    Gradient,
    Exhaustive
};

struct NBOptions
{
    PassiveMode mode = PassiveMode::Auto;
    int bits = 8;
    GradientOptions gradient;
    int max_outer = 20;
    double rel_tol = 1e-5;
};

struct NBTracePoint
{
    int outer = 0;
    int inner = 0;       // cumulative phase updates so far
    bool active = false; // true for the beamformer update of an outer round
    double rate = 0.0;
};

struct NBSolution
{
    CMatrix F;
    PhaseVector theta;
    double rate = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    std::vector<NBTracePoint> trace;
};

// Alternates water-filled F and a sweep of per-group phase updates on `csi`.
// Every accepted update is non-decreasing in the rate on `csi`.
NBSolution alternating_optimize(const GroupChannels &csi, double sigma2, double P_t, PhaseVector theta0,
                                const NBOptions &opt = {});

PhaseVector random_phases(int I, RngStream &rng);

// (1 - T_e / T_c) R, clamped at zero
double achievable_rate(double R, double T_e, double T_c);

} // namespace risvcom

#endif
