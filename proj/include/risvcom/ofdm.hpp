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

#ifndef RISVCOM_OFDM_HPP
#define RISVCOM_OFDM_HPP

#include "risvcom/beamform_nb.hpp"
#include "risvcom/channel.hpp"

#include <string>
#include <vector>

namespace risvcom
{

// Multi-VUE OFDM downlink. Each VUE k carries its own RIS; channels[k][n] holds the
// grouped cascaded channel of VUE k on subcarrier n.
struct BroadbandScenario
{
    int K = 0;
    int N = 0;
    double bandwidth = 1e7;
    double delta_f = 0.0;
    double f_c = 3.5e9;
    double P_max = 0.0;
    double P_tot = 0.0;
    double C_min = 0.0;
    double N0 = 0.0; // W/Hz
    std::vector<double> v;    // m/s
    std::vector<double> d;    // m
    std::vector<double> gain; // receiver-side large-scale gain applied to the ICI leakage
    std::vector<std::vector<GroupChannels>> channels;

    double noise() const { return N0 * delta_f; }
    // 1/2 (f_c / (delta_f c))^2
    double ici_kappa() const;
    int n_r() const { return static_cast<int>(channels.at(0).at(0).n_r()); }
    int n_t() const { return static_cast<int>(channels.at(0).at(0).n_t()); }
    int I() const { return channels.at(0).at(0).I(); }
};

struct Allocation
{
    RMatrix rho; // K x N, binary
    RMatrix p;   // K x N, W
};

struct RISProfiles
{
    std::vector<PhaseVector> theta; // one common profile per VUE
};

// Passive profiles plus the per-(VUE, carrier) active beamformers, ||F||_F^2 <= 1
struct BeamState
{
    RISProfiles profiles;
    std::vector<std::vector<CMatrix>> F;
};

BeamState isotropic_beams(const BroadbandScenario &scen);

// ICI on carrier n seen by VUE k for transmitted powers p_eff = rho .* p (or p-hat)
double ici(int k, int n, const RMatrix &p_eff, const BroadbandScenario &scen);
RMatrix ici_all(const RMatrix &p_eff, const BroadbandScenario &scen);
// N x N matrix with entries 1 / (l - n)^2 off the diagonal; cached per thread
const RMatrix &leakage_kernel(int N);

// sum_i theta_i[k] slice_i[k, n] F[k][n]
CMatrix effective_bb(int k, int n, const BeamState &beams, const BroadbandScenario &scen);

double rate_bb(int k, int n, const Allocation &alloc, const BeamState &beams, const BroadbandScenario &scen);

struct Throughput
{
    double total = 0.0;
    std::vector<double> per_vue;
    RMatrix per_carrier;
};

struct Violation
{
    std::string constraint; // box, total_power, qos, binary, column_sum
    int k = -1;
    int n = -1;
    double amount = 0.0;
};

std::vector<Violation> check_feasible(const Allocation &alloc, const BroadbandScenario &scen,
                                      const std::vector<double> &per_vue_throughput);

// Throws InfeasibleAllocation naming the first structural violation (QoS is not checked here)
Throughput total_throughput(const Allocation &alloc, const BeamState &beams, const BroadbandScenario &scen);

struct BroadbandConfig
{
    int K = 3;
    int N = 32;
    int N_t = 4;
    int N_r = 4;
    int M = 16;
    int I = 8;
    double bandwidth = 1e7;
    double f_c = 3.5e9;
    double P_tot = 1.0;
    double P_max = 0.0; // 0 = 4 P_tot / 32
    double C_min = 3e7;
    double N0_dbm = -174.0;
    double K_dB = 5.0;
    std::vector<double> distances{800.0, 1000.0, 1500.0};
    std::vector<double> velocities{27.78, 27.78, 27.78};
    LinkGeometry geometry;
    bool scale_ici = true; // multiply the leakage by the receiver-side gain
};

// Draws independent per-carrier channels and groups each into I contiguous blocks
BroadbandScenario make_broadband_scenario(const BroadbandConfig &cfg, RngStream &rng);

} // namespace risvcom

#endif
