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

#ifndef RISVCOM_CHANNEL_HPP
#define RISVCOM_CHANNEL_HPP

#include "risvcom/numerics.hpp"

namespace risvcom
{

// Large-scale geometry of the BS -> RIS -> VUE path. Reference distance d0 = 1 m.
struct LinkGeometry
{
    double d_BR = 1500.0;
    double d_RV = 2.0;
    double alpha_BR = 2.2;
    double alpha_RV = 2.8;
    double P0_dB = -30.0;
};

enum class Link
{
    BsRis,
    RisVue
};

// P0 * (d / d0)^(-alpha), linear scale. The exponent is picked from `geo` by `which`.
double path_loss_linear(double d, const LinkGeometry &geo, Link which);

// One realization of the two-timescale Rician channel.
// H = H_los + H_nlos is M x N_t (BS -> RIS), G is N_r x M (RIS -> VUE).
struct ChannelSet
{
    CMatrix H_los;
    CMatrix H_nlos;
    CMatrix G;
    double rician_K = 0.0; // linear
    double pl_BR = 1.0;
    double pl_RV = 1.0;

    CMatrix H() const { return H_los + H_nlos; }
    Eigen::Index n_t() const { return H_los.cols(); }
    Eigen::Index n_r() const { return G.rows(); }
    Eigen::Index m() const { return H_los.rows(); }
};

ChannelSet sample_channels(int N_t, int N_r, int M, const LinkGeometry &geo, double K_dB, RngStream &rng);

// Redraw the fast NLoS part; H_los, G and the metadata are copied unchanged
ChannelSet refresh_nlos(const ChannelSet &cs, RngStream &rng);

// Clarke-model coherence time 0.423 c / (f_c v)
double coherence_from_speed(double v, double f_c);

// Thermal noise power N0 * B for a density given in dBm/Hz
double noise_power(double n0_dbm_per_hz, double bandwidth);

struct TimescaleModel
{
    double T_coh_los = 0.0;
    double T_coh_nlos = 0.0;
    double slot = 0.0; // seconds per pilot symbol
    int T = 1;         // slots per training block

    // Builds the model for speed v; the LoS coherence time is `los_factor` times the NLoS one
    static TimescaleModel from_speed(double v, double f_c, double slot, int T, int N_t, double los_factor = 50.0);

    // Number of whole training blocks that fit in one NLoS coherence interval
    int blocks_per_coherence() const;
};

} // namespace risvcom

#endif
