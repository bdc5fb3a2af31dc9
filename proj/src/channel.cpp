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

#include "risvcom/channel.hpp"

#include <cmath>

namespace risvcom
{

double path_loss_linear(double d, const LinkGeometry &geo, Link which)
{
    if (!(d > 0.0))
        throw Error(ErrorCode::NonPositiveDistance, "distance must be positive, got " + std::to_string(d));
    const double alpha = which == Link::BsRis ? geo.alpha_BR : geo.alpha_RV;
    if (alpha < 0.0)
        throw Error(ErrorCode::BadRange, "path-loss exponent must be >= 0");
    return db_to_linear(geo.P0_dB) * std::pow(d, -alpha);
}

ChannelSet sample_channels(int N_t, int N_r, int M, const LinkGeometry &geo, double K_dB, RngStream &rng)
{
    if (N_t < 1 || N_r < 1 || M < 1)
        throw Error(ErrorCode::BadRange, "channel dimensions must be >= 1");
    ChannelSet cs;
    cs.rician_K = db_to_linear(K_dB);
    cs.pl_BR = path_loss_linear(geo.d_BR, geo, Link::BsRis);
    cs.pl_RV = path_loss_linear(geo.d_RV, geo, Link::RisVue);

    // For very large K the ratio K/(1+K) is evaluated as 1/(1+1/K) to keep it exact
    const double los_share = 1.0 / (1.0 + 1.0 / cs.rician_K);
    const double nlos_share = 1.0 / (1.0 + cs.rician_K);
    cs.H_los = sample_cscg(cs.pl_BR * los_share, M, N_t, rng);
    cs.H_nlos = sample_cscg(cs.pl_BR * nlos_share, M, N_t, rng);
    cs.G = sample_cscg(cs.pl_RV, N_r, M, rng);
    return cs;
}

ChannelSet refresh_nlos(const ChannelSet &cs, RngStream &rng)
{
    ChannelSet out = cs;
    out.H_nlos = sample_cscg(cs.pl_BR / (1.0 + cs.rician_K), cs.H_los.rows(), cs.H_los.cols(), rng);
    return out;
}

double coherence_from_speed(double v, double f_c)
{
    if (!(v > 0.0))
        throw Error(ErrorCode::NonPositiveSpeed, "speed must be positive, got " + std::to_string(v));
    if (!(f_c > 0.0))
        throw Error(ErrorCode::BadRange, "carrier frequency must be positive");
    return 0.423 * speed_of_light / (f_c * v);
}

double noise_power(double n0_dbm_per_hz, double bandwidth)
{
    if (!(bandwidth > 0.0))
        throw Error(ErrorCode::BadRange, "bandwidth must be positive");
    return dbm_to_watt(n0_dbm_per_hz) * bandwidth;
}

TimescaleModel TimescaleModel::from_speed(double v, double f_c, double slot, int T, int N_t, double los_factor)
{
    if (T < N_t)
        throw Error(ErrorCode::BadRange, "training length T must be >= N_t");
    if (!(slot > 0.0) || los_factor < 1.0)
        throw Error(ErrorCode::BadRange, "slot must be positive and los_factor >= 1");
    TimescaleModel tm;
    tm.T_coh_nlos = coherence_from_speed(v, f_c);
    tm.T_coh_los = los_factor * tm.T_coh_nlos;
    tm.slot = slot;
    tm.T = T;
    return tm;
}

int TimescaleModel::blocks_per_coherence() const
{
    return static_cast<int>(std::floor(T_coh_nlos / (T * slot)));
}

} // namespace risvcom
