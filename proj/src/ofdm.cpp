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

#include "risvcom/ofdm.hpp"

#include "risvcom/estimation.hpp"

#include <cmath>

namespace risvcom
{

namespace
{
constexpr double ln2 = 0.69314718055994530942;
constexpr double feas_tol = 1e-9;
} // namespace

double BroadbandScenario::ici_kappa() const
{
    const double r = f_c / (delta_f * speed_of_light);
    return 0.5 * r * r;
}

BeamState isotropic_beams(const BroadbandScenario &scen)
{
    BeamState b;
    const int n_t = scen.n_t();
    b.profiles.theta.assign(scen.K, PhaseVector(scen.I(), cd{1.0, 0.0}));
    b.F.assign(scen.K, std::vector<CMatrix>(scen.N, CMatrix::Identity(n_t, n_t) / std::sqrt(double(n_t))));
    return b;
}

double ici(int k, int n, const RMatrix &p_eff, const BroadbandScenario &scen)
{
    double acc = 0.0;
    for (int d = 0; d < scen.K; ++d)
    {
        double s = 0.0;
        for (int l = 0; l < scen.N; ++l)
        {
            if (l == n)
                continue;
            const double gap = l - n;
            s += p_eff(d, l) / (gap * gap);
        }
        acc += scen.v[d] * scen.v[d] * s;
    }
    return scen.gain[k] * scen.ici_kappa() * acc;
}

const RMatrix &leakage_kernel(int N)
{
    thread_local RMatrix table;
    if (table.rows() != N)
    {
        table.resize(N, N);
        for (int n = 0; n < N; ++n)
            for (int l = 0; l < N; ++l)
                table(n, l) = l == n ? 0.0 : 1.0 / double((l - n) * (l - n));
    }
    return table;
}

RMatrix ici_all(const RMatrix &p_eff, const BroadbandScenario &scen)
{
    // The carrier-dependent part is shared by all VUEs, only the gain differs
    RVector base = RVector::Zero(scen.N);
    RVector weighted = RVector::Zero(scen.N);
    for (int l = 0; l < scen.N; ++l)
        for (int d = 0; d < scen.K; ++d)
            weighted(l) += scen.v[d] * scen.v[d] * p_eff(d, l);
    base.noalias() = leakage_kernel(scen.N) * weighted;
    base *= scen.ici_kappa();
    RMatrix out(scen.K, scen.N);
    for (int k = 0; k < scen.K; ++k)
        out.row(k) = scen.gain[k] * base.transpose();
    return out;
}

CMatrix effective_bb(int k, int n, const BeamState &beams, const BroadbandScenario &scen)
{
    return combine(beams.profiles.theta.at(k), scen.channels.at(k).at(n).slices) * beams.F.at(k).at(n);
}

double rate_bb(int k, int n, const Allocation &alloc, const BeamState &beams, const BroadbandScenario &scen)
{
    const double snr_scale = alloc.rho(k, n) * alloc.p(k, n);
    if (snr_scale <= 0.0)
        return 0.0;
    const RMatrix p_eff = alloc.rho.cwiseProduct(alloc.p);
    const double denom = ici(k, n, p_eff, scen) + scen.noise();
    const CMatrix Hc = effective_bb(k, n, beams, scen);
    CMatrix Kmat = CMatrix::Identity(Hc.rows(), Hc.rows());
    Kmat.noalias() += (snr_scale / denom) * Hc * Hc.adjoint();
    return scen.delta_f * logdet_hpd(Kmat) / ln2;
}

std::vector<Violation> check_feasible(const Allocation &alloc, const BroadbandScenario &scen,
                                      const std::vector<double> &per_vue_throughput)
{
    std::vector<Violation> out;
    const double box_tol = feas_tol * std::max(scen.P_max, 1e-300);
    double total = 0.0;
    for (int n = 0; n < scen.N; ++n)
    {
        double col = 0.0;
        for (int k = 0; k < scen.K; ++k)
        {
            const double r = alloc.rho(k, n);
            const double p = alloc.p(k, n);
            if (r != 0.0 && r != 1.0)
                out.push_back({"binary", k, n, std::min(r, 1.0 - r)});
            if (p < -box_tol || p > scen.P_max + box_tol)
                out.push_back({"box", k, n, p < 0.0 ? -p : p - scen.P_max});
            col += r;
            total += r * p;
        }
        if (std::abs(col - 1.0) > feas_tol)
            out.push_back({"column_sum", -1, n, col - 1.0});
    }
    if (total > scen.P_tot * (1.0 + feas_tol))
        out.push_back({"total_power", -1, -1, total - scen.P_tot});
    for (std::size_t k = 0; k < per_vue_throughput.size(); ++k)
        if (per_vue_throughput[k] < scen.C_min * (1.0 - feas_tol))
            out.push_back({"qos", static_cast<int>(k), -1, scen.C_min - per_vue_throughput[k]});
    return out;
}

Throughput total_throughput(const Allocation &alloc, const BeamState &beams, const BroadbandScenario &scen)
{
    if (alloc.rho.rows() != scen.K || alloc.rho.cols() != scen.N || alloc.p.rows() != scen.K ||
        alloc.p.cols() != scen.N)
        throw Error(ErrorCode::SizeMismatch, "allocation must be K x N");
    for (const auto &v : check_feasible(alloc, scen, {}))
        throw Error(ErrorCode::InfeasibleAllocation,
                    "constraint " + v.constraint + " violated at k=" + std::to_string(v.k) + " n=" + std::to_string(v.n));

    Throughput t;
    t.per_vue.assign(scen.K, 0.0);
    t.per_carrier = RMatrix::Zero(scen.K, scen.N);
    const RMatrix interference = ici_all(alloc.rho.cwiseProduct(alloc.p), scen);
    for (int k = 0; k < scen.K; ++k)
        for (int n = 0; n < scen.N; ++n)
        {
            const double s = alloc.rho(k, n) * alloc.p(k, n);
            if (s <= 0.0)
                continue;
            const CMatrix Hc = effective_bb(k, n, beams, scen);
            CMatrix Kmat = CMatrix::Identity(Hc.rows(), Hc.rows());
            Kmat.noalias() += (s / (interference(k, n) + scen.noise())) * Hc * Hc.adjoint();
            const double c = scen.delta_f * logdet_hpd(Kmat) / ln2;
            t.per_carrier(k, n) = c;
            t.per_vue[k] += c;
            t.total += c;
        }
    return t;
}

BroadbandScenario make_broadband_scenario(const BroadbandConfig &cfg, RngStream &rng)
{
    if (cfg.K < 1 || cfg.N < 1 || cfg.I < 1 || cfg.I > cfg.M)
        throw Error(ErrorCode::ConfigError, "broadband scenario needs K, N >= 1 and 1 <= I <= M");
    if (static_cast<int>(cfg.distances.size()) != cfg.K || static_cast<int>(cfg.velocities.size()) != cfg.K)
        throw Error(ErrorCode::ConfigError, "one distance and one velocity per VUE required");
    BroadbandScenario s;
    s.K = cfg.K;
    s.N = cfg.N;
    s.bandwidth = cfg.bandwidth;
    s.delta_f = cfg.bandwidth / cfg.N;
    s.f_c = cfg.f_c;
    s.P_tot = cfg.P_tot;
    s.P_max = cfg.P_max > 0.0 ? cfg.P_max : 4.0 * cfg.P_tot / 32.0;
    s.C_min = cfg.C_min;
    s.N0 = dbm_to_watt(cfg.N0_dbm);
    s.v = cfg.velocities;
    s.d = cfg.distances;

    const auto groups = build_grouping(cfg.M, cfg.I).final_groups();
    std::vector<int> sizes;
    for (const auto &g : groups)
        sizes.push_back(g.size());

    s.channels.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k)
    {
        if (s.v[k] < 0.0)
            throw Error(ErrorCode::ConfigError, "velocities must be non-negative");
        LinkGeometry geo = cfg.geometry;
        geo.d_BR = cfg.distances[k];
        const double pl_br = path_loss_linear(geo.d_BR, geo, Link::BsRis);
        const double pl_rv = path_loss_linear(geo.d_RV, geo, Link::RisVue);
        s.gain.push_back(cfg.scale_ici ? cfg.M * pl_br * pl_rv : 1.0);
        RngStream vue_rng = rng.split(static_cast<std::uint64_t>(k));
        for (int n = 0; n < cfg.N; ++n)
        {
            const ChannelSet cs = sample_channels(cfg.N_t, cfg.N_r, cfg.M, geo, cfg.K_dB, vue_rng);
            const CMatrix agg = aggregate_truth(cascaded_channel(cs.H(), cs.G), groups);
            s.channels[k].push_back(group_channels(agg, cfg.N_r, cfg.N_t, sizes));
        }
    }
    return s;
}

} // namespace risvcom
