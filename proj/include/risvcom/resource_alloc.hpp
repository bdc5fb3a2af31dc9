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

#ifndef RISVCOM_RESOURCE_ALLOC_HPP
#define RISVCOM_RESOURCE_ALLOC_HPP

#include "risvcom/ofdm.hpp"
#include "risvcom/optimizer.hpp"

#include <vector>

namespace risvcom
{

struct RelaxedAllocation
{
    RMatrix p_hat;   // K x N, the product rho * p
    RMatrix rho_hat; // K x N in [0, 1], columns sum to one
    double lambda = 0.0;
};

// Relaxed rate model with the beams frozen. Stores the eigenvalues of H H^H for
// every (VUE, carrier) so that all objective terms are scalar sums.
class RateModel
{
public:
    RateModel(const BroadbandScenario &scen, const BeamState &beams);

    const BroadbandScenario &scenario() const { return *scen_; }

    // ICI-hat + N0 delta_f for every (k, n)
    RMatrix denominators(const RMatrix &p_hat) const;

    double F1(int k, const RMatrix &p_hat) const;
    double F2(int k, const RMatrix &p_hat) const;
    // F1 - F2 evaluated without cancellation: sum_n sum_r log2(1 + p lambda / D)
    double rate_sum(int k, const RMatrix &p_hat) const;
    double rate_total(const RMatrix &p_hat) const;

    RMatrix grad_F1(int k, const RMatrix &p_hat) const;
    RMatrix grad_F1_sum(const RMatrix &p_hat) const;
    RMatrix grad_F2(int k, const RMatrix &p_hat) const;
    RMatrix grad_F2_sum(const RMatrix &p_hat) const;

    // F2~(x; x0) - F2(x) >= 0 for VUE k, evaluated from differences
    double f2_gap(int k, const RMatrix &p0, const RMatrix &p) const;

    // Batched forms that share one ICI evaluation across all VUEs
    std::vector<double> rate_sums(const RMatrix &p_hat) const;
    std::vector<RMatrix> grad_F1_each(const RMatrix &p_hat) const;

    struct Linearization
    {
        RMatrix p0;
        RMatrix D0;
        std::vector<RMatrix> grad_k;
        RMatrix grad_sum;
    };
    Linearization linearize_F2(const RMatrix &p0) const;
    std::vector<double> f2_gaps(const Linearization &lin, const RMatrix &p) const;

private:
    // sum_{n != l} u(n) / (l - n)^2 for every l
    RVector ici_kernel(const RVector &u) const;

    const BroadbandScenario *scen_;
    std::vector<RVector> eig_; // index k * N + n
};

double penalty_G(const RMatrix &rho_hat);
RMatrix grad_G_rho(const RMatrix &rho_hat);

// Gradient of F2 of VUE k with respect to all of p-hat; thin wrapper over RateModel
RMatrix grad_F2_p(int k, const RateModel &model, const RMatrix &p_hat);

struct Surrogates
{
    std::vector<double> F2_tilde; // per VUE
    std::vector<double> F2;       // per VUE, at the candidate
    double J = 0.0;
    double upsilon = 0.0;     // exact penalized objective at the candidate
    double upsilon_app = 0.0; // surrogate objective at the candidate
    std::vector<double> qos_margin; // F1 - F2~ - C_min / delta_f per VUE
};

Surrogates taylor_surrogates(const RateModel &model, const RelaxedAllocation &expansion,
                             const RelaxedAllocation &candidate, double lambda);

struct P3Options
{
    // The outer D.C. loop only needs ascent, so each convex solve is capped early
    PgaOptions pga{.max_iters = 100};
    bool enforce_qos = true;
    std::vector<double> barrier_weights{1e-2, 1e-4, 1e-6};
};

RelaxedAllocation solve_P3(const RateModel &model, const RelaxedAllocation &expansion, double lambda,
                           const P3Options &opt = {});

struct DCRecord
{
    double lambda = 0.0;
    bool restart = false; // first record after restarting from a binary point
    double upsilon = 0.0;
    double upsilon_app = 0.0;
    double upsilon_expansion = 0.0; // exact objective at the expansion point
    double G = 0.0;
    std::vector<double> qos_margin;
    bool majorization_ok = true;
};

struct DCTrace
{
    std::vector<DCRecord> records;
    bool qos_enforced = true;
};

struct DCOptions
{
    std::vector<double> lambda_schedule{1.0, 10.0, 100.0, 1000.0};
    int max_outer = 30;
    double rel_tol = 1e-5;
    bool binary_restart = true;
    double binary_tol = 1e-6;
    P3Options p3;
};

struct DCResult
{
    RelaxedAllocation relaxed;
    Allocation alloc; // rounded
    DCTrace trace;
    double lambda_scale = 1.0;
};

RelaxedAllocation initial_point(const BroadbandScenario &scen);
DCResult dc_loop(const RateModel &model, const RelaxedAllocation &init, const DCOptions &opt = {});

// Per-column argmax; ties go to the VUE with the smaller QoS margin
Allocation round_allocation(const RelaxedAllocation &relaxed, const std::vector<double> &qos_margin);

// Raises violating VUEs to C_min by moving power and carriers from VUEs with surplus.
// Throws QoSInfeasible when no donor can give enough.
Allocation repair_qos(const RateModel &model, Allocation alloc);

// Power refinement with the assignment frozen; keeps QoS if the input satisfies it
Allocation polish_power(const RateModel &model, const Allocation &alloc, int rounds = 10);

std::vector<double> per_vue_rates(const RateModel &model, const Allocation &alloc);

struct PassiveOptions
{
    int sweeps = 3;
    int inner_iters = 20;
    double tol = 1e-7;
};

// Common RIS profile of VUE k over its carriers, coordinate-wise on the unit disk,
// then normalized to unit modulus. The previous profile is kept if the result is worse.
PhaseVector opt_passive_bb(int k, const BeamState &beams, const BroadbandScenario &scen, const Allocation &alloc,
                           const PassiveOptions &opt = {}, std::vector<double> *trace = nullptr);

// Water-filled F[k][n] for every pair; unassigned pairs use a nominal P_tot / N
void update_active_beams(BeamState &beams, const BroadbandScenario &scen, const Allocation &alloc);

struct P1Round
{
    int round = 0;
    double total = 0.0;
    std::vector<double> per_vue;
    std::vector<double> power_per_vue;
};

struct P1Options
{
    int rounds = 10;
    double rel_tol = 1e-4;
    // Fresh D.C. solve in round 1 and every dc_every rounds after; 0 = round 1 only.
    // Other rounds re-polish the incumbent assignment under the new beams.
    int dc_every = 1;
    DCOptions dc;
    PassiveOptions passive;
};

struct P1Result
{
    Allocation alloc;
    BeamState beams;
    Throughput throughput;
    std::vector<P1Round> trace;
    DCTrace first_dc_trace;
};

P1Result alternate_P1(const BroadbandScenario &scen, const P1Options &opt = {});

} // namespace risvcom

#endif
