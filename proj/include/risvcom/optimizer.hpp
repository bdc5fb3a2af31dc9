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

#ifndef RISVCOM_OPTIMIZER_HPP
#define RISVCOM_OPTIMIZER_HPP

#include "risvcom/ofdm.hpp"

#include <functional>
#include <vector>

namespace risvcom
{

// Euclidean projection onto {lo <= x <= hi, sum(x) <= total}
RVector project_box_sum(const RVector &x, const RVector &lo, const RVector &hi, double total);

// Each column onto the probability simplex
RMatrix project_simplex_columns(const RMatrix &rho);

// Joint projection of (p, rho) onto
//   0 <= p <= p_max * rho, columns of rho on the simplex, sum(p) <= p_total.
// Exact up to the bisection on the total-power multiplier.
void project_coupled(RMatrix &p, RMatrix &rho, double p_max, double p_total);

// Allocation region in the stacked variable x = [vec(p); vec(rho)] (column-major K x N blocks).
// With `coupled` the power block is tied to rho; otherwise the blocks are projected separately.
struct FeasibleRegion
{
    int K = 0;
    int N = 0;
    double p_max = 0.0;
    double p_total = 0.0;
    bool coupled = true;

    Eigen::Index size() const { return 2 * static_cast<Eigen::Index>(K) * N; }
    RVector project(const RVector &x) const;
    // Largest constraint violation of x (0 when feasible)
    double residual(const RVector &x) const;
    void check_nonempty() const;
};

RVector stack_allocation(const RMatrix &p, const RMatrix &rho);
void unstack_allocation(const RVector &x, int K, int N, RMatrix &p, RMatrix &rho);

struct SolveReport
{
    int iterations = 0;
    double objective = 0.0;
    double gradient_mapping_norm = 0.0;
    double residual = 0.0;
    bool line_search_stall = false;
    std::vector<double> objective_trace;
    std::vector<double> step_trace;
};

struct PgaOptions
{
    int max_iters = 2000;
    double tol = 1e-6;
    double armijo_slope = 1e-4;
    double shrink = 0.5;
    double step_min = 1e-6;
    double step_max = 1e3;
};

using ObjectiveFn = std::function<double(const RVector &)>;
using GradientFn = std::function<RVector(const RVector &)>;
using ProjectionFn = std::function<RVector(const RVector &)>;

// Spectral projected-gradient ascent with Armijo backtracking along the projected direction.
// Returns the best iterate; the objective trace is non-decreasing.
RVector pga_maximize(const ObjectiveFn &f, const GradientFn &grad, const ProjectionFn &project, const RVector &x0,
                     SolveReport &report, const PgaOptions &opt = {});

struct BruteForceResult
{
    Allocation alloc;
    double throughput = 0.0;
    long long evaluated = 0;
};

// Enumerates every binary assignment and every grid power (levels l P_max / (G - 1))
// for the assigned pairs, with beams fixed. Infeasible points (total power, QoS) are skipped.
BruteForceResult brute_force_alloc(const BroadbandScenario &scen, const BeamState &beams, int levels);

} // namespace risvcom

#endif
