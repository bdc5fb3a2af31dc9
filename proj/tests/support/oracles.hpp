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

#ifndef RISVCOM_TEST_ORACLES_HPP
#define RISVCOM_TEST_ORACLES_HPP

// Reference computations written directly from the defining formulas, kept apart
// from the library code paths they check.

#include "risvcom/estimation.hpp"
#include "risvcom/ofdm.hpp"

#include <functional>
#include <vector>

namespace risvcom::testing
{

CMatrix kron_by_index(const CMatrix &a, const CMatrix &b);

// Natural-log determinant from the eigenvalues of a Hermitian matrix
double logdet_by_eigen(const CMatrix &a);

// sum_k log2(1 + lambda_k(H H^H) / sigma2)
double mimo_rate_by_eigen(const CMatrix &H, double sigma2);

// Best sum log2(1 + g_r p_r / noise) over a uniform grid of splits of `budget` between two streams
double two_stream_grid_best(double g1, double g2, double noise, double budget, int steps);

// Received block sum_m g_{r,m} theta_m (h_m^T x_t) by explicit loops; H is M x N_t, G is N_r x M
CMatrix received_by_loops(const CMatrix &H, const CMatrix &G, const CVector &theta, const CMatrix &X);

// Row k = vec(sum_{m in group k} g_m h_m^T) with column-major vec
CMatrix aggregated_by_loops(const CMatrix &H, const CMatrix &G, const std::vector<Range> &groups);

// ICI from its defining double sum, using the receiver gain stored in the scenario
RMatrix ici_by_loops(const RMatrix &p_eff, const BroadbandScenario &scen);

// Euclidean projection onto {lo <= x <= hi, sum x <= total} by enumerating active sets
RVector box_sum_by_active_sets(const RVector &y, const RVector &lo, const RVector &hi, double total);

// Projection of one vector onto the probability simplex by bisection on the threshold
RVector simplex_by_bisection(const RVector &y);

// argmax of -sum a_i (x_i - c_i)^2 over {lo <= x <= hi, sum x <= total}, a_i > 0, via the multiplier
RVector diag_quadratic_by_multiplier(const RVector &a, const RVector &c, const RVector &lo, const RVector &hi,
                                     double total);

// Central difference of f along coordinate i
double central_difference(const std::function<double(const RVector &)> &f, const RVector &x, Eigen::Index i,
                          double h);

// Relative mismatch |a - b| / max(|a|, |b|, floor)
double rel_err(double a, double b, double floor = 1e-300);

} // namespace risvcom::testing

#endif
