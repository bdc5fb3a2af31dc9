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

#include "stats.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace risvcom::testing
{

double mean(const std::vector<double> &x)
{
    return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double wilcoxon_greater(const std::vector<double> &diffs)
{
    std::vector<double> d;
    for (double v : diffs)
        if (v != 0.0)
            d.push_back(v);
    const std::size_t n = d.size();
    if (n == 0)
        return 1.0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
    std::vector<double> rank(n);
    bool ties = false;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;)
    {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]]))
            ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t)
            rank[order[t]] = r;
        const double c = static_cast<double>(j - i + 1);
        if (c > 1)
        {
            ties = true;
            tie_term += c * c * c - c;
        }
        i = j + 1;
    }
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0.0)
            w_plus += rank[i];

    if (!ties && n <= 50)
    {
        // count[s] = number of sign patterns with positive-rank sum s
        const int max_sum = static_cast<int>(n * (n + 1) / 2);
        std::vector<double> count(max_sum + 1, 0.0);
        count[0] = 1.0;
        for (int r = 1; r <= static_cast<int>(n); ++r)
            for (int s = max_sum; s >= r; --s)
                count[s] += count[s - r];
        const int w = static_cast<int>(std::lround(w_plus));
        double tail = 0.0;
        for (int s = w; s <= max_sum; ++s)
            tail += count[s];
        return tail / std::ldexp(1.0, static_cast<int>(n));
    }

    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (w_plus - mu - 0.5) / std::sqrt(var);
    return boost::math::cdf(boost::math::complement(boost::math::normal(), z));
}

double paired_t_greater(const std::vector<double> &diffs)
{
    const std::size_t n = diffs.size();
    if (n < 2)
        return 1.0;
    const double m = mean(diffs);
    double ss = 0.0;
    for (double v : diffs)
        ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0)
        return m > 0.0 ? 0.0 : 1.0;
    const double t = m / (sd / std::sqrt(static_cast<double>(n)));
    return boost::math::cdf(boost::math::complement(boost::math::students_t(static_cast<double>(n - 1)), t));
}

} // namespace risvcom::testing
