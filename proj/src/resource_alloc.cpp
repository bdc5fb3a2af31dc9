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

#include "risvcom/resource_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace risvcom
{

namespace
{
constexpr double ln2 = 0.69314718055994530942;
constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double total_of(const std::vector<double> &v)
{
    return std::accumulate(v.begin(), v.end(), 0.0);
}
} // namespace

RateModel::RateModel(const BroadbandScenario &scen, const BeamState &beams) : scen_(&scen)
{
    eig_.reserve(static_cast<std::size_t>(scen.K) * scen.N);
    for (int k = 0; k < scen.K; ++k)
        for (int n = 0; n < scen.N; ++n)
        {
            const CMatrix Hc = effective_bb(k, n, beams, scen);
            Eigen::SelfAdjointEigenSolver<CMatrix> es(Hc * Hc.adjoint(), Eigen::EigenvaluesOnly);
            eig_.push_back(es.eigenvalues().cwiseMax(0.0));
        }
}

RMatrix RateModel::denominators(const RMatrix &p_hat) const
{
    return (ici_all(p_hat, *scen_).array() + scen_->noise()).matrix();
}

RVector RateModel::ici_kernel(const RVector &u) const
{
    return leakage_kernel(scen_->N) * u;
}

double RateModel::F1(int k, const RMatrix &p_hat) const
{
    const RMatrix D = denominators(p_hat);
    double acc = 0.0;
    for (int n = 0; n < scen_->N; ++n)
    {
        const RVector &lam = eig_[k * scen_->N + n];
        for (Eigen::Index r = 0; r < lam.size(); ++r)
            acc += std::log2(D(k, n) + p_hat(k, n) * lam(r));
    }
    return acc;
}

double RateModel::F2(int k, const RMatrix &p_hat) const
{
    const RMatrix D = denominators(p_hat);
    double acc = 0.0;
    for (int n = 0; n < scen_->N; ++n)
        acc += eig_[k * scen_->N + n].size() * std::log2(D(k, n));
    return acc;
}

double RateModel::rate_sum(int k, const RMatrix &p_hat) const
{
    const RMatrix D = denominators(p_hat);
    double acc = 0.0;
    for (int n = 0; n < scen_->N; ++n)
    {
        if (p_hat(k, n) <= 0.0)
            continue;
        const RVector &lam = eig_[k * scen_->N + n];
        for (Eigen::Index r = 0; r < lam.size(); ++r)
            acc += std::log1p(p_hat(k, n) * lam(r) / D(k, n));
    }
    return acc / ln2;
}

double RateModel::rate_total(const RMatrix &p_hat) const
{
    const auto r = rate_sums(p_hat);
    return std::accumulate(r.begin(), r.end(), 0.0);
}

RMatrix RateModel::grad_F1(int k, const RMatrix &p_hat) const
{
    const int K = scen_->K, N = scen_->N;
    const RMatrix D = denominators(p_hat);
    RVector w(N);
    RVector direct(N);
    for (int n = 0; n < N; ++n)
    {
        const RVector &lam = eig_[k * N + n];
        double a = 0.0, b = 0.0;
        for (Eigen::Index r = 0; r < lam.size(); ++r)
        {
            const double den = ln2 * (D(k, n) + p_hat(k, n) * lam(r));
            a += 1.0 / den;
            b += lam(r) / den;
        }
        w(n) = a;
        direct(n) = b;
    }
    const RVector chain = scen_->ici_kappa() * scen_->gain[k] * ici_kernel(w);
    RMatrix g(K, N);
    for (int d = 0; d < K; ++d)
        g.row(d) = scen_->v[d] * scen_->v[d] * chain.transpose();
    g.row(k) += direct.transpose();
    return g;
}

RMatrix RateModel::grad_F1_sum(const RMatrix &p_hat) const
{
    const int K = scen_->K, N = scen_->N;
    const RMatrix D = denominators(p_hat);
    RVector u = RVector::Zero(N);
    RMatrix g(K, N);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
        {
            const RVector &lam = eig_[k * N + n];
            double a = 0.0, b = 0.0;
            for (Eigen::Index r = 0; r < lam.size(); ++r)
            {
                const double den = ln2 * (D(k, n) + p_hat(k, n) * lam(r));
                a += 1.0 / den;
                b += lam(r) / den;
            }
            u(n) += scen_->gain[k] * a;
            g(k, n) = b;
        }
    const RVector chain = scen_->ici_kappa() * ici_kernel(u);
    for (int d = 0; d < K; ++d)
        g.row(d) += scen_->v[d] * scen_->v[d] * chain.transpose();
    return g;
}

RMatrix RateModel::grad_F2(int k, const RMatrix &p_hat) const
{
    const int K = scen_->K, N = scen_->N;
    const RMatrix D = denominators(p_hat);
    RVector w(N);
    for (int n = 0; n < N; ++n)
        w(n) = eig_[k * N + n].size() / (ln2 * D(k, n));
    const RVector chain = scen_->ici_kappa() * scen_->gain[k] * ici_kernel(w);
    RMatrix g(K, N);
    for (int d = 0; d < K; ++d)
        g.row(d) = scen_->v[d] * scen_->v[d] * chain.transpose();
    return g;
}

RMatrix RateModel::grad_F2_sum(const RMatrix &p_hat) const
{
    const int K = scen_->K, N = scen_->N;
    const RMatrix D = denominators(p_hat);
    RVector u = RVector::Zero(N);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
            u(n) += scen_->gain[k] * eig_[k * N + n].size() / (ln2 * D(k, n));
    const RVector chain = scen_->ici_kappa() * ici_kernel(u);
    RMatrix g(K, N);
    for (int d = 0; d < K; ++d)
        g.row(d) = scen_->v[d] * scen_->v[d] * chain.transpose();
    return g;
}

double RateModel::f2_gap(int k, const RMatrix &p0, const RMatrix &p) const
{
    const RMatrix delta = p - p0;
    const RMatrix D0 = denominators(p0);
    const RMatrix dD = ici_all(delta, *scen_);
    double acc = grad_F2(k, p0).cwiseProduct(delta).sum();
    for (int n = 0; n < scen_->N; ++n)
        acc -= eig_[k * scen_->N + n].size() * std::log1p(dD(k, n) / D0(k, n)) / ln2;
    return acc;
}

std::vector<double> RateModel::rate_sums(const RMatrix &p_hat) const
{
    const RMatrix D = denominators(p_hat);
    std::vector<double> out(scen_->K, 0.0);
    for (int k = 0; k < scen_->K; ++k)
    {
        double acc = 0.0;
        for (int n = 0; n < scen_->N; ++n)
        {
            if (p_hat(k, n) <= 0.0)
                continue;
            const RVector &lam = eig_[k * scen_->N + n];
            for (Eigen::Index r = 0; r < lam.size(); ++r)
                acc += std::log1p(p_hat(k, n) * lam(r) / D(k, n));
        }
        out[k] = acc / ln2;
    }
    return out;
}

std::vector<RMatrix> RateModel::grad_F1_each(const RMatrix &p_hat) const
{
    const int K = scen_->K, N = scen_->N;
    const RMatrix D = denominators(p_hat);
    std::vector<RMatrix> out;
    out.reserve(K);
    for (int k = 0; k < K; ++k)
    {
        RVector w(N), direct(N);
        for (int n = 0; n < N; ++n)
        {
            const RVector &lam = eig_[k * N + n];
            double a = 0.0, b = 0.0;
            for (Eigen::Index r = 0; r < lam.size(); ++r)
            {
                const double den = ln2 * (D(k, n) + p_hat(k, n) * lam(r));
                a += 1.0 / den;
                b += lam(r) / den;
            }
            w(n) = a;
            direct(n) = b;
        }
        const RVector chain = scen_->ici_kappa() * scen_->gain[k] * ici_kernel(w);
        RMatrix g(K, N);
        for (int d = 0; d < K; ++d)
            g.row(d) = scen_->v[d] * scen_->v[d] * chain.transpose();
        g.row(k) += direct.transpose();
        out.push_back(std::move(g));
    }
    return out;
}

RateModel::Linearization RateModel::linearize_F2(const RMatrix &p0) const
{
    Linearization lin;
    lin.p0 = p0;
    lin.D0 = denominators(p0);
    lin.grad_sum = RMatrix::Zero(scen_->K, scen_->N);
    for (int k = 0; k < scen_->K; ++k)
    {
        lin.grad_k.push_back(grad_F2(k, p0));
        lin.grad_sum += lin.grad_k.back();
    }
    return lin;
}

std::vector<double> RateModel::f2_gaps(const Linearization &lin, const RMatrix &p) const
{
    const RMatrix delta = p - lin.p0;
    const RMatrix dD = ici_all(delta, *scen_);
    std::vector<double> out(scen_->K);
    for (int k = 0; k < scen_->K; ++k)
    {
        double acc = lin.grad_k[k].cwiseProduct(delta).sum();
        for (int n = 0; n < scen_->N; ++n)
            acc -= eig_[k * scen_->N + n].size() * std::log1p(dD(k, n) / lin.D0(k, n)) / ln2;
        out[k] = acc;
    }
    return out;
}

double penalty_G(const RMatrix &rho_hat)
{
    if (rho_hat.size() > 0 && (rho_hat.minCoeff() < -1e-12 || rho_hat.maxCoeff() > 1.0 + 1e-12))
        throw Error(ErrorCode::OutOfRange, "relaxed indicators must lie in [0, 1]");
    return rho_hat.cwiseProduct((1.0 - rho_hat.array()).matrix()).sum();
}

RMatrix grad_G_rho(const RMatrix &rho_hat)
{
    return (1.0 - 2.0 * rho_hat.array()).matrix();
}

RMatrix grad_F2_p(int k, const RateModel &model, const RMatrix &p_hat)
{
    return model.grad_F2(k, p_hat);
}

Surrogates taylor_surrogates(const RateModel &model, const RelaxedAllocation &expansion,
                             const RelaxedAllocation &candidate, double lambda)
{
    const auto &scen = model.scenario();
    Surrogates s;
    double rates = 0.0, gaps = 0.0;
    for (int k = 0; k < scen.K; ++k)
    {
        const double f2 = model.F2(k, candidate.p_hat);
        const double gap = model.f2_gap(k, expansion.p_hat, candidate.p_hat);
        const double r = model.rate_sum(k, candidate.p_hat);
        s.F2.push_back(f2);
        s.F2_tilde.push_back(f2 + gap);
        s.qos_margin.push_back(r - gap - scen.C_min / scen.delta_f);
        rates += r;
        gaps += gap;
    }
    const double G0 = penalty_G(expansion.rho_hat);
    const double G_lin = G0 + grad_G_rho(expansion.rho_hat).cwiseProduct(candidate.rho_hat - expansion.rho_hat).sum();
    s.J = std::accumulate(s.F2_tilde.begin(), s.F2_tilde.end(), 0.0) + lambda * G_lin;
    s.upsilon = rates - lambda * penalty_G(candidate.rho_hat);
    s.upsilon_app = rates - gaps - lambda * G_lin;
    return s;
}

namespace
{

double exact_objective(const RateModel &model, const RelaxedAllocation &x, double lambda)
{
    return model.rate_total(x.p_hat) - lambda * penalty_G(x.rho_hat);
}

std::vector<double> plain_margins(const RateModel &model, const RMatrix &p_hat)
{
    const auto &scen = model.scenario();
    auto m = model.rate_sums(p_hat);
    for (double &v : m)
        v -= scen.C_min / scen.delta_f;
    return m;
}

// Barrier-weighted maximization of a surrogate over a convex region given by `project`.
// `base` and `base_grad` describe the concave surrogate, `margin`/`margin_grad` the QoS
// surrogates that must stay positive.
struct BarrierProblem
{
    ObjectiveFn base;
    GradientFn base_grad;
    std::function<std::vector<double>(const RVector &)> margins;
    std::function<std::vector<RVector>(const RVector &)> margin_grads;
    ProjectionFn project;
};

RVector barrier_maximize(const BarrierProblem &bp, const RVector &x0, bool with_qos, double scale,
                         const P3Options &opt)
{
    SolveReport rep;
    if (!with_qos)
        return pga_maximize(bp.base, bp.base_grad, bp.project, x0, rep, opt.pga);
    RVector x = x0;
    for (double w : opt.barrier_weights)
    {
        const double mu = w * scale;
        auto f = [&](const RVector &y)
        {
            double v = bp.base(y);
            for (double m : bp.margins(y))
            {
                if (!(m > 0.0))
                    return neg_inf;
                v += mu * std::log(m);
            }
            return v;
        };
        auto g = [&](const RVector &y)
        {
            RVector out = bp.base_grad(y);
            const auto m = bp.margins(y);
            const auto mg = bp.margin_grads(y);
            for (std::size_t k = 0; k < m.size(); ++k)
                out += (mu / m[k]) * mg[k];
            return out;
        };
        x = pga_maximize(f, g, bp.project, x, rep, opt.pga);
    }
    return x;
}

} // namespace

RelaxedAllocation solve_P3(const RateModel &model, const RelaxedAllocation &expansion, double lambda,
                           const P3Options &opt)
{
    const auto &scen = model.scenario();
    const int K = scen.K, N = scen.N;
    const double pm = scen.P_max;
    const bool qos = opt.enforce_qos && scen.C_min > 0.0;

    FeasibleRegion region{K, N, 1.0, scen.P_tot / pm, true};
    const RMatrix p0 = expansion.p_hat;
    const RMatrix rho0 = expansion.rho_hat;
    const RMatrix gG0 = grad_G_rho(rho0);
    const double G0 = penalty_G(rho0);
    const RateModel::Linearization lin = model.linearize_F2(p0);
    if (qos)
        for (double m : plain_margins(model, p0))
            if (!(m > 0.0))
                throw Error(ErrorCode::SurrogateInfeasible, "expansion point violates the QoS surrogate");
    const double floor = scen.C_min / scen.delta_f;

    auto split = [&](const RVector &x, RMatrix &p, RMatrix &rho)
    {
        unstack_allocation(x, K, N, p, rho);
        p *= pm;
    };

    BarrierProblem bp;
    bp.project = [&](const RVector &x) { return region.project(x); };
    bp.base = [&](const RVector &x)
    {
        RMatrix p, rho;
        split(x, p, rho);
        double v = -lambda * (G0 + gG0.cwiseProduct(rho - rho0).sum());
        v += total_of(model.rate_sums(p)) - total_of(model.f2_gaps(lin, p));
        return v;
    };
    bp.base_grad = [&](const RVector &x)
    {
        RMatrix p, rho;
        split(x, p, rho);
        const RMatrix gp = pm * (model.grad_F1_sum(p) - lin.grad_sum);
        return stack_allocation(gp, -lambda * gG0);
    };
    bp.margins = [&](const RVector &x)
    {
        RMatrix p, rho;
        split(x, p, rho);
        auto m = model.rate_sums(p);
        const auto gap = model.f2_gaps(lin, p);
        for (int k = 0; k < K; ++k)
            m[k] -= gap[k] + floor;
        return m;
    };
    bp.margin_grads = [&](const RVector &x)
    {
        RMatrix p, rho;
        split(x, p, rho);
        const auto g1 = model.grad_F1_each(p);
        std::vector<RVector> out;
        const RMatrix zero = RMatrix::Zero(K, N);
        for (int k = 0; k < K; ++k)
            out.push_back(stack_allocation(pm * (g1[k] - lin.grad_k[k]), zero));
        return out;
    };

    const RVector x0 = stack_allocation(p0 / pm, rho0);
    const double start = exact_objective(model, expansion, lambda);
    const RVector x = barrier_maximize(bp, x0, qos, std::max(1.0, std::abs(start)) / K, opt);

    RelaxedAllocation out;
    split(x, out.p_hat, out.rho_hat);
    out.lambda = lambda;
    // Majorize-maximize guard: never return a point whose surrogate value is below the start
    const Surrogates s = taylor_surrogates(model, expansion, out, lambda);
    bool keep = s.upsilon_app < start - 1e-9 * (1.0 + std::abs(start));
    if (qos)
        for (double m : s.qos_margin)
            keep = keep || !(m > 0.0);
    if (keep)
    {
        RelaxedAllocation same = expansion;
        same.lambda = lambda;
        return same;
    }
    return out;
}

RelaxedAllocation initial_point(const BroadbandScenario &scen)
{
    RelaxedAllocation x;
    x.rho_hat = RMatrix::Constant(scen.K, scen.N, 1.0 / scen.K);
    const double p = std::min({scen.P_tot / (scen.K * scen.N), scen.P_max, scen.P_max / scen.K});
    x.p_hat = RMatrix::Constant(scen.K, scen.N, p);
    return x;
}

namespace
{

// A column whose two leading indicators are (nearly) equal is a stationary point of the
// linearized penalty. Lean it towards one VUE: the one with the smaller QoS margin when
// the floor is active, else the one holding the most power. A lean that would break the
// floor of the other VUE is undone.
void break_ties(const RateModel &model, RelaxedAllocation &x, bool qos)
{
    const auto &scen = model.scenario();
    const int K = scen.K, N = scen.N;
    const double tie_gap = 1e-3;
    const auto margins = plain_margins(model, x.p_hat);
    FeasibleRegion region{K, N, 1.0, scen.P_tot / scen.P_max, true};

    for (int n = 0; n < N; ++n)
    {
        int first = 0;
        for (int k = 1; k < K; ++k)
            if (x.rho_hat(k, n) > x.rho_hat(first, n))
                first = k;
        int lead = -1;
        for (int k = 0; k < K; ++k)
        {
            if (x.rho_hat(first, n) - x.rho_hat(k, n) >= tie_gap)
                continue;
            if (lead < 0)
                lead = k;
            else if (qos ? margins[k] < margins[lead] : x.p_hat(k, n) > x.p_hat(lead, n))
                lead = k;
        }
        bool tie = false;
        for (int k = 0; k < K; ++k)
            tie = tie || (k != first && x.rho_hat(first, n) - x.rho_hat(k, n) < tie_gap);
        if (!tie || x.rho_hat(first, n) > 1.0 - tie_gap)
            continue;

        RelaxedAllocation y = x;
        y.rho_hat.col(n) *= 0.99;
        y.rho_hat(lead, n) += 0.01;
        const RVector z = region.project(stack_allocation(y.p_hat / scen.P_max, y.rho_hat));
        unstack_allocation(z, K, N, y.p_hat, y.rho_hat);
        y.p_hat *= scen.P_max;
        bool ok = true;
        if (qos)
            for (double m : plain_margins(model, y.p_hat))
                ok = ok && m > 0.0;
        if (ok)
            x = std::move(y);
    }
}

} // namespace

DCResult dc_loop(const RateModel &model, const RelaxedAllocation &init, const DCOptions &opt)
{
    const auto &scen = model.scenario();
    const int K = scen.K, N = scen.N;
    DCResult res;

    // Start from the nearest point of the coupled region
    RelaxedAllocation x = init;
    {
        FeasibleRegion region{K, N, 1.0, scen.P_tot / scen.P_max, true};
        const RVector y = region.project(stack_allocation(init.p_hat / scen.P_max, init.rho_hat));
        unstack_allocation(y, K, N, x.p_hat, x.rho_hat);
        x.p_hat *= scen.P_max;
    }

    P3Options p3 = opt.p3;
    if (p3.enforce_qos && scen.C_min > 0.0)
        for (double m : plain_margins(model, x.p_hat))
            if (!(m > 0.0))
                p3.enforce_qos = false;
    res.trace.qos_enforced = p3.enforce_qos && scen.C_min > 0.0;

    const double scale0 = std::abs(model.rate_total(x.p_hat)) / (K * N);
    res.lambda_scale = scale0 > 0.0 ? scale0 : 1.0;

    auto run_stage = [&](double lambda, bool restart)
    {
        for (int j = 0; j < opt.max_outer; ++j)
        {
            const RelaxedAllocation cand = solve_P3(model, x, lambda, p3);
            const Surrogates s = taylor_surrogates(model, x, cand, lambda);
            DCRecord rec;
            rec.lambda = lambda;
            rec.restart = restart && j == 0;
            rec.upsilon = s.upsilon;
            rec.upsilon_app = s.upsilon_app;
            rec.upsilon_expansion = exact_objective(model, x, lambda);
            rec.G = penalty_G(cand.rho_hat);
            rec.qos_margin = s.qos_margin;
            const double tol = 1e-9 * (1.0 + std::abs(s.upsilon));
            for (int k = 0; k < K; ++k)
                rec.majorization_ok = rec.majorization_ok && s.F2[k] <= s.F2_tilde[k] + 1e-9 * (1.0 + std::abs(s.F2[k]));
            rec.majorization_ok = rec.majorization_ok && s.upsilon >= s.upsilon_app - tol;
            res.trace.records.push_back(rec);
            const double gain = s.upsilon_app - rec.upsilon_expansion;
            x = cand;
            if (gain <= opt.rel_tol * std::abs(rec.upsilon_expansion))
                break;
        }
    };

    for (double mult : opt.lambda_schedule)
    {
        const double lambda = mult * res.lambda_scale;
        break_ties(model, x, p3.enforce_qos);
        run_stage(lambda, false);
    }
    const double last = opt.lambda_schedule.empty() ? 0.0 : opt.lambda_schedule.back() * res.lambda_scale;

    // Under an active QoS floor the near VUEs can meet it with thin slices of every
    // carrier, which the linearized penalty never consolidates. Restart the last stage
    // from the rounded and repaired assignment.
    if (!opt.lambda_schedule.empty() && opt.binary_restart && penalty_G(x.rho_hat) > opt.binary_tol)
    {
        try
        {
            const Allocation b = repair_qos(model, round_allocation(x, plain_margins(model, x.p_hat)));
            RelaxedAllocation y{b.rho.cwiseProduct(b.p), b.rho, last};
            bool ok = true;
            if (p3.enforce_qos)
                for (double m : plain_margins(model, y.p_hat))
                    ok = ok && m > 0.0;
            if (ok)
            {
                x = std::move(y);
                run_stage(last, true);
            }
        }
        catch (const Error &e)
        {
            if (e.code() != ErrorCode::QoSInfeasible)
                throw;
        }
    }
    x.lambda = last;
    res.relaxed = x;
    res.alloc = round_allocation(x, plain_margins(model, x.p_hat));
    return res;
}

Allocation round_allocation(const RelaxedAllocation &relaxed, const std::vector<double> &qos_margin)
{
    const Eigen::Index K = relaxed.rho_hat.rows(), N = relaxed.rho_hat.cols();
    Allocation a{RMatrix::Zero(K, N), RMatrix::Zero(K, N)};
    for (Eigen::Index n = 0; n < N; ++n)
    {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < K; ++k)
        {
            const double diff = relaxed.rho_hat(k, n) - relaxed.rho_hat(best, n);
            if (diff > 1e-12 || (std::abs(diff) <= 1e-12 && qos_margin.at(k) < qos_margin.at(best)))
                best = k;
        }
        a.rho(best, n) = 1.0;
        a.p(best, n) = std::max(relaxed.p_hat(best, n), 0.0);
    }
    return a;
}

std::vector<double> per_vue_rates(const RateModel &model, const Allocation &alloc)
{
    const auto &scen = model.scenario();
    const RMatrix pe = alloc.rho.cwiseProduct(alloc.p);
    auto out = model.rate_sums(pe);
    for (double &v : out)
        v *= scen.delta_f;
    return out;
}

namespace
{

bool meets_qos(const std::vector<double> &rates, double c_min, double slack = 1e-9)
{
    for (double r : rates)
        if (r < c_min * (1.0 - slack))
            return false;
    return true;
}

} // namespace

Allocation repair_qos(const RateModel &model, Allocation alloc)
{
    const auto &scen = model.scenario();
    const int K = scen.K, N = scen.N;
    if (scen.C_min <= 0.0)
        return alloc;
    const double target = scen.C_min * (1.0 + 1e-6);
    const int max_steps = 4 * K * N + 8;

    auto strength = [&](int k, int n)
    {
        // Largest eigenvalue of H H^H as the carrier quality of VUE k
        Allocation probe{RMatrix::Zero(K, N), RMatrix::Zero(K, N)};
        probe.rho(k, n) = 1.0;
        probe.p(k, n) = 1.0;
        return model.rate_sum(k, probe.p);
    };

    for (int step = 0; step < max_steps; ++step)
    {
        const auto rates = per_vue_rates(model, alloc);
        int k = -1;
        for (int j = 0; j < K; ++j)
            if (rates[j] < target && (k < 0 || rates[j] / target < rates[k] / target))
                k = j;
        if (k < 0)
            return alloc;

        // Raise the powers of VUE k along t in [0, 1] towards P_max, funding the
        // shortfall from the spare budget and then proportionally from donors.
        auto boosted = [&](double t)
        {
            Allocation a = alloc;
            double extra = 0.0;
            for (int n = 0; n < N; ++n)
                if (a.rho(k, n) == 1.0)
                {
                    const double np = a.p(k, n) + t * (scen.P_max - a.p(k, n));
                    extra += np - a.p(k, n);
                    a.p(k, n) = np;
                }
            const double used = a.rho.cwiseProduct(a.p).sum();
            if (used > scen.P_tot)
            {
                double donor_power = 0.0;
                for (int d = 0; d < K; ++d)
                    if (d != k && rates[d] > target)
                        donor_power += a.rho.row(d).dot(a.p.row(d));
                const double cut = used - scen.P_tot;
                if (donor_power <= cut)
                    return std::pair<Allocation, bool>{a, false};
                const double f = 1.0 - cut / donor_power;
                for (int d = 0; d < K; ++d)
                    if (d != k && rates[d] > target)
                        a.p.row(d) *= f;
            }
            return std::pair<Allocation, bool>{a, true};
        };
        auto acceptable = [&](const Allocation &a, bool &k_ok)
        {
            const auto r = per_vue_rates(model, a);
            k_ok = r[k] >= target;
            for (int d = 0; d < K; ++d)
                if (d != k && rates[d] >= target && r[d] < target)
                    return false;
            return true;
        };

        bool done = false;
        {
            auto [full, ok] = boosted(1.0);
            bool k_ok = false;
            if (ok && acceptable(full, k_ok) && k_ok)
            {
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 60; ++it)
                {
                    const double mid = 0.5 * (lo + hi);
                    auto [a, fine] = boosted(mid);
                    bool mk = false;
                    if (fine && acceptable(a, mk) && mk)
                        hi = mid;
                    else
                        lo = mid;
                }
                alloc = boosted(hi).first;
                done = true;
            }
        }
        if (done)
            continue;

        // Hand VUE k the donor carrier it uses best while the donor stays above target
        int best_n = -1;
        double best_s = -1.0;
        for (int n = 0; n < N; ++n)
        {
            int owner = 0;
            for (int d = 0; d < K; ++d)
                if (alloc.rho(d, n) == 1.0)
                    owner = d;
            if (owner == k || rates[owner] <= target)
                continue;
            Allocation a = alloc;
            a.rho(owner, n) = 0.0;
            a.rho(k, n) = 1.0;
            a.p(k, n) = std::max(a.p(owner, n), std::min(scen.P_max, scen.P_tot / N));
            a.p(owner, n) = 0.0;
            if (a.rho.cwiseProduct(a.p).sum() > scen.P_tot)
                a.p(k, n) = alloc.p(owner, n);
            const auto r = per_vue_rates(model, a);
            if (r[owner] < target)
                continue;
            const double s = strength(k, n);
            if (s > best_s)
            {
                best_s = s;
                best_n = n;
            }
        }
        if (best_n < 0)
            throw Error(ErrorCode::QoSInfeasible, "VUE " + std::to_string(k) + " cannot reach the QoS floor");
        int owner = 0;
        for (int d = 0; d < K; ++d)
            if (alloc.rho(d, best_n) == 1.0)
                owner = d;
        const double moved = alloc.p(owner, best_n);
        alloc.rho(owner, best_n) = 0.0;
        alloc.rho(k, best_n) = 1.0;
        alloc.p(k, best_n) = std::max(moved, std::min(scen.P_max, scen.P_tot / N));
        alloc.p(owner, best_n) = 0.0;
        if (alloc.rho.cwiseProduct(alloc.p).sum() > scen.P_tot)
            alloc.p(k, best_n) = moved;
    }
    throw Error(ErrorCode::QoSInfeasible, "QoS repair did not converge");
}

Allocation polish_power(const RateModel &model, const Allocation &alloc, int rounds)
{
    const auto &scen = model.scenario();
    const int K = scen.K, N = scen.N;
    const double pm = scen.P_max;
    const Eigen::Index n = static_cast<Eigen::Index>(K) * N;
    const RMatrix mask = alloc.rho;
    const RVector hi = Eigen::Map<const RVector>(mask.data(), n);
    const RVector lo = RVector::Zero(n);

    Allocation cur = alloc;
    cur.p = cur.p.cwiseProduct(mask).cwiseMax(0.0).cwiseMin(pm);
    auto cur_rates = per_vue_rates(model, cur);
    const bool qos = scen.C_min > 0.0 && meets_qos(cur_rates, scen.C_min, 0.0);

    P3Options opt;
    for (int r = 0; r < rounds; ++r)
    {
        const RMatrix p0 = cur.p;
        const RateModel::Linearization lin = model.linearize_F2(p0);
        const double floor = scen.C_min / scen.delta_f;
        auto to_p = [&](const RVector &x) { return RMatrix(Eigen::Map<const RMatrix>(x.data(), K, N) * pm); };

        BarrierProblem bp;
        bp.project = [&](const RVector &x) { return project_box_sum(x, lo, hi, scen.P_tot / pm); };
        bp.base = [&](const RVector &x)
        {
            const RMatrix p = to_p(x);
            return total_of(model.rate_sums(p)) - total_of(model.f2_gaps(lin, p));
        };
        bp.base_grad = [&](const RVector &x)
        {
            const RMatrix g = pm * (model.grad_F1_sum(to_p(x)) - lin.grad_sum).cwiseProduct(mask);
            return RVector(Eigen::Map<const RVector>(g.data(), n));
        };
        bp.margins = [&](const RVector &x)
        {
            const RMatrix p = to_p(x);
            auto m = model.rate_sums(p);
            const auto gap = model.f2_gaps(lin, p);
            for (int k = 0; k < K; ++k)
                m[k] -= gap[k] + floor;
            return m;
        };
        bp.margin_grads = [&](const RVector &x)
        {
            const RMatrix p = to_p(x);
            const auto g1 = model.grad_F1_each(p);
            std::vector<RVector> out;
            for (int k = 0; k < K; ++k)
            {
                const RMatrix g = pm * (g1[k] - lin.grad_k[k]).cwiseProduct(mask);
                out.push_back(Eigen::Map<const RVector>(g.data(), n));
            }
            return out;
        };
        bool strict = qos;
        if (qos)
            for (double m : bp.margins(RVector(Eigen::Map<const RVector>(p0.data(), n) / pm)))
                strict = strict && m > 0.0;
        if (qos && !strict)
            break;

        const RVector x0 = Eigen::Map<const RVector>(p0.data(), n) / pm;
        const double before = total_of(cur_rates);
        const RVector x = barrier_maximize(bp, x0, qos, std::max(1.0, before / scen.delta_f) / K, opt);
        Allocation cand = cur;
        cand.p = to_p(x).cwiseMax(0.0).cwiseMin(pm);
        const auto cand_rates = per_vue_rates(model, cand);
        const double after = total_of(cand_rates);
        if (after < before || (qos && !meets_qos(cand_rates, scen.C_min, 0.0)))
            break;
        cur = cand;
        cur_rates = cand_rates;
        if (after - before <= 1e-7 * std::abs(before))
            break;
    }
    return cur;
}

PhaseVector opt_passive_bb(int k, const BeamState &beams, const BroadbandScenario &scen, const Allocation &alloc,
                           const PassiveOptions &opt, std::vector<double> *trace)
{
    const PhaseVector &prev = beams.profiles.theta.at(k);
    const int I = static_cast<int>(prev.size());
    const RMatrix D = (ici_all(alloc.rho.cwiseProduct(alloc.p), scen).array() + scen.noise()).matrix();

    struct Carrier
    {
        double s;
        std::vector<CMatrix> S;
    };
    std::vector<Carrier> carriers;
    for (int n = 0; n < scen.N; ++n)
    {
        const double pw = alloc.rho(k, n) * alloc.p(k, n);
        if (pw <= 0.0)
            continue;
        Carrier c{pw / D(k, n), {}};
        for (const auto &slice : scen.channels[k][n].slices)
            c.S.push_back(slice * beams.F[k][n]);
        carriers.push_back(std::move(c));
    }
    if (carriers.empty())
        return prev;

    auto objective = [&](const PhaseVector &th)
    {
        double acc = 0.0;
        for (const auto &c : carriers)
        {
            const CMatrix Hc = combine(th, c.S);
            CMatrix X = CMatrix::Identity(Hc.rows(), Hc.rows());
            X.noalias() += c.s * Hc * Hc.adjoint();
            acc += logdet_hpd(X) / ln2;
        }
        return acc;
    };
    // 2 df/d(conj theta_m), the ascent direction in the complex plane
    auto gradient = [&](const PhaseVector &th, int m)
    {
        cd g{0.0, 0.0};
        for (const auto &c : carriers)
        {
            const CMatrix Hc = combine(th, c.S);
            CMatrix X = CMatrix::Identity(Hc.rows(), Hc.rows());
            X.noalias() += c.s * Hc * Hc.adjoint();
            g += c.s * X.llt().solve(Hc * c.S[m].adjoint()).trace();
        }
        return 2.0 * g / ln2;
    };
    auto to_disk = [](cd z) { return std::abs(z) > 1.0 ? z / std::abs(z) : z; };

    const double f_prev = objective(prev);
    PhaseVector th = prev;
    double f = f_prev;
    for (int sweep = 0; sweep < opt.sweeps; ++sweep)
    {
        const double f_sweep = f;
        for (int m = 0; m < I; ++m)
        {
            double step = 1.0 / (1.0 + std::abs(gradient(th, m)));
            cd g = gradient(th, m);
            for (int it = 0; it < opt.inner_iters; ++it)
            {
                bool moved = false;
                double t = step;
                PhaseVector cand = th;
                for (int ls = 0; ls < 40; ++ls)
                {
                    cand[m] = to_disk(th[m] + t * g);
                    const double fc = objective(cand);
                    if (fc > f)
                    {
                        moved = true;
                        const cd g_new = gradient(cand, m);
                        const cd s = cand[m] - th[m];
                        const cd y = g_new - g;
                        const double sy = std::real(std::conj(s) * y);
                        step = sy < 0.0 ? std::clamp(std::norm(s) / -sy, 1e-12, 1e6) : 2.0 * t;
                        const double dist = std::abs(s);
                        th = cand;
                        f = fc;
                        g = g_new;
                        if (dist < opt.tol)
                            moved = false;
                        break;
                    }
                    t *= 0.5;
                }
                if (trace)
                    trace->push_back(f);
                if (!moved)
                    break;
            }
        }
        if (f - f_sweep <= 1e-9 * std::abs(f_sweep))
            break;
    }
    for (auto &t : th)
        t = std::abs(t) > 0.0 ? t / std::abs(t) : cd{1.0, 0.0};
    return objective(th) >= f_prev ? th : prev;
}

void update_active_beams(BeamState &beams, const BroadbandScenario &scen, const Allocation &alloc)
{
    const RMatrix D = (ici_all(alloc.rho.cwiseProduct(alloc.p), scen).array() + scen.noise()).matrix();
    for (int k = 0; k < scen.K; ++k)
        for (int n = 0; n < scen.N; ++n)
        {
            const double own = alloc.rho(k, n) * alloc.p(k, n);
            const double pw = own > 0.0 ? own : scen.P_tot / scen.N;
            const CMatrix H_eff = combine(beams.profiles.theta[k], scen.channels[k][n].slices);
            if (H_eff.squaredNorm() == 0.0)
                continue;
            beams.F[k][n] = opt_active_waterfill(H_eff, D(k, n) / pw, 1.0);
        }
}

P1Result alternate_P1(const BroadbandScenario &scen, const P1Options &opt)
{
    P1Result res;
    res.beams = isotropic_beams(scen);
    bool have = false;
    double prev_total = 0.0;

    for (int round = 1; round <= std::max(1, opt.rounds); ++round)
    {
        const RateModel model(scen, res.beams);

        // Resource step: fresh D.C. solve, compared with the refined incumbent
        std::vector<Allocation> options;
        if (round == 1 || (opt.dc_every > 0 && (round - 1) % opt.dc_every == 0))
        {
            DCResult dc = dc_loop(model, initial_point(scen), opt.dc);
            if (round == 1)
                res.first_dc_trace = dc.trace;
            try
            {
                options.push_back(polish_power(model, repair_qos(model, dc.alloc)));
            }
            catch (const Error &e)
            {
                if (e.code() != ErrorCode::QoSInfeasible)
                    throw;
            }
        }
        if (have)
            options.push_back(polish_power(model, res.alloc));
        if (options.empty())
            throw Error(ErrorCode::QoSInfeasible, "no allocation satisfies the QoS floor");
        std::size_t pick = 0;
        double pick_total = neg_inf;
        for (std::size_t i = 0; i < options.size(); ++i)
        {
            const auto r = per_vue_rates(model, options[i]);
            const double t = total_of(r);
            if (meets_qos(r, scen.C_min) && t > pick_total)
            {
                pick_total = t;
                pick = i;
            }
        }
        if (pick_total == neg_inf)
            throw Error(ErrorCode::QoSInfeasible, "no allocation satisfies the QoS floor");
        res.alloc = options[pick];
        have = true;

        // Beam step with resources fixed
        BeamState next = res.beams;
        for (int k = 0; k < scen.K; ++k)
            next.profiles.theta[k] = opt_passive_bb(k, res.beams, scen, res.alloc, opt.passive);
        update_active_beams(next, scen, res.alloc);
        const Throughput t_old = total_throughput(res.alloc, res.beams, scen);
        const Throughput t_new = total_throughput(res.alloc, next, scen);
        if (t_new.total >= t_old.total && meets_qos(t_new.per_vue, scen.C_min))
            res.beams = std::move(next);

        res.throughput = total_throughput(res.alloc, res.beams, scen);
        P1Round rec;
        rec.round = round;
        rec.total = res.throughput.total;
        rec.per_vue = res.throughput.per_vue;
        for (int k = 0; k < scen.K; ++k)
            rec.power_per_vue.push_back(res.alloc.rho.row(k).dot(res.alloc.p.row(k)));
        res.trace.push_back(rec);
        if (round > 1 && rec.total - prev_total <= opt.rel_tol * std::abs(prev_total))
            break;
        prev_total = rec.total;
    }
    return res;
}

} // namespace risvcom
