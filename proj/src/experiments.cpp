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

#include "risvcom/experiments.hpp"

#include "risvcom/resource_alloc.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#ifndef RISVCOM_VERSION
#define RISVCOM_VERSION "0.0.0"
#endif

extern char **environ;

namespace risvcom
{

using json = nlohmann::json;

namespace
{

// Calls f(name, member) for every configuration field, in document order
template <class Config, class F>
void for_each_field(Config &c, F &&f)
{
    f("n_t", c.n_t);
    f("n_r", c.n_r);
    f("m", c.m);
    f("i_max", c.i_max);
    f("t", c.t);
    f("d_br", c.d_br);
    f("d_rv", c.d_rv);
    f("alpha_br", c.alpha_br);
    f("alpha_rv", c.alpha_rv);
    f("p0_db", c.p0_db);
    f("rician_k_db", c.rician_k_db);
    f("n0_dbm_hz", c.n0_dbm_hz);
    f("f_c", c.f_c);
    f("tau_rms", c.tau_rms);
    f("bandwidth_nb", c.bandwidth_nb);
    f("p_u_dbm", c.p_u_dbm);
    f("p_t_dbm", c.p_t_dbm);
    f("velocity", c.velocity);
    f("los_factor", c.los_factor);
    f("los_blocks", c.los_blocks);
    f("psi_bits_variant", c.psi_bits_variant);
    f("passive_mode", c.passive_mode);
    f("nb_max_outer", c.nb_max_outer);
    f("block_list", c.block_list);
    f("speeds", c.speeds);
    f("fixed_blocks", c.fixed_blocks);
    f("subarray_elements", c.subarray_elements);
    f("selector_seeds", c.selector_seeds);
    f("bandwidth_bb", c.bandwidth_bb);
    f("k", c.k);
    f("n", c.n);
    f("bb_blocks", c.bb_blocks);
    f("distances", c.distances);
    f("c_min", c.c_min);
    f("p_tot_dbm", c.p_tot_dbm);
    f("p_max", c.p_max);
    f("bb_rounds", c.bb_rounds);
    f("sweep_rounds", c.sweep_rounds);
    f("n_list", c.n_list);
    f("k_list", c.k_list);
    f("sweep_distances", c.sweep_distances);
    f("seeds", c.seeds);
    f("base_seed", c.base_seed);
    f("threads", c.threads);
}

[[noreturn]] void config_error(const std::string &what)
{
    throw Error(ErrorCode::ConfigError, what);
}

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (v == std::floor(v) && std::abs(v) < 1e15)
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string &s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s)
    {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t stream_tag(const std::string &experiment, std::uint64_t point)
{
    return splitmix64(fnv1a(experiment) ^ splitmix64(point));
}

std::vector<int> sizes_of(const std::vector<Range> &groups)
{
    std::vector<int> out;
    for (const auto &g : groups)
        out.push_back(g.size());
    return out;
}

NBOptions nb_options(const ScenarioConfig &cfg)
{
    NBOptions opt;
    opt.mode = cfg.passive();
    opt.max_outer = cfg.nb_max_outer;
    return opt;
}

PhaseVector ones(int I)
{
    return PhaseVector(static_cast<std::size_t>(I), cd{1.0, 0.0});
}

ResultTable make_table(const std::string &experiment, const ScenarioConfig &cfg, std::vector<std::string> columns)
{
    ResultTable t;
    t.experiment = experiment;
    t.columns = {"agg"};
    t.columns.insert(t.columns.end(), columns.begin(), columns.end());
    t.config_hash = config_hash(cfg);
    t.seeds = cfg.seed_list();
    t.version = std::string("risvcom ") + RISVCOM_VERSION;
    return t;
}

void append_rows(ResultTable &t, const std::vector<std::vector<std::vector<double>>> &per_job)
{
    for (const auto &rows : per_job)
        for (const auto &r : rows)
        {
            std::vector<double> row{agg_record};
            row.insert(row.end(), r.begin(), r.end());
            t.rows.push_back(std::move(row));
        }
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ChannelSet sample_nb(const ScenarioConfig &cfg, RngStream &rng)
{
    return sample_channels(cfg.n_t, cfg.n_r, cfg.m, cfg.geometry(), cfg.rician_k_db, rng);
}

} // namespace

// ---------------------------------------------------------------- configuration

ScenarioConfig ScenarioConfig::desk()
{
    return ScenarioConfig{};
}

ScenarioConfig ScenarioConfig::full_scale()
{
    ScenarioConfig c;
    c.n_t = 16;
    c.n_r = 25;
    c.m = 100;
    c.i_max = 100;
    c.block_list = {1, 5, 10, 20, 50, 100};
    c.fixed_blocks = 20;
    c.subarray_elements = 20;
    c.speeds = {1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 50.0};
    c.k = 3;
    c.n = 32;
    c.bb_blocks = 20;
    c.distances = {800.0, 1000.0, 1500.0};
    return c;
}

LinkGeometry ScenarioConfig::geometry() const
{
    LinkGeometry g;
    g.d_BR = d_br;
    g.d_RV = d_rv;
    g.alpha_BR = alpha_br;
    g.alpha_RV = alpha_rv;
    g.P0_dB = p0_db;
    return g;
}

PassiveMode ScenarioConfig::passive() const
{
    if (passive_mode == "auto")
        return PassiveMode::Auto;
    if (passive_mode == "closed_form")
        return PassiveMode::ClosedForm;
    if (passive_mode == "gradient")
        return PassiveMode::Gradient;
    if (passive_mode == "exhaustive")
        return PassiveMode::Exhaustive;
    config_error("passive_mode must be one of auto, closed_form, gradient, exhaustive");
}

std::vector<std::uint64_t> ScenarioConfig::seed_list() const
{
    std::vector<std::uint64_t> out;
    for (int i = 0; i < seeds; ++i)
        out.push_back(base_seed + static_cast<std::uint64_t>(i));
    return out;
}

void ScenarioConfig::validate() const
{
    auto need = [](bool ok, const std::string &what)
    {
        if (!ok)
            config_error(what);
    };
    need(n_t >= 1 && n_r >= 1 && m >= 1, "n_t, n_r and m must be positive");
    need(i_max >= 1 && i_max <= m, "i_max must lie in [1, m]");
    need(t == 0 || t >= n_t, "t must be 0 or at least n_t");
    need(d_br > 0.0 && d_rv > 0.0, "distances must be positive");
    need(alpha_br > 0.0 && alpha_rv > 0.0, "path-loss exponents must be positive");
    need(f_c > 0.0 && bandwidth_nb > 0.0 && bandwidth_bb > 0.0, "carrier and bandwidths must be positive");
    need(tau_rms >= 0.0, "tau_rms must be non-negative");
    need(velocity > 0.0, "velocity must be positive");
    need(los_factor >= 1.0, "los_factor must be at least 1");
    need(los_blocks >= 1, "los_blocks must be positive");
    need(psi_bits_variant >= 0 && psi_bits_variant <= 16, "psi_bits_variant must lie in [0, 16]");
    (void)passive();
    need(nb_max_outer >= 1, "nb_max_outer must be positive");
    need(!block_list.empty(), "block_list must not be empty");
    for (int I : block_list)
        need(I >= 1 && I <= i_max, "block_list entries must lie in [1, i_max]");
    need(!speeds.empty(), "speeds must not be empty");
    for (double v : speeds)
        need(v > 0.0, "speeds must be positive");
    need(fixed_blocks >= 1 && fixed_blocks <= m, "fixed_blocks must lie in [1, m]");
    need(subarray_elements >= 1 && subarray_elements <= m, "subarray_elements must lie in [1, m]");
    need(selector_seeds >= 1, "selector_seeds must be positive");
    need(k >= 1 && n >= 1, "k and n must be positive");
    need(bb_blocks >= 1 && bb_blocks <= m, "bb_blocks must lie in [1, m]");
    need(static_cast<int>(distances.size()) == k, "distances needs exactly k entries");
    for (double d : distances)
        need(d > 0.0, "distances must be positive");
    need(c_min >= 0.0, "c_min must be non-negative");
    need(p_max >= 0.0, "p_max must be non-negative");
    need(bb_rounds >= 1 && sweep_rounds >= 1, "round caps must be positive");
    need(!n_list.empty() && !k_list.empty(), "n_list and k_list must not be empty");
    for (int v : n_list)
        need(v >= 1, "n_list entries must be positive");
    for (int v : k_list)
        need(v >= 1 && v <= static_cast<int>(sweep_distances.size()),
             "k_list entries must lie in [1, size of sweep_distances]");
    for (double d : sweep_distances)
        need(d > 0.0, "sweep_distances must be positive");
    need(seeds >= 1, "seeds must be positive");
    need(threads >= 0, "threads must be non-negative");
}

std::string emit_config(const ScenarioConfig &cfg)
{
    json j = json::object();
    ScenarioConfig copy = cfg;
    for_each_field(copy, [&](const char *name, auto &member) { j[name] = member; });
    return j.dump(2);
}

namespace
{

void overlay(ScenarioConfig &cfg, const json &doc)
{
    if (!doc.is_object())
        config_error("configuration must be a JSON object");
    std::set<std::string> known;
    for_each_field(cfg, [&](const char *name, auto &) { known.insert(name); });
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (!known.count(it.key()))
            config_error("unknown configuration key '" + it.key() + "'");
    for_each_field(cfg,
                   [&](const char *name, auto &member)
                   {
                       auto it = doc.find(name);
                       if (it == doc.end())
                           return;
                       try
                       {
                           it->get_to(member);
                       }
                       catch (const json::exception &e)
                       {
                           config_error(std::string("bad value for '") + name + "': " + e.what());
                       }
                   });
}

} // namespace

ScenarioConfig parse_config(const std::string &text, const ScenarioConfig &base)
{
    json doc;
    try
    {
        doc = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        config_error(std::string("configuration is not valid JSON: ") + e.what());
    }
    ScenarioConfig cfg = base;
    overlay(cfg, doc);
    cfg.validate();
    return cfg;
}

ScenarioConfig apply_env_overrides(const ScenarioConfig &cfg, const std::map<std::string, std::string> &env)
{
    const std::string prefix = "RISVCOM_";
    std::map<std::string, std::string> by_key;
    ScenarioConfig probe = cfg;
    for_each_field(probe,
                   [&](const char *name, auto &)
                   {
                       std::string up = name;
                       std::transform(up.begin(), up.end(), up.begin(), [](unsigned char ch) { return std::toupper(ch); });
                       by_key[prefix + up] = name;
                   });
    json doc = json::object();
    for (const auto &[var, value] : env)
    {
        if (var.rfind(prefix, 0) != 0)
            continue;
        auto it = by_key.find(var);
        if (it == by_key.end())
            config_error("unknown override variable " + var);
        json parsed = json::parse(value, nullptr, false);
        doc[it->second] = parsed.is_discarded() ? json(value) : parsed;
    }
    ScenarioConfig out = cfg;
    overlay(out, doc);
    out.validate();
    return out;
}

std::map<std::string, std::string> environment_with_prefix(const std::string &prefix)
{
    std::map<std::string, std::string> out;
    for (char **e = environ; e && *e; ++e)
    {
        const std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            continue;
        const std::string key = entry.substr(0, eq);
        if (key.rfind(prefix, 0) == 0)
            out[key] = entry.substr(eq + 1);
    }
    return out;
}

std::uint64_t config_hash(const ScenarioConfig &cfg)
{
    return fnv1a(emit_config(cfg));
}

// ---------------------------------------------------------------- tables

std::string ResultTable::csv() const
{
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c)
        out += (c ? "," : "") + columns[c];
    out += '\n';
    for (const auto &row : rows)
    {
        for (std::size_t c = 0; c < row.size(); ++c)
        {
            if (c)
                out += ',';
            out += format_number(row[c]);
        }
        out += '\n';
    }
    return out;
}

std::string ResultTable::manifest_json() const
{
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(config_hash));
    json j;
    j["experiment"] = experiment;
    j["config_hash"] = hash;
    j["seeds"] = seeds;
    j["version"] = version;
    j["wall_time_s"] = wall_time;
    j["columns"] = columns;
    j["rows"] = rows.size();
    j["created_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
    return j.dump(2) + "\n";
}

void ResultTable::write(const std::filesystem::path &dir) const
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / (experiment + ".csv"), std::ios::binary);
        f << csv();
        if (!f)
            throw Error(ErrorCode::ConfigError, "cannot write " + (dir / (experiment + ".csv")).string());
    }
    std::ofstream m(dir / (experiment + ".manifest.json"), std::ios::binary);
    m << manifest_json();
    if (!m)
        throw Error(ErrorCode::ConfigError, "cannot write manifest for " + experiment);
}

void finalize_table(ResultTable &table, int key_cols, int value_from)
{
    auto less = [](const std::vector<double> &a, const std::vector<double> &b)
    {
        // NaN compares as larger than any number so the order stays total
        for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
        {
            const bool na = std::isnan(a[i]), nb = std::isnan(b[i]);
            if (na != nb)
                return nb;
            if (!na && a[i] != b[i])
                return a[i] < b[i];
        }
        return a.size() < b.size();
    };
    std::vector<std::vector<double>> records;
    for (auto &r : table.rows)
        if (r.at(0) == agg_record)
            records.push_back(std::move(r));
    std::sort(records.begin(), records.end(), less);

    std::vector<std::vector<double>> out = records;
    std::size_t i = 0;
    while (i < records.size())
    {
        std::size_t j = i;
        auto same_key = [&](std::size_t a, std::size_t b)
        {
            for (int c = 1; c <= key_cols; ++c)
                if (records[a][c] != records[b][c])
                    return false;
            return true;
        };
        while (j < records.size() && same_key(i, j))
            ++j;
        std::vector<double> mean(records[i].size(), 0.0), sd(records[i].size(), 0.0);
        for (int c = 1; c <= key_cols; ++c)
            mean[c] = sd[c] = records[i][c];
        for (std::size_t c = static_cast<std::size_t>(key_cols) + 1; c < static_cast<std::size_t>(value_from); ++c)
            mean[c] = sd[c] = -1.0;
        for (std::size_t c = static_cast<std::size_t>(value_from); c < mean.size(); ++c)
        {
            double s = 0.0, s2 = 0.0;
            int cnt = 0;
            for (std::size_t r = i; r < j; ++r)
                if (!std::isnan(records[r][c]))
                {
                    s += records[r][c];
                    ++cnt;
                }
            const double mu = cnt ? s / cnt : std::numeric_limits<double>::quiet_NaN();
            for (std::size_t r = i; r < j; ++r)
                if (!std::isnan(records[r][c]))
                    s2 += (records[r][c] - mu) * (records[r][c] - mu);
            mean[c] = mu;
            sd[c] = cnt > 1 ? std::sqrt(s2 / (cnt - 1)) : 0.0;
        }
        mean[0] = agg_mean;
        sd[0] = agg_std;
        out.push_back(std::move(mean));
        out.push_back(std::move(sd));
        i = j;
    }
    table.rows = std::move(out);
}

std::vector<std::vector<std::vector<double>>> run_jobs(int count, int threads,
                                                       const std::function<std::vector<std::vector<double>>(int)> &job)
{
    std::vector<std::vector<std::vector<double>>> results(static_cast<std::size_t>(std::max(count, 0)));
    std::vector<std::exception_ptr> errors(results.size());
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(count, 1));
    std::atomic<int> next{0};
    auto worker = [&]
    {
        for (int i = next++; i < count; i = next++)
        {
            try
            {
                results[i] = job(i);
            }
            catch (...)
            {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1)
    {
        worker();
    }
    else
    {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (auto &th : pool)
            th.join();
    }
    for (auto &e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

// ---------------------------------------------------------------- narrowband helpers

NbContext nb_context(const ScenarioConfig &cfg)
{
    return {noise_power(cfg.n0_dbm_hz, cfg.bandwidth_nb), dbm_to_watt(cfg.p_t_dbm), dbm_to_watt(cfg.p_u_dbm)};
}

TrainingRun run_training(const ChannelSet &cs, int I_max, const ScenarioConfig &cfg, RngStream &rng, int psi_bits)
{
    const NbContext ctx = nb_context(cfg);
    PilotOptions opt;
    opt.P_u = ctx.P_u;
    opt.psi_bits = psi_bits;
    TrainingRun run;
    run.sched = build_pilots(build_grouping(static_cast<int>(cs.m()), I_max), cfg.slots(), cfg.n_t, rng, opt);
    const CTensor3 Y = simulate_training_rx(cs, run.sched, ctx.sigma2, rng);
    run.Ybar = unfold_and_equalize(Y, run.sched.X);
    return run;
}

AggregatedEstimate estimate_prefix(const TrainingRun &run, int I)
{
    if (I < 1 || I > run.sched.I())
        throw Error(ErrorCode::BadRange, "block count outside the training run");
    return estimate_aggregated(run.Ybar.topRows(I), psi_prefix(run.sched, I), run.sched.grouping.blocks[I - 1]);
}

AggregatedEstimate estimate_statistical(const ChannelSet &cs, int I, const ScenarioConfig &cfg, RngStream &rng)
{
    const NbContext ctx = nb_context(cfg);
    PilotOptions opt;
    opt.P_u = ctx.P_u;
    const GroupingScheme grouping = build_grouping(static_cast<int>(cs.m()), I);
    const PilotSchedule sched = build_pilots(grouping, cfg.slots(), cfg.n_t, rng, opt);
    std::vector<CMatrix> Ybars;
    for (int b = 0; b < cfg.los_blocks; ++b)
    {
        const ChannelSet fresh = refresh_nlos(cs, rng);
        Ybars.push_back(unfold_and_equalize(simulate_training_rx(fresh, sched, ctx.sigma2, rng), sched.X));
    }
    return estimate_los(Ybars, sched.Psi, grouping.final_groups());
}

GroupChannels truth_groups(const ChannelSet &cs, const std::vector<Range> &groups)
{
    const CMatrix agg = aggregate_truth(cascaded_channel(cs.H(), cs.G), groups);
    return group_channels(agg, static_cast<int>(cs.n_r()), static_cast<int>(cs.n_t()), sizes_of(groups));
}

GroupChannels los_truth_groups(const ChannelSet &cs, const std::vector<Range> &groups)
{
    const CMatrix agg = aggregate_truth(cascaded_channel(cs.H_los, cs.G), groups);
    return group_channels(agg, static_cast<int>(cs.n_r()), static_cast<int>(cs.n_t()), sizes_of(groups));
}

GroupChannels groups_from_estimate(const AggregatedEstimate &est, int N_r, int N_t)
{
    return group_channels(est.H_agg, N_r, N_t, sizes_of(est.groups));
}

NbOutcome optimize_and_evaluate(const GroupChannels &csi, const GroupChannels &truth, const PhaseVector &theta0,
                                const NbContext &ctx, const NBOptions &opt)
{
    NbOutcome out;
    out.solution = alternating_optimize(csi, ctx.sigma2, ctx.P_t, theta0, opt);
    out.rate_on_truth = rate_nb(out.solution.theta, make_equivalent(truth, out.solution.F), ctx.sigma2);
    return out;
}

BroadbandConfig broadband_config(const ScenarioConfig &cfg, int K, int N, const std::vector<double> &distances)
{
    BroadbandConfig b;
    b.K = K;
    b.N = N;
    b.N_t = cfg.n_t;
    b.N_r = cfg.n_r;
    b.M = cfg.m;
    b.I = cfg.bb_blocks;
    b.bandwidth = cfg.bandwidth_bb;
    b.f_c = cfg.f_c;
    b.P_tot = dbm_to_watt(cfg.p_tot_dbm);
    b.P_max = cfg.p_max;
    b.C_min = cfg.c_min;
    b.N0_dbm = cfg.n0_dbm_hz;
    b.K_dB = cfg.rician_k_db;
    b.distances.assign(distances.begin(), distances.begin() + K);
    b.velocities.assign(static_cast<std::size_t>(K), cfg.velocity);
    b.geometry = cfg.geometry();
    return b;
}

// ---------------------------------------------------------------- experiments

std::vector<ResultTable> cmd_nmse_vs_blocks(const ScenarioConfig &cfg)
{
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto seeds = cfg.seed_list();
    const int I_max = *std::max_element(cfg.block_list.begin(), cfg.block_list.end());
    ResultTable table = make_table("nmse", cfg, {"I", "seed", "nmse_agg", "nmse_full", "nmse_full_quantized"});

    auto job = [&](int s)
    {
        RngStream rng(seeds[s], stream_tag("nmse", 0));
        const ChannelSet cs = sample_nb(cfg, rng);
        const CMatrix full = cascaded_channel(cs.H(), cs.G);
        RngStream train_rng = rng.split(1);
        RngStream quant_rng = rng.split(2);
        const TrainingRun run = run_training(cs, I_max, cfg, train_rng);
        const TrainingRun quant = run_training(cs, I_max, cfg, quant_rng, cfg.psi_bits_variant);
        std::vector<std::vector<double>> rows;
        for (int I : cfg.block_list)
        {
            const AggregatedEstimate est = estimate_prefix(run, I);
            const AggregatedEstimate est_q = estimate_prefix(quant, I);
            const CMatrix agg_truth = aggregate_truth(full, est.groups);
            rows.push_back({double(I), double(seeds[s]), nmse(est.H_agg, agg_truth),
                            nmse(expand_to_elements(est.H_agg, est.groups, cfg.m), full),
                            nmse(expand_to_elements(est_q.H_agg, est_q.groups, cfg.m), full)});
        }
        return rows;
    };
    append_rows(table, run_jobs(static_cast<int>(seeds.size()), cfg.threads, job));
    finalize_table(table, 1, 3);
    table.wall_time = seconds_since(t0);
    return {table};
}

std::vector<ResultTable> cmd_nb_convergence(const ScenarioConfig &cfg)
{
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto seeds = cfg.seed_list();
    const int I = cfg.i_max;
    const int length = cfg.nb_max_outer * (I + 1);
    const NbContext ctx = nb_context(cfg);
    const NBOptions opt = nb_options(cfg);
    ResultTable table = make_table("nb-converge", cfg, {"init", "step", "seed", "outer", "inner", "active", "rate"});

    auto job = [&](int s)
    {
        RngStream rng(seeds[s], stream_tag("nb-converge", 0));
        const ChannelSet cs = sample_nb(cfg, rng);
        RngStream train_rng = rng.split(1);
        RngStream los_rng = rng.split(2);
        RngStream init_rng = rng.split(3);
        const AggregatedEstimate small = estimate_prefix(run_training(cs, I, cfg, train_rng), I);
        const AggregatedEstimate los = estimate_statistical(cs, I, cfg, los_rng);
        const GroupChannels driving = groups_from_estimate(small, cfg.n_r, cfg.n_t);
        const GroupChannels los_csi = groups_from_estimate(los, cfg.n_r, cfg.n_t);

        const PhaseVector theta_los = alternating_optimize(los_csi, ctx.sigma2, ctx.P_t, ones(I), opt).theta;
        const PhaseVector theta_rand = random_phases(I, init_rng);

        std::vector<std::vector<double>> rows;
        for (int init = 0; init < 2; ++init)
        {
            const NBSolution sol = alternating_optimize(driving, ctx.sigma2, ctx.P_t, init ? theta_los : theta_rand, opt);
            for (int step = 0; step < length; ++step)
            {
                // Finished traces are held at their final point so every seed has the same length
                const bool real = step < static_cast<int>(sol.trace.size());
                const NBTracePoint &p = real ? sol.trace[step] : sol.trace.back();
                rows.push_back({double(init), double(step), double(seeds[s]), double(p.outer), double(p.inner),
                                real ? double(p.active) : -1.0, p.rate});
            }
        }
        return rows;
    };
    append_rows(table, run_jobs(static_cast<int>(seeds.size()), cfg.threads, job));
    finalize_table(table, 2, 4);
    table.wall_time = seconds_since(t0);
    return {table};
}

std::vector<ResultTable> cmd_rate_vs_blocks(const ScenarioConfig &cfg)
{
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto seeds = cfg.seed_list();
    const NbContext ctx = nb_context(cfg);
    const NBOptions opt = nb_options(cfg);
    ResultTable table = make_table("rate-vs-blocks", cfg,
                                   {"I", "seed", "perfect_ungrouped", "estimated_ungrouped", "perfect_grouped",
                                    "statistical_grouped", "proposed"});

    auto job = [&](int s)
    {
        RngStream rng(seeds[s], stream_tag("rate-vs-blocks", 0));
        const ChannelSet cs = sample_nb(cfg, rng);
        RngStream train_rng = rng.split(1);
        RngStream los_rng = rng.split(2);
        const int I_max = std::max(cfg.m, *std::max_element(cfg.block_list.begin(), cfg.block_list.end()));
        const TrainingRun run = run_training(cs, cfg.m, cfg, train_rng);

        const std::vector<Range> singletons = build_grouping(cfg.m, cfg.m).final_groups();
        const GroupChannels truth_full = truth_groups(cs, singletons);
        const double perfect_ungrouped = optimize_and_evaluate(truth_full, truth_full, ones(cfg.m), ctx, opt).rate_on_truth;
        const GroupChannels est_full = groups_from_estimate(estimate_prefix(run, cfg.m), cfg.n_r, cfg.n_t);
        const double estimated_ungrouped = optimize_and_evaluate(est_full, truth_full, ones(cfg.m), ctx, opt).rate_on_truth;
        (void)I_max;

        std::vector<std::vector<double>> rows;
        for (int I : cfg.block_list)
        {
            const AggregatedEstimate est = estimate_prefix(run, I);
            const GroupChannels truth = truth_groups(cs, est.groups);
            const double perfect = optimize_and_evaluate(truth, truth, ones(I), ctx, opt).rate_on_truth;
            RngStream point_rng = los_rng.split(static_cast<std::uint64_t>(I));
            const GroupChannels stat = groups_from_estimate(estimate_statistical(cs, I, cfg, point_rng), cfg.n_r, cfg.n_t);
            const NbOutcome statistical = optimize_and_evaluate(stat, truth, ones(I), ctx, opt);
            // Two-stage: start from the statistical solution, refine on the small-timescale estimate
            const GroupChannels small = groups_from_estimate(est, cfg.n_r, cfg.n_t);
            const double proposed =
                optimize_and_evaluate(small, truth, statistical.solution.theta, ctx, opt).rate_on_truth;
            rows.push_back({double(I), double(seeds[s]), perfect_ungrouped, estimated_ungrouped, perfect,
                            statistical.rate_on_truth, proposed});
        }
        return rows;
    };
    append_rows(table, run_jobs(static_cast<int>(seeds.size()), cfg.threads, job));
    finalize_table(table, 1, 3);
    table.wall_time = seconds_since(t0);
    return {table};
}

namespace
{

// Rates on the true channel of one channel draw for every block count the speed sweep uses
struct SpeedRates
{
    std::map<int, double> by_blocks; // 0 = statistical CSI
    double subarray = 0.0;
};

SpeedRates speed_rates(const ScenarioConfig &cfg, std::uint64_t seed, const std::string &tag,
                       const std::vector<int> &candidates)
{
    const NbContext ctx = nb_context(cfg);
    const NBOptions opt = nb_options(cfg);
    RngStream rng(seed, stream_tag(tag, 0));
    const ChannelSet cs = sample_nb(cfg, rng);
    RngStream train_rng = rng.split(1);
    RngStream los_rng = rng.split(2);
    RngStream sub_rng = rng.split(3);

    SpeedRates out;
    const TrainingRun run = run_training(cs, cfg.m, cfg, train_rng);
    // Statistical CSI at full resolution; it is gathered on the long timescale
    const std::vector<Range> singletons = build_grouping(cfg.m, cfg.m).final_groups();
    const GroupChannels stat_full =
        groups_from_estimate(estimate_statistical(cs, cfg.m, cfg, los_rng), cfg.n_r, cfg.n_t);
    const NbOutcome stat = optimize_and_evaluate(stat_full, truth_groups(cs, singletons), ones(cfg.m), ctx, opt);
    out.by_blocks[0] = stat.rate_on_truth;

    for (int I : candidates)
    {
        if (I == 0 || out.by_blocks.count(I))
            continue;
        const AggregatedEstimate est = estimate_prefix(run, I);
        const GroupChannels truth = truth_groups(cs, est.groups);
        // Statistical phases summed per group seed the small-timescale refinement
        PhaseVector theta0(static_cast<std::size_t>(I));
        for (int g = 0; g < I; ++g)
        {
            cd acc{0.0, 0.0};
            for (int e = est.groups[g].begin; e < est.groups[g].end; ++e)
                acc += stat.solution.theta[e];
            theta0[g] = std::abs(acc) > 0.0 ? acc / std::abs(acc) : cd{1.0, 0.0};
        }
        out.by_blocks[I] =
            optimize_and_evaluate(groups_from_estimate(est, cfg.n_r, cfg.n_t), truth, theta0, ctx, opt).rate_on_truth;
    }

    // Smaller RIS holding only the leading elements, every element estimated
    const int Ms = cfg.subarray_elements;
    ChannelSet sub = cs;
    sub.H_los = cs.H_los.topRows(Ms);
    sub.H_nlos = cs.H_nlos.topRows(Ms);
    sub.G = cs.G.leftCols(Ms);
    const TrainingRun sub_run = run_training(sub, Ms, cfg, sub_rng);
    const AggregatedEstimate sub_est = estimate_prefix(sub_run, Ms);
    out.subarray = optimize_and_evaluate(groups_from_estimate(sub_est, cfg.n_r, cfg.n_t), truth_groups(sub, sub_est.groups),
                                         ones(Ms), ctx, opt)
                       .rate_on_truth;
    return out;
}

} // namespace

std::vector<ResultTable> cmd_rate_vs_speed(const ScenarioConfig &cfg)
{
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto seeds = cfg.seed_list();
    std::vector<int> candidates{0, cfg.fixed_blocks, cfg.m};
    for (int I : cfg.block_list)
        candidates.push_back(I);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Offline rate predictor for the selector, from its own channel draws
    std::vector<std::uint64_t> calib_seeds;
    for (int i = 0; i < cfg.selector_seeds; ++i)
        calib_seeds.push_back(cfg.base_seed + 1000003ULL + static_cast<std::uint64_t>(i));
    const auto calib = run_jobs(static_cast<int>(calib_seeds.size()), cfg.threads,
                                [&](int s)
                                {
                                    const SpeedRates r = speed_rates(cfg, calib_seeds[s], "rate-vs-speed/selector", candidates);
                                    std::vector<double> row;
                                    for (int I : candidates)
                                        row.push_back(r.by_blocks.at(I));
                                    return std::vector<std::vector<double>>{row};
                                });
    std::map<int, double> predicted;
    for (std::size_t c = 0; c < candidates.size(); ++c)
    {
        double acc = 0.0;
        for (const auto &rows : calib)
            acc += rows[0][c];
        predicted[candidates[c]] = acc / static_cast<double>(calib.size());
    }

    const double slot = cfg.slot();
    const int T = cfg.slots();
    SelectorParams sp{T, slot, cfg.f_c};
    ResultTable table = make_table("rate-vs-speed", cfg,
                                   {"v", "seed", "adaptive", "fixed_blocks", "full_subarray", "full_parafac",
                                    "statistical", "selected_I"});

    auto job = [&](int s)
    {
        const SpeedRates r = speed_rates(cfg, seeds[s], "rate-vs-speed", candidates);
        std::vector<std::vector<double>> rows;
        for (double v : cfg.speeds)
        {
            const double T_c = coherence_from_speed(v, cfg.f_c);
            auto ach = [&](int I) { return achievable_rate(r.by_blocks.at(I), double(I) * T * slot, T_c); };
            const int chosen = select_pilot_blocks(v, sp, [&](int I) { return predicted.at(I); }, candidates);
            rows.push_back({v, double(seeds[s]), ach(chosen), ach(cfg.fixed_blocks),
                            achievable_rate(r.subarray, double(cfg.subarray_elements) * T * slot, T_c), ach(cfg.m),
                            ach(0), double(chosen)});
        }
        return rows;
    };
    append_rows(table, run_jobs(static_cast<int>(seeds.size()), cfg.threads, job));
    finalize_table(table, 1, 3);
    table.wall_time = seconds_since(t0);
    return {table};
}

std::vector<ResultTable> cmd_bb_allocate(const ScenarioConfig &cfg)
{
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto seeds = cfg.seed_list();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    ResultTable trace = make_table("bb-allocate", cfg,
                                   {"round", "vue", "seed", "throughput", "power", "total", "qos_met"});
    auto trace_job = [&](int s)
    {
        RngStream rng(seeds[s], stream_tag("bb-allocate", 0));
        const BroadbandScenario scen = make_broadband_scenario(broadband_config(cfg, cfg.k, cfg.n, cfg.distances), rng);
        P1Options opt;
        opt.rounds = cfg.bb_rounds;
        std::vector<std::vector<double>> rows;
        P1Result res;
        try
        {
            res = alternate_P1(scen, opt);
        }
        catch (const Error &e)
        {
            if (e.code() != ErrorCode::QoSInfeasible)
                throw;
            for (int k = 0; k < cfg.k; ++k)
                rows.push_back({1.0, double(k), double(seeds[s]), nan, nan, nan, 0.0});
            return rows;
        }
        // Structural constraints are re-checked before anything is written
        for (const auto &v : check_feasible(res.alloc, scen, res.throughput.per_vue))
            if (v.constraint != "qos")
                throw Error(ErrorCode::InfeasibleAllocation, "allocation violates " + v.constraint);
        bool qos = true;
        for (double r : res.throughput.per_vue)
            qos = qos && r >= cfg.c_min * (1.0 - 1e-3);
        // Converged runs are held at their last round so every seed covers bb_rounds rounds
        for (int r = 1; r <= cfg.bb_rounds; ++r)
        {
            const P1Round &round = res.trace[std::min<std::size_t>(r, res.trace.size()) - 1];
            for (int k = 0; k < cfg.k; ++k)
                rows.push_back({double(r), double(k), double(seeds[s]), round.per_vue[k], round.power_per_vue[k],
                                round.total, qos ? 1.0 : 0.0});
        }
        return rows;
    };
    append_rows(trace, run_jobs(static_cast<int>(seeds.size()), cfg.threads, trace_job));

    ResultTable sweep = make_table("bb-allocate-sweep", cfg, {"N", "K", "seed", "total", "min_vue", "feasible"});
    struct Point
    {
        int N, K;
        std::uint64_t seed;
    };
    std::vector<Point> points;
    for (int N : cfg.n_list)
        for (int K : cfg.k_list)
            for (auto sd : seeds)
                points.push_back({N, K, sd});
    auto sweep_job = [&](int i)
    {
        const Point &pt = points[i];
        RngStream rng(pt.seed, stream_tag("bb-allocate-sweep", static_cast<std::uint64_t>(pt.N * 1000 + pt.K)));
        const BroadbandScenario scen =
            make_broadband_scenario(broadband_config(cfg, pt.K, pt.N, cfg.sweep_distances), rng);
        P1Options opt;
        opt.rounds = cfg.sweep_rounds;
        try
        {
            const P1Result res = alternate_P1(scen, opt);
            for (const auto &v : check_feasible(res.alloc, scen, res.throughput.per_vue))
                if (v.constraint != "qos")
                    throw Error(ErrorCode::InfeasibleAllocation, "allocation violates " + v.constraint);
            const double worst = *std::min_element(res.throughput.per_vue.begin(), res.throughput.per_vue.end());
            return std::vector<std::vector<double>>{
                {double(pt.N), double(pt.K), double(pt.seed), res.throughput.total, worst, 1.0}};
        }
        catch (const Error &e)
        {
            if (e.code() != ErrorCode::QoSInfeasible)
                throw;
            return std::vector<std::vector<double>>{{double(pt.N), double(pt.K), double(pt.seed), nan, nan, 0.0}};
        }
    };
    append_rows(sweep, run_jobs(static_cast<int>(points.size()), cfg.threads, sweep_job));

    auto all_infeasible = [](const ResultTable &t, std::size_t col)
    {
        for (const auto &r : t.rows)
            if (r[col] != 0.0)
                return false;
        return !t.rows.empty();
    };
    if (all_infeasible(trace, 7))
        throw Error(ErrorCode::QoSInfeasible, "no seed admits an allocation meeting the QoS floor");

    finalize_table(trace, 2, 4);
    finalize_table(sweep, 2, 4);
    trace.wall_time = sweep.wall_time = seconds_since(t0);
    return {trace, sweep};
}

} // namespace risvcom
