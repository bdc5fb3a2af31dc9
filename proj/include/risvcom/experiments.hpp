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

#ifndef RISVCOM_EXPERIMENTS_HPP
#define RISVCOM_EXPERIMENTS_HPP

#include "risvcom/beamform_nb.hpp"
#include "risvcom/estimation.hpp"
#include "risvcom/ofdm.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace risvcom
{

// Every tunable constant of the experiment suite. Keys in the JSON document use the
// member names below; unknown keys are rejected.
struct ScenarioConfig
{
    // Arrays and RIS
    int n_t = 4;
    int n_r = 4;
    int m = 16;
    int i_max = 16;
    int t = 0; // slots per training block, 0 = n_t

    // Large-scale channel
    double d_br = 1500.0;
    double d_rv = 2.0;
    double alpha_br = 2.2;
    double alpha_rv = 2.8;
    double p0_db = -30.0;
    double rician_k_db = 5.0;
    double n0_dbm_hz = -174.0;
    double f_c = 3.5e9;
    double tau_rms = 1e-6;

    // Narrowband
    double bandwidth_nb = 1e6;
    double p_u_dbm = 30.0;
    double p_t_dbm = 20.0;
    double velocity = 27.78;
    double los_factor = 50.0;
    int los_blocks = 10;
    int psi_bits_variant = 2;
    std::string passive_mode = "auto";
    int nb_max_outer = 20;
    std::vector<int> block_list{1, 2, 4, 8, 16};
    std::vector<double> speeds{1.0, 25.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 800.0, 1000.0};
    int fixed_blocks = 4;    // the fixed-I baseline of the speed sweep
    int subarray_elements = 4; // the fully estimated subarray baseline
    int selector_seeds = 50;

    // Broadband
    double bandwidth_bb = 1e7;
    int k = 2;
    int n = 8;
    int bb_blocks = 8;
    std::vector<double> distances{800.0, 1000.0};
    double c_min = 3e7;
    double p_tot_dbm = 30.0;
    double p_max = 0.0; // W per carrier, 0 = 4 P_tot / 32
    int bb_rounds = 10;
    int sweep_rounds = 3;
    std::vector<int> n_list{32, 64, 128};
    std::vector<int> k_list{2, 3};
    std::vector<double> sweep_distances{800.0, 1000.0, 1500.0, 1200.0, 900.0, 1100.0};

    // Runner
    int seeds = 20;
    std::uint64_t base_seed = 1;
    int threads = 0; // 0 = hardware concurrency

    // Reduced dimensions for routine runs
    static ScenarioConfig desk();
    // Full simulation constants
    static ScenarioConfig full_scale();

    int slots() const { return t > 0 ? t : n_t; }
    double slot() const { return 1.0 / bandwidth_nb; }
    LinkGeometry geometry() const;
    PassiveMode passive() const;
    std::vector<std::uint64_t> seed_list() const;

    // Throws ConfigError describing the first invalid field
    void validate() const;

    bool operator==(const ScenarioConfig &) const = default;
};

// JSON round trip. `parse_config` overlays the keys of `text` on `base`.
std::string emit_config(const ScenarioConfig &cfg);
ScenarioConfig parse_config(const std::string &text, const ScenarioConfig &base = ScenarioConfig::desk());
// Applies RISVCOM_<KEY> variables (key upper-cased) from `env`; values are JSON or bare strings
ScenarioConfig apply_env_overrides(const ScenarioConfig &cfg, const std::map<std::string, std::string> &env);
std::map<std::string, std::string> environment_with_prefix(const std::string &prefix = "RISVCOM_");
// FNV-1a 64 of the canonical JSON form
std::uint64_t config_hash(const ScenarioConfig &cfg);

struct ResultTable
{
    std::string experiment;
    std::vector<std::string> columns; // always starts with "agg"
    std::vector<std::vector<double>> rows;

    // Manifest fields
    std::uint64_t config_hash = 0;
    std::vector<std::uint64_t> seeds;
    std::string version;
    double wall_time = 0.0;

    // CSV body: header plus rows, deterministic formatting
    std::string csv() const;
    std::string manifest_json() const;
    void write(const std::filesystem::path &dir) const;
};

// agg column values
constexpr double agg_record = 0.0;
constexpr double agg_mean = 1.0;
constexpr double agg_std = 2.0;

// Sorts the per-seed records and appends mean/std rows for every distinct value of the
// first `key_cols` data columns (after "agg"), averaging the columns from `value_from`.
void finalize_table(ResultTable &table, int key_cols, int value_from);

// Runs job(i) for i in [0, count) on a pool of `threads` workers; results are kept in job order
std::vector<std::vector<std::vector<double>>> run_jobs(int count, int threads,
                                                       const std::function<std::vector<std::vector<double>>(int)> &job);

// Narrowband helpers shared by the experiments and the acceptance checks
struct NbContext
{
    double sigma2 = 0.0; // receiver noise power
    double P_t = 0.0;    // W
    double P_u = 0.0;    // W
};
NbContext nb_context(const ScenarioConfig &cfg);

// Estimated small-timescale aggregated channel for block count I from one training run
struct TrainingRun
{
    PilotSchedule sched;
    CMatrix Ybar; // I_max x (N_r N_t)
};
TrainingRun run_training(const ChannelSet &cs, int I_max, const ScenarioConfig &cfg, RngStream &rng,
                         int psi_bits = 0);
AggregatedEstimate estimate_prefix(const TrainingRun &run, int I);

// Statistical CSI: LoS estimate at grouping I from cfg.los_blocks blocks with fresh NLoS draws
AggregatedEstimate estimate_statistical(const ChannelSet &cs, int I, const ScenarioConfig &cfg, RngStream &rng);

// Optimizes on `csi` from `theta0` and returns the rate of the result on `truth`
struct NbOutcome
{
    NBSolution solution;
    double rate_on_truth = 0.0;
};
NbOutcome optimize_and_evaluate(const GroupChannels &csi, const GroupChannels &truth, const PhaseVector &theta0,
                                const NbContext &ctx, const NBOptions &opt);

GroupChannels truth_groups(const ChannelSet &cs, const std::vector<Range> &groups);
GroupChannels los_truth_groups(const ChannelSet &cs, const std::vector<Range> &groups);
GroupChannels groups_from_estimate(const AggregatedEstimate &est, int N_r, int N_t);

BroadbandConfig broadband_config(const ScenarioConfig &cfg, int K, int N, const std::vector<double> &distances);

// Experiments
std::vector<ResultTable> cmd_nmse_vs_blocks(const ScenarioConfig &cfg);
std::vector<ResultTable> cmd_nb_convergence(const ScenarioConfig &cfg);
std::vector<ResultTable> cmd_rate_vs_blocks(const ScenarioConfig &cfg);
std::vector<ResultTable> cmd_rate_vs_speed(const ScenarioConfig &cfg);
std::vector<ResultTable> cmd_bb_allocate(const ScenarioConfig &cfg);

} // namespace risvcom

#endif
