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

// Batch experiment runner: one subcommand per experiment, CSV and manifest per table.

#include "risvcom/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace
{

using namespace risvcom;

struct Common
{
    std::string config_path;
    int seeds = 0;
    std::string out = "results";
    bool full_scale = false;
};

void add_common(CLI::App *cmd, Common &c)
{
    cmd->add_option("--config", c.config_path, "JSON scenario file (keys overlay the defaults)");
    cmd->add_option("--seeds", c.seeds, "Number of seeds, overrides the config")->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
    cmd->add_flag("--full-scale", c.full_scale, "Start from the full simulation constants instead of desk scale");
}

ScenarioConfig load(const Common &c)
{
    const ScenarioConfig base = c.full_scale ? ScenarioConfig::full_scale() : ScenarioConfig::desk();
    ScenarioConfig cfg = base;
    if (!c.config_path.empty())
    {
        std::ifstream f(c.config_path);
        if (!f)
            throw Error(ErrorCode::ConfigError, "cannot read " + c.config_path);
        std::stringstream ss;
        ss << f.rdbuf();
        cfg = parse_config(ss.str(), base);
    }
    cfg = apply_env_overrides(cfg, environment_with_prefix("RISVCOM_"));
    if (c.seeds > 0)
        cfg.seeds = c.seeds;
    cfg.validate();
    return cfg;
}

int exit_code(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::ConfigError:
        return 2;
    case ErrorCode::QoSInfeasible:
    case ErrorCode::InfeasibleAllocation:
    case ErrorCode::InfeasibleRegion:
    case ErrorCode::SurrogateInfeasible:
    case ErrorCode::NoFeasibleCandidate:
        return 3;
    default:
        return 4;
    }
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Seeded experiment runner for RIS-aided vehicular links"};
    app.require_subcommand(1);

    using Runner = std::vector<ResultTable> (*)(const ScenarioConfig &);
    const std::vector<std::tuple<std::string, std::string, Runner>> experiments{
        {"nmse", "Estimation NMSE versus the number of training blocks", cmd_nmse_vs_blocks},
        {"nb-converge", "Iteration traces of the narrowband beamformer", cmd_nb_convergence},
        {"rate-vs-blocks", "Narrowband rate versus the number of training blocks", cmd_rate_vs_blocks},
        {"rate-vs-speed", "Achievable rate versus vehicle speed", cmd_rate_vs_speed},
        {"bb-allocate", "Broadband resource allocation traces and carrier-count sweep", cmd_bb_allocate},
    };

    Common common;
    Runner chosen = nullptr;
    for (const auto &[name, help, runner] : experiments)
    {
        auto *cmd = app.add_subcommand(name, help);
        add_common(cmd, common);
        cmd->callback([&chosen, r = runner] { chosen = r; });
    }
    bool print_full = false;
    auto *cfg_cmd = app.add_subcommand("config", "Print the default scenario as JSON");
    cfg_cmd->add_flag("--full-scale", print_full, "Print the full simulation constants");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try
    {
        if (cfg_cmd->parsed())
        {
            std::cout << emit_config(print_full ? ScenarioConfig::full_scale() : ScenarioConfig::desk()) << '\n';
            return 0;
        }
        const ScenarioConfig cfg = load(common);
        for (const auto &table : chosen(cfg))
        {
            table.write(common.out);
            std::cerr << table.experiment << ": " << table.rows.size() << " rows, " << table.wall_time << " s\n";
        }
    }
    catch (const Error &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
