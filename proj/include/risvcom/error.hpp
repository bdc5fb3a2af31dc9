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

#ifndef RISVCOM_ERROR_HPP
#define RISVCOM_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace risvcom
{

// Every failure raised by the library carries one of these codes so callers
// (the CLI in particular) can map them to exit statuses without string matching.
enum class ErrorCode
{
    ColumnMismatch,
    SizeMismatch,
    NegativeVariance,
    NotHPD,
    NoConvergence,
    AllZeroGains,
    NonPositiveDistance,
    NonPositiveSpeed,
    BadRange,
    SingularPsi,
    RankDeficientPilot,
    ZeroTruth,
    NoFeasibleCandidate,
    LengthMismatch,
    ZeroChannel,
    RankTooHigh,
    InfeasibleAllocation,
    OutOfRange,
    SurrogateInfeasible,
    QoSInfeasible,
    InfeasibleRegion,
    TooLarge,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept
{
    switch (code)
    {
    case ErrorCode::ColumnMismatch: return "ColumnMismatch";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::NotHPD: return "NotHPD";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::AllZeroGains: return "AllZeroGains";
    case ErrorCode::NonPositiveDistance: return "NonPositiveDistance";
    case ErrorCode::NonPositiveSpeed: return "NonPositiveSpeed";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::SingularPsi: return "SingularPsi";
    case ErrorCode::RankDeficientPilot: return "RankDeficientPilot";
    case ErrorCode::ZeroTruth: return "ZeroTruth";
    case ErrorCode::NoFeasibleCandidate: return "NoFeasibleCandidate";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroChannel: return "ZeroChannel";
    case ErrorCode::RankTooHigh: return "RankTooHigh";
    case ErrorCode::InfeasibleAllocation: return "InfeasibleAllocation";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::SurrogateInfeasible: return "SurrogateInfeasible";
    case ErrorCode::QoSInfeasible: return "QoSInfeasible";
    case ErrorCode::InfeasibleRegion: return "InfeasibleRegion";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

} // namespace risvcom

#endif
