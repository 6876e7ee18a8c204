/*
 * Copyright 2026 The deltasynth Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace deltasynth {

enum class ErrorKind {
    InvalidAction,
    InvalidHorizon,
    InvalidExpr,
    WrongClass,
    NotEventuallyConstant,
    InvalidPresentation,
    MonitorMismatch,
    NotWinning,
    NoWinningStrategy,
    Unsupported,
    BudgetExceeded,
    InvalidParams,
    Schema,
    IO,
    Internal,
};

inline const char *error_kind_name(ErrorKind k)
{
    switch (k) {
    case ErrorKind::InvalidAction: return "InvalidAction";
    case ErrorKind::InvalidHorizon: return "InvalidHorizon";
    case ErrorKind::InvalidExpr: return "InvalidExpr";
    case ErrorKind::WrongClass: return "WrongClass";
    case ErrorKind::NotEventuallyConstant: return "NotEventuallyConstant";
    case ErrorKind::InvalidPresentation: return "InvalidPresentation";
    case ErrorKind::MonitorMismatch: return "MonitorMismatch";
    case ErrorKind::NotWinning: return "NotWinning";
    case ErrorKind::NoWinningStrategy: return "NoWinningStrategy";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::Schema: return "Schema";
    case ErrorKind::IO: return "IO";
    case ErrorKind::Internal: return "Internal";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what)
{
    throw Error(kind, what);
}

} // namespace deltasynth
