// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eov {

enum class Errc {
    MalformedFrame,
    BadMagic,
    StorageFailure,
    LogUnavailable,
    UnknownTxId,
    PeerUnreachable,
    ChannelClosed,
    GapDetected,
    NotFound,
    EndorseInsufficientFunds,
    EndorseUnknownAccount,
    TopologyError,
    InvalidArgument,
    SimulatedCrash,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace eov
