// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include <thread>

#include "eov/common/bytes.hpp"
#include "eov/common/error.hpp"
#include "eov/common/sync.hpp"

namespace eov {

std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::BadMagic: return "BadMagic";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::LogUnavailable: return "LogUnavailable";
    case Errc::UnknownTxId: return "UnknownTxId";
    case Errc::PeerUnreachable: return "PeerUnreachable";
    case Errc::ChannelClosed: return "ChannelClosed";
    case Errc::GapDetected: return "GapDetected";
    case Errc::NotFound: return "NotFound";
    case Errc::EndorseInsufficientFunds: return "EndorseInsufficientFunds";
    case Errc::EndorseUnknownAccount: return "EndorseUnknownAccount";
    case Errc::TopologyError: return "TopologyError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::SimulatedCrash: return "SimulatedCrash";
    }
    return "Unknown";
}

std::string to_hex(ByteView bytes)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.resize(bytes.size() * 2);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        out[2 * i] = kDigits[bytes[i] >> 4];
        out[2 * i + 1] = kDigits[bytes[i] & 0x0f];
    }
    return out;
}

namespace {
int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
} // namespace

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) {
        fail(Errc::InvalidArgument, "odd-length hex string");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            fail(Errc::InvalidArgument, "invalid hex digit");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

unsigned hardware_threads() noexcept
{
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

} // namespace eov
