// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eov/common/error.hpp"

namespace eov {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Hash32 = std::array<std::uint8_t, 32>;

inline ByteView as_bytes(std::string_view s) noexcept
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string_view as_chars(ByteView b) noexcept
{
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

inline Bytes to_bytes(std::string_view s)
{
    return Bytes(s.begin(), s.end());
}

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

/// Appends little-endian integers and u32-length-prefixed fields to a buffer.
/// No alignment padding is ever inserted.
class ByteWriter {
public:
    explicit ByteWriter(Bytes& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v); }
    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }

    void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void zeros(std::size_t n) { out_.resize(out_.size() + n, 0); }

    void prefixed(ByteView b)
    {
        u32(checked_len(b.size()));
        raw(b);
    }
    void prefixed(std::string_view s) { prefixed(as_bytes(s)); }

    std::size_t size() const noexcept { return out_.size(); }

private:
    template <typename T>
    void put_le(T v)
    {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    static std::uint32_t checked_len(std::size_t n)
    {
        if (n > 0xffffffffu) {
            fail(Errc::InvalidArgument, "field longer than u32 length prefix");
        }
        return static_cast<std::uint32_t>(n);
    }

    Bytes& out_;
};

/// Cursor over a borrowed buffer. Every read that would run past the end
/// throws Errc::MalformedFrame.
class ByteReader {
public:
    explicit ByteReader(ByteView in) : in_(in) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() { return get_le<std::uint16_t>(); }
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    std::uint64_t u64() { return get_le<std::uint64_t>(); }

    ByteView take(std::size_t n)
    {
        if (n > in_.size() - pos_) {
            fail(Errc::MalformedFrame, "length " + std::to_string(n) + " exceeds remaining " +
                                           std::to_string(in_.size() - pos_) + " bytes");
        }
        ByteView out = in_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    ByteView prefixed() { return take(u32()); }
    std::string prefixed_string()
    {
        auto b = prefixed();
        return std::string(as_chars(b));
    }
    Bytes prefixed_bytes()
    {
        auto b = prefixed();
        return Bytes(b.begin(), b.end());
    }
    void skip_prefixed() { take(u32()); }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    bool done() const noexcept { return pos_ == in_.size(); }
    ByteView rest() const noexcept { return in_.subspan(pos_); }

private:
    template <typename T>
    T get_le()
    {
        auto b = take(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
        }
        return v;
    }

    ByteView in_;
    std::size_t pos_ = 0;
};

} // namespace eov
