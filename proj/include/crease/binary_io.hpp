#pragma once

#include <cstdint>
#include <algorithm>
#include <cstring>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <zlib.h>

#include "crease/error.hpp"

namespace crease {

/// Little-endian byte sink (the supported hosts are little-endian).
class ByteWriter
{
public:
    template <class T>
        requires std::is_trivially_copyable_v<T>
    void put(const T& v)
    {
        const auto* b = reinterpret_cast<const std::uint8_t*>(&v);
        bytes_.insert(bytes_.end(), b, b + sizeof(T));
    }

    template <class T>
    void put_vector(const std::vector<T>& v)
    {
        put(static_cast<std::uint64_t>(v.size()));
        const auto* b = reinterpret_cast<const std::uint8_t*>(v.data());
        bytes_.insert(bytes_.end(), b, b + v.size() * sizeof(T));
    }

    void put_string(const std::string& s)
    {
        put(static_cast<std::uint64_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }

    void put_bytes(const std::vector<std::uint8_t>& b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }

    [[nodiscard]] const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
    [[nodiscard]] std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader
{
public:
    ByteReader(const std::uint8_t* data, std::size_t size, std::string stage = "session/corrupt")
        : data_(data), size_(size), stage_(std::move(stage))
    {}

    template <class T>
        requires std::is_trivially_copyable_v<T>
    T get()
    {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    template <class T>
    std::vector<T> get_vector()
    {
        const auto n = get<std::uint64_t>();
        if (n > (size_ - pos_) / (sizeof(T) ? sizeof(T) : 1))
            throw Error(stage_, "vector length exceeds payload");
        std::vector<T> v(n);
        std::memcpy(static_cast<void*>(v.data()), data_ + pos_, n * sizeof(T));
        pos_ += n * sizeof(T);
        return v;
    }

    std::string get_string()
    {
        const auto n = get<std::uint64_t>();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

    [[nodiscard]] bool done() const noexcept { return pos_ == size_; }
    [[nodiscard]] std::size_t remaining() const noexcept { return size_ - pos_; }

private:
    void need(std::size_t n) const
    {
        if (n > size_ - pos_)
            throw Error(stage_, "payload truncated");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string stage_;
};

inline std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n)
{
    uLong crc = crc32(0L, Z_NULL, 0);
    while (n > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        crc = crc32(crc, data, chunk);
        data += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

} // namespace crease
