#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crease/grid.hpp"

namespace crease {

enum class VolumeFormat { nrrd, raw_meta };

namespace detail {

inline std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline ScalarType parse_scalar_type(const std::string& name)
{
    static const std::map<std::string, ScalarType> names = {
        {"uchar", ScalarType::u8},          {"unsigned char", ScalarType::u8}, {"uint8", ScalarType::u8},
        {"uint8_t", ScalarType::u8},        {"ushort", ScalarType::u16},       {"unsigned short", ScalarType::u16},
        {"uint16", ScalarType::u16},        {"uint16_t", ScalarType::u16},     {"float", ScalarType::f32},
    };
    const auto it = names.find(name);
    if (it == names.end())
        throw Error("io/unsupported-dtype", "unsupported type '" + name + "'");
    return it->second;
}

inline const char* scalar_type_name(ScalarType t)
{
    switch (t) {
    case ScalarType::u8: return "uint8";
    case ScalarType::u16: return "uint16";
    case ScalarType::f32: return "float";
    }
    return "float";
}

inline std::size_t scalar_size(ScalarType t)
{
    return t == ScalarType::u8 ? 1 : (t == ScalarType::u16 ? 2 : 4);
}

template <class T>
T byteswap_value(T v)
{
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

} // namespace detail

/// Reads a volume stored as an NRRD header subset with a raw payload, either
/// attached (after the blank line) or detached via a `data file:` field.
inline Volume load_volume(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("io/open", "cannot open " + path.string());

    std::string line;
    std::getline(in, line);
    if (detail::trim(line).rfind("NRRD", 0) != 0)
        throw Error("io/malformed-header", "missing NRRD magic");

    std::map<std::string, std::string> fields;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty())
            break;
        if (line[0] == '#')
            continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw Error("io/malformed-header", "bad header line '" + line + "'");
        auto key = detail::trim(line.substr(0, colon));
        auto value = line.substr(colon + 1);
        if (!value.empty() && value[0] == '=')
            value.erase(0, 1);
        fields[key] = detail::trim(value);
    }

    auto require = [&](const char* key) -> const std::string& {
        const auto it = fields.find(key);
        if (it == fields.end())
            throw Error("io/malformed-header", std::string("missing field '") + key + "'");
        return it->second;
    };

    if (require("dimension") != "3")
        throw Error("io/malformed-header", "only 3D volumes are supported");
    const ScalarType dtype = detail::parse_scalar_type(require("type"));
    const auto encoding = require("encoding");
    if (encoding != "raw")
        throw Error("io/malformed-header", "only raw encoding is supported");

    Dims dims{};
    {
        std::istringstream ss(require("sizes"));
        if (!(ss >> dims.nx >> dims.ny >> dims.nz))
            throw Error("io/malformed-header", "bad sizes field");
    }
    Spacing spacing{};
    if (const auto it = fields.find("spacings"); it != fields.end()) {
        std::istringstream ss(it->second);
        if (!(ss >> spacing.sx >> spacing.sy >> spacing.sz))
            throw Error("io/malformed-header", "bad spacings field");
    }
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
        throw Error("io/malformed-header", "sizes must be positive");
    if (!(spacing.sx > 0 && spacing.sy > 0 && spacing.sz > 0))
        throw Error("io/malformed-header", "spacings must be positive");

    bool big_endian = false;
    if (const auto it = fields.find("endian"); it != fields.end())
        big_endian = it->second == "big";

    std::vector<char> payload;
    auto slurp = [&payload](std::istream& s) {
        payload.assign(std::istreambuf_iterator<char>(s), std::istreambuf_iterator<char>());
    };
    const auto data_file = fields.find("data file") != fields.end() ? fields["data file"]
                         : (fields.find("datafile") != fields.end() ? fields["datafile"] : std::string{});
    if (!data_file.empty()) {
        std::filesystem::path data_path = data_file;
        if (data_path.is_relative())
            data_path = path.parent_path() / data_path;
        std::ifstream raw(data_path, std::ios::binary);
        if (!raw)
            throw Error("io/open", "cannot open data file " + data_path.string());
        slurp(raw);
    } else {
        slurp(in);
    }

    const std::size_t count = dims.count();
    const std::size_t expected = count * detail::scalar_size(dtype);
    if (payload.size() != expected)
        throw Error("io/size-mismatch", "payload has " + std::to_string(payload.size()) + " bytes, header declares " +
                                            std::to_string(expected));

    std::vector<float> values(count);
    const bool swap = big_endian != (std::endian::native == std::endian::big);
    for (std::size_t i = 0; i < count; ++i) {
        switch (dtype) {
        case ScalarType::u8:
            values[i] = static_cast<unsigned char>(payload[i]);
            break;
        case ScalarType::u16: {
            std::uint16_t v;
            std::memcpy(&v, payload.data() + 2 * i, 2);
            values[i] = swap ? detail::byteswap_value(v) : v;
            break;
        }
        case ScalarType::f32: {
            float v;
            std::memcpy(&v, payload.data() + 4 * i, 4);
            values[i] = swap ? detail::byteswap_value(v) : v;
            break;
        }
        }
    }
    Volume vol(dims, spacing, std::move(values));
    vol.dtype = dtype;
    return vol;
}

/// Writes `vol` in its own dtype. With VolumeFormat::raw_meta the header goes
/// to `path` and the payload to a sibling `.raw` file.
inline void save_volume(const Volume& vol, const std::filesystem::path& path, VolumeFormat format = VolumeFormat::nrrd)
{
    std::ostringstream header;
    header.precision(17);
    header << "NRRD0004\n"
           << "# crease volume\n"
           << "type: " << detail::scalar_type_name(vol.dtype) << "\n"
           << "dimension: 3\n"
           << "sizes: " << vol.dims().nx << ' ' << vol.dims().ny << ' ' << vol.dims().nz << "\n"
           << "spacings: " << vol.spacing().sx << ' ' << vol.spacing().sy << ' ' << vol.spacing().sz << "\n"
           << "encoding: raw\n"
           << "endian: little\n";

    std::vector<char> payload(vol.size() * detail::scalar_size(vol.dtype));
    for (std::size_t i = 0; i < vol.size(); ++i) {
        const float v = vol[static_cast<VoxelIndex>(i)];
        switch (vol.dtype) {
        case ScalarType::u8:
            payload[i] = static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L)));
            break;
        case ScalarType::u16: {
            auto u = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
            if constexpr (std::endian::native == std::endian::big)
                u = detail::byteswap_value(u);
            std::memcpy(payload.data() + 2 * i, &u, 2);
            break;
        }
        case ScalarType::f32: {
            float f = v;
            if constexpr (std::endian::native == std::endian::big)
                f = detail::byteswap_value(f);
            std::memcpy(payload.data() + 4 * i, &f, 4);
            break;
        }
        }
    }

    auto write_file = [](const std::filesystem::path& p, const std::string& head, const std::vector<char>& body) {
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw Error("io/open", "cannot write " + p.string());
        out << head;
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!out)
            throw Error("io/write", "failed writing " + p.string());
    };

    if (format == VolumeFormat::raw_meta) {
        auto raw_path = path;
        raw_path.replace_extension(".raw");
        header << "data file: " << raw_path.filename().string() << "\n";
        write_file(path, header.str(), {});
        write_file(raw_path, {}, payload);
    } else {
        header << "\n";
        write_file(path, header.str(), payload);
    }
}

} // namespace crease
