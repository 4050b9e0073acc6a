#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "crease/binary_io.hpp"
#include "crease/error.hpp"
#include "crease/mesh.hpp"

namespace crease {

static_assert(std::endian::native == std::endian::little, "mesh transport assumes a little-endian host");

using Vec3f = std::array<float, 3>;
using TriangleF = std::array<Vec3f, 3>;
/// Triangles grouped by the cube that emitted them.
using CubeTriangles = std::map<std::uint64_t, std::vector<TriangleF>>;

inline CubeTriangles group_by_cube(const TriangleMesh& mesh)
{
    CubeTriangles out;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        TriangleF t{};
        for (int k = 0; k < 3; ++k) {
            const Vec3& v = mesh.vertices[mesh.triangles[i][k]];
            t[k] = {static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])};
        }
        out[mesh.provenance.at(i)].push_back(t);
    }
    return out;
}

enum class PayloadKind : std::uint32_t { full = 0, delta = 1 };

/// Decoded mesh message. For a delta, the client drops every triangle of the
/// cleared cubes and then adds the listed triangles.
struct MeshPayload
{
    PayloadKind kind = PayloadKind::full;
    std::uint64_t revision = 0;
    std::uint64_t base = 0;
    std::vector<std::uint64_t> cleared;
    std::vector<Vec3f> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::vector<std::uint64_t> cubes; ///< per triangle

    friend bool operator==(const MeshPayload&, const MeshPayload&) = default;
};

inline constexpr char kMeshMagic[4] = {'C', 'M', 'S', 'H'};
inline constexpr std::uint32_t kMeshVersion = 1;

namespace detail {

inline void append_cubes(MeshPayload& out, const CubeTriangles& cubes, const std::vector<std::uint64_t>& ids)
{
    std::map<Vec3f, std::uint32_t> index;
    for (auto id : ids) {
        const auto it = cubes.find(id);
        if (it == cubes.end())
            continue;
        for (const auto& t : it->second) {
            std::array<std::uint32_t, 3> tri{};
            for (int k = 0; k < 3; ++k) {
                const auto [vi, fresh] = index.try_emplace(t[k], static_cast<std::uint32_t>(out.vertices.size()));
                if (fresh)
                    out.vertices.push_back(t[k]);
                tri[k] = vi->second;
            }
            out.triangles.push_back(tri);
            out.cubes.push_back(id);
        }
    }
}

} // namespace detail

inline MeshPayload full_payload(const CubeTriangles& cubes, std::uint64_t revision)
{
    MeshPayload out;
    out.kind = PayloadKind::full;
    out.revision = revision;
    out.base = 0;
    std::vector<std::uint64_t> ids;
    for (const auto& [id, tris] : cubes)
        ids.push_back(id);
    detail::append_cubes(out, cubes, ids);
    return out;
}

/// Changes from `before` (at base) to `after` (at revision).
inline MeshPayload delta_payload(const CubeTriangles& before, std::uint64_t base, const CubeTriangles& after,
                                 std::uint64_t revision)
{
    MeshPayload out;
    out.kind = PayloadKind::delta;
    out.revision = revision;
    out.base = base;
    auto b = before.begin();
    auto a = after.begin();
    std::vector<std::uint64_t> changed;
    while (b != before.end() || a != after.end()) {
        if (a == after.end() || (b != before.end() && b->first < a->first)) {
            out.cleared.push_back(b->first);
            ++b;
        } else if (b == before.end() || a->first < b->first) {
            out.cleared.push_back(a->first);
            changed.push_back(a->first);
            ++a;
        } else {
            if (a->second != b->second) {
                out.cleared.push_back(a->first);
                changed.push_back(a->first);
            }
            ++a;
            ++b;
        }
    }
    detail::append_cubes(out, after, changed);
    return out;
}

inline std::string encode_payload(const MeshPayload& m)
{
    ByteWriter w;
    for (char c : kMeshMagic)
        w.put(c);
    w.put(kMeshVersion);
    w.put(static_cast<std::uint32_t>(m.kind));
    w.put(m.revision);
    w.put(m.base);
    w.put(static_cast<std::uint32_t>(m.cleared.size()));
    for (auto c : m.cleared)
        w.put(c);
    w.put(static_cast<std::uint32_t>(m.vertices.size()));
    w.put(static_cast<std::uint32_t>(m.triangles.size()));
    for (const auto& v : m.vertices)
        for (float x : v)
            w.put(x);
    for (const auto& t : m.triangles)
        for (auto i : t)
            w.put(i);
    for (auto c : m.cubes)
        w.put(c);
    const auto& bytes = w.bytes();
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

inline MeshPayload decode_payload(const std::string& data)
{
    ByteReader r(reinterpret_cast<const std::uint8_t*>(data.data()), data.size(), "mesh/corrupt");
    for (char c : kMeshMagic)
        if (r.get<char>() != c)
            throw Error("mesh/corrupt", "bad mesh payload magic");
    if (r.get<std::uint32_t>() != kMeshVersion)
        throw Error("mesh/corrupt", "unsupported mesh payload version");
    MeshPayload m;
    const auto kind = r.get<std::uint32_t>();
    if (kind > 1)
        throw Error("mesh/corrupt", "unknown payload kind");
    m.kind = static_cast<PayloadKind>(kind);
    m.revision = r.get<std::uint64_t>();
    m.base = r.get<std::uint64_t>();
    const auto nc = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < nc; ++i)
        m.cleared.push_back(r.get<std::uint64_t>());
    const auto nv = r.get<std::uint32_t>();
    const auto nt = r.get<std::uint32_t>();
    if (static_cast<std::uint64_t>(nv) * 12 + static_cast<std::uint64_t>(nt) * 20 != r.remaining())
        throw Error("mesh/corrupt", "payload size does not match counts");
    m.vertices.resize(nv);
    for (auto& v : m.vertices)
        for (float& x : v)
            x = r.get<float>();
    m.triangles.resize(nt);
    for (auto& t : m.triangles)
        for (auto& i : t) {
            i = r.get<std::uint32_t>();
            if (i >= nv)
                throw Error("mesh/corrupt", "triangle index out of range");
        }
    m.cubes.resize(nt);
    for (auto& c : m.cubes)
        c = r.get<std::uint64_t>();
    return m;
}

/// Client-side mesh state rebuilt from payloads.
struct ClientMesh
{
    std::uint64_t revision = 0;
    CubeTriangles cubes;

    /// Applies a payload. A delta must start at the current revision.
    void apply(const MeshPayload& m)
    {
        if (m.kind == PayloadKind::full) {
            cubes.clear();
        } else {
            if (m.base != revision)
                throw Error("mesh/delta-gap", "delta base does not match the client revision");
            for (auto c : m.cleared)
                cubes.erase(c);
        }
        for (std::size_t i = 0; i < m.triangles.size(); ++i) {
            TriangleF t{};
            for (int k = 0; k < 3; ++k)
                t[k] = m.vertices[m.triangles[i][k]];
            cubes[m.cubes[i]].push_back(t);
        }
        revision = m.revision;
    }
};

} // namespace crease
