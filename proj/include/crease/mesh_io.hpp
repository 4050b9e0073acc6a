#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "crease/error.hpp"
#include "crease/mesh.hpp"

namespace crease {

enum class MeshFormat { ply, obj };

inline MeshFormat mesh_format_from_path(const std::filesystem::path& path)
{
    const auto ext = path.extension().string();
    if (ext == ".ply" || ext == ".PLY")
        return MeshFormat::ply;
    if (ext == ".obj" || ext == ".OBJ")
        return MeshFormat::obj;
    throw Error("io/unknown-format", "cannot infer mesh format from '" + path.string() + "'");
}

/// ASCII PLY or OBJ. Winding is written as stored; meshes that fail the
/// orientability check get a warning comment in the header.
inline void export_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, MeshFormat format)
{
    std::ofstream out(path);
    if (!out)
        throw Error("io/open", "cannot write '" + path.string() + "'");
    out << std::setprecision(9);
    const bool orientable = topology_report(mesh).orientable;

    if (format == MeshFormat::ply) {
        out << "ply\nformat ascii 1.0\n";
        if (!orientable)
            out << "comment warning: non-orientable mesh, winding is not consistent\n";
        out << "element vertex " << mesh.vertices.size() << "\n"
            << "property float x\nproperty float y\nproperty float z\n"
            << "element face " << mesh.triangles.size() << "\n"
            << "property list uchar int vertex_indices\n"
            << "end_header\n";
        for (const auto& v : mesh.vertices)
            out << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
        for (const auto& t : mesh.triangles)
            out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    } else {
        if (!orientable)
            out << "# warning: non-orientable mesh, winding is not consistent\n";
        for (const auto& v : mesh.vertices)
            out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
        for (const auto& t : mesh.triangles)
            out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
    if (!out)
        throw Error("io/write", "failed writing '" + path.string() + "'");
}

inline void export_mesh(const TriangleMesh& mesh, const std::filesystem::path& path)
{
    export_mesh(mesh, path, mesh_format_from_path(path));
}

namespace detail {

inline TriangleMesh read_ply(std::istream& in, const std::string& name)
{
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0)
        throw Error("io/malformed-mesh", name + ": missing ply magic");
    std::size_t nv = 0, nf = 0;
    int vertex_props = 0;
    std::string current;
    bool ascii = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "format") {
            std::string kind;
            ls >> kind;
            ascii = kind == "ascii";
        } else if (key == "element") {
            ls >> current;
            if (current == "vertex")
                ls >> nv;
            else if (current == "face")
                ls >> nf;
        } else if (key == "property" && current == "vertex") {
            ++vertex_props;
        } else if (key == "end_header") {
            break;
        }
    }
    if (!ascii)
        throw Error("io/malformed-mesh", name + ": only ASCII PLY is supported");
    if (vertex_props < 3)
        throw Error("io/malformed-mesh", name + ": vertex element needs x y z");

    TriangleMesh mesh;
    mesh.vertices.resize(nv);
    for (auto& v : mesh.vertices) {
        if (!std::getline(in, line))
            throw Error("io/malformed-mesh", name + ": truncated vertex list");
        std::istringstream ls(line);
        ls >> v[0] >> v[1] >> v[2];
        if (!ls)
            throw Error("io/malformed-mesh", name + ": bad vertex line");
    }
    for (std::size_t f = 0; f < nf; ++f) {
        if (!std::getline(in, line))
            throw Error("io/malformed-mesh", name + ": truncated face list");
        std::istringstream ls(line);
        std::size_t n = 0;
        ls >> n;
        std::vector<std::uint32_t> idx(n);
        for (auto& i : idx)
            ls >> i;
        if (!ls || n < 3)
            throw Error("io/malformed-mesh", name + ": bad face line");
        for (std::size_t k = 1; k + 1 < n; ++k)
            mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
    return mesh;
}

inline TriangleMesh read_obj(std::istream& in, const std::string& name)
{
    TriangleMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "v") {
            Vec3 v{};
            ls >> v[0] >> v[1] >> v[2];
            if (!ls)
                throw Error("io/malformed-mesh", name + ": bad vertex line");
            mesh.vertices.push_back(v);
        } else if (key == "f") {
            std::vector<std::uint32_t> idx;
            std::string tok;
            while (ls >> tok) {
                const long i = std::stol(tok.substr(0, tok.find('/')));
                const long resolved = i < 0 ? static_cast<long>(mesh.vertices.size()) + i : i - 1;
                idx.push_back(static_cast<std::uint32_t>(resolved));
            }
            if (idx.size() < 3)
                throw Error("io/malformed-mesh", name + ": bad face line");
            for (std::size_t k = 1; k + 1 < idx.size(); ++k)
                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
    return mesh;
}

} // namespace detail

inline TriangleMesh import_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("io/open", "cannot read '" + path.string() + "'");
    TriangleMesh mesh = mesh_format_from_path(path) == MeshFormat::ply ? detail::read_ply(in, path.string())
                                                                       : detail::read_obj(in, path.string());
    for (const auto& t : mesh.triangles)
        for (auto v : t)
            if (v >= mesh.vertices.size())
                throw Error("io/malformed-mesh", path.string() + ": face index out of range");
    return mesh;
}

} // namespace crease
