#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crease/mesh.hpp"
#include "crease/mesh_distance.hpp"

namespace crease {

/// One row of the reconstruction table.
struct ReportRow
{
    std::string dataset;
    double seconds = 0.0;
    std::optional<DistanceReport> distance; ///< present when a reference was given
    TopologyReport topology;
    std::size_t seeds = 0;
    bool converged = false;
};

inline const std::vector<std::string>& report_columns()
{
    static const std::vector<std::string> cols{"dataset", "time",     "mean",         "hausdorff",  "euler",
                                               "non_manifold", "orientable", "vertices", "edges", "faces",
                                               "components",   "boundary_loops", "seeds", "converged"};
    return cols;
}

inline std::string report_header()
{
    std::string out;
    for (const auto& c : report_columns())
        out += (out.empty() ? "" : "\t") + c;
    return out;
}

/// Tab-separated row in report_columns() order. Missing distances print as "-".
inline std::string format_report_row(const ReportRow& r)
{
    auto num = [](double v, const char* fmt) {
        char buf[64];
        std::snprintf(buf, sizeof buf, fmt, v);
        return std::string(buf);
    };
    const auto& t = r.topology;
    std::ostringstream s;
    s << r.dataset << '\t' << num(r.seconds, "%.3f") << '\t'
      << (r.distance ? num(r.distance->mean, "%.4f") : "-") << '\t'
      << (r.distance ? num(r.distance->hausdorff, "%.4f") : "-") << '\t' << t.euler << '\t' << t.non_manifold_count
      << '\t' << (t.orientable ? "yes" : "no") << '\t' << t.vertices << '\t' << t.edges << '\t' << t.faces << '\t'
      << t.connected_components << '\t' << t.boundary_loop_count << '\t' << r.seeds << '\t'
      << (r.converged ? "yes" : "no");
    return s.str();
}

} // namespace crease
