#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crease/autoseed.hpp"
#include "crease/binary_io.hpp"
#include "crease/error.hpp"
#include "crease/extraction.hpp"
#include "crease/fast_marching.hpp"
#include "crease/global_merge.hpp"
#include "crease/grid.hpp"
#include "crease/mesh.hpp"
#include "crease/patch_labeling.hpp"
#include "crease/probability.hpp"

namespace crease {

struct SessionConfig
{
    double thickness = 1.5; ///< layer thickness, physical units
    double d_max = 0.0;     ///< 0 = 10 * thickness
    double lambda = 0.0;    ///< 0 = 2 * thickness
    double sigma_g = 1.0;   ///< structure tensor scale, voxels
    double boundary_margin_frac = 0.10;
    double seed_spacing_frac = 0.40;
    bool relabel_background = false;

    [[nodiscard]] double effective_d_max() const { return d_max > 0 ? d_max : 10.0 * thickness; }
    [[nodiscard]] double effective_lambda() const { return lambda > 0 ? lambda : 2.0 * thickness; }

    friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

enum class SeedOrigin : std::uint8_t { manual, automatic };
enum class SeedStatus : std::uint8_t { active, removed, detached };

inline const char* to_string(SeedOrigin o) { return o == SeedOrigin::manual ? "manual" : "auto"; }
inline const char* to_string(SeedStatus s)
{
    return s == SeedStatus::active ? "active" : (s == SeedStatus::removed ? "removed" : "detached");
}

struct SeedPoint
{
    SeedIndex id = 0;
    Index3 position{};
    SeedOrigin origin = SeedOrigin::manual;
    double d_max = 0.0;
    double lambda = 0.0;
    SeedStatus status = SeedStatus::active;

    friend bool operator==(const SeedPoint&, const SeedPoint&) = default;
};

/// Per-seed results kept for exact removal.
struct SeedData
{
    MarchPatch patch;
    PatchLabeling labels;

    friend bool operator==(const SeedData&, const SeedData&) = default;
};

struct RevisionDelta
{
    std::uint64_t revision = 0;
    std::optional<SeedIndex> seed;
    std::size_t touched = 0;
    bool full_rebuild = false;
    std::vector<SeedIndex> detached; ///< seeds that could not be re-merged
};

struct AutomationFailure
{
    Index3 position{};
    std::string stage;
    std::string message;
};

struct AutomationResult
{
    int steps = 0;
    bool converged = false;
    std::uint64_t revision = 0;
    std::vector<SeedIndex> added;
    std::vector<AutomationFailure> failures;
};

/// Iterative reconstruction state: seeds, retained patches, merged fields,
/// neighborhood graph and mesh. Not thread-safe; callers serialize mutations.
class Session
{
public:
    Session(ProbabilityField p, SessionConfig cfg, double clamp_lo = 0.0, double clamp_hi = 1.0)
        : p_(std::move(p)), cfg_(cfg), lo_(clamp_lo), hi_(clamp_hi), fields_(p_.dims(), p_.spacing()),
          store_(MeshConfig{cfg.relabel_background})
    {}

    static Session from_volume(const Grid<float>& volume, double lo, double hi, SessionConfig cfg = {})
    {
        return Session(to_probability(volume, lo, hi), cfg, lo, hi);
    }

    [[nodiscard]] const ProbabilityField& probability() const noexcept { return p_; }
    [[nodiscard]] const SessionConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] std::pair<double, double> clamp() const noexcept { return {lo_, hi_}; }
    [[nodiscard]] const std::vector<SeedPoint>& seeds() const noexcept { return seeds_; }
    [[nodiscard]] const GlobalFields& fields() const noexcept { return fields_; }
    [[nodiscard]] const NeighborhoodGraph& graph() const noexcept { return graph_; }
    [[nodiscard]] const MeshStore& store() const noexcept { return store_; }
    /// Current mesh, assembled from the per-cube store on first access after a change.
    [[nodiscard]] const TriangleMesh& mesh() const
    {
        if (mesh_dirty_) {
            mesh_ = store_.assemble();
            mesh_dirty_ = false;
        }
        return mesh_;
    }
    [[nodiscard]] std::uint64_t revision() const noexcept { return revision_; }
    [[nodiscard]] const std::vector<SeedIndex>& merge_order() const noexcept { return merge_order_; }
    [[nodiscard]] const std::vector<std::string>& oplog() const noexcept { return oplog_; }
    [[nodiscard]] const std::vector<Vec3>& excluded_points() const noexcept { return excluded_; }
    [[nodiscard]] const std::optional<SeedData>& seed_data(SeedIndex id) const { return data_.at(id); }

    [[nodiscard]] std::size_t active_seed_count() const
    {
        return static_cast<std::size_t>(std::count_if(seeds_.begin(), seeds_.end(),
                                                      [](const auto& s) { return s.status == SeedStatus::active; }));
    }

    /// Marches, labels and merges a new seed. On any stage error the session
    /// is left untouched and the error propagates.
    RevisionDelta add_seed(Index3 position, SeedOrigin origin = SeedOrigin::manual,
                           std::optional<double> d_max = std::nullopt, std::optional<double> lambda = std::nullopt)
    {
        const double dm = d_max.value_or(cfg_.effective_d_max());
        const double lam = lambda.value_or(cfg_.effective_lambda());
        if (!p_.dims().contains(position))
            throw Error("march/out-of-bounds", "seed outside the volume");
        for (const auto& s : seeds_) {
            if (s.status != SeedStatus::active)
                continue;
            const Index3 o = s.position - position;
            if (std::max({std::abs(o.x), std::abs(o.y), std::abs(o.z)}) <= 1)
                throw Error("seed/too-close", "position within one voxel of seed " + std::to_string(s.id));
        }

        SeedData data;
        data.patch = march(p_, position, dm);
        data.labels = label_patch(data.patch, p_, lam, cfg_.sigma_g).labels;
        const ParityDecision parity = align_parity(fields_, data.patch, data.labels);

        // commit
        const auto id = static_cast<SeedIndex>(seeds_.size());
        seeds_.push_back({id, position, origin, dm, lam, SeedStatus::active});
        const auto touched = merge_patch(fields_, data.patch, data.labels, id, parity.swapped);
        graph_.add_seed(id, border_faces(data.patch, data.labels));
        merge_order_.push_back(id);
        data_.push_back(std::move(data));
        store_.update(fields_, graph_, touched);
        mesh_dirty_ = true;
        ++revision_;

        std::ostringstream op;
        op << "add " << position.x << ' ' << position.y << ' ' << position.z << ' ' << to_string(origin) << ' '
           << format_double(dm) << ' ' << format_double(lam);
        oplog_.push_back(op.str());

        RevisionDelta delta;
        delta.revision = revision_;
        delta.seed = id;
        delta.touched = touched.size();
        return delta;
    }

    /// Marks a seed removed and re-merges every remaining retained patch.
    RevisionDelta remove_seed(SeedIndex id)
    {
        if (id >= seeds_.size() || seeds_[id].status == SeedStatus::removed)
            throw Error("seed/unknown-id", "no active seed " + std::to_string(id));
        seeds_[id].status = SeedStatus::removed;
        data_[id].reset();
        RevisionDelta delta;
        delta.detached = rebuild();
        ++revision_;
        oplog_.push_back("remove " + std::to_string(id));
        delta.revision = revision_;
        delta.full_rebuild = true;
        return delta;
    }

    /// Adds automatically placed seeds one at a time until no candidate is
    /// left or max_steps seeds were added. Each proposal round is worked
    /// through in order before proposing again; failing candidates are
    /// excluded from later rounds.
    AutomationResult run_automation(int max_steps)
    {
        if (active_seed_count() == 0)
            throw Error("automation/no-seeds", "automation needs at least one active seed");
        AutomationResult res;
        oplog_.push_back("auto " + std::to_string(max_steps));
        const auto log_size = oplog_.size();
        for (;;) {
            auto candidates = propose();
            if (candidates.empty())
                candidates = propose_holes();
            if (candidates.empty()) {
                res.converged = true;
                break;
            }
            if (res.steps >= max_steps)
                break;
            for (const auto& c : candidates) {
                if (res.steps >= max_steps)
                    break;
                try {
                    const auto delta = add_seed(c.position, SeedOrigin::automatic);
                    res.added.push_back(*delta.seed);
                    ++res.steps;
                } catch (const Error& e) {
                    res.failures.push_back({c.position, e.stage(), e.message()});
                    excluded_.push_back(c.source);
                }
            }
        }
        // the op log records this run as one "auto" line
        oplog_.resize(log_size);
        res.revision = revision_;
        return res;
    }

    /// Candidate positions the automation would try next.
    [[nodiscard]] std::vector<SeedCandidate> propose(std::size_t limit = 0) const
    {
        AutoseedParams ap;
        ap.d_max = cfg_.effective_d_max();
        ap.boundary_margin_frac = cfg_.boundary_margin_frac;
        ap.seed_spacing_frac = cfg_.seed_spacing_frac;
        ap.limit = limit;
        std::vector<Vec3> positions;
        for (const auto& s : seeds_)
            if (s.status == SeedStatus::active)
                positions.push_back(p_.physical(s.position));
        return next_seeds(mesh(), positions, p_, ap, excluded_);
    }

    /// Candidates that close pinholes left between patches.
    [[nodiscard]] std::vector<SeedCandidate> propose_holes() const
    {
        AutoseedParams ap;
        ap.d_max = cfg_.effective_d_max();
        ap.boundary_margin_frac = cfg_.boundary_margin_frac;
        ap.seed_spacing_frac = cfg_.seed_spacing_frac;
        ap.inset = structure_tensor_radius(cfg_.sigma_g) + 1;
        return hole_seeds(mesh(), fields_, p_, ap, excluded_);
    }

    /// Global fields recomputed from the retained patches in merge order.
    [[nodiscard]] GlobalFields rebuild_oracle() const
    {
        GlobalFields g(p_.dims(), p_.spacing());
        for (SeedIndex id : merge_order_) {
            const auto& d = *data_.at(id);
            const auto parity = align_parity(g, d.patch, d.labels);
            merge_patch(g, d.patch, d.labels, id, parity.swapped);
        }
        return g;
    }

    /// Throws session/invariant when the stored fields differ from the rebuild oracle.
    void verify() const
    {
        if (!(rebuild_oracle() == fields_))
            throw Error("session/invariant", "global fields differ from the rebuild oracle");
    }

    /// Mesh extracted from scratch from the current fields and graph.
    [[nodiscard]] TriangleMesh fresh_mesh() const { return extract_mesh(fields_, graph_, nullptr, store_.config()); }

    /// Applies one op-log line.
    void apply(const std::string& line)
    {
        std::istringstream in(line);
        std::string op;
        in >> op;
        if (op == "add") {
            Index3 q{};
            std::string origin;
            double dm = 0, lam = 0;
            in >> q.x >> q.y >> q.z >> origin >> dm >> lam;
            if (!in)
                throw Error("oplog/malformed", "bad add line: " + line);
            add_seed(q, origin == "auto" ? SeedOrigin::automatic : SeedOrigin::manual, dm, lam);
        } else if (op == "remove") {
            SeedIndex id = 0;
            in >> id;
            if (!in)
                throw Error("oplog/malformed", "bad remove line: " + line);
            remove_seed(id);
        } else if (op == "auto") {
            int n = 0;
            in >> n;
            if (!in)
                throw Error("oplog/malformed", "bad auto line: " + line);
            run_automation(n);
        } else if (!op.empty()) {
            throw Error("oplog/malformed", "unknown operation: " + line);
        }
    }

    /// Fresh session with the same field and config, then every log line.
    [[nodiscard]] Session replay(const std::vector<std::string>& log) const
    {
        Session s(p_, cfg_, lo_, hi_);
        for (const auto& line : log)
            s.apply(line);
        return s;
    }

    void save(const std::filesystem::path& path) const;
    static Session load(const std::filesystem::path& path);

    /// Observable state equality: seeds, fields, graph, mesh and revision.
    friend bool operator==(const Session& a, const Session& b)
    {
        return a.p_ == b.p_ && a.cfg_ == b.cfg_ && a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.seeds_ == b.seeds_ &&
               a.data_ == b.data_ && a.merge_order_ == b.merge_order_ && a.fields_ == b.fields_ &&
               a.graph_ == b.graph_ && a.mesh() == b.mesh() && a.revision_ == b.revision_ &&
               a.excluded_ == b.excluded_ && a.oplog_ == b.oplog_;
    }

private:
    static std::string format_double(double v)
    {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    }

    /// Re-merges active and detached seeds in ascending id order, retrying
    /// rejected ones while progress is made. Returns seeds left detached.
    std::vector<SeedIndex> rebuild()
    {
        fields_ = GlobalFields(p_.dims(), p_.spacing());
        graph_.clear();
        merge_order_.clear();
        std::vector<SeedIndex> pending;
        for (const auto& s : seeds_)
            if (s.status != SeedStatus::removed)
                pending.push_back(s.id);
        bool progress = true;
        while (progress && !pending.empty()) {
            progress = false;
            std::vector<SeedIndex> rejected;
            for (SeedIndex id : pending) {
                const auto& d = *data_[id];
                try {
                    const auto parity = align_parity(fields_, d.patch, d.labels);
                    merge_patch(fields_, d.patch, d.labels, id, parity.swapped);
                    graph_.add_seed(id, border_faces(d.patch, d.labels));
                    merge_order_.push_back(id);
                    seeds_[id].status = SeedStatus::active;
                    progress = true;
                } catch (const Error&) {
                    rejected.push_back(id);
                }
            }
            pending = std::move(rejected);
        }
        for (SeedIndex id : pending)
            seeds_[id].status = SeedStatus::detached;
        store_.rebuild(fields_, graph_);
        mesh_dirty_ = true;
        return pending;
    }

    ProbabilityField p_;
    SessionConfig cfg_;
    double lo_ = 0.0, hi_ = 1.0;
    std::vector<SeedPoint> seeds_;
    std::vector<std::optional<SeedData>> data_;
    std::vector<SeedIndex> merge_order_;
    GlobalFields fields_;
    NeighborhoodGraph graph_;
    MeshStore store_;
    mutable TriangleMesh mesh_;
    mutable bool mesh_dirty_ = false;
    std::uint64_t revision_ = 0;
    std::vector<Vec3> excluded_;
    std::vector<std::string> oplog_;
};

namespace detail {

inline constexpr char kSessionMagic[8] = {'C', 'R', 'E', 'A', 'S', 'E', 'S', '1'};
inline constexpr std::uint32_t kSessionVersion = 1;

inline std::uint32_t section_tag(const char (&s)[5])
{
    return static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8) |
           (static_cast<std::uint32_t>(s[2]) << 16) | (static_cast<std::uint32_t>(s[3]) << 24);
}

inline void put_section(ByteWriter& out, const char (&tag)[5], const ByteWriter& payload)
{
    out.put(section_tag(tag));
    out.put(static_cast<std::uint64_t>(payload.bytes().size()));
    out.put_bytes(payload.bytes());
    out.put(crc32_of(payload.bytes().data(), payload.bytes().size()));
}

inline void put_geometry(ByteWriter& w, const Dims& d, const Spacing& s)
{
    w.put(d.nx);
    w.put(d.ny);
    w.put(d.nz);
    w.put(s.sx);
    w.put(s.sy);
    w.put(s.sz);
}

inline std::pair<Dims, Spacing> get_geometry(ByteReader& r)
{
    Dims d{};
    d.nx = r.get<int>();
    d.ny = r.get<int>();
    d.nz = r.get<int>();
    Spacing s{};
    s.sx = r.get<double>();
    s.sy = r.get<double>();
    s.sz = r.get<double>();
    validate_geometry(d, s);
    return {d, s};
}

inline void put_mesh(ByteWriter& w, const TriangleMesh& m)
{
    w.put_vector(m.vertices);
    w.put_vector(m.triangles);
    w.put_vector(m.provenance);
}

inline TriangleMesh get_mesh(ByteReader& r)
{
    TriangleMesh m;
    m.vertices = r.get_vector<Vec3>();
    m.triangles = r.get_vector<std::array<std::uint32_t, 3>>();
    m.provenance = r.get_vector<VoxelIndex>();
    return m;
}

} // namespace detail

inline void Session::save(const std::filesystem::path& path) const
{
    ByteWriter out;
    for (char c : detail::kSessionMagic)
        out.put(c);
    out.put(detail::kSessionVersion);

    ByteWriter conf;
    conf.put(cfg_.thickness);
    conf.put(cfg_.d_max);
    conf.put(cfg_.lambda);
    conf.put(cfg_.sigma_g);
    conf.put(cfg_.boundary_margin_frac);
    conf.put(cfg_.seed_spacing_frac);
    conf.put(static_cast<std::uint8_t>(cfg_.relabel_background));
    conf.put(lo_);
    conf.put(hi_);
    conf.put(revision_);
    detail::put_section(out, "CONF", conf);

    ByteWriter prob;
    detail::put_geometry(prob, p_.dims(), p_.spacing());
    prob.put_vector(p_.data());
    detail::put_section(out, "PROB", prob);

    ByteWriter seeds;
    seeds.put(static_cast<std::uint64_t>(seeds_.size()));
    for (const auto& s : seeds_) {
        seeds.put(s.id);
        seeds.put(s.position);
        seeds.put(s.origin);
        seeds.put(s.d_max);
        seeds.put(s.lambda);
        seeds.put(s.status);
    }
    seeds.put_vector(merge_order_);
    seeds.put_vector(excluded_);
    detail::put_section(out, "SEED", seeds);

    ByteWriter patches;
    patches.put(static_cast<std::uint64_t>(data_.size()));
    for (const auto& d : data_) {
        patches.put(static_cast<std::uint8_t>(d.has_value()));
        if (!d)
            continue;
        const auto& pt = d->patch;
        patches.put(pt.seed);
        patches.put_vector(pt.voxels);
        patches.put_vector(pt.t);
        patches.put_vector(pt.d);
        patches.put_vector(pt.front_faces);
        patches.put(pt.t_tilde);
        patches.put(pt.d_tilde);
        patches.put(static_cast<std::uint64_t>(pt.cavity_voxels));
        patches.put_vector(d->labels.side);
    }
    detail::put_section(out, "PTCH", patches);

    ByteWriter fields;
    fields.put_vector(fields_.t);
    fields.put_vector(fields_.l);
    fields.put_vector(fields_.swapped);
    fields.put_vector(fields_.merged);
    detail::put_section(out, "FLDS", fields);

    ByteWriter graph;
    graph.put_vector(std::vector<SeedIndex>(graph_.vertices().begin(), graph_.vertices().end()));
    graph.put_vector(std::vector<std::pair<SeedIndex, SeedIndex>>(graph_.edges().begin(), graph_.edges().end()));
    detail::put_section(out, "GRPH", graph);

    ByteWriter mesh;
    detail::put_mesh(mesh, this->mesh());
    detail::put_section(out, "MESH", mesh);

    ByteWriter log;
    log.put(static_cast<std::uint64_t>(oplog_.size()));
    for (const auto& l : oplog_)
        log.put_string(l);
    detail::put_section(out, "OPLG", log);

    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f)
            throw Error("session/io", "cannot write '" + tmp + "'");
        f.write(reinterpret_cast<const char*>(out.bytes().data()), static_cast<std::streamsize>(out.bytes().size()));
        if (!f)
            throw Error("session/io", "failed writing '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline Session Session::load(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error("session/io", "cannot read '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    ByteReader in(bytes.data(), bytes.size());
    for (char c : detail::kSessionMagic)
        if (in.get<char>() != c)
            throw Error("session/corrupt", "not a session file");
    const auto version = in.get<std::uint32_t>();
    if (version != detail::kSessionVersion)
        throw Error("session/version-mismatch", "unsupported session version " + std::to_string(version));

    auto section = [&](const char (&tag)[5]) {
        if (in.get<std::uint32_t>() != detail::section_tag(tag))
            throw Error("session/corrupt", std::string("expected section ") + tag);
        const auto n = in.get<std::uint64_t>();
        if (n + 4 > in.remaining())
            throw Error("session/checksum", std::string("section ") + tag + " truncated");
        const std::size_t start = bytes.size() - in.remaining();
        std::vector<std::uint8_t> payload(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                          bytes.begin() + static_cast<std::ptrdiff_t>(start + n));
        for (std::uint64_t i = 0; i < n; ++i)
            (void)in.get<std::uint8_t>();
        if (in.get<std::uint32_t>() != crc32_of(payload.data(), payload.size()))
            throw Error("session/checksum", std::string("checksum mismatch in section ") + tag);
        return payload;
    };

    const auto conf_b = section("CONF");
    ByteReader conf(conf_b.data(), conf_b.size());
    SessionConfig cfg;
    cfg.thickness = conf.get<double>();
    cfg.d_max = conf.get<double>();
    cfg.lambda = conf.get<double>();
    cfg.sigma_g = conf.get<double>();
    cfg.boundary_margin_frac = conf.get<double>();
    cfg.seed_spacing_frac = conf.get<double>();
    cfg.relabel_background = conf.get<std::uint8_t>() != 0;
    const double lo = conf.get<double>();
    const double hi = conf.get<double>();
    const auto revision = conf.get<std::uint64_t>();

    const auto prob_b = section("PROB");
    ByteReader prob(prob_b.data(), prob_b.size());
    const auto [dims, spacing] = detail::get_geometry(prob);
    ProbabilityField p(dims, spacing, prob.get_vector<float>());

    Session s(std::move(p), cfg, lo, hi);
    s.revision_ = revision;

    const auto seeds_b = section("SEED");
    ByteReader seeds(seeds_b.data(), seeds_b.size());
    const auto ns = seeds.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < ns; ++i) {
        SeedPoint sp;
        sp.id = seeds.get<SeedIndex>();
        sp.position = seeds.get<Index3>();
        sp.origin = seeds.get<SeedOrigin>();
        sp.d_max = seeds.get<double>();
        sp.lambda = seeds.get<double>();
        sp.status = seeds.get<SeedStatus>();
        s.seeds_.push_back(sp);
    }
    s.merge_order_ = seeds.get_vector<SeedIndex>();
    s.excluded_ = seeds.get_vector<Vec3>();

    const auto patch_b = section("PTCH");
    ByteReader patches(patch_b.data(), patch_b.size());
    const auto np = patches.get<std::uint64_t>();
    if (np != ns)
        throw Error("session/corrupt", "patch count does not match seed count");
    for (std::uint64_t i = 0; i < np; ++i) {
        if (!patches.get<std::uint8_t>()) {
            s.data_.emplace_back();
            continue;
        }
        SeedData d;
        d.patch.dims = dims;
        d.patch.spacing = spacing;
        d.patch.seed = patches.get<VoxelIndex>();
        d.patch.voxels = patches.get_vector<VoxelIndex>();
        d.patch.t = patches.get_vector<float>();
        d.patch.d = patches.get_vector<float>();
        d.patch.front_faces = patches.get_vector<FaceId>();
        d.patch.t_tilde = patches.get<float>();
        d.patch.d_tilde = patches.get<float>();
        d.patch.cavity_voxels = patches.get<std::uint64_t>();
        d.labels.side = patches.get_vector<std::uint8_t>();
        s.data_.push_back(std::move(d));
    }

    const auto fields_b = section("FLDS");
    ByteReader fields(fields_b.data(), fields_b.size());
    s.fields_.t = fields.get_vector<float>();
    s.fields_.l = fields.get_vector<Label>();
    s.fields_.swapped = fields.get_vector<std::uint8_t>();
    s.fields_.merged = fields.get_vector<std::uint8_t>();
    if (s.fields_.t.size() != dims.count() || s.fields_.l.size() != dims.count())
        throw Error("session/corrupt", "field size does not match volume");

    const auto graph_b = section("GRPH");
    ByteReader graph(graph_b.data(), graph_b.size());
    const auto gv = graph.get_vector<SeedIndex>();
    const auto ge = graph.get_vector<std::pair<SeedIndex, SeedIndex>>();

    const auto mesh_b = section("MESH");
    ByteReader mesh(mesh_b.data(), mesh_b.size());
    s.mesh_ = detail::get_mesh(mesh);

    const auto log_b = section("OPLG");
    ByteReader log(log_b.data(), log_b.size());
    const auto nl = log.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < nl; ++i)
        s.oplog_.push_back(log.get_string());

    // face ownership is derived state: re-register border faces in merge order
    for (SeedIndex id : s.merge_order_) {
        if (id >= s.data_.size() || !s.data_[id])
            throw Error("session/corrupt", "merge order names a seed without patch data");
        s.graph_.add_seed(id, border_faces(s.data_[id]->patch, s.data_[id]->labels));
    }
    for (SeedIndex v : gv)
        s.graph_.add_vertex(v);
    if (!(std::set<std::pair<SeedIndex, SeedIndex>>(ge.begin(), ge.end()) == s.graph_.edges()))
        throw Error("session/corrupt", "stored graph does not match retained patches");
    s.store_.rebuild(s.fields_, s.graph_);
    if (!(s.store_.assemble() == s.mesh_))
        throw Error("session/corrupt", "stored mesh does not match stored fields");
    return s;
}

} // namespace crease
