#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "crease/autoseed.hpp"
#include "crease/config.hpp"
#include "crease/generators.hpp"
#include "crease/mesh_distance.hpp"
#include "crease/mesh_io.hpp"
#include "crease/probability.hpp"
#include "crease/report.hpp"
#include "crease/service.hpp"
#include "crease/session.hpp"
#include "crease/volume_io.hpp"

namespace fs = std::filesystem;
using namespace crease;

namespace {

constexpr int kExitError = 2;
constexpr int kExitStrict = 3;

std::string voxel_text(const Index3& q)
{
    return std::to_string(q.x) + "," + std::to_string(q.y) + "," + std::to_string(q.z);
}

Dims parse_dims(const std::string& text)
{
    const auto v = parse_numbers(text, 3, "dims");
    Dims d{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
    if (d.nx < 1 || d.ny < 1 || d.nz < 1)
        throw Error("config/invalid-value", "dims must be positive");
    return d;
}

Spacing parse_spacing(const std::string& text)
{
    const auto v = parse_numbers(text, 3, "spacing");
    if (!(v[0] > 0 && v[1] > 0 && v[2] > 0))
        throw Error("config/invalid-value", "spacing must be positive");
    return {v[0], v[1], v[2]};
}

// ---------------------------------------------------------------- gen

struct GenArgs
{
    std::string name;
    std::vector<int> dims;
    std::vector<double> spacing;
    std::uint64_t rng = 1;
    double thickness_sigma = 1.5;
    std::string out;
    DatasetRecipe recipe;
    FoldParams fold;
};

Dataset generate(const GenArgs& a)
{
    if (!a.dims.empty() && a.dims.size() != 3)
        throw Error("config/invalid-value", "--dims needs three integers");
    if (!a.spacing.empty() && a.spacing.size() != 3)
        throw Error("config/invalid-value", "--spacing needs three numbers");
    if (a.name == "folded") {
        FoldParams fp = a.fold;
        fp.rng_seed = a.rng;
        fp.thickness_sigma = a.thickness_sigma;
        if (!a.dims.empty())
            fp.dims = {a.dims[0], a.dims[1], a.dims[2]};
        if (!a.spacing.empty())
            fp.spacing = {a.spacing[0], a.spacing[1], a.spacing[2]};
        return make_folded_dataset(fp);
    }
    const Dims dims = a.dims.empty() ? Dims{400, 400, 80} : Dims{a.dims[0], a.dims[1], a.dims[2]};
    const Spacing sp = a.spacing.empty() ? Spacing{0.5, 0.5, 0.5} : Spacing{a.spacing[0], a.spacing[1], a.spacing[2]};
    if (a.name == "custom")
        return {"custom", apply_recipe(gen_plane(dims, a.thickness_sigma, sp), a.recipe, a.rng),
                plane_ground_truth(dims, sp)};
    return make_plane_dataset(a.name, dims, sp, a.rng, a.thickness_sigma);
}

int cmd_gen(const GenArgs& a)
{
    const Dataset ds = generate(a);
    const fs::path prefix = a.out.empty() ? fs::path(a.name) : fs::path(a.out);
    if (prefix.has_parent_path())
        fs::create_directories(prefix.parent_path());
    const fs::path vol = prefix.string() + ".nrrd";
    const fs::path gt = prefix.string() + ".gt.ply";
    save_volume(ds.volume, vol);
    export_mesh(ds.ground_truth, gt);
    std::cout << vol.string() << "\n" << gt.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructResult
{
    ReportRow row;
    TriangleMesh mesh;
};

ReconstructResult reconstruct(const ConfigValues& cfg, std::optional<Session>* keep = nullptr)
{
    auto get = [&](const std::string& k) -> std::optional<std::string> {
        const auto it = cfg.find(k);
        return it == cfg.end() ? std::nullopt : std::optional<std::string>(it->second);
    };

    Volume volume;
    std::optional<TriangleMesh> reference;
    std::string dataset;
    if (const auto in = get("input")) {
        volume = load_volume(*in);
        dataset = fs::path(*in).stem().string();
    } else if (const auto name = get("dataset")) {
        GenArgs g;
        g.name = *name;
        if (const auto d = get("dims")) {
            const Dims dd = parse_dims(*d);
            g.dims = {dd.nx, dd.ny, dd.nz};
        }
        if (const auto s = get("spacing")) {
            const Spacing ss = parse_spacing(*s);
            g.spacing = {ss[0], ss[1], ss[2]};
        }
        if (const auto r = get("rng"))
            g.rng = static_cast<std::uint64_t>(parse_number(*r, "rng"));
        Dataset ds = generate(g);
        volume = std::move(ds.volume);
        reference = std::move(ds.ground_truth);
        dataset = *name;
    } else {
        throw Error("config/missing-input", "either input or dataset is required");
    }
    if (const auto r = get("reference"))
        reference = import_mesh(*r);

    const auto [lo, hi] = [&] {
        if (const auto c = get("clamp")) {
            const auto v = parse_numbers(*c, 2, "clamp");
            return std::pair<double, double>{v[0], v[1]};
        }
        return auto_clamp(volume);
    }();

    const SessionConfig scfg = session_config_from(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    Session session = Session::from_volume(volume, lo, hi, scfg);

    std::vector<Index3> seeds;
    if (const auto s = get("seed"))
        seeds = parse_seed_list(*s);
    const bool automate = get("auto") ? parse_bool(*get("auto"), "auto") : true;
    if (seeds.empty()) {
        if (!automate)
            throw Error("config/missing-seed", "no seed given and automation disabled");
        seeds.push_back(central_seed(session.probability()));
    }
    for (const auto& q : seeds) {
        try {
            session.add_seed(q);
        } catch (const Error& e) {
            throw Error(e.stage(), "dataset " + dataset + ", seed " + voxel_text(q) + ": " + e.message());
        }
    }

    long long max_steps = get("max_steps") ? static_cast<long long>(parse_number(*get("max_steps"), "max_steps"))
                                           : 1000000;
    if (max_steps < 0)
        throw Error("config/invalid-value", "max_steps must be >= 0");
    bool converged = false;
    if (automate && max_steps > 0) {
        try {
            converged = session.run_automation(static_cast<int>(std::min<long long>(max_steps, 1 << 30))).converged;
        } catch (const Error& e) {
            throw Error(e.stage(), "dataset " + dataset + ": " + e.message());
        }
    }

    ReconstructResult out;
    out.mesh = session.mesh();
    const auto t1 = std::chrono::steady_clock::now();
    out.row.dataset = dataset;
    out.row.seconds = std::chrono::duration<double>(t1 - t0).count();
    out.row.topology = topology_report(out.mesh);
    out.row.seeds = session.active_seed_count();
    out.row.converged = converged;
    if (reference)
        out.row.distance = mesh_distance(out.mesh, *reference);
    if (keep)
        keep->emplace(std::move(session));
    return out;
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("io/write", "cannot write '" + path.string() + "'");
    f << text;
}

int cmd_reconstruct(const ConfigValues& cfg, const std::string& session_out, const std::string& oplog_out)
{
    std::optional<Session> session;
    const bool keep = !session_out.empty() || !oplog_out.empty();
    const ReconstructResult r = reconstruct(cfg, keep ? &session : nullptr);

    const auto get = [&](const std::string& k) {
        const auto it = cfg.find(k);
        return it == cfg.end() ? std::string{} : it->second;
    };
    if (!get("out").empty()) {
        const fs::path out = get("out");
        if (out.has_parent_path())
            fs::create_directories(out.parent_path());
        export_mesh(r.mesh, out);
    }
    const std::string table = report_header() + "\n" + format_report_row(r.row) + "\n";
    std::cout << table;
    if (!get("report").empty())
        write_text(get("report"), table);
    if (!session_out.empty())
        session->save(session_out);
    if (!oplog_out.empty()) {
        std::string log;
        for (const auto& line : session->oplog())
            log += line + "\n";
        write_text(oplog_out, log);
    }
    const bool strict = !get("strict").empty() && parse_bool(get("strict"), "strict");
    if (strict && !(r.row.topology.orientable && r.row.topology.is_manifold())) {
        std::cerr << "strict: mesh is not an orientable manifold\n";
        return kExitStrict;
    }
    return 0;
}

// ---------------------------------------------------------------- metrics

int cmd_metrics(const std::string& mesh_path, const std::string& reference_path, double h)
{
    ReportRow row;
    const TriangleMesh mesh = import_mesh(mesh_path);
    row.dataset = fs::path(mesh_path).stem().string();
    row.topology = topology_report(mesh);
    if (!reference_path.empty())
        row.distance = mesh_distance(mesh, import_mesh(reference_path), h);
    std::cout << report_header() << "\n" << format_report_row(row) << "\n";
    return 0;
}

// ---------------------------------------------------------------- serve

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const std::string& bind, const std::string& autosave, std::size_t threads)
{
    const auto colon = bind.rfind(':');
    const std::string host = colon == std::string::npos ? bind : bind.substr(0, colon);
    const int port = colon == std::string::npos ? 8080 : static_cast<int>(parse_number(bind.substr(colon + 1), "port"));
    ServiceOptions opt;
    opt.autosave_dir = autosave;
    opt.threads = threads;
    Service service(opt);
    const int bound = service.start(host, port);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << host << ":" << bound << std::endl;
    while (!g_stop)
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    service.stop();
    std::cout << "stopped" << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Crease surface reconstruction from 3D volumes"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic dataset and its ground-truth mesh");
    const std::vector<std::string> names = [] {
        auto n = plane_dataset_names();
        n.push_back("folded");
        n.push_back("custom");
        return n;
    }();
    g->add_option("name", gen.name, "Dataset name")->required()->check(CLI::IsMember(names));
    g->add_option("--dims", gen.dims, "nx ny nz")->expected(3);
    g->add_option("--spacing", gen.spacing, "sx sy sz")->expected(3);
    g->add_option("--rng", gen.rng, "Random seed");
    g->add_option("--thickness-sigma", gen.thickness_sigma, "Blur of the sheet in voxels");
    g->add_option("--out", gen.out, "Output prefix (writes PREFIX.nrrd and PREFIX.gt.ply)");
    g->add_option("--noise", gen.recipe.gaussian_noise, "custom: Gaussian noise sigma");
    g->add_option("--simplex", gen.recipe.simplex_amplitude, "custom: simplex noise amplitude");
    g->add_option("--simplex-frequency", gen.recipe.simplex_frequency, "custom: simplex frequency");
    g->add_option("--simplex-octaves", gen.recipe.simplex_octaves, "custom: simplex octaves");
    g->add_option("--warp", gen.recipe.warp_strength, "custom: domain warp strength in voxels");
    g->add_option("--warp-frequency", gen.recipe.warp_frequency, "custom: domain warp frequency");
    g->add_option("--post-sigma", gen.recipe.post_filter_sigma, "custom: final Gaussian filter sigma");
    g->add_option("--fold-radius", gen.fold.radius, "folded: half distance between the layers in voxels");
    g->add_option("--fold-x", gen.fold.fold_x, "folded: x position of the fold axis");
    g->add_option("--fold-warp", gen.fold.warp_strength, "folded: warp strength in voxels");

    auto* r = app.add_subcommand("reconstruct", "Reconstruct a surface and print the report table");
    std::string config_file, session_out, oplog_out;
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flag_options;
    std::vector<std::string> seed_flags;
    bool auto_flag = true, strict_flag = false;
    r->add_option("--config", config_file, "key = value config file");
    auto add = [&](const std::string& key, const std::string& flag, const std::string& help) {
        flag_options[key] = r->add_option(flag, flag_values[key], help);
    };
    add("input", "--input", "Volume file (.nrrd or .mhd)");
    add("dataset", "--dataset", "Generate this dataset instead of reading a volume");
    add("dims", "--dims", "Generated dataset dims nx,ny,nz");
    add("spacing", "--spacing", "Generated dataset spacing sx,sy,sz");
    add("rng", "--rng", "Generated dataset random seed");
    add("clamp", "--clamp", "lo,hi intensity range mapped to [0,1]");
    r->add_option("--seed", seed_flags, "Seed voxel x,y,z (repeatable)");
    add("thickness", "--thickness", "Sheet thickness in voxels");
    add("dmax", "--dmax", "Maximum path length in voxels");
    add("lambda", "--lambda", "Pole flooding threshold in voxels");
    add("sigma_g", "--sigma-g", "Structure tensor scale in voxels");
    add("boundary_margin", "--boundary-margin", "Automation boundary margin, fraction of d_max");
    add("seed_spacing", "--seed-spacing", "Automation seed spacing, fraction of d_max");
    add("relabel_background", "--relabel-background", "Retain background labels on re-merge");
    auto* auto_opt = r->add_flag("--auto,!--no-auto", auto_flag, "Run automation to convergence (default on)");
    add("max_steps", "--max-steps", "Automation step limit; 0 keeps the seeded patches only");
    add("out", "--out", "Mesh output (.ply or .obj)");
    add("report", "--report", "Write the report table here");
    auto* strict_opt = r->add_flag("--strict", strict_flag, "Exit 3 unless the mesh is an orientable manifold");
    add("reference", "--reference", "Reference mesh for distances");
    r->add_option("--save-session", session_out, "Write the final session file");
    r->add_option("--save-oplog", oplog_out, "Write the operation log");

    auto* m = app.add_subcommand("metrics", "Topology and distance report for a mesh");
    std::string mesh_path, reference_path;
    double sample_h = 0.0;
    m->add_option("mesh", mesh_path, "Mesh file")->required();
    m->add_option("reference", reference_path, "Reference mesh");
    m->add_option("--step", sample_h, "Sampling step (default: mean edge length)");

    auto* s = app.add_subcommand("serve", "Run the HTTP service");
    std::string bind = "127.0.0.1:8080", autosave;
    std::size_t threads = 4;
    s->add_option("--bind", bind, "host:port (port 0 picks a free port)");
    s->add_option("--autosave", autosave, "Directory receiving session files on shutdown");
    s->add_option("--threads", threads, "HTTP worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*g)
            return cmd_gen(gen);
        if (*r) {
            ConfigValues cfg;
            if (!config_file.empty())
                merge_into(cfg, read_config_file(config_file));
            merge_into(cfg, env_overrides());
            for (const auto& [key, opt] : flag_options)
                if (opt->count() > 0)
                    cfg[key] = flag_values[key];
            if (!seed_flags.empty()) {
                std::string joined;
                for (const auto& sf : seed_flags)
                    joined += (joined.empty() ? "" : ";") + sf;
                cfg["seed"] = joined;
            }
            if (auto_opt->count() > 0)
                cfg["auto"] = auto_flag ? "true" : "false";
            if (strict_opt->count() > 0)
                cfg["strict"] = strict_flag ? "true" : "false";
            for (const auto& [key, value] : cfg)
                if (!is_config_key(key))
                    throw Error("config/unknown-key", "unknown key '" + key + "'");
            return cmd_reconstruct(cfg, session_out, oplog_out);
        }
        if (*m)
            return cmd_metrics(mesh_path, reference_path, sample_h);
        if (*s)
            return cmd_serve(bind, autosave, threads);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return 0;
}
