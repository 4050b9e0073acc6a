#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "crease/config.hpp"
#include "crease/error.hpp"
#include "crease/generators.hpp"
#include "crease/mesh_transport.hpp"
#include "crease/probability.hpp"
#include "crease/session.hpp"
#include "crease/slice.hpp"
#include "crease/volume_io.hpp"

// after Eigen: <resolv.h> defines a _res macro
#include <httplib.h>
#include <json.hpp>

namespace crease {

/// Mutex granting the lock in arrival order.
class TicketLock
{
public:
    void lock()
    {
        std::unique_lock lk(m_);
        const std::uint64_t ticket = next_++;
        cv_.wait(lk, [&] { return serving_ == ticket; });
    }
    void unlock()
    {
        {
            std::lock_guard lk(m_);
            ++serving_;
        }
        cv_.notify_all();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::uint64_t next_ = 0;
    std::uint64_t serving_ = 0;
};

/// Immutable view of a session at one revision.
struct SessionSnapshot
{
    std::uint64_t revision = 0;
    std::shared_ptr<const ProbabilityField> probability;
    std::shared_ptr<const TriangleMesh> mesh;
    std::shared_ptr<const CubeTriangles> cubes;
    std::vector<SeedPoint> seeds;
    std::vector<std::string> oplog;
};

/// One live session: a writer guarded by a ticket lock plus published snapshots.
class ApiSession
{
public:
    static constexpr std::size_t kHistory = 32;

    ApiSession(std::string id, Session s) : id_(std::move(id)), session_(std::make_unique<Session>(std::move(s)))
    {
        probability_ = std::make_shared<const ProbabilityField>(session_->probability());
        publish();
    }

    [[nodiscard]] const std::string& id() const noexcept { return id_; }

    /// Runs a mutation with exclusive access, in arrival order, then publishes
    /// a snapshot. The snapshot is published even when the mutation throws.
    template <class F>
    auto mutate(F&& f)
    {
        std::lock_guard lk(writer_);
        struct Publish
        {
            ApiSession* self;
            ~Publish() { self->publish(); }
        } guard{this};
        return f(*session_);
    }

    /// Replaces the whole session (load).
    void replace(Session s)
    {
        std::lock_guard lk(writer_);
        session_ = std::make_unique<Session>(std::move(s));
        probability_ = std::make_shared<const ProbabilityField>(session_->probability());
        {
            std::lock_guard sl(snap_mutex_);
            history_.clear();
        }
        publish();
    }

    [[nodiscard]] std::shared_ptr<const SessionSnapshot> snapshot() const
    {
        std::lock_guard sl(snap_mutex_);
        return history_.back();
    }

    [[nodiscard]] std::shared_ptr<const SessionSnapshot> snapshot_at(std::uint64_t revision) const
    {
        std::lock_guard sl(snap_mutex_);
        for (const auto& s : history_)
            if (s->revision == revision)
                return s;
        return nullptr;
    }

private:
    void publish()
    {
        auto snap = std::make_shared<SessionSnapshot>();
        snap->revision = session_->revision();
        {
            std::lock_guard sl(snap_mutex_);
            if (!history_.empty() && history_.back()->revision == snap->revision &&
                history_.back()->probability == probability_)
                return;
        }
        snap->probability = probability_;
        snap->mesh = std::make_shared<const TriangleMesh>(session_->mesh());
        snap->cubes = std::make_shared<const CubeTriangles>(group_by_cube(*snap->mesh));
        snap->seeds = session_->seeds();
        snap->oplog = session_->oplog();
        std::lock_guard sl(snap_mutex_);
        history_.push_back(std::move(snap));
        while (history_.size() > kHistory)
            history_.pop_front();
    }

    std::string id_;
    TicketLock writer_;
    std::unique_ptr<Session> session_;
    std::shared_ptr<const ProbabilityField> probability_;
    mutable std::mutex snap_mutex_;
    std::deque<std::shared_ptr<const SessionSnapshot>> history_;
};

struct ServiceOptions
{
    std::filesystem::path autosave_dir; ///< empty = no autosave on shutdown
    std::size_t threads = 4;
};

/// HTTP facade under /v1.
class Service
{
public:
    explicit Service(ServiceOptions opt = {}) : opt_(std::move(opt))
    {
        const std::size_t n = std::max<std::size_t>(opt_.threads, 2);
        server_.new_task_queue = [n] { return new httplib::ThreadPool(n); };
        routes();
    }
    ~Service() { stop(); }
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and starts serving in a background thread; port 0 picks a free port.
    int start(const std::string& host = "127.0.0.1", int port = 0)
    {
        const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (bound < 0)
            throw Error("service/bind", "cannot bind " + host + ":" + std::to_string(port));
        port_ = bound;
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return bound;
    }

    /// Stops serving and autosaves every session.
    void stop()
    {
        if (stopped_.exchange(true))
            return;
        server_.stop();
        if (thread_.joinable())
            thread_.join();
        if (!opt_.autosave_dir.empty())
            autosave();
    }

    [[nodiscard]] int port() const noexcept { return port_; }

    /// Sessions created so far, for embedding and tests.
    std::shared_ptr<ApiSession> find(const std::string& id) const
    {
        std::lock_guard lk(sessions_mutex_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    std::string add_session(Session s)
    {
        std::lock_guard lk(sessions_mutex_);
        const std::string id = "s" + std::to_string(++counter_);
        sessions_[id] = std::make_shared<ApiSession>(id, std::move(s));
        return id;
    }

    void autosave()
    {
        std::vector<std::shared_ptr<ApiSession>> all;
        {
            std::lock_guard lk(sessions_mutex_);
            for (const auto& [id, s] : sessions_)
                all.push_back(s);
        }
        std::filesystem::create_directories(opt_.autosave_dir);
        for (const auto& s : all)
            s->mutate([&](Session& sess) { sess.save(opt_.autosave_dir / (s->id() + ".crs")); });
    }

private:
    using json = nlohmann::json;

    static void send_json(httplib::Response& res, int status, const json& body)
    {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& stage, const std::string& message,
                           std::optional<std::uint64_t> revision = std::nullopt)
    {
        json body{{"stage", stage}, {"message", message}};
        if (revision)
            body["revision"] = *revision;
        send_json(res, status, body);
    }

    static json seed_json(const SeedPoint& s)
    {
        return {{"id", s.id},
                {"position", {s.position.x, s.position.y, s.position.z}},
                {"origin", to_string(s.origin)},
                {"status", to_string(s.status)},
                {"d_max", s.d_max},
                {"lambda", s.lambda}};
    }

    static json report_json(const TopologyReport& r)
    {
        return {{"vertices", r.vertices},
                {"edges", r.edges},
                {"faces", r.faces},
                {"euler", r.euler},
                {"non_manifold_count", r.non_manifold_count},
                {"non_manifold_edges", r.non_manifold_edges},
                {"orientable", r.orientable},
                {"connected_components", r.connected_components},
                {"boundary_loop_count", r.boundary_loop_count}};
    }

    static std::string value_text(const json& v)
    {
        if (v.is_string())
            return v.get<std::string>();
        if (v.is_boolean())
            return v.get<bool>() ? "true" : "false";
        if (v.is_number())
            return v.dump();
        throw Error("config/invalid-value", "config values must be numbers, booleans or strings");
    }

    static Session create_session(const json& body)
    {
        Volume volume;
        if (body.contains("volume")) {
            volume = load_volume(body.at("volume").get<std::string>());
        } else if (body.contains("dataset")) {
            const auto name = body.at("dataset").get<std::string>();
            const std::uint64_t rng = body.value("rng", std::uint64_t{1});
            if (name == "folded") {
                FoldParams fp;
                fp.rng_seed = rng;
                if (body.contains("dims")) {
                    const auto d = body.at("dims").get<std::vector<int>>();
                    if (d.size() != 3)
                        throw Error("config/invalid-value", "dims needs three integers");
                    fp.dims = {d[0], d[1], d[2]};
                }
                volume = make_folded_dataset(fp).volume;
            } else {
                Dims dims{100, 100, 40};
                if (body.contains("dims")) {
                    const auto d = body.at("dims").get<std::vector<int>>();
                    if (d.size() != 3)
                        throw Error("config/invalid-value", "dims needs three integers");
                    dims = {d[0], d[1], d[2]};
                }
                volume = make_plane_dataset(name, dims, {0.5, 0.5, 0.5}, rng).volume;
            }
        } else {
            throw Error("service/bad-request", "body needs 'volume' (server-side path) or 'dataset'");
        }
        auto [lo, hi] = body.contains("clamp") ? std::pair<double, double>{body.at("clamp").at(0).get<double>(),
                                                                             body.at("clamp").at(1).get<double>()}
                                               : auto_clamp(volume);
        SessionConfig cfg;
        if (body.contains("config")) {
            for (const auto& [k, v] : body.at("config").items())
                if (!apply_session_key(cfg, k, value_text(v)))
                    throw Error("config/unknown-key", "unknown session config key '" + k + "'");
        }
        return Session::from_volume(volume, lo, hi, cfg);
    }

    /// Wraps a handler with session lookup and error mapping.
    template <class F>
    httplib::Server::Handler with_session(F f)
    {
        return [this, f](const httplib::Request& req, httplib::Response& res) {
            const auto s = find(req.matches[1]);
            if (!s) {
                send_error(res, 404, "service/unknown-session", "no session '" + std::string(req.matches[1]) + "'");
                return;
            }
            guarded(res, [&] { f(*s, req, res); }, s.get());
        };
    }

    template <class F>
    static void guarded(httplib::Response& res, F&& f, const ApiSession* s = nullptr)
    {
        auto revision = [&]() -> std::optional<std::uint64_t> {
            if (!s)
                return std::nullopt;
            return s->snapshot()->revision;
        };
        try {
            f();
        } catch (const json::exception& e) {
            send_error(res, 400, "service/bad-request", e.what(), revision());
        } catch (const Error& e) {
            const bool bad = e.stage().rfind("config/", 0) == 0 || e.stage().rfind("slice/", 0) == 0 ||
                             e.stage() == "service/bad-request";
            const bool missing = e.stage() == "seed/unknown-id" || e.stage() == "session/io";
            send_error(res, bad ? 400 : (missing ? 404 : 422), e.stage(), e.message(), revision());
        } catch (const std::exception& e) {
            send_error(res, 500, "service/internal", e.what(), revision());
        }
    }

    void routes()
    {
        server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}, {"api", "v1"}});
        });

        server_.Post("/v1/session", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = req.body.empty() ? json::object() : json::parse(req.body);
                const std::string id = add_session(create_session(body));
                send_json(res, 201, {{"id", id}, {"revision", 0}});
            });
        });

        server_.Delete(R"(/v1/session/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lk(sessions_mutex_);
            if (!sessions_.erase(req.matches[1]))
                send_error(res, 404, "service/unknown-session", "no session '" + std::string(req.matches[1]) + "'");
            else
                send_json(res, 200, {{"id", std::string(req.matches[1])}});
        });

        server_.Get(R"(/v1/session/([A-Za-z0-9_-]+)/slice)",
                    with_session([](ApiSession& s, const httplib::Request& req, httplib::Response& res) {
                        const auto snap = s.snapshot();
                        const int axis = parse_axis(req.has_param("axis") ? req.get_param_value("axis") : "z");
                        if (!req.has_param("index"))
                            throw Error("slice/missing-index", "index parameter required");
                        const int index = static_cast<int>(parse_number(req.get_param_value("index"), "index"));
                        std::vector<Index3> seeds;
                        for (const auto& sp : snap->seeds)
                            if (sp.status == SeedStatus::active)
                                seeds.push_back(sp.position);
                        const auto img = render_slice(*snap->probability, *snap->mesh, seeds, axis, index);
                        res.set_header("X-Revision", std::to_string(snap->revision));
                        res.set_content(encode_pgm(img), "image/x-portable-graymap");
                    }));

        server_.Get(R"(/v1/session/([A-Za-z0-9_-]+)/seeds)",
                    with_session([](ApiSession& s, const httplib::Request&, httplib::Response& res) {
                        const auto snap = s.snapshot();
                        json seeds = json::array();
                        for (const auto& sp : snap->seeds)
                            seeds.push_back(seed_json(sp));
                        send_json(res, 200, {{"revision", snap->revision}, {"seeds", seeds}});
                    }));

        server_.Post(R"(/v1/session/([A-Za-z0-9_-]+)/seed)",
                     with_session([](ApiSession& s, const httplib::Request& req, httplib::Response& res) {
                         const json body = json::parse(req.body);
                         const Index3 q{body.at("x").get<int>(), body.at("y").get<int>(), body.at("z").get<int>()};
                         const auto delta = s.mutate([&](Session& sess) { return sess.add_seed(q); });
                         send_json(res, 200,
                                   {{"revision", delta.revision}, {"seed", *delta.seed}, {"touched", delta.touched}});
                     }));

        server_.Delete(R"(/v1/session/([A-Za-z0-9_-]+)/seed/(\d+))",
                       with_session([](ApiSession& s, const httplib::Request& req, httplib::Response& res) {
                           const auto id = static_cast<SeedIndex>(std::stoul(req.matches[2]));
                           const auto delta = s.mutate([&](Session& sess) { return sess.remove_seed(id); });
                           send_json(res, 200, {{"revision", delta.revision}, {"detached", delta.detached}});
                       }));

        server_.Post(R"(/v1/session/([A-Za-z0-9_-]+)/auto)",
                     with_session([](ApiSession& s, const httplib::Request& req, httplib::Response& res) {
                         const json body = req.body.empty() ? json::object() : json::parse(req.body);
                         const int max_steps = body.value("max_steps", 1);
                         if (max_steps < 0)
                             throw Error("config/invalid-value", "max_steps must be >= 0");
                         const auto r = s.mutate([&](Session& sess) { return sess.run_automation(max_steps); });
                         json failures = json::array();
                         for (const auto& f : r.failures)
                             failures.push_back({{"position", {f.position.x, f.position.y, f.position.z}},
                                                 {"stage", f.stage},
                                                 {"message", f.message}});
                         send_json(res, 200,
                                   {{"revision", r.revision},
                                    {"steps", r.steps},
                                    {"converged", r.converged},
                                    {"added", r.added},
                                    {"failures", failures}});
                     }));

        server_.Get(R"(/v1/session/([A-Za-z0-9_-]+)/mesh)",
                    with_session([](ApiSession& s, const httplib::Request& req, httplib::Response& res) {
                        const auto snap = s.snapshot();
                        MeshPayload payload;
                        std::shared_ptr<const SessionSnapshot> base;
                        if (req.has_param("since")) {
                            const auto since = std::stoull(req.get_param_value("since"));
                            base = s.snapshot_at(since);
                        }
                        payload = base ? delta_payload(*base->cubes, base->revision, *snap->cubes, snap->revision)
                                       : full_payload(*snap->cubes, snap->revision);
                        res.set_header("X-Revision", std::to_string(snap->revision));
                        res.set_content(encode_payload(payload), "application/octet-stream");
                    }));

        server_.Get(R"(/v1/session/([A-Za-z0-9_-]+)/report)",
                    with_session([](ApiSession& s, const httplib::Request&, httplib::Response& res) {
                        const auto snap = s.snapshot();
                        std::size_t active = 0;
                        for (const auto& sp : snap->seeds)
                            active += sp.status == SeedStatus::active;
                        send_json(res, 200,
                                  {{"revision", snap->revision},
                                   {"seeds", active},
                                   {"topology", report_json(topology_report(*snap->mesh))}});
                    }));

        server_.Get(R"(/v1/session/([A-Za-z0-9_-]+)/oplog)",
                    with_session([](ApiSession& s, const httplib::Request&, httplib::Response& res) {
                        const auto snap = s.snapshot();
                        send_json(res, 200, {{"revision", snap->revision}, {"operations", snap->oplog}});
                    }));

        server_.Post(R"(/v1/session/([A-Za-z0-9_-]+)/save)",
                     with_session([](ApiSession& s, const httplib::Request& req, httplib::Response& res) {
                         const json body = json::parse(req.body);
                         const auto path = body.at("path").get<std::string>();
                         const auto rev = s.mutate([&](Session& sess) {
                             sess.save(path);
                             return sess.revision();
                         });
                         send_json(res, 200, {{"revision", rev}, {"path", path}});
                     }));

        server_.Post(R"(/v1/session/([A-Za-z0-9_-]+)/load)",
                     with_session([](ApiSession& s, const httplib::Request& req, httplib::Response& res) {
                         const json body = json::parse(req.body);
                         const auto path = body.at("path").get<std::string>();
                         s.replace(Session::load(path));
                         send_json(res, 200, {{"revision", s.snapshot()->revision}, {"path", path}});
                     }));
    }

    ServiceOptions opt_;
    httplib::Server server_;
    std::thread thread_;
    std::atomic<bool> stopped_{false};
    int port_ = -1;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<ApiSession>> sessions_;
    std::uint64_t counter_ = 0;
};

} // namespace crease
