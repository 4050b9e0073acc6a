#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <thread>

#include "crease/service.hpp"

using namespace crease;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json kPlane = {{"dataset", "original"}, {"dims", {40, 40, 24}}, {"clamp", {0.2, 1.1}}};

class ServiceTest : public ::testing::Test
{
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() / "crease_service" / ::testing::UnitTest::GetInstance()->current_test_info()->name();
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        ServiceOptions opt;
        opt.autosave_dir = dir_ / "autosave";
        service_ = std::make_unique<Service>(opt);
        port_ = service_->start();
    }

    void TearDown() override { service_.reset(); }

    httplib::Client client() const
    {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(120, 0);
        return c;
    }

    std::string create(const json& body = kPlane)
    {
        auto r = client().Post("/v1/session", body.dump(), "application/json");
        EXPECT_TRUE(r);
        EXPECT_EQ(r->status, 201) << r->body;
        return json::parse(r->body).at("id").get<std::string>();
    }

    httplib::Result post(const std::string& path, const json& body)
    {
        return client().Post(path, body.dump(), "application/json");
    }

    MeshPayload mesh(const std::string& id, std::optional<std::uint64_t> since = std::nullopt)
    {
        std::string path = "/v1/session/" + id + "/mesh";
        if (since)
            path += "?since=" + std::to_string(*since);
        auto r = client().Get(path);
        EXPECT_TRUE(r);
        EXPECT_EQ(r->status, 200);
        EXPECT_EQ(r->get_header_value("Content-Type"), "application/octet-stream");
        return decode_payload(r->body);
    }

    fs::path dir_;
    std::unique_ptr<Service> service_;
    int port_ = 0;
};

} // namespace

TEST_F(ServiceTest, Health)
{
    auto r = client().Get("/v1/health");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(json::parse(r->body).at("status"), "ok");
}

TEST_F(ServiceTest, CreateSessionAndRenderSlice)
{
    const auto id = create();
    EXPECT_EQ(id, "s1");
    auto r = client().Get("/v1/session/" + id + "/slice?axis=z&index=11");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->get_header_value("X-Revision"), "0");
    EXPECT_EQ(r->body.rfind("P5\n40 40\n255\n", 0), 0u);
    EXPECT_EQ(r->body.size(), std::string("P5\n40 40\n255\n").size() + 40u * 40u);

    r = client().Get("/v1/session/" + id + "/slice?axis=x&index=3");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->body.rfind("P5\n40 24\n255\n", 0), 0u);
    r = client().Get("/v1/session/" + id + "/slice?axis=w&index=3");
    EXPECT_EQ(r->status, 400);
    r = client().Get("/v1/session/" + id + "/slice?axis=z&index=99");
    EXPECT_EQ(r->status, 400);
}

TEST_F(ServiceTest, BadRequests)
{
    auto r = post("/v1/session", {{"dataset", "original"}, {"config", {{"bogus", 1}}}});
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(json::parse(r->body).at("stage"), "config/unknown-key");
    r = client().Post("/v1/session", "{not json", "application/json");
    EXPECT_EQ(r->status, 400);
    r = post("/v1/session", json::object());
    EXPECT_EQ(r->status, 400);

    r = client().Get("/v1/session/nope/seeds");
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(json::parse(r->body).at("stage"), "service/unknown-session");
    const auto id = create();
    r = client().Delete("/v1/session/" + id + "/seed/3");
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(json::parse(r->body).at("stage"), "seed/unknown-id");
    r = post("/v1/session/" + id + "/load", {{"path", (dir_ / "missing.crs").string()}});
    EXPECT_EQ(r->status, 404);
    r = client().Delete("/v1/session/" + id);
    EXPECT_EQ(r->status, 200);
    r = client().Get("/v1/session/" + id + "/seeds");
    EXPECT_EQ(r->status, 404);
}

TEST_F(ServiceTest, ZeroProbabilitySeedIsRejected)
{
    const auto id = create();
    auto r = post("/v1/session/" + id + "/seed", {{"x", 20}, {"y", 20}, {"z", 0}});
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 422);
    const auto body = json::parse(r->body);
    EXPECT_EQ(body.at("stage"), "march/zero-probability");
    EXPECT_EQ(body.at("revision"), 0);
    r = client().Get("/v1/session/" + id + "/report");
    EXPECT_EQ(json::parse(r->body).at("revision"), 0);
}

TEST_F(ServiceTest, SeedsAutomationAndReport)
{
    const auto id = create();
    auto r = post("/v1/session/" + id + "/seed", {{"x", 20}, {"y", 20}, {"z", 11}});
    ASSERT_EQ(r->status, 200) << r->body;
    auto body = json::parse(r->body);
    EXPECT_EQ(body.at("revision"), 1);
    EXPECT_EQ(body.at("seed"), 0);
    EXPECT_GT(body.at("touched").get<int>(), 0);

    r = post("/v1/session/" + id + "/auto", {{"max_steps", 100}});
    ASSERT_EQ(r->status, 200) << r->body;
    body = json::parse(r->body);
    EXPECT_TRUE(body.at("converged").get<bool>());
    const int steps = body.at("steps");

    r = client().Get("/v1/session/" + id + "/report");
    body = json::parse(r->body);
    EXPECT_EQ(body.at("revision"), 1 + steps);
    EXPECT_EQ(body.at("seeds"), 1 + steps);
    EXPECT_EQ(body.at("topology").at("euler"), 1);
    EXPECT_EQ(body.at("topology").at("non_manifold_count"), 0);
    EXPECT_TRUE(body.at("topology").at("orientable").get<bool>());

    r = client().Get("/v1/session/" + id + "/seeds");
    body = json::parse(r->body);
    ASSERT_EQ(body.at("seeds").size(), static_cast<std::size_t>(1 + steps));
    EXPECT_EQ(body.at("seeds")[0].at("origin"), "manual");
    if (steps > 0) {
        EXPECT_EQ(body.at("seeds")[1].at("origin"), "auto");
    }
}

TEST_F(ServiceTest, MeshDeltasAreSound)
{
    const auto id = create();
    ClientMesh client_mesh;
    client_mesh.apply(mesh(id));
    EXPECT_TRUE(client_mesh.cubes.empty());

    const std::vector<Index3> seeds{{20, 20, 11}, {28, 20, 11}, {12, 14, 11}};
    for (const auto& q : seeds) {
        auto r = post("/v1/session/" + id + "/seed", {{"x", q.x}, {"y", q.y}, {"z", q.z}});
        ASSERT_EQ(r->status, 200) << r->body;
        const auto delta = mesh(id, client_mesh.revision);
        EXPECT_EQ(delta.kind, PayloadKind::delta);
        client_mesh.apply(delta);
        const auto full = mesh(id);
        ClientMesh fresh;
        fresh.apply(full);
        EXPECT_EQ(client_mesh.revision, fresh.revision);
        EXPECT_EQ(client_mesh.cubes, fresh.cubes);
    }
    auto r = client().Delete("/v1/session/" + id + "/seed/1");
    ASSERT_EQ(r->status, 200);
    client_mesh.apply(mesh(id, client_mesh.revision));
    EXPECT_EQ(client_mesh.cubes, group_by_cube(*service_->find(id)->snapshot()->mesh));

    const auto same = mesh(id, client_mesh.revision);
    EXPECT_EQ(same.kind, PayloadKind::delta);
    EXPECT_TRUE(same.cleared.empty());
    EXPECT_TRUE(same.triangles.empty());

    // unknown base revision falls back to a full payload
    EXPECT_EQ(mesh(id, 999).kind, PayloadKind::full);
    ClientMesh stale;
    stale.revision = 2;
    EXPECT_THROW(stale.apply(mesh(id, 1)), Error);
}

TEST_F(ServiceTest, ConcurrentMutationsAreSerialized)
{
    const auto id = create();
    ASSERT_EQ(post("/v1/session/" + id + "/seed", {{"x", 20}, {"y", 20}, {"z", 11}})->status, 200);
    const std::vector<Index3> seeds{{8, 8, 11}, {32, 8, 11}, {8, 32, 11}, {32, 32, 11}, {20, 8, 11}, {20, 32, 11}};
    std::vector<int> status(seeds.size());
    std::vector<std::uint64_t> revisions(seeds.size());
    std::vector<std::thread> writers;
    for (std::size_t i = 0; i < seeds.size(); ++i)
        writers.emplace_back([&, i] {
            auto c = client();
            auto r = c.Post("/v1/session/" + id + "/seed",
                            json{{"x", seeds[i].x}, {"y", seeds[i].y}, {"z", seeds[i].z}}.dump(), "application/json");
            status[i] = r ? r->status : -1;
            if (r && r->status == 200)
                revisions[i] = json::parse(r->body).at("revision").get<std::uint64_t>();
        });
    // readers see complete snapshots while writers run
    for (int k = 0; k < 10; ++k) {
        auto r = client().Get("/v1/session/" + id + "/report");
        ASSERT_TRUE(r);
        const auto body = json::parse(r->body);
        EXPECT_EQ(body.at("seeds").get<std::uint64_t>(), body.at("revision").get<std::uint64_t>());
    }
    for (auto& t : writers)
        t.join();

    std::set<std::uint64_t> seen;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        EXPECT_EQ(status[i], 200);
        seen.insert(revisions[i]);
    }
    EXPECT_EQ(seen.size(), seeds.size());
    EXPECT_EQ(*seen.begin(), 2u);
    EXPECT_EQ(*seen.rbegin(), 1u + seeds.size());

    auto r = client().Get("/v1/session/" + id + "/oplog");
    const auto ops = json::parse(r->body).at("operations").get<std::vector<std::string>>();
    EXPECT_EQ(ops.size(), 1u + seeds.size());
    const auto snap = service_->find(id)->snapshot();
    Session live = Session::from_volume(make_plane_dataset("original", {40, 40, 24}, {0.5, 0.5, 0.5}, 1).volume, 0.2,
                                        1.1);
    const auto replayed = live.replay(ops);
    EXPECT_EQ(replayed.mesh(), *snap->mesh);
}

TEST_F(ServiceTest, SaveLoadAndAutosave)
{
    const auto id = create();
    ASSERT_EQ(post("/v1/session/" + id + "/seed", {{"x", 20}, {"y", 20}, {"z", 11}})->status, 200);
    const auto path = dir_ / "saved.crs";
    auto r = post("/v1/session/" + id + "/save", {{"path", path.string()}});
    ASSERT_EQ(r->status, 200) << r->body;
    const auto before = mesh(id);
    ASSERT_EQ(post("/v1/session/" + id + "/seed", {{"x", 30}, {"y", 20}, {"z", 11}})->status, 200);
    r = post("/v1/session/" + id + "/load", {{"path", path.string()}});
    ASSERT_EQ(r->status, 200) << r->body;
    EXPECT_EQ(json::parse(r->body).at("revision"), 1);
    EXPECT_EQ(mesh(id).triangles, before.triangles);

    service_->stop();
    const auto saved = Session::load(dir_ / "autosave" / (id + ".crs"));
    EXPECT_EQ(saved.revision(), 1u);
    EXPECT_EQ(saved.active_seed_count(), 1u);
}

TEST(TicketLock, ServesInArrivalOrder)
{
    TicketLock lock;
    std::vector<int> order;
    lock.lock();
    std::vector<std::thread> ts;
    for (int i = 0; i < 4; ++i) {
        ts.emplace_back([&, i] {
            lock.lock();
            order.push_back(i);
            lock.unlock();
        });
        // let thread i take its ticket before the next one starts
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    lock.unlock();
    for (auto& t : ts)
        t.join();
    EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3}));
}
