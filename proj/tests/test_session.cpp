#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "crease/generators.hpp"
#include "crease/session.hpp"

using namespace crease;
namespace fs = std::filesystem;

namespace {

Session plane_session()
{
    SessionConfig cfg;
    cfg.d_max = 10;
    cfg.lambda = 3;
    return Session::from_volume(gen_plane({40, 40, 24}, 1.5, {1, 1, 1}), 0.0, 1.1, cfg);
}

std::string stage_of(auto&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.stage();
    }
    return "none";
}

fs::path temp_path(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "crease_session";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<char> read_bytes(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<char>& b)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(b.data(), static_cast<std::streamsize>(b.size()));
}

void expect_consistent(const Session& s)
{
    EXPECT_NO_THROW(s.verify());
    EXPECT_EQ(canonical_triangles(s.mesh()), canonical_triangles(s.fresh_mesh()));
}

} // namespace

TEST(Session, FreshSessionIsEmpty)
{
    const auto s = plane_session();
    EXPECT_EQ(s.revision(), 0u);
    EXPECT_TRUE(s.mesh().empty());
    const auto r = topology_report(s.mesh());
    EXPECT_EQ(r.vertices + r.edges + r.faces, 0u);
    EXPECT_EQ(r.euler, 0);
    const auto path = temp_path("fresh.crs");
    s.save(path);
    EXPECT_EQ(Session::load(path), s);
}

TEST(Session, FirstSeedGivesADisc)
{
    auto s = plane_session();
    const auto delta = s.add_seed({20, 20, 11});
    EXPECT_EQ(delta.revision, 1u);
    ASSERT_TRUE(delta.seed);
    EXPECT_EQ(*delta.seed, 0u);
    EXPECT_GT(delta.touched, 0u);
    const auto r = topology_report(s.mesh());
    EXPECT_EQ(r.euler, 1);
    EXPECT_TRUE(r.orientable);
    EXPECT_EQ(r.non_manifold_count, 0u);
    expect_consistent(s);
}

TEST(Session, FailedAddLeavesStateUnchanged)
{
    auto s = plane_session();
    s.add_seed({20, 20, 11});
    const Session before = s;
    EXPECT_EQ(stage_of([&] { s.add_seed({20, 20, 11}); }), "seed/too-close");
    EXPECT_EQ(stage_of([&] { s.add_seed({21, 19, 12}); }), "seed/too-close");
    EXPECT_EQ(stage_of([&] { s.add_seed({5, 5, 1}); }), "march/zero-probability");
    EXPECT_EQ(stage_of([&] { s.add_seed({40, 5, 11}); }), "march/out-of-bounds");
    EXPECT_EQ(s, before);
    EXPECT_EQ(s.revision(), 1u);
    EXPECT_EQ(stage_of([&] { s.remove_seed(7); }), "seed/unknown-id");
    EXPECT_EQ(s, before);
}

TEST(Session, AddThenRemoveRestoresFreshFields)
{
    auto s = plane_session();
    const auto fresh = plane_session();
    s.add_seed({20, 20, 11});
    const auto delta = s.remove_seed(0);
    EXPECT_TRUE(delta.full_rebuild);
    EXPECT_EQ(delta.revision, 2u);
    EXPECT_EQ(s.fields(), fresh.fields());
    EXPECT_TRUE(s.mesh().empty());
    EXPECT_EQ(s.active_seed_count(), 0u);
    EXPECT_EQ(stage_of([&] { s.remove_seed(0); }), "seed/unknown-id");
}

TEST(Session, RemovingTheMiddleOfAChain)
{
    auto s = plane_session();
    s.add_seed({12, 20, 11});
    s.add_seed({18, 20, 11});
    s.add_seed({24, 20, 11});
    const auto delta = s.remove_seed(1);
    EXPECT_TRUE(delta.detached.empty());
    expect_consistent(s);

    auto direct = plane_session();
    direct.add_seed({12, 20, 11});
    direct.add_seed({24, 20, 11});
    EXPECT_EQ(s.fields().t, direct.fields().t);
    EXPECT_EQ(canonical_triangles(s.mesh()), canonical_triangles(direct.mesh()));
}

TEST(Session, RemovingABridgeDetachesTheFarSide)
{
    auto s = plane_session();
    s.add_seed({6, 20, 11});
    s.add_seed({18, 20, 11});
    s.add_seed({30, 20, 11});
    const auto delta = s.remove_seed(1);
    ASSERT_EQ(delta.detached.size(), 1u);
    EXPECT_EQ(delta.detached.front(), 2u);
    EXPECT_EQ(s.seeds()[2].status, SeedStatus::detached);
    expect_consistent(s);
}

TEST(Session, AutomationStepsAndConverges)
{
    auto s = plane_session();
    EXPECT_EQ(stage_of([&] { s.run_automation(5); }), "automation/no-seeds");
    s.add_seed({20, 20, 11});
    const auto one = s.run_automation(1);
    EXPECT_EQ(one.steps, 1);
    EXPECT_EQ(one.added.size(), 1u);
    EXPECT_FALSE(one.converged);
    EXPECT_EQ(s.active_seed_count(), 2u);

    const auto all = s.run_automation(1000);
    EXPECT_TRUE(all.converged);
    EXPECT_GT(all.steps, 0);
    const auto r = topology_report(s.mesh());
    EXPECT_EQ(r.euler, 1);
    EXPECT_EQ(r.non_manifold_count, 0u);
    EXPECT_TRUE(r.orientable);
    expect_consistent(s);

    const auto again = s.run_automation(1000);
    EXPECT_TRUE(again.converged);
    EXPECT_EQ(again.steps, 0);
}

TEST(Session, ReplayReproducesTheMesh)
{
    auto s = plane_session();
    s.add_seed({20, 20, 11});
    s.run_automation(4);
    s.add_seed({5, 5, 11});
    s.remove_seed(2);
    const auto r = s.replay(s.oplog());
    EXPECT_EQ(r.mesh(), s.mesh());
    EXPECT_EQ(r.fields(), s.fields());
    EXPECT_EQ(r.oplog(), s.oplog());
    EXPECT_EQ(stage_of([&] { (void)r.replay({"frobnicate 1"}); }), "oplog/malformed");
    EXPECT_EQ(stage_of([&] { (void)r.replay({"add 1 2"}); }), "oplog/malformed");
}

TEST(Session, SaveLoadRoundTrip)
{
    auto s = plane_session();
    s.add_seed({12, 20, 11});
    s.add_seed({20, 22, 11});
    s.add_seed({27, 18, 11});
    const auto path = temp_path("three.crs");
    s.save(path);
    auto loaded = Session::load(path);
    EXPECT_EQ(loaded, s);
    EXPECT_EQ(loaded.fields(), s.fields());
    EXPECT_NO_THROW(loaded.verify());

    loaded.add_seed({20, 8, 11});
    s.add_seed({20, 8, 11});
    EXPECT_EQ(loaded, s);
    EXPECT_EQ(loaded.mesh(), s.mesh());
}

TEST(Session, LoadRejectsDamagedFiles)
{
    auto s = plane_session();
    s.add_seed({20, 20, 11});
    const auto path = temp_path("good.crs");
    s.save(path);
    const auto bytes = read_bytes(path);
    ASSERT_GT(bytes.size(), 64u);

    const auto bad = temp_path("bad.crs");
    write_bytes(bad, {bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(bytes.size() / 2)});
    EXPECT_EQ(stage_of([&] { (void)Session::load(bad); }), "session/checksum");

    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x5a;
    write_bytes(bad, flipped);
    EXPECT_EQ(stage_of([&] { (void)Session::load(bad); }), "session/checksum");

    auto magic = bytes;
    magic[0] = 'X';
    write_bytes(bad, magic);
    EXPECT_EQ(stage_of([&] { (void)Session::load(bad); }), "session/corrupt");

    auto version = bytes;
    version[8] = 99;
    write_bytes(bad, version);
    EXPECT_EQ(stage_of([&] { (void)Session::load(bad); }), "session/version-mismatch");

    EXPECT_EQ(stage_of([&] { (void)Session::load(temp_path("missing.crs")); }), "session/io");
}

TEST(Session, RevisionIncrementsOnEveryMutation)
{
    auto s = plane_session();
    std::uint64_t rev = s.revision();
    s.add_seed({20, 20, 11});
    EXPECT_EQ(s.revision(), ++rev);
    s.add_seed({26, 20, 11});
    EXPECT_EQ(s.revision(), ++rev);
    s.remove_seed(0);
    EXPECT_EQ(s.revision(), ++rev);
    const auto a = s.run_automation(2);
    EXPECT_EQ(s.revision(), rev + static_cast<std::uint64_t>(a.steps));
}
