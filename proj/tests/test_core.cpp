#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace pafparse;

TEST(Topology, Mpii14Preset)
{
    const Topology t = topology_preset(Preset::mpii14);
    EXPECT_EQ(t.num_parts(), 14u);
    EXPECT_EQ(t.num_limbs(), 13u);
    EXPECT_EQ(t.kind(), TopologyKind::tree);
    EXPECT_EQ(t.part_names().front(), "head_top");
    EXPECT_EQ(t.reference(), std::make_pair(std::size_t(0), std::size_t(1)));
}

TEST(Topology, Coco18Preset)
{
    const Topology t = topology_preset("coco18");
    EXPECT_EQ(t.num_parts(), 18u);
    EXPECT_EQ(t.num_limbs(), 17u);
    EXPECT_EQ(t.kind(), TopologyKind::tree);
}

TEST(Topology, UnknownPresetName)
{
    EXPECT_THROW(topology_preset("openpose25"), Error);
    EXPECT_FALSE(preset_from_name("mpii"));
}

TEST(Topology, FullGraphEdgeCounts)
{
    EXPECT_EQ(full_graph_of(topology_preset(Preset::mpii14)).num_limbs(), 91u);
    EXPECT_EQ(full_graph_of(topology_preset(Preset::mpii14)).kind(), TopologyKind::full_graph);

    const Topology two({ "a", "b" }, { { 0, 1 } });
    const Topology two_full = full_graph_of(two);
    EXPECT_EQ(two_full.num_limbs(), 1u);
    EXPECT_EQ(two_full.limbs(), two.limbs());
    EXPECT_EQ(two_full.kind(), TopologyKind::full_graph);

    const Topology four({ "a", "b", "c", "d" }, { { 0, 1 }, { 1, 2 }, { 2, 3 } });
    EXPECT_EQ(full_graph_of(four).num_limbs(), 6u);
}

TEST(Topology, RejectsInvalidEdgeSets)
{
    EXPECT_THROW(Topology({}, {}), Error);
    EXPECT_THROW(Topology({ "a", "b" }, { { 0, 2 } }), Error);
    EXPECT_THROW(Topology({ "a", "b" }, { { 1, 1 } }), Error);
    EXPECT_THROW(Topology({ "a", "b", "c" }, { { 0, 1 }, { 1, 0 } }), Error);
    // J - 1 edges but a cycle plus a separate component.
    EXPECT_THROW(Topology({ "a", "b", "c", "d", "e" }, { { 0, 1 }, { 1, 2 }, { 2, 0 }, { 3, 4 } }), Error);
    // Too few edges to connect.
    EXPECT_THROW(Topology({ "a", "b", "c", "d" }, { { 0, 1 }, { 2, 3 } }), Error);
    EXPECT_THROW(Topology({ "a", "b", "c" }, { { 0, 1 } }, std::nullopt, TopologyKind::full_graph), Error);
}

TEST(Topology, RemovingAnyTreeLimbDisconnects)
{
    for (const Topology& t : { topology_preset(Preset::mpii14), topology_preset(Preset::coco18) }) {
        for (std::size_t drop = 0; drop < t.num_limbs(); ++drop) {
            std::vector<std::size_t> parent(t.num_parts());
            for (std::size_t i = 0; i < parent.size(); ++i)
                parent[i] = i;
            auto find = [&](std::size_t x) {
                while (parent[x] != x)
                    x = parent[x];
                return x;
            };
            for (std::size_t c = 0; c < t.num_limbs(); ++c)
                if (c != drop)
                    parent[find(t.limb(c).from)] = find(t.limb(c).to);
            std::set<std::size_t> roots;
            for (std::size_t p = 0; p < t.num_parts(); ++p)
                roots.insert(find(p));
            EXPECT_EQ(roots.size(), 2u) << "limb " << drop;
        }
    }
}

TEST(Topology, FileRoundTrip)
{
    const Topology t = topology_preset(Preset::coco18);
    std::ostringstream out;
    write_topology(out, t);
    EXPECT_EQ(parse_topology(out.str()), t);
}

TEST(Topology, ParserReportsLineNumbers)
{
    try {
        parse_topology("parts 2\na\nb\nlimbs 1\n0 x\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::malformed_input);
        EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_topology("parts 2\na\nb\nlimbs 1\n0 1\nreference 0 1\nextra\n"), Error);
    EXPECT_THROW(parse_topology(""), Error);
}

TEST(Topology, ParserAcceptsCommentsAndDefaultsReference)
{
    const Topology t = parse_topology("# toy\nparts 3\na\nb\nc\n\nlimbs 2\n1 2\n0 1\n");
    EXPECT_EQ(t.num_limbs(), 2u);
    EXPECT_EQ(t.reference(), std::make_pair(std::size_t(1), std::size_t(2)));
    EXPECT_EQ(t.find_limb(1, 0), std::optional<std::size_t>(1));
    EXPECT_FALSE(t.find_limb(0, 2));
}

TEST(Geometry, LimbSegmentAxisAligned)
{
    const auto s = limb_segment({ 0, 0 }, { 10, 0 });
    EXPECT_EQ(s.direction, (Point2 { 1, 0 }));
    EXPECT_EQ(s.normal, (Point2 { -0.0, 1 }));
    EXPECT_EQ(s.length, 10.0);
}

TEST(Geometry, LimbSegmentThreeFourFive)
{
    const auto s = limb_segment({ 0, 0 }, { 3, 4 });
    EXPECT_NEAR(s.direction.x, 0.6, 1e-15);
    EXPECT_NEAR(s.direction.y, 0.8, 1e-15);
    EXPECT_DOUBLE_EQ(s.length, 5.0);
}

TEST(Geometry, DegenerateSegmentThrows)
{
    try {
        limb_segment({ 2, 3 }, { 2, 3 });
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_segment);
    }
}

TEST(Geometry, ReversedDirectionIsNegated)
{
    test_support::Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const Point2 a { rng.uniform(-100, 100), rng.uniform(-100, 100) };
        const Point2 b { rng.uniform(-100, 100), rng.uniform(-100, 100) };
        const auto f = limb_segment(a, b), r = limb_segment(b, a);
        EXPECT_NEAR(f.direction.x, -r.direction.x, 1e-12);
        EXPECT_NEAR(f.direction.y, -r.direction.y, 1e-12);
    }
}

TEST(Grid, ExhaustiveReadWriteSweep)
{
    for (int w = 1; w <= 5; ++w) {
        for (int h = 1; h <= 5; ++h) {
            Grid<int> g(w, h, -1);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    EXPECT_EQ(g(x, y), -1);
                    g(x, y) = 100 * y + x;
                    EXPECT_EQ(g.at(x, y), 100 * y + x);
                }
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    EXPECT_EQ(g.values()[std::size_t(y * w + x)], 100 * y + x);
        }
    }
}

TEST(Grid, BoundsAndZeroPadding)
{
    ScalarGrid g(3, 2, 1.0f);
    EXPECT_THROW(g.at(3, 0), Error);
    EXPECT_THROW(g.at(0, -1), Error);
    EXPECT_EQ(g.get_or_zero(-1, 0), 0.0f);
    EXPECT_EQ(g.get_or_zero(2, 1), 1.0f);
    EXPECT_THROW(ScalarGrid(-1, 2), Error);
}

TEST(Grid, BilinearSampling)
{
    ScalarGrid g(2, 2);
    g(0, 0) = 0.0f;
    g(1, 0) = 1.0f;
    g(0, 1) = 2.0f;
    g(1, 1) = 3.0f;
    EXPECT_DOUBLE_EQ(sample_bilinear(g, { 0.5, 0.5 }), 1.5);
    EXPECT_DOUBLE_EQ(sample_bilinear(g, { 1.0, 0.0 }), 1.0);
    EXPECT_DOUBLE_EQ(sample_bilinear(g, { 0.25, 0.0 }), 0.25);
    // Half a pixel outside reads half of zero padding.
    EXPECT_DOUBLE_EQ(sample_bilinear(g, { 1.5, 0.0 }), 0.5);
    EXPECT_DOUBLE_EQ(sample_bilinear(g, { -5.0, -5.0 }), 0.0);
}

TEST(Scene, ValidationRejectsBadScenes)
{
    Scene s { 10, 10, { { Point2 { 1, 1 }, std::nullopt } } };
    EXPECT_NO_THROW(validate_scene(s, 2));
    EXPECT_THROW(validate_scene(s, 3), Error);
    s.persons[0][0] = Point2 { 10, 1 };
    EXPECT_THROW(validate_scene(s, 2), Error);
    EXPECT_THROW(validate_scene(Scene { 0, 10, {} }, 2), Error);
}

TEST(Threads, ParallelForCoversEveryIndexOnce)
{
    for (unsigned threads : { 1u, 2u, 3u, 8u }) {
        std::vector<int> hits(97, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
        for (int h : hits)
            EXPECT_EQ(h, 1);
    }
}

TEST(Threads, ParallelForPropagatesExceptions)
{
    EXPECT_THROW(parallel_for(10, 4,
                     [](std::size_t i) {
                         if (i == 7)
                             throw Error(ErrorKind::internal_consistency, "boom");
                     }),
        Error);
}

TEST(Logging, SinkCapturesWarnings)
{
    std::vector<std::string> seen;
    set_log_sink([&](std::string_view m) { seen.emplace_back(m); });
    log_warning("hello");
    set_log_sink({});
    log_warning("dropped");
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0], "hello");
}
