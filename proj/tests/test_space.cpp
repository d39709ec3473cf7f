#include <catch2/catch_amalgamated.hpp>

#include "subgauss/doubling.hpp"
#include "subgauss/graph.hpp"
#include "subgauss/util.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace subgauss;

TEST_CASE("path builder basics", "[space]") {
    auto g2 = build_path(2, 1.0);
    CHECK(g2.vertex_count() == 2);
    CHECK(g2.distance(0, 1) == 1.0);
    CHECK(g2.total_mass() == 2.0);

    auto g5 = build_path(5, 1.0);
    CHECK(g5.distance(0, 4) == 4.0);

    auto g3 = build_path(3, 0.5);
    CHECK(g3.diameter() == Catch::Approx(1.0));

    CHECK_THROWS_AS(build_path(1), std::invalid_argument);
    CHECK_THROWS_AS(build_path(4, 0.0), std::invalid_argument);
}

TEST_CASE("lattice2d builder", "[space]") {
    auto g2 = build_lattice2d(2);
    CHECK(g2.vertex_count() == 4);
    CHECK(g2.edges().size() == 4);

    auto g3 = build_lattice2d(3);
    CHECK(g3.distance(0, 8) == 4.0);  // opposite corners, L1 path metric

    auto g4 = build_lattice2d(4);
    CHECK(g4.total_mass() == 16.0);
}

TEST_CASE("gasket builder", "[space]") {
    auto g0 = build_gasket(0);
    CHECK(g0.vertex_count() == 3);
    CHECK(g0.edges().size() == 3);
    CHECK(g0.edges()[0].conductance == 1.0);
    CHECK(g0.edges()[0].length == 1.0);

    // One subdivision step, counted by hand: 6 vertices, 9 edges,
    // conductance 5/3, edge length 1/2.
    auto g1 = build_gasket(1);
    CHECK(g1.vertex_count() == 6);
    CHECK(g1.edges().size() == 9);
    CHECK(g1.edges()[0].conductance == Catch::Approx(5.0 / 3.0));
    CHECK(g1.edges()[0].length == 0.5);

    // v_{L+1} = 3 v_L - 3, i.e. v_L = 3 (3^L + 1) / 2.
    for (int L = 0; L <= 3; ++L) {
        auto g = build_gasket(L);
        CHECK(g.vertex_count() == 3 * (static_cast<int>(std::pow(3, L)) + 1) / 2);
        CHECK(g.total_mass() == Catch::Approx(1.0));
        CHECK(g.diameter() == Catch::Approx(1.0));
    }

    CHECK_THROWS_AS(build_gasket(12, true, 1000), std::runtime_error);
}

TEST_CASE("vicsek builder", "[space]") {
    auto g0 = build_vicsek(0);
    CHECK(g0.vertex_count() == 5);
    CHECK(g0.edges().size() == 4);

    // Five copies glued at corners: 21 vertices, 20 edges.
    auto g1 = build_vicsek(1);
    CHECK(g1.vertex_count() == 21);
    CHECK(g1.edges().size() == 20);
    CHECK(g1.total_mass() == Catch::Approx(1.0));

    // Trees at every level: v = e + 1 plus connectivity (checked at build).
    for (int L = 0; L <= 2; ++L) {
        auto g = build_vicsek(L);
        CHECK(g.vertex_count() == static_cast<int>(g.edges().size()) + 1);
    }
}

TEST_CASE("ball convention is strict", "[space]") {
    auto g = build_path(5, 1.0);
    Ball b = ball(g, 2, 1.5);
    CHECK(b.members == std::vector<VertexId>{1, 2, 3});

    Ball tiny = ball(g, 2, 1.0);  // r = min incident length
    CHECK(tiny.members == std::vector<VertexId>{2});

    Ball all = ball(g, 2, 100.0);
    CHECK(all.members.size() == 5);

    CHECK_THROWS_AS(ball(g, 2, 0.0), std::invalid_argument);
}

TEST_CASE("ball monotone in radius", "[space]") {
    auto g = build_gasket(2);
    for (VertexId x = 0; x < g.vertex_count(); x += 3) {
        std::vector<VertexId> prev;
        for (double r : combinatorial_radii(g)) {
            Ball b = ball(g, x, r);
            CHECK(std::includes(b.members.begin(), b.members.end(), prev.begin(), prev.end()));
            prev = b.members;
        }
    }
}

TEST_CASE("metric axioms on random triples", "[space][property]") {
    Rng rng(1234);
    for (const auto& g : {build_path(32), build_lattice2d(6), build_gasket(3),
                          build_vicsek(2)}) {
        int n = g.vertex_count();
        for (int trial = 0; trial < 1000; ++trial) {
            VertexId a = static_cast<VertexId>(rng.integer(n));
            VertexId b = static_cast<VertexId>(rng.integer(n));
            VertexId c = static_cast<VertexId>(rng.integer(n));
            double dab = g.distance(a, b);
            CHECK(dab == g.distance(b, a));
            CHECK((dab == 0.0) == (a == b));
            CHECK(g.distance(a, c) <= dab + g.distance(b, c) + 1e-12);
        }
    }
}

TEST_CASE("doubling report on canonical families", "[space][doubling]") {
    SECTION("path(64): one-dimensional volume growth") {
        auto g = build_path(64);
        auto rep = doubling_report(g, combinatorial_radii(g));
        CHECK(rep.D >= 1.0);
        CHECK(rep.Q_L == Catch::Approx(1.0).margin(0.15));
        CHECK(rep.Q_U == Catch::Approx(1.0).margin(0.15));
        CHECK(rep.Q_L <= rep.Q_U);
        CHECK(rep.lambda_perf > 0.0);
        CHECK(rep.lambda_perf <= 2.0);
    }
    SECTION("lattice2d(16): two-dimensional count oracle") {
        auto g = build_lattice2d(16);
        auto rep = doubling_report(g, combinatorial_radii(g));
        CHECK(rep.Q_L == Catch::Approx(2.0).margin(0.2));
        CHECK(rep.Q_U == Catch::Approx(2.0).margin(0.2));
    }
    SECTION("gasket(5): self-similar cell counting") {
        auto g = build_gasket(5);
        auto rep = doubling_report(g, combinatorial_radii(g));
        double target = std::log(3.0) / std::log(2.0);
        CHECK(rep.Q_L == Catch::Approx(target).margin(0.15));
        CHECK(rep.Q_U == Catch::Approx(target).margin(0.15));
    }
}

TEST_CASE("doubling constant invariances", "[space][doubling][property]") {
    auto base = build_path(48);
    auto rep0 = doubling_report(base, combinatorial_radii(base));

    // Uniform rescaling of edge lengths.
    std::vector<Edge> edges = base.edges();
    for (Edge& e : edges) e.length *= 3.0;
    MetricMeasureGraph scaled(base.vertex_count(), edges, base.mu(), Family::path);
    auto rep1 = doubling_report(scaled, combinatorial_radii(scaled));
    CHECK(rep1.D == Catch::Approx(rep0.D));

    // Uniform rescaling of mu.
    std::vector<double> mu = base.mu();
    for (double& m : mu) m *= 7.0;
    MetricMeasureGraph remeasured(base.vertex_count(), base.edges(), mu, Family::path);
    auto rep2 = doubling_report(remeasured, combinatorial_radii(remeasured));
    CHECK(rep2.D == Catch::Approx(rep0.D));
}

TEST_CASE("gasket doubling constant survives refinement", "[space][doubling][slow]") {
    double worst = 0.0;
    for (int L = 2; L <= 6; ++L) {
        auto g = build_gasket(L);
        auto rep = doubling_report(g, combinatorial_radii(g));
        worst = std::max(worst, rep.D);
    }
    CHECK(worst < 40.0);
}

TEST_CASE("graph text round trip and validation", "[space][io]") {
    auto g = build_gasket(2);
    std::stringstream ss;
    save_graph(g, ss);
    auto g2 = load_graph(ss);
    REQUIRE(g2.vertex_count() == g.vertex_count());
    REQUIRE(g2.edges().size() == g.edges().size());
    for (VertexId v = 0; v < g.vertex_count(); ++v)
        CHECK(g2.mu(v) == g.mu(v));
    CHECK(g2.distance(0, 5) == g.distance(0, 5));

    std::stringstream bad("2 1\n0 1 -1.0 1.0\n0 1\n1 1\n");
    CHECK_THROWS(load_graph(bad));
    std::stringstream disconnected("4 2\n0 1 1 1\n2 3 1 1\n0 1\n1 1\n2 1\n3 1\n");
    CHECK_THROWS(load_graph(disconnected));
}
