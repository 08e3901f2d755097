#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nlfem/geometry.hpp"
#include "support/oracles.hpp"

using namespace nlfem;

namespace {

const Triangle kUnit{{{0, 0}, {1, 0}, {0, 1}}};

double area_of(const Retriangulation& r) {
    double a = 0.0;
    for (int i = 0; i < r.size; ++i) a += 0.5 * signed_area2(r.triangles[i][0], r.triangles[i][1], r.triangles[i][2]);
    return a;
}

bool is_convex_ccw(const ConvexPolygon& p) {
    for (int i = 0; i < p.size; ++i)
        if (signed_area2(p[i], p[(i + 1) % p.size], p[(i + 2) % p.size]) < -1e-14) return false;
    return true;
}

}  // namespace

TEST_CASE("nocaps basic cases") {
    auto inside = intersect_nocaps(kUnit, {0.3, 0.3}, 2.0);
    REQUIRE(inside.size == 3);
    CHECK(inside.area() == doctest::Approx(0.5).epsilon(1e-15));
    for (int i = 0; i < 3; ++i) CHECK(inside[i] == kUnit[i]);
    CHECK(intersect_nocaps(kUnit, {3.0, 3.0}, 0.5).empty());
}

TEST_CASE("nocaps quarter disk") {
    auto p = intersect_nocaps(kUnit, {0, 0}, 0.5);
    CHECK(p.size == 3);
    CHECK(p.area() == doctest::Approx(0.125).epsilon(1e-14));
    // exact disk piece by sampling; the nocaps region misses exactly the circular segment
    double mc = oracle::monte_carlo_area(kUnit, [](const Vec2& q) { return dot(q, q) <= 0.25; }, 10'000'000, 11);
    double segment = 0.25 * (std::numbers::pi / 2 - 1.0) / 2.0;
    CHECK(p.area() < std::numbers::pi * 0.25 / 4);
    CHECK(std::fabs(mc - segment - p.area()) < 4e-4);
    CHECK(oracle::disk_triangle_area(kUnit, {0, 0}, 0.5) == doctest::Approx(std::numbers::pi / 16).epsilon(1e-13));
}

TEST_CASE("approxcaps adds one arc midpoint per cap") {
    // one chord cutting off the corner at the origin
    Vec2 c{-0.6, -0.6};
    double delta = 1.0;
    auto n = intersect_nocaps(kUnit, c, delta);
    auto a = intersect_approxcaps(kUnit, c, delta);
    CHECK(a.size == n.size + 1);
    int on_circle = 0;
    for (int i = 0; i < a.size; ++i) {
        bool found = false;
        for (int j = 0; j < n.size; ++j) found |= norm(a[i] - n[j]) < 1e-14;
        if (!found) {
            CHECK(norm(a[i] - c) == doctest::Approx(delta).epsilon(1e-13));
            ++on_circle;
        }
    }
    CHECK(on_circle == 1);
    CHECK(intersect_approxcaps(kUnit, {0.2, 0.2}, 5.0).size == 3);
}

TEST_CASE("containment chain on random configurations") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0), rad(0.05, 1.2);
    int tested = 0;
    while (tested < 100) {
        Triangle t{{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}}};
        double a2 = signed_area2(t[0], t[1], t[2]);
        if (std::fabs(a2) < 0.05) continue;
        if (a2 < 0) std::swap(t[1], t[2]);
        Vec2 c{u(rng), u(rng)};
        double d = rad(rng);
        double exact = oracle::disk_triangle_area(t, c, d);
        if (exact <= 0.0) continue;
        ++tested;
        auto n = intersect_nocaps(t, c, d);
        auto a = intersect_approxcaps(t, c, d);
        CHECK(is_convex_ccw(n));
        CHECK(is_convex_ccw(a));
        double an = n.area(), aa = a.area();
        CHECK(an <= aa + 1e-14);
        CHECK(aa <= exact + 1e-13);
        CHECK(exact <= 0.5 * std::fabs(a2) + 1e-13);
        // exact-area oracle against sampling on a subset
        if (tested % 20 == 0) {
            double mc = oracle::monte_carlo_area(t, [&](const Vec2& q) { return norm(q - c) <= d; }, 2'000'000, tested);
            CHECK(std::fabs(mc - exact) < 5e-3 * 0.5 * std::fabs(a2));
        }
    }
}

TEST_CASE("nocaps is idempotent") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-0.5, 1.0);
    for (int i = 0; i < 50; ++i) {
        Vec2 c{u(rng), u(rng)};
        auto p = intersect_nocaps(kUnit, c, 0.6);
        if (p.empty()) continue;
        auto q = intersect_nocaps(p, c, 0.6);
        REQUIRE(q.size == p.size);
        for (int j = 0; j < p.size; ++j) {
            bool found = false;
            for (int k = 0; k < q.size; ++k) found |= norm(p[j] - q[k]) <= 1e-12;
            CHECK(found);
        }
    }
}

TEST_CASE("infinity ball clipping") {
    CHECK(intersect_infinity(kUnit, {0.3, 0.3}, 1.0).area() == doctest::Approx(0.5).epsilon(1e-15));
    Triangle big{{{-10, -10}, {10, -10}, {0, 10}}};
    auto sq = intersect_infinity(big, {0, 0}, 0.5);
    CHECK(sq.size == 4);
    CHECK(sq.area() == doctest::Approx(1.0).epsilon(1e-14));
    // The box cuts both corners x > 0.5 and y > 0.5 (legs 0.5 each) off the unit triangle.
    auto p = intersect_infinity(kUnit, {0, 0}, 0.5);
    CHECK(p.area() == doctest::Approx(0.25).epsilon(1e-14));
    double mc = oracle::monte_carlo_area(
        kUnit, [](const Vec2& q) { return std::fabs(q.x) <= 0.5 && std::fabs(q.y) <= 0.5; }, 1'000'000, 3);
    CHECK(std::fabs(mc - 0.25) < 2e-3);
    // axis-aligned cases with hand-computed areas
    CHECK(intersect_infinity(kUnit, {1.0, 0.0}, 0.5).area() == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(intersect_infinity(kUnit, {0.25, 0.25}, 0.25).area() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(intersect_infinity(kUnit, {0.5, 0.5}, 0.25).area() == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("fan triangulation") {
    auto t = fan_triangulate(polygon_from_triangle(kUnit));
    CHECK(t.size == 1);
    ConvexPolygon sq;
    for (Vec2 v : {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}}) sq.push(v);
    auto s = fan_triangulate(sq);
    CHECK(s.size == 2);
    CHECK(area_of(s) == doctest::Approx(1.0).epsilon(1e-15));
    // box [0.2, 1.8] x [0.1, 1.7] cuts a hexagon out of this triangle
    Triangle tall{{{0, 0}, {2, 0}, {1, 2}}};
    auto hex = intersect_infinity(tall, {1.0, 0.9}, 0.8);
    REQUIRE(hex.size == 6);
    auto h = fan_triangulate(hex);
    CHECK(h.size == 4);
    CHECK(area_of(h) == doctest::Approx(oracle::polygon_area({hex.vertices.begin(), hex.vertices.begin() + 6})).epsilon(1e-12));
    CHECK(fan_triangulate(ConvexPolygon{}).size == 0);
}

TEST_CASE("degenerate triangles are rejected") {
    Triangle flat{{{0, 0}, {1, 0}, {2, 0}}};
    CHECK_THROWS_AS(intersect_nocaps(flat, {0, 0}, 1.0), ConfigError);
}

TEST_CASE("pair classification") {
    Mesh m = generate_structured_mesh(0.5, 0.25, 4);
    auto adj = build_adjacency_graph(m);
    for (int k = 0; k < m.element_count(); ++k) {
        CHECK(classify_pair(m, k, k) == PairClass::Identical);
        for (int l = 0; l < m.element_count(); ++l) {
            if (l == k) continue;
            int shared = shared_vertex_count(m.elements[k], m.elements[l]);
            PairClass c = classify_pair(m, k, l);
            CHECK(c == (shared == 2 ? PairClass::EdgeTouching : shared == 1 ? PairClass::VertexTouching : PairClass::Disjoint));
            CHECK((c != PairClass::Disjoint) == std::binary_search(adj.begin(k), adj.end(k), l));
        }
    }
    // the two triangles of a cell share an edge, diagonal cells one vertex
    Mesh s = generate_structured_mesh(0.5, 0.25, 4);
    CHECK(classify_pair(s, 0, 1) == PairClass::EdgeTouching);
}

TEST_CASE("nocaps symmetric difference decays like h squared") {
    const Vec2 x{0.2137, 0.2519};
    const double delta = 0.2;
    std::vector<double> hs, errs;
    for (int n : {5, 10, 20, 40, 80}) {
        Mesh m = generate_structured_mesh(0.5, delta, n);
        double err = 0.0;
        for (int k = 0; k < m.element_count(); ++k) {
            Triangle t = m.corners(k);
            double exact = oracle::disk_triangle_area(t, x, delta);
            if (exact == 0.0) continue;
            err += exact - intersect_nocaps(t, x, delta).area();
        }
        hs.push_back(m.h);
        errs.push_back(err);
    }
    double slope = oracle::loglog_slope(hs, errs);
    MESSAGE("fitted slope " << slope);
    CHECK(slope >= 1.8);
}
