#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "flowsim/errors.hpp"
#include "flowsim/spline.hpp"
#include "test_util.hpp"

using namespace flowsim;

// Dense-sampling nearest-point oracle, independent of the projection code.
static Spline::Nearest brute_force_nearest(const Spline &sp, const Vec2 &p, int samples) {
    Spline::Nearest best;
    best.distance = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= samples; ++i) {
        double s = sp.total_length() * i / samples;
        Vec2 q = sp.point_at(s);
        double d = distance(p, q);
        if (d < best.distance) best = {s, q, d};
    }
    return best;
}

TEST_CASE("construction rejects degenerate control points") {
    CHECK_THROWS_AS(Spline({{0, 0}}), ValidationError);
    CHECK_THROWS_AS(Spline({{0, 0}, {0, 0}, {1, 0}}), ValidationError);
    Spline ok({{0, 0}, {1, 0}});
    CHECK(ok.total_length() == doctest::Approx(1.0));
    CHECK(ok.cumulative_length()[0] == 0.0);
}

TEST_CASE("nearest: orthogonal projection onto a segment") {
    Spline sp({{0, 0}, {10, 0}});
    auto n = sp.nearest({1, 5});
    CHECK(n.s == doctest::Approx(1.0));
    CHECK(n.point.x == doctest::Approx(1.0));
    CHECK(n.point.y == doctest::Approx(0.0));
    CHECK(n.distance == doctest::Approx(5.0));
}

TEST_CASE("nearest: point on the curve projects to itself") {
    Spline sp({{0, 0}, {5, 0}, {5, 5}});
    auto n = sp.nearest({5, 2});
    CHECK(n.distance == doctest::Approx(0.0));
    CHECK(n.point.x == doctest::Approx(5.0));
    CHECK(n.point.y == doctest::Approx(2.0));
}

TEST_CASE("nearest: V-shaped polyline matches the dense-sampling oracle") {
    Spline sp({{0, 0}, {5, 0}, {5, 5}});
    Vec2 p{6, -1};
    auto got = sp.nearest(p);
    auto oracle = brute_force_nearest(sp, p, 100000);
    CHECK(std::abs(got.distance - oracle.distance) < 1e-3);
    CHECK(distance(got.point, oracle.point) < 1e-3);
}

TEST_CASE("nearest agrees with the oracle on random polylines") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Vec2> pts;
        int k = 2 + static_cast<int>(rng() % 6);
        Vec2 cur{test::urand(rng) * 20, test::urand(rng) * 20};
        pts.push_back(cur);
        for (int i = 1; i < k; ++i) {
            cur += {test::urand(rng) * 10 - 5, test::urand(rng) * 10 - 5};
            if (distance(cur, pts.back()) < 1e-6) cur += {1.0, 0.0};
            pts.push_back(cur);
        }
        Spline sp(pts);
        Vec2 q{test::urand(rng) * 30 - 5, test::urand(rng) * 30 - 5};
        auto got = sp.nearest(q);
        auto oracle = brute_force_nearest(sp, q, 100000);
        CHECK(std::abs(got.distance - oracle.distance) < 1e-3);
        // Nearest distance never beats a control point.
        for (const Vec2 &c : sp.points()) CHECK(got.distance <= distance(q, c) + 1e-12);
    }
}

TEST_CASE("nearest ties break toward smaller arc length") {
    // Symmetric U: the query is equidistant to both arms.
    Spline sp({{0, 0}, {0, 10}, {4, 10}, {4, 0}});
    auto n = sp.nearest({2, 0});
    CHECK(n.s == doctest::Approx(0.0));
}

TEST_CASE("tangent: straight segment and vertex averaging") {
    Spline straight({{0, 0}, {10, 0}});
    for (double s : {0.0, 3.3, 10.0}) {
        Vec2 t = straight.tangent_at(s);
        CHECK(t.x == doctest::Approx(1.0));
        CHECK(t.y == doctest::Approx(0.0));
    }
    Spline corner({{0, 0}, {5, 0}, {5, 5}});
    Vec2 t = corner.tangent_at(5.0);
    CHECK(t.x == doctest::Approx(std::sqrt(0.5)));
    CHECK(t.y == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("tangent is unit length at random arc positions") {
    std::mt19937_64 rng(11);
    Spline sp({{0, 0}, {3, 4}, {-2, 6}, {5, 9}, {5, 20}});
    for (int i = 0; i < 1000; ++i) {
        double s = test::urand(rng) * sp.total_length();
        CHECK(norm(sp.tangent_at(s)) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(sp.tangent_at(-1.0), std::out_of_range);
    CHECK_THROWS_AS(sp.tangent_at(sp.total_length() + 1.0), std::out_of_range);
}

TEST_CASE("nearest_in_range clamps to the window") {
    Spline sp({{0, 0}, {10, 0}});
    auto n = sp.nearest_in_range({9, 1}, 0.0, 5.0);
    CHECK(n.s == doctest::Approx(5.0));
    CHECK(n.point.x == doctest::Approx(5.0));
}

TEST_CASE("concat joins parts and keeps distinct joints") {
    Spline a({{0, 0}, {5, 0}});
    Spline b({{5, 0}, {5, 5}});     // coincident joint
    Spline c({{6, 6}, {6, 10}});    // distinct joint
    Spline j = concat_splines({a, b, c});
    CHECK(j.points().size() == 5);  // 2 + 1 + 2
    CHECK(j.total_length() == doctest::Approx(5 + 5 + std::sqrt(2.0) + 4));
}
