#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "klab/ensemble.hpp"
#include "klab/poly.hpp"
#include "klab/rng.hpp"
#include "klab/topo.hpp"
#include "oracles.hpp"

using namespace klab;

namespace {

poly::Poly2 circle(double cx, double cy, double r) {
    poly::Poly2 p(2);
    p.at(0, 0) = cx * cx + cy * cy - r * r;
    p.at(1, 0) = -2 * cx;
    p.at(0, 1) = -2 * cy;
    p.at(2, 0) = 1;
    p.at(0, 2) = 1;
    return p;
}

poly::Poly2 pmul(const poly::Poly2& a, const poly::Poly2& b) {
    poly::Poly2 r(a.d + b.d);
    for (int j1 = 0; j1 <= a.d; ++j1)
        for (int k1 = 0; k1 + j1 <= a.d; ++k1)
            for (int j2 = 0; j2 <= b.d; ++j2)
                for (int k2 = 0; k2 + j2 <= b.d; ++k2)
                    r.at(j1 + j2, k1 + k2) += a.at(j1, k1) * b.at(j2, k2);
    return r;
}

// window chosen so no crafted curve passes exactly through a grid node
const topo::Box2 kWin{{-2.03, 2.01}, {-2.02, 2.04}, 0};

poly::Poly2 four_oval_quartic(double c00) {
    poly::Poly2 q(4, {c00, 0, -1.25, 0, 0.25, 0, 0, 0, 0, -1.25, 0, 1.0625, 0, 0, 0.25});
    return q;
}

}  // namespace

TEST_CASE("interval operators contain every sampled true value") {
    topo::RealInterval a(-1.37, 0.65), b(0.21, 2.89);
    auto sum = a + b;
    auto dif = a - b;
    auto prod = a * b;
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j) {
            double x = a.lo + (a.hi - a.lo) * i / 4.0;
            double y = b.lo + (b.hi - b.lo) * j / 4.0;
            CHECK(sum.contains(x + y));
            CHECK(dif.contains(x - y));
            CHECK(prod.contains(x * y));
        }
    // outward rounding makes the inexact product strictly safe
    topo::RealInterval third(1.0 / 3.0);
    auto trip = third * topo::RealInterval(3.0);
    CHECK(trip.contains(1.0));
    CHECK(trip.width() > 0.0);
    // exact arithmetic stays tight
    auto tight = topo::RealInterval(1.0, 2.0) + topo::RealInterval(0.5, 0.25 + 0.25);
    CHECK(tight.lo == 1.5);
    CHECK(tight.hi == 2.5);
    CHECK(topo::RealInterval::hull(3.0, -1.0).lo == -1.0);
    CHECK((-a).hi == 1.37);
}

TEST_CASE("interval evaluation encloses the polynomial range") {
    poly::Poly2 p(5);
    for (size_t i = 0; i < p.c.size(); ++i)
        p.c[i] = rng::std_normal(11, 22, i);
    topo::Box2 box{{-1.2, 0.37}, {0.5, 2.1}, 0};
    auto enc = topo::interval_eval(p, box);
    for (int i = 0; i <= 7; ++i)
        for (int j = 0; j <= 7; ++j) {
            double x = box.x.lo + box.x.width() * i / 7.0;
            double y = box.y.lo + box.y.width() * j / 7.0;
            CHECK(enc.contains(p.eval(x, y)));
        }
}

TEST_CASE("box certificates distinguish empty, smooth and unresolved") {
    auto c = circle(0, 0, 1);
    CHECK(topo::certify_smooth(c, {{2, 3}, {2, 3}, 0}) == topo::BoxClass::no_curve);
    CHECK(topo::certify_smooth(c, {{0.9, 1.1}, {-0.1, 0.1}, 0}) ==
          topo::BoxClass::smooth_arcs);
    CHECK(topo::certify_smooth(c, {{-2, 2}, {-2, 2}, 0}) == topo::BoxClass::unknown);

    poly::Poly2 cross(2);
    cross.at(1, 1) = 1;    // x y, singular at the origin
    CHECK(topo::certify_smooth(cross, {{-0.1, 0.1}, {-0.1, 0.1}, 0}) ==
          topo::BoxClass::unknown);
}

TEST_CASE("affine component counts on curves with known topology") {
    topo::TopoOptions opt;

    auto one = topo::b0_affine(circle(0, 0, 1), kWin, opt);
    CHECK(one.b0 == 1);
    CHECK(one.certified == topo::Certification::certified);
    CHECK(one.truncated_components == 0);
    CHECK_FALSE(one.projective);

    poly::Poly2 empty(2);
    empty.at(0, 0) = 0.5;
    empty.at(2, 0) = 1;
    empty.at(0, 2) = 1;
    auto none = topo::b0_affine(empty, kWin, opt);
    CHECK(none.b0 == 0);
    CHECK(none.certified == topo::Certification::certified);

    auto pair = topo::b0_affine(pmul(circle(-0.9, 0, 0.55), circle(0.95, 0.1, 0.5)),
                                kWin, opt);
    CHECK(pair.b0 == 2);
    CHECK(pair.certified == topo::Certification::certified);

    poly::Poly2 nested(4, {4, 0, -5, 0, 1, 0, 0, 0, 0, -5, 0, 2, 0, 0, 1});
    auto two = topo::b0_affine(nested, topo::Box2{{-8, 8}, {-8, 8}, 0}, opt);
    CHECK(two.b0 == 2);
    CHECK(two.certified == topo::Certification::certified);

    auto four = topo::b0_affine(four_oval_quartic(1.01), topo::Box2{{-8, 8}, {-8, 8}, 0},
                                opt);
    CHECK(four.b0 == 4);
    CHECK(four.certified == topo::Certification::certified);

    // a line meets the window boundary; still one component, flagged truncated
    poly::Poly2 line(1, {0.3, 0, 1});
    auto cut = topo::b0_affine(line, kWin, opt);
    CHECK(cut.b0 == 1);
    CHECK(cut.certified == topo::Certification::certified);
    CHECK(cut.truncated_components == 1);
}

TEST_CASE("singular input is quarantined, not miscounted") {
    poly::Poly2 cross(2);
    cross.at(1, 1) = 1;
    auto r = topo::b0_affine(cross, kWin, {});
    CHECK(r.certified == topo::Certification::singular_suspect);
    auto rp = topo::b0_projective(cross, {});
    CHECK(rp.certified == topo::Certification::singular_suspect);
}

TEST_CASE("depth starvation is reported instead of guessed away") {
    topo::TopoOptions opt;
    opt.max_depth = 1;
    auto r = topo::b0_affine(four_oval_quartic(1.01), topo::Box2{{-8, 8}, {-8, 8}, 0},
                             opt);
    CHECK(r.certified != topo::Certification::certified);
    CHECK(r.unknown_leaves > 0);
    CHECK(r.max_depth_used <= 1);
}

TEST_CASE("projective counts close up the affine picture") {
    auto conic = topo::b0_projective(circle(0, 0, 1), {});
    CHECK(conic.b0 == 1);
    CHECK(conic.certified == topo::Certification::certified);
    CHECK(conic.projective);

    poly::Poly2 empty(2);
    empty.at(0, 0) = 1;
    empty.at(2, 0) = 1;
    empty.at(0, 2) = 1;    // no real points at all
    auto blank = topo::b0_projective(empty, {});
    CHECK(blank.b0 == 0);
    CHECK(blank.certified == topo::Certification::certified);

    // a projective line is a single circle in RP^2
    poly::Poly2 line(1, {0, 0, 1});
    auto pline = topo::b0_projective(line, {});
    CHECK(pline.b0 == 1);
    CHECK(pline.certified == topo::Certification::certified);

    // smooth cubic with full real 2-torsion: oval plus pseudoline
    poly::Poly2 cubic(3);
    cubic.at(0, 2) = 1;     // y^2
    cubic.at(3, 0) = -1;    // -x^3
    cubic.at(1, 0) = 1;     // +x
    auto ell = topo::b0_projective(cubic, {});
    CHECK(ell.b0 == 2);
    CHECK(ell.certified == topo::Certification::certified);

    auto four = topo::b0_projective(four_oval_quartic(1.01), {});
    CHECK(four.b0 == 4);
    CHECK(four.certified == topo::Certification::certified);
}

TEST_CASE("results are deterministic and serialize stably") {
    topo::TopoOptions opt;
    opt.seed = 321;
    opt.keep_arc_graph = true;
    auto a = topo::b0_affine(circle(0.2, -0.3, 1.1), kWin, opt);
    auto b = topo::b0_affine(circle(0.2, -0.3, 1.1), kWin, opt);
    CHECK(a.to_json(true) == b.to_json(true));
    REQUIRE(a.arc_graph.has_value());
    CHECK(a.arc_graph->vertices.size() >= 2);
    for (auto [u, v] : a.arc_graph->arcs) {
        CHECK(u >= 0);
        CHECK(v >= 0);
        CHECK(u < static_cast<int>(a.arc_graph->vertices.size()));
        CHECK(v < static_cast<int>(a.arc_graph->vertices.size()));
    }
    auto j = nlohmann::json::parse(a.to_json());
    CHECK(j["b0"] == 1);
    CHECK(j["certified"] == "certified");
    CHECK(j["mode"] == "affine");
}

TEST_CASE("engine agrees with the dense sign grid on random curves") {
    topo::TopoOptions opt;
    int compared = 0;
    for (int trial = 0; trial < 30; ++trial) {
        int d = 2 + trial % 4;
        auto p = ensemble::to_poly2(ensemble::sample(2, d, 5150, trial));
        opt.seed = rng::counter_hash(5150, 0x70b0u, trial);
        auto r = topo::b0_affine(p, topo::Box2{{-8, 8}, {-8, 8}, 0}, opt);
        if (r.certified != topo::Certification::certified) continue;
        auto ref = oracle::stabilized_b0(p, -8, 8, -8, 8, 2048);
        if (!ref) continue;
        CAPTURE(trial);
        CAPTURE(d);
        CHECK(r.b0 == *ref);
        ++compared;
    }
    CHECK(compared >= 20);

    // perturbing the four-oval constant the other way must also match the grid
    auto soft = four_oval_quartic(0.99);
    auto r = topo::b0_affine(soft, topo::Box2{{-8, 8}, {-8, 8}, 0}, {});
    auto ref = oracle::stabilized_b0(soft, -8, 8, -8, 8, 4096);
    REQUIRE(r.certified == topo::Certification::certified);
    REQUIRE(ref.has_value());
    CHECK(r.b0 == *ref);
}
