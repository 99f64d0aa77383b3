#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "klab/ensemble.hpp"
#include "klab/poly.hpp"
#include "klab/roots.hpp"
#include "oracles.hpp"

using namespace klab;
using poly::cdouble;

namespace {

poly::Poly1 P(std::vector<double> c) { return poly::Poly1(std::move(c)); }

// real roots among a polished complex root list, by relative imaginary part
int real_count_of(const std::vector<cdouble>& zs) {
    int n = 0;
    for (auto z : zs)
        if (std::fabs(z.imag()) <= 1e-7 * (1.0 + std::fabs(z.real()))) ++n;
    return n;
}

}  // namespace

TEST_CASE("sign evaluation survives huge arguments") {
    auto p = P({0.0, -1.0, 0.0, 1.0});    // x^3 - x
    CHECK(roots::sign_at(p, 1e200) == 1);
    CHECK(roots::sign_at(p, -1e200) == -1);
    CHECK(roots::sign_at(p, 1.0) == 0);
    CHECK(roots::sign_at(p, 0.5) == -1);
}

TEST_CASE("distinct real root counts on textbook inputs") {
    CHECK(roots::count_real_roots(P({-2, 0, 1})) == 2);
    CHECK(roots::count_real_roots(P({1, 0, 1})) == 0);
    CHECK(roots::count_real_roots(P({0, 1})) == 1);
    CHECK(roots::count_real_roots(P({0, 0, 0, 1})) == 1);       // x^3, triple at 0
    CHECK(roots::count_real_roots(P({-1, 0, 0, 0, 0, 1})) == 1);
    CHECK(roots::count_real_roots(P({-6, 11, -6, 1})) == 3);    // (x-1)(x-2)(x-3)
    CHECK(roots::count_real_roots(P({2, -3, 0, 1})) == 2);      // (x-1)^2 (x+2)
    CHECK(roots::count_real_roots(P({5.0})) == 0);
    // every point solves the zero polynomial; refusing beats a made-up count
    CHECK_THROWS_AS(roots::count_real_roots(P({0.0})), std::invalid_argument);
    // degree padding with zero leads must not change anything
    CHECK(roots::count_real_roots(P({-1, 0, 1, 0, 0, 0})) == 2);
}

TEST_CASE("rounded near-double roots are resolved exactly") {
    // the literal 1.21 is not (1.1)^2 in doubles; the rounded quadratic has
    // discriminant +3.55e-17, so there are two real roots 6e-9 apart.  The
    // double-precision chain cannot tell its remainder from zero here and
    // must hand over to the integer chain.
    auto p = P({1.21, -2.2, 1.0});
    auto chain = roots::SturmChain::build(p);
    CHECK(chain.exact());
    CHECK(chain.count_all() == 2);
    auto brs = roots::isolate_real_roots(p, 1e-13);
    REQUIRE(brs.size() == 2);
    CHECK(std::fabs(brs[0].mid() - 1.1) < 1e-7);
    CHECK(std::fabs(brs[1].mid() - 1.1) < 1e-7);
    CHECK(brs[0].hi <= brs[1].lo);

    // a genuinely representable double root stays a single bracket
    auto q = P({2.25, -3.0, 1.0});    // (x - 1.5)^2, all coefficients exact
    CHECK(roots::count_real_roots(q) == 1);
    auto qb = roots::isolate_real_roots(q);
    REQUIRE(qb.size() == 1);
    CHECK(qb[0].multiple);
    CHECK(std::fabs(qb[0].mid() - 1.5) < 1e-9);
}

TEST_CASE("chain counting is additive over intervals and symmetric under reflection") {
    auto p = P({-6, 11, -6, 1});
    auto chain = roots::SturmChain::build(p);
    CHECK(chain.count_in(0, 4) == 3);
    CHECK(chain.count_in(0, 1.5) + chain.count_in(1.5, 4) == 3);
    CHECK(chain.count_in(1, 3) == 2);    // half-open: (1, 3] catches 2 and 3
    CHECK(chain.count_in(0.5, 1) == 1);
    CHECK(chain.variations_at_neg_inf() - chain.variations_at_pos_inf() == 3);

    // x -> -x mirrors the count
    for (int trial = 0; trial < 25; ++trial) {
        auto s = ensemble::sample(1, 17, 31337, trial);
        auto q = ensemble::to_poly1(s);
        auto m = q;
        for (int j = 1; j <= m.d; j += 2) m.c[j] = -m.c[j];
        CHECK(roots::count_real_roots(q) == roots::count_real_roots(m));
    }
}

TEST_CASE("isolation brackets pin each distinct root") {
    auto brs = roots::isolate_real_roots(P({-2, 0, 1}), 1e-11);
    REQUIRE(brs.size() == 2);
    CHECK(brs[1].width() <= 1e-11);
    CHECK(brs[1].mid() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(brs[0].mid() == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-9));
    CHECK_FALSE(brs[0].multiple);

    auto triple = roots::isolate_real_roots(P({0, 0, 0, 1}));
    REQUIRE(triple.size() == 1);
    CHECK(triple[0].multiple);
    CHECK(std::fabs(triple[0].mid()) < 1e-9);

    auto mixed = roots::isolate_real_roots(P({2, -3, 0, 1}));    // (x-1)^2 (x+2)
    REQUIRE(mixed.size() == 2);
    CHECK(mixed[0].mid() == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK_FALSE(mixed[0].multiple);
    CHECK(mixed[1].mid() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mixed[1].multiple);
}

TEST_CASE("bracket counts stay consistent on random draws") {
    for (int trial = 0; trial < 40; ++trial) {
        auto p = ensemble::to_poly1(ensemble::sample(1, 50, 77001, trial));
        auto chain = roots::SturmChain::build(p);
        auto brs = roots::isolate_real_roots(p, 1e-10);
        CHECK(static_cast<int>(brs.size()) == chain.count_all());
        double bound = roots::fujiwara_bound(p);
        for (size_t i = 0; i < brs.size(); ++i) {
            CHECK(brs[i].width() <= 1e-10);
            CHECK(brs[i].lo >= -bound);
            CHECK(brs[i].hi <= bound);
            if (i) CHECK(brs[i - 1].hi <= brs[i].lo);
        }
    }
}

TEST_CASE("refinement shrinks a bracket around the same root") {
    auto p = P({-2, 0, 1});
    auto chain = roots::SturmChain::build(p);
    auto brs = roots::isolate_real_roots(p, 1e-3);
    REQUIRE(brs.size() == 2);
    auto tight = roots::refine_bracket(chain, brs[1], 1e-12);
    CHECK(tight.width() <= 1e-12);
    CHECK(tight.lo >= brs[1].lo);
    CHECK(tight.hi <= brs[1].hi);
    CHECK(tight.lo <= std::sqrt(2.0));
    CHECK(std::sqrt(2.0) <= tight.hi);
}

TEST_CASE("complex solver recovers known spectra") {
    auto zs = roots::complex_roots(P({1, 0, 1}));
    REQUIRE(zs.size() == 2);
    std::sort(zs.begin(), zs.end(),
              [](cdouble a, cdouble b) { return a.imag() < b.imag(); });
    CHECK(std::abs(zs[0] - cdouble{0, -1}) < 1e-10);
    CHECK(std::abs(zs[1] - cdouble{0, 1}) < 1e-10);

    // twentieth roots of unity, each hit once
    std::vector<double> c(21, 0.0);
    c[0] = -1;
    c[20] = 1;
    auto us = roots::complex_roots(P(c));
    REQUIRE(us.size() == 20);
    std::vector<int> hit(20, 0);
    for (auto z : us) {
        int k = static_cast<int>(std::llround(std::arg(z) / (std::numbers::pi / 10)));
        k = ((k % 20) + 20) % 20;
        cdouble target = std::polar(1.0, k * std::numbers::pi / 10);
        CHECK(std::abs(z - target) < 1e-9);
        ++hit[k];
    }
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));

    // zero constant term and zero leads are handled
    auto mix = roots::complex_roots(P({0, 1, 0, 1}));    // x (x^2 + 1)
    REQUIRE(mix.size() == 3);
    int at_zero = 0;
    for (auto z : mix) at_zero += std::abs(z) < 1e-10 ? 1 : 0;
    CHECK(at_zero == 1);
    CHECK(roots::complex_roots(P({-1, 0, 1, 0, 0})).size() == 2);
}

TEST_CASE("vieta sums hold for a large random polynomial") {
    auto p = ensemble::to_poly1(ensemble::sample(1, 100, 424242, 5));
    auto zs = roots::complex_roots(p);
    roots::newton_polish(p, zs);
    REQUIRE(zs.size() == 100);
    cdouble sum{};
    for (auto z : zs) sum += z;
    cdouble expect = -p.c[99] / p.c[100];
    CHECK(std::abs(sum - expect) < 1e-7 * (1.0 + std::abs(expect)));
    double bound = roots::fujiwara_bound(p);
    for (auto z : zs) CHECK(std::abs(z) <= bound * (1 + 1e-12));
}

TEST_CASE("starved iteration reports partial results instead of lying") {
    roots::AberthOptions opt;
    opt.max_iter = 1;
    try {
        roots::complex_roots(P({-6, 11, -6, 1}), opt);
        FAIL("expected RootsError");
    } catch (const roots::RootsError& e) {
        CHECK(e.partial.size() == 3);
    }
}

TEST_CASE("newton polish pulls perturbed roots back") {
    auto p = P({-2, 0, 1});
    std::vector<cdouble> zs{cdouble{1.4146, 2e-4}, cdouble{-1.4138, -3e-4}};
    roots::newton_polish(p, zs, 6);
    CHECK(std::abs(zs[0] - cdouble{std::sqrt(2.0), 0}) < 1e-12);
    CHECK(std::abs(zs[1] + cdouble{std::sqrt(2.0), 0}) < 1e-12);
}

TEST_CASE("sturm and aberth agree on the real count across random draws") {
    for (int trial = 0; trial < 150; ++trial) {
        int d = 2 + (trial * 7) % 59;
        auto p = ensemble::to_poly1(ensemble::sample(1, d, 9000 + trial, 0));
        auto zs = roots::complex_roots(p);
        roots::newton_polish(p, zs);
        CAPTURE(trial);
        CAPTURE(d);
        CHECK(roots::count_real_roots(p) == real_count_of(zs));
    }
}
