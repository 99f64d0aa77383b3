#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "klab/poly.hpp"

// Certified topology of real plane curves: outward-rounded interval
// arithmetic, adaptive box subdivision, and connected-component counting of
// the zero set through an arc graph stitched across boxes (and across the
// three standard charts in projective mode).

namespace klab::topo {

// Closed interval with outward rounding.  Results of +,-,* are widened by
// one ulp per endpoint unless the floating operation was provably exact, so
// the true range is always contained (inclusion isotonicity).
struct RealInterval {
    double lo = 0;
    double hi = 0;

    RealInterval() = default;
    RealInterval(double v) : lo(v), hi(v) {}
    RealInterval(double l, double h) : lo(l), hi(h) {}

    static RealInterval hull(double a, double b) {
        return a <= b ? RealInterval(a, b) : RealInterval(b, a);
    }

    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
    double width() const { return hi - lo; }
    double mid() const { return lo + (hi - lo) / 2; }
};

namespace detail {
inline double next_up(double x) {
    return std::nextafter(x, std::numeric_limits<double>::infinity());
}
inline double next_down(double x) {
    return std::nextafter(x, -std::numeric_limits<double>::infinity());
}
// a + b was exact iff both Fast2Sum residuals vanish.
inline bool add_exact(double a, double b, double s) {
    double bb = s - a;
    return (s - bb) == a && (b - bb) == 0.0;
}
inline bool mul_exact(double a, double b, double p) {
    return std::fma(a, b, -p) == 0.0;
}
}  // namespace detail

inline RealInterval operator+(RealInterval a, RealInterval b) {
    double lo = a.lo + b.lo, hi = a.hi + b.hi;
    if (!detail::add_exact(a.lo, b.lo, lo)) lo = detail::next_down(lo);
    if (!detail::add_exact(a.hi, b.hi, hi)) hi = detail::next_up(hi);
    return {lo, hi};
}

inline RealInterval operator-(RealInterval a) { return {-a.hi, -a.lo}; }
inline RealInterval operator-(RealInterval a, RealInterval b) { return a + (-b); }

inline RealInterval operator*(RealInterval a, RealInterval b) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const double xs[2] = {a.lo, a.hi};
    const double ys[2] = {b.lo, b.hi};
    for (double x : xs)
        for (double y : ys) {
            double p = x * y;
            double pl = p, ph = p;
            if (!detail::mul_exact(x, y, p)) {
                pl = detail::next_down(p);
                ph = detail::next_up(p);
            }
            if (pl < lo) lo = pl;
            if (ph > hi) hi = ph;
        }
    return {lo, hi};
}

struct Box2 {
    RealInterval x;
    RealInterval y;
    int depth = 0;
};

// Interval enclosure of the range of p over the box (two-level Horner).
RealInterval interval_eval(const poly::Poly2& p, const Box2& b);

enum class BoxClass { no_curve, smooth_arcs, unknown };

// no_curve:    0 outside the enclosure of p
// smooth_arcs: 0 outside the enclosure of one partial derivative
// unknown:     neither certificate holds on this box
BoxClass certify_smooth(const poly::Poly2& p, const Box2& b);

enum class Certification { certified, uncertified, singular_suspect };

struct ArcGraph {
    struct Vertex {
        double x = 0, y = 0;    // chart coordinates of the boundary crossing
        int chart = 0;          // 0 in affine mode
        bool on_outer_boundary = false;
    };
    std::vector<Vertex> vertices;
    std::vector<std::pair<int, int>> arcs;    // in-box arcs between vertices
};

struct TopoOptions {
    int max_depth = 12;
    double edge_root_tol = 1e-9;    // crossings closer than this to a corner
                                    // trigger a deterministic retry
    std::uint64_t seed = 0;         // keys the retry grid offsets and shear angles
    int max_retries = 6;
    std::size_t max_boxes = 4u << 20;
    bool keep_arc_graph = false;
};

struct TopologyResult {
    int b0 = 0;
    Certification certified = Certification::uncertified;
    int max_depth_used = 0;
    bool projective = false;
    std::optional<Box2> window;       // absent in projective mode
    int truncated_components = 0;     // touching the window boundary
    int unknown_leaves = 0;
    double shear = 0;                 // angle of the degeneracy-breaking map, 0 when
                                      // re-splitting the grid was enough
    int retries = 0;
    std::optional<ArcGraph> arc_graph;

    std::string to_json(bool include_arc_graph = false) const;
};

TopologyResult b0_affine(const poly::Poly2& p, const Box2& window,
                         const TopoOptions& opt = {});

// p is the chart-0 representative of a homogeneous form of degree p.d.
// The three unit boxes |coordinate ratios| <= 1 tile the projective plane;
// their boundary edges are glued pairwise.
TopologyResult b0_projective(const poly::Poly2& p, const TopoOptions& opt = {});

}  // namespace klab::topo
