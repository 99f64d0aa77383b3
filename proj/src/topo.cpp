#include "klab/topo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <json.hpp>

#include "klab/rng.hpp"
#include "klab/roots.hpp"

namespace klab::topo {

using poly::Poly1;
using poly::Poly2;

RealInterval interval_eval(const Poly2& p, const Box2& b) {
    RealInterval acc(0.0);
    for (int j = p.d; j >= 0; --j) {
        RealInterval row(p.at(j, p.d - j));
        for (int k = p.d - j - 1; k >= 0; --k) row = row * b.y + RealInterval(p.at(j, k));
        acc = acc * b.x + row;
    }
    return acc;
}

BoxClass certify_smooth(const Poly2& p, const Box2& b) {
    if (!interval_eval(p, b).contains_zero()) return BoxClass::no_curve;
    if (!interval_eval(p.dy(), b).contains_zero()) return BoxClass::smooth_arcs;
    if (!interval_eval(p.dx(), b).contains_zero()) return BoxClass::smooth_arcs;
    return BoxClass::unknown;
}

namespace {

// guarded interval division, denominator must exclude zero
RealInterval interval_div(RealInterval a, RealInterval b) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const double xs[2] = {a.lo, a.hi};
    const double ys[2] = {b.lo, b.hi};
    for (double x : xs)
        for (double y : ys) {
            double q = x / y;
            double ql = q, qh = q;
            if (std::fma(q, y, -x) != 0.0) {
                ql = detail::next_down(q);
                qh = detail::next_up(q);
            }
            if (ql < lo) lo = ql;
            if (qh > hi) hi = qh;
        }
    return {lo, hi};
}

bool intervals_disjoint(RealInterval a, RealInterval b) { return a.hi < b.lo || b.hi < a.lo; }

// thrown when a crossing sits on a corner, an edge root is multiple, or the
// pairing parity breaks; the caller retries with an off-center subdivision
// grid first and a deterministic shear as a last resort
struct Degenerate : std::exception {
    const char* what() const noexcept override { return "degenerate topology configuration"; }
};

struct LineRoots {
    std::vector<double> pos;
    std::vector<char> multiple;
};

struct Vertex {
    double x = 0, y = 0;
    int axis = 0;
    double coord = 0, pos = 0;
    bool outer = false;
    int claims[2] = {0, 0};    // leaves on the low / high side of the line
    int arc_degree = 0;
};

struct ChartResult {
    std::vector<Vertex> vertices;
    std::vector<std::pair<int, int>> arcs;
    int unknown_leaves = 0;
    bool suspect = false;
    int max_depth_used = 0;
};

class Engine {
public:
    Engine(const Poly2& p, const Box2& window, const TopoOptions& opt, double split)
        : p_(p), px_(p.dx()), py_(p.dy()), pxx_(px_.dx()), pxy_(px_.dy()), pyy_(py_.dy()),
          window_(window), opt_(opt), split_(split) {}

    ChartResult run() {
        boxes_ = 0;
        recurse(window_);
        finish_consistency();
        ChartResult r;
        r.vertices = std::move(vertices_);
        r.arcs = std::move(arcs_);
        r.unknown_leaves = unknown_;
        r.suspect = suspect_;
        r.max_depth_used = deepest_;
        return r;
    }

private:
    const Poly2& p_;
    Poly2 px_, py_, pxx_, pxy_, pyy_;
    Box2 window_;
    TopoOptions opt_;
    double split_;

    std::map<std::pair<int, double>, LineRoots> lines_;
    std::map<std::tuple<int, double, double>, int> vertex_ids_;
    std::vector<Vertex> vertices_;
    std::vector<std::pair<int, int>> arcs_;
    int unknown_ = 0;
    bool suspect_ = false;
    int deepest_ = 0;
    std::size_t boxes_ = 0;

    const LineRoots& line(int axis, double coord) {
        auto key = std::make_pair(axis, coord);
        auto it = lines_.find(key);
        if (it != lines_.end()) return it->second;
        Poly1 r = axis == 0 ? p_.restrict_x(coord) : p_.restrict_y(coord);
        LineRoots lr;
        if (r.effective_degree() < 0) throw Degenerate{};    // curve contains the line
        if (r.effective_degree() >= 1) {
            for (const auto& b : roots::isolate_real_roots(r, 1e-13)) {
                lr.pos.push_back(b.mid());
                lr.multiple.push_back(b.multiple ? 1 : 0);
            }
        }
        return lines_.emplace(key, std::move(lr)).first->second;
    }

    bool on_window_boundary(int axis, double coord) const {
        return axis == 0 ? (coord == window_.x.lo || coord == window_.x.hi)
                         : (coord == window_.y.lo || coord == window_.y.hi);
    }

    int vertex_for(int axis, double coord, double pos, int side) {
        auto key = std::make_tuple(axis, coord, pos);
        auto it = vertex_ids_.find(key);
        if (it == vertex_ids_.end()) {
            Vertex v;
            v.axis = axis;
            v.coord = coord;
            v.pos = pos;
            v.x = axis == 0 ? coord : pos;
            v.y = axis == 0 ? pos : coord;
            v.outer = on_window_boundary(axis, coord);
            it = vertex_ids_.emplace(key, static_cast<int>(vertices_.size())).first;
            vertices_.push_back(v);
        }
        vertices_[static_cast<size_t>(it->second)].claims[side] += 1;
        return it->second;
    }

    // crossings of one leaf edge; side says where the leaf lies relative to
    // the line (0 below/left, 1 above/right)
    void edge_crossings(int axis, double coord, double lo, double hi, int side,
                        std::vector<int>& out) {
        const LineRoots& lr = line(axis, coord);
        const double tol = opt_.edge_root_tol;
        for (size_t i = 0; i < lr.pos.size(); ++i) {
            double t = lr.pos[i];
            if (t < lo - tol || t > hi + tol) continue;
            if (t < lo + tol || t > hi - tol) throw Degenerate{};    // corner hit
            if (lr.multiple[i]) throw Degenerate{};                  // edge tangency
            out.push_back(vertex_for(axis, coord, t, side));
        }
    }

    void smooth_leaf(const Box2& b, bool pair_by_x) {
        std::vector<int> ids;
        // left, right, bottom, top; the leaf is on the high side of its low
        // edges and on the low side of its high edges
        edge_crossings(0, b.x.lo, b.y.lo, b.y.hi, 1, ids);
        edge_crossings(0, b.x.hi, b.y.lo, b.y.hi, 0, ids);
        edge_crossings(1, b.y.lo, b.x.lo, b.x.hi, 1, ids);
        edge_crossings(1, b.y.hi, b.x.lo, b.x.hi, 0, ids);
        if (ids.empty()) return;
        if (ids.size() % 2) throw Degenerate{};

        // one derivative keeps a fixed sign, so in-box arcs are graphs over
        // the other coordinate: sorting by it pairs the boundary crossings
        auto key = [&](int id) {
            const Vertex& v = vertices_[static_cast<size_t>(id)];
            return pair_by_x ? v.x : v.y;
        };
        std::sort(ids.begin(), ids.end(), [&](int a, int c) { return key(a) < key(c); });
        // near-equal keys make the sorted order, and with it the pairing,
        // ambiguous, so they force a retry even across different pairs
        for (size_t i = 0; i + 1 < ids.size(); ++i)
            if (ids[i] == ids[i + 1] || key(ids[i + 1]) - key(ids[i]) < opt_.edge_root_tol)
                throw Degenerate{};
        for (size_t i = 0; i + 1 < ids.size(); i += 2) {
            arcs_.emplace_back(ids[i], ids[i + 1]);
            vertices_[static_cast<size_t>(ids[i])].arc_degree += 1;
            vertices_[static_cast<size_t>(ids[i + 1])].arc_degree += 1;
        }
    }

    bool may_contain_critical(const Box2& b) {
        RealInterval j11 = interval_eval(pxx_, b);
        RealInterval j12 = interval_eval(pxy_, b);
        RealInterval j22 = interval_eval(pyy_, b);
        RealInterval det = j11 * j22 - j12 * j12;
        if (det.contains_zero()) return true;
        double mx = b.x.mid(), my = b.y.mid();
        RealInterval fx(px_.eval(mx, my)), fy(py_.eval(mx, my));
        RealInterval nx = RealInterval(mx) - interval_div(j22 * fx - j12 * fy, det);
        RealInterval ny = RealInterval(my) - interval_div(j11 * fy - j12 * fx, det);
        return !(intervals_disjoint(nx, b.x) || intervals_disjoint(ny, b.y));
    }

    void recurse(const Box2& b) {
        if (++boxes_ > opt_.max_boxes) throw Degenerate{};
        deepest_ = std::max(deepest_, b.depth);
        if (!interval_eval(p_, b).contains_zero()) return;
        if (!interval_eval(py_, b).contains_zero()) {
            smooth_leaf(b, /*pair_by_x=*/true);
            return;
        }
        if (!interval_eval(px_, b).contains_zero()) {
            smooth_leaf(b, /*pair_by_x=*/false);
            return;
        }
        if (b.depth < opt_.max_depth) {
            // an off-center split keeps crafted features (integer tangency
            // lines, crossings at dyadic points) away from the grid
            double mx = b.x.lo + (b.x.hi - b.x.lo) * split_;
            double my = b.y.lo + (b.y.hi - b.y.lo) * split_;
            int d = b.depth + 1;
            recurse({{b.x.lo, mx}, {b.y.lo, my}, d});
            recurse({{mx, b.x.hi}, {b.y.lo, my}, d});
            recurse({{b.x.lo, mx}, {my, b.y.hi}, d});
            recurse({{mx, b.x.hi}, {my, b.y.hi}, d});
            return;
        }
        ++unknown_;
        if (may_contain_critical(b)) suspect_ = true;
    }

    void finish_consistency() {
        for (const auto& v : vertices_) {
            int total = v.claims[0] + v.claims[1];
            if (v.outer) {
                if (total != 1) throw Degenerate{};
            } else {
                if (v.claims[0] > 1 || v.claims[1] > 1) throw Degenerate{};
                // a one-sided interior crossing is only explainable next to
                // an uncertified region
                if (total == 1 && unknown_ == 0) throw Degenerate{};
            }
        }
    }
};

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) {
        for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    }
    int find(int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); }
};

double retry_angle(std::uint64_t seed, int attempt) {
    // small deterministic angle, growing with the attempt
    double u = rng::uniform01(seed, 0x7e7a11u, static_cast<std::uint64_t>(attempt));
    return 1e-3 * attempt * (0.5 + u);
}

double retry_split(std::uint64_t seed, int attempt) {
    if (attempt == 0) return 0.5;
    // off-center fraction with alternating side, far enough from 1/2 that
    // shallow gridlines leave the dyadic positions of the plain grid
    double u = rng::uniform01(seed, 0x5b117u, static_cast<std::uint64_t>(attempt));
    double mag = 0.013 + 0.037 * u;
    return attempt % 2 ? 0.5 + mag : 0.5 - mag;
}

std::array<double, 9> shear_matrix(double lambda) {
    return {1, 0, 0, 0, 1, lambda, 0, 0, 1};
}

std::array<double, 9> rotation_matrix(double th) {
    double c = std::cos(th), s = std::sin(th);
    double th2 = th * 0.7548776662466927;    // second plane, incommensurate angle
    double c2 = std::cos(th2), s2 = std::sin(th2);
    // rot in (z0,z1) composed with rot in (z1,z2)
    return {c, -s * c2, s * s2, s, c * c2, -c * s2, 0, s2, c2};
}

void fill_graph_fields(TopologyResult& out, const std::vector<ChartResult>& charts,
                       const std::vector<std::pair<int, int>>& glue, bool projective,
                       bool keep_graph) {
    std::vector<int> offset(charts.size() + 1, 0);
    for (size_t c = 0; c < charts.size(); ++c)
        offset[c + 1] = offset[c] + static_cast<int>(charts[c].vertices.size());
    int nv = offset.back();

    UnionFind uf(static_cast<size_t>(nv));
    for (size_t c = 0; c < charts.size(); ++c)
        for (auto [a, b] : charts[c].arcs) uf.unite(offset[c] + a, offset[c] + b);
    for (auto [a, b] : glue) uf.unite(a, b);

    std::map<int, bool> comp_touches_outer;
    for (size_t c = 0; c < charts.size(); ++c)
        for (size_t i = 0; i < charts[c].vertices.size(); ++i) {
            int root = uf.find(offset[c] + static_cast<int>(i));
            bool& touches = comp_touches_outer[root];
            touches = touches || (!projective && charts[c].vertices[i].outer);
        }
    out.b0 = static_cast<int>(comp_touches_outer.size());
    out.truncated_components = 0;
    for (auto& [root, touches] : comp_touches_outer)
        if (touches) ++out.truncated_components;

    if (keep_graph) {
        ArcGraph g;
        for (size_t c = 0; c < charts.size(); ++c)
            for (const auto& v : charts[c].vertices) {
                ArcGraph::Vertex gv;
                gv.x = v.x;
                gv.y = v.y;
                gv.chart = static_cast<int>(c);
                gv.on_outer_boundary = v.outer;
                g.vertices.push_back(gv);
            }
        for (size_t c = 0; c < charts.size(); ++c)
            for (auto [a, b] : charts[c].arcs)
                g.arcs.emplace_back(offset[c] + a, offset[c] + b);
        for (auto [a, b] : glue) g.arcs.emplace_back(a, b);
        out.arc_graph = std::move(g);
    }
}

}  // namespace

TopologyResult b0_affine(const Poly2& p, const Box2& window, const TopoOptions& opt) {
    if (p.d < 1) throw std::invalid_argument("b0_affine: degree must be >= 1");
    if (!(window.x.lo < window.x.hi && window.y.lo < window.y.hi))
        throw std::invalid_argument("b0_affine: empty window");

    TopologyResult out;
    out.projective = false;
    out.window = window;
    for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
        // first re-split the grid, which leaves the question untouched; only
        // late attempts perturb the curve itself
        bool perturb = attempt > opt.max_retries / 2;
        double lambda = perturb ? retry_angle(opt.seed, attempt) : 0.0;
        Poly2 q = perturb ? poly::apply_linear(p, shear_matrix(lambda)) : p;
        try {
            Engine eng(q, window, opt, retry_split(opt.seed, attempt));
            ChartResult cr = eng.run();
            out.shear = lambda;
            out.retries = attempt;
            out.max_depth_used = cr.max_depth_used;
            out.unknown_leaves = cr.unknown_leaves;
            out.certified = cr.unknown_leaves == 0
                                ? Certification::certified
                                : (cr.suspect ? Certification::singular_suspect
                                              : Certification::uncertified);
            std::vector<ChartResult> charts;
            charts.push_back(std::move(cr));
            fill_graph_fields(out, charts, {}, false, opt.keep_arc_graph);
            return out;
        } catch (const Degenerate&) {
            continue;
        }
    }
    out.b0 = 0;
    out.certified = Certification::uncertified;
    out.retries = opt.max_retries + 1;
    out.unknown_leaves = -1;    // no attempt finished
    return out;
}

namespace {

struct Gluing {
    int chart_a, axis_a;
    double coord_a;
    int chart_b, axis_b;
    double coord_b;
    double sign;
};

// the three unit boxes tile the projective plane; each outer edge of one
// chart is an outer edge of exactly one other chart, with the position
// carried over up to sign
constexpr Gluing kGluings[6] = {
    {0, 0, +1.0, 1, 0, +1.0, +1.0}, {0, 0, -1.0, 1, 0, -1.0, -1.0},
    {0, 1, +1.0, 2, 0, +1.0, +1.0}, {0, 1, -1.0, 2, 0, -1.0, -1.0},
    {1, 1, +1.0, 2, 1, +1.0, +1.0}, {1, 1, -1.0, 2, 1, -1.0, -1.0},
};

}  // namespace

TopologyResult b0_projective(const Poly2& p, const TopoOptions& opt) {
    if (p.d < 1) throw std::invalid_argument("b0_projective: degree must be >= 1");

    TopologyResult out;
    out.projective = true;
    const Box2 unit_box{{-1.0, 1.0}, {-1.0, 1.0}, 0};

    for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
        bool perturb = attempt > opt.max_retries / 2;
        double theta = perturb ? retry_angle(opt.seed, attempt) : 0.0;
        Poly2 q = perturb ? poly::apply_linear(p, rotation_matrix(theta)) : p;
        try {
            std::vector<ChartResult> charts;
            int unknown_total = 0;
            bool suspect = false;
            int deepest = 0;
            for (int c = 0; c < 3; ++c) {
                Poly2 rc = poly::chart_transfer(q, 0, c);
                Engine eng(rc, unit_box, opt, retry_split(opt.seed, attempt));
                charts.push_back(eng.run());
                unknown_total += charts.back().unknown_leaves;
                suspect = suspect || charts.back().suspect;
                deepest = std::max(deepest, charts.back().max_depth_used);
            }

            std::vector<int> offset(4, 0);
            for (int c = 0; c < 3; ++c)
                offset[static_cast<size_t>(c) + 1] =
                    offset[static_cast<size_t>(c)] + static_cast<int>(charts[static_cast<size_t>(c)].vertices.size());

            std::vector<std::pair<int, int>> glue;
            for (const Gluing& g : kGluings) {
                std::vector<std::pair<double, int>> la, lb;
                const auto& va = charts[static_cast<size_t>(g.chart_a)].vertices;
                for (size_t i = 0; i < va.size(); ++i)
                    if (va[i].outer && va[i].axis == g.axis_a && va[i].coord == g.coord_a)
                        la.emplace_back(va[i].pos, offset[static_cast<size_t>(g.chart_a)] + static_cast<int>(i));
                const auto& vb = charts[static_cast<size_t>(g.chart_b)].vertices;
                for (size_t i = 0; i < vb.size(); ++i)
                    if (vb[i].outer && vb[i].axis == g.axis_b && vb[i].coord == g.coord_b)
                        lb.emplace_back(g.sign * vb[i].pos, offset[static_cast<size_t>(g.chart_b)] + static_cast<int>(i));
                if (la.size() != lb.size()) {
                    if (unknown_total == 0) throw Degenerate{};
                    continue;    // missing partners next to uncertified regions
                }
                std::sort(la.begin(), la.end());
                std::sort(lb.begin(), lb.end());
                for (size_t i = 0; i < la.size(); ++i) {
                    if (std::fabs(la[i].first - lb[i].first) > opt.edge_root_tol)
                        throw Degenerate{};
                    glue.emplace_back(la[i].second, lb[i].second);
                }
            }

            out.shear = theta;
            out.retries = attempt;
            out.max_depth_used = deepest;
            out.unknown_leaves = unknown_total;
            out.certified = unknown_total == 0
                                ? Certification::certified
                                : (suspect ? Certification::singular_suspect
                                           : Certification::uncertified);
            fill_graph_fields(out, charts, glue, true, opt.keep_arc_graph);
            return out;
        } catch (const Degenerate&) {
            continue;
        }
    }
    out.b0 = 0;
    out.certified = Certification::uncertified;
    out.retries = opt.max_retries + 1;
    out.unknown_leaves = -1;
    return out;
}

std::string TopologyResult::to_json(bool include_arc_graph) const {
    nlohmann::ordered_json j;
    j["b0"] = b0;
    switch (certified) {
        case Certification::certified: j["certified"] = "certified"; break;
        case Certification::uncertified: j["certified"] = "uncertified"; break;
        case Certification::singular_suspect: j["certified"] = "singular-suspect"; break;
    }
    j["max_depth_used"] = max_depth_used;
    j["mode"] = projective ? "projective" : "affine";
    if (window) {
        j["window"] = {{"x", {window->x.lo, window->x.hi}}, {"y", {window->y.lo, window->y.hi}}};
    }
    j["truncated_components"] = truncated_components;
    j["unknown_leaves"] = unknown_leaves;
    j["shear"] = shear;
    j["retries"] = retries;
    if (include_arc_graph && arc_graph) {
        nlohmann::ordered_json g;
        g["vertices"] = nlohmann::ordered_json::array();
        for (const auto& v : arc_graph->vertices)
            g["vertices"].push_back({{"x", v.x}, {"y", v.y}, {"chart", v.chart},
                                     {"outer", v.on_outer_boundary}});
        g["arcs"] = nlohmann::ordered_json::array();
        for (auto [a, b] : arc_graph->arcs) g["arcs"].push_back({a, b});
        j["arc_graph"] = g;
    }
    return j.dump();
}

}  // namespace klab::topo
