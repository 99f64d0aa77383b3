#include "klab/poly.hpp"

#include <algorithm>
#include <cmath>

#include "klab/ensemble.hpp"

namespace klab::poly {

Poly2 Poly2::dx() const {
    if (d == 0) return Poly2(0);
    Poly2 r(d - 1);
    for (int j = 1; j <= d; ++j)
        for (int k = 0; k <= d - j; ++k)
            r.at(j - 1, k) = at(j, k) * j;
    return r;
}

Poly2 Poly2::dy() const {
    if (d == 0) return Poly2(0);
    Poly2 r(d - 1);
    for (int j = 0; j <= d - 1; ++j)
        for (int k = 1; k <= d - j; ++k)
            r.at(j, k - 1) = at(j, k) * k;
    return r;
}

Poly1 Poly2::restrict_x(double x0) const {
    // powers of x0 accumulate per row; result is a polynomial in y
    std::vector<double> out(static_cast<size_t>(d) + 1, 0.0);
    double xp = 1.0;
    for (int j = 0; j <= d; ++j) {
        for (int k = 0; k <= d - j; ++k) out[k] += at(j, k) * xp;
        xp *= x0;
    }
    return Poly1(std::move(out));
}

Poly1 Poly2::restrict_y(double y0) const {
    std::vector<double> out(static_cast<size_t>(d) + 1, 0.0);
    for (int j = 0; j <= d; ++j) {
        double yp = 1.0, acc = 0.0;
        for (int k = 0; k <= d - j; ++k) {
            acc += at(j, k) * yp;
            yp *= y0;
        }
        out[j] = acc;
    }
    return Poly1(std::move(out));
}

std::array<double, 2> gradient(const Poly2& p, double x, double y) {
    return {p.dx().eval(x, y), p.dy().eval(x, y)};
}

HomPoly3 HomPoly3::mul(const HomPoly3& other) const {
    HomPoly3 r(d + other.d);
    for (int i0 = 0; i0 <= d; ++i0)
        for (int i1 = 0; i1 <= d - i0; ++i1) {
            double cv = at(i0, i1);
            if (cv == 0.0) continue;
            for (int j0 = 0; j0 <= other.d; ++j0)
                for (int j1 = 0; j1 <= other.d - j0; ++j1) {
                    double ov = other.at(j0, j1);
                    if (ov == 0.0) continue;
                    r.at(i0 + j0, i1 + j1) += cv * ov;
                }
        }
    return r;
}

namespace {
// chart c keeps coordinates (z_a/z_c, z_b/z_c), a < b the remaining indices
void chart_others(int chart, int& a, int& b) {
    switch (chart) {
        case 0: a = 1; b = 2; return;
        case 1: a = 0; b = 2; return;
        case 2: a = 0; b = 1; return;
        default: throw std::invalid_argument("chart index must be 0, 1 or 2");
    }
}
}  // namespace

HomPoly3 homogenize(const Poly2& p, int chart) {
    int a, b;
    chart_others(chart, a, b);
    HomPoly3 f(p.d);
    for (int j = 0; j <= p.d; ++j)
        for (int k = 0; k <= p.d - j; ++k) {
            // affine u^j v^k becomes z_a^j z_b^k z_chart^(d-j-k)
            int e[3] = {0, 0, 0};
            e[a] = j;
            e[b] = k;
            e[chart] = p.d - j - k;
            f.at(e[0], e[1]) = p.at(j, k);
        }
    return f;
}

Poly2 dehomogenize(const HomPoly3& f, int chart) {
    int a, b;
    chart_others(chart, a, b);
    Poly2 p(f.d);
    for (int i0 = 0; i0 <= f.d; ++i0)
        for (int i1 = 0; i1 <= f.d - i0; ++i1) {
            int e[3] = {i0, i1, f.d - i0 - i1};
            p.at(e[a], e[b]) = f.at(i0, i1);
        }
    return p;
}

Poly2 chart_transfer(const Poly2& p, int from_chart, int to_chart) {
    if (from_chart == to_chart) return p;
    return dehomogenize(homogenize(p, from_chart), to_chart);
}

Poly2 apply_linear(const Poly2& p, const std::array<double, 9>& a) {
    HomPoly3 f = homogenize(p, 0);
    const int d = f.d;
    // rows of A give the substituted linear forms L_i(z) = sum_j A[i][j] z_j
    HomPoly3 lin[3] = {HomPoly3(1), HomPoly3(1), HomPoly3(1)};
    for (int i = 0; i < 3; ++i) {
        lin[i].at(1, 0) = a[static_cast<size_t>(3 * i) + 0];
        lin[i].at(0, 1) = a[static_cast<size_t>(3 * i) + 1];
        lin[i].at(0, 0) = a[static_cast<size_t>(3 * i) + 2];
    }
    // cache powers of each substituted form up to degree d
    std::array<std::vector<HomPoly3>, 3> pows;
    for (int i = 0; i < 3; ++i) {
        pows[i].reserve(static_cast<size_t>(d) + 1);
        pows[i].push_back(HomPoly3(0));
        pows[i][0].at(0, 0) = 1.0;
        for (int e = 1; e <= d; ++e) pows[i].push_back(pows[i][e - 1].mul(lin[i]));
    }
    HomPoly3 out(d);
    for (int i0 = 0; i0 <= d; ++i0)
        for (int i1 = 0; i1 <= d - i0; ++i1) {
            double cv = f.at(i0, i1);
            if (cv == 0.0) continue;
            HomPoly3 term = pows[0][i0].mul(pows[1][i1]).mul(pows[2][d - i0 - i1]);
            for (size_t t = 0; t < out.c.size(); ++t) out.c[t] += cv * term.c[t];
        }
    return dehomogenize(out, 0);
}

namespace {
size_t largest_coord(const std::vector<cdouble>& z) {
    size_t best = 0;
    double mag = 0;
    for (size_t i = 0; i < z.size(); ++i)
        if (std::norm(z[i]) > mag) {
            mag = std::norm(z[i]);
            best = i;
        }
    return best;
}
}  // namespace

bool proj_equal(const ProjPoint& p, const ProjPoint& q, double tol) {
    if (p.z.size() != q.z.size()) return false;
    size_t ref = largest_coord(p.z);
    if (q.z[ref] == cdouble{}) return false;
    cdouble scale = p.z[ref] / q.z[ref];
    for (size_t i = 0; i < p.z.size(); ++i)
        if (std::abs(q.z[i] * scale - p.z[i]) > tol * std::abs(p.z[ref])) return false;
    return true;
}

double tau_norm(const ProjPoint& p) {
    cdouble s{};
    double n2 = 0;
    for (const auto& zi : p.z) {
        s += zi * zi;
        n2 += std::norm(zi);
    }
    return std::abs(s) / n2;
}

template <class P>
static double hd_norm_impl(const P& q, int d, cdouble z) {
    if (d < 1) throw std::invalid_argument("section norm: degree must be >= 1");
    double q2 = std::norm(q.eval(z));
    return q2 / std::pow(1.0 + std::norm(z), d);
}

double section_norm_sq_hd(const Poly1& q, int d, cdouble z) { return hd_norm_impl(q, d, z); }
double section_norm_sq_hd(const CPoly1& q, int d, cdouble z) { return hd_norm_impl(q, d, z); }

double fs_section_norm_sq(const Poly1& q, int d, cdouble z) {
    return section_norm_sq_hd(q, d, z) / (d + 1);
}

double fs_section_norm_sq(const ensemble::KostlanSample& s, cdouble z) {
    return fs_section_norm_sq(ensemble::to_poly1(s), s.d, z);
}

}  // namespace klab::poly
