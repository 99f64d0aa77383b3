#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <vector>

// Dense polynomial types used everywhere else: univariate (real or complex
// coefficients), bivariate over a triangular index set, and homogeneous
// ternary forms for moving between projective charts.

namespace klab::ensemble { struct KostlanSample; }

namespace klab::poly {

using cdouble = std::complex<double>;

template <class T>
struct Poly1T {
    int d = 0;             // declared degree, c has d+1 entries
    std::vector<T> c;      // c[j] multiplies x^j

    Poly1T() : c(1, T{}) {}
    explicit Poly1T(std::vector<T> coeffs) : c(std::move(coeffs)) {
        if (c.empty()) throw std::invalid_argument("Poly1: empty coefficient list");
        d = static_cast<int>(c.size()) - 1;
    }

    // Highest index with a nonzero coefficient; -1 for the zero polynomial.
    int effective_degree() const {
        for (int j = d; j >= 0; --j)
            if (c[j] != T{}) return j;
        return -1;
    }

    template <class X>
    auto eval(const X& x) const {
        using R = decltype(c[0] * x);
        R acc = R(c[d]);
        for (int j = d - 1; j >= 0; --j) acc = acc * x + R(c[j]);
        return acc;
    }

    Poly1T derivative() const {
        if (d == 0) return Poly1T(std::vector<T>{T{}});
        std::vector<T> dc(static_cast<size_t>(d));
        for (int j = 1; j <= d; ++j) dc[j - 1] = c[j] * static_cast<double>(j);
        return Poly1T(std::move(dc));
    }
};

using Poly1 = Poly1T<double>;
using CPoly1 = Poly1T<cdouble>;

// Bivariate polynomial of total degree <= d, coefficients stored densely in
// lexicographic order of the exponent pair (j, k): j major, k minor.
struct Poly2 {
    int d = 0;
    std::vector<double> c;

    Poly2() : c(1, 0.0) {}
    explicit Poly2(int degree) : d(degree) {
        if (degree < 0) throw std::invalid_argument("Poly2: negative degree");
        c.assign(size(degree), 0.0);
    }
    Poly2(int degree, std::vector<double> coeffs) : d(degree), c(std::move(coeffs)) {
        if (degree < 0 || c.size() != size(degree))
            throw std::invalid_argument("Poly2: coefficient count does not match degree");
    }

    static size_t size(int d) {
        return static_cast<size_t>(d + 1) * static_cast<size_t>(d + 2) / 2;
    }
    size_t idx(int j, int k) const {
        return static_cast<size_t>(j) * (d + 1) - static_cast<size_t>(j) * (j - 1) / 2 +
               static_cast<size_t>(k);
    }
    double at(int j, int k) const { return c[idx(j, k)]; }
    double& at(int j, int k) { return c[idx(j, k)]; }

    // Horner in y inside Horner in x; works for double, complex, intervals.
    template <class X>
    X eval(const X& x, const X& y) const {
        X acc = X(0.0);
        for (int j = d; j >= 0; --j) {
            X row = X(at(j, d - j));
            for (int k = d - j - 1; k >= 0; --k) row = row * y + X(at(j, k));
            acc = acc * x + row;
        }
        return acc;
    }

    Poly2 dx() const;
    Poly2 dy() const;

    // Restrictions to an axis-parallel line.
    Poly1 restrict_x(double x0) const;  // one-variable poly in y
    Poly1 restrict_y(double y0) const;  // one-variable poly in x
};

std::array<double, 2> gradient(const Poly2& p, double x, double y);

// Homogeneous ternary form of degree d, same triangular layout with
// exponents (i0, i1) of z0, z1 and implicit i2 = d - i0 - i1.
struct HomPoly3 {
    int d = 0;
    std::vector<double> c;

    explicit HomPoly3(int degree) : d(degree), c(Poly2::size(degree), 0.0) {}
    size_t idx(int i0, int i1) const {
        return static_cast<size_t>(i0) * (d + 1) - static_cast<size_t>(i0) * (i0 - 1) / 2 +
               static_cast<size_t>(i1);
    }
    double at(int i0, int i1) const { return c[idx(i0, i1)]; }
    double& at(int i0, int i1) { return c[idx(i0, i1)]; }

    HomPoly3 mul(const HomPoly3& other) const;
};

// Affine chart c of the projective plane carries ordered coordinates
// (z_a/z_c, z_b/z_c) with a < b the two remaining indices.
HomPoly3 homogenize(const Poly2& p, int chart);
Poly2 dehomogenize(const HomPoly3& f, int chart);
Poly2 chart_transfer(const Poly2& p, int from_chart, int to_chart);

// Compose a ternary form with the linear map z -> A z (row-major 3x3) and
// return the chart-0 representative.  Used for degeneracy-breaking shears
// and projective rotations; invertible A preserves curve topology.
Poly2 apply_linear(const Poly2& p, const std::array<double, 9>& a);

struct ProjPoint {
    std::vector<cdouble> z;
    explicit ProjPoint(std::vector<cdouble> coords) : z(std::move(coords)) {
        if (z.size() < 2) throw std::invalid_argument("ProjPoint: need at least 2 coordinates");
        bool all0 = true;
        for (auto& v : z) all0 = all0 && v == cdouble{};
        if (all0) throw std::invalid_argument("ProjPoint: zero vector");
    }
};

bool proj_equal(const ProjPoint& p, const ProjPoint& q, double tol = 1e-12);

// |sum z_i^2| / sum |z_i|^2, the pointwise norm of the Fubini-Study-unit
// section sum z_i^2 of O(2).  Equals 1 on real points, 0 on the quadric.
double tau_norm(const ProjPoint& p);

// Pointwise squared norms of a degree-d section over the projective line at
// the affine point z.  Q is the polynomial of monomial coefficients.
// hd:  |Q(z)|^2 / (1+|z|^2)^d          (product Fubini-Study metric)
// fs:  hd divided by d+1               (metric induced by the coefficient
//                                       Gaussian; d+1 is the Bergman sum)
double section_norm_sq_hd(const Poly1& q, int d, cdouble z);
double section_norm_sq_hd(const CPoly1& q, int d, cdouble z);
double fs_section_norm_sq(const Poly1& q, int d, cdouble z);
double fs_section_norm_sq(const ensemble::KostlanSample& s, cdouble z);

}  // namespace klab::poly
