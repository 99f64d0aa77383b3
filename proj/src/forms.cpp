#include "klab/forms.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace klab::forms {

Rational::Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

Rational Rational::parse(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("Rational: empty string");
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        long long n = std::stoll(text.substr(0, slash));
        long long d = std::stoll(text.substr(slash + 1));
        return Rational(n, d);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(text), 1);
    return from_double_snap(std::stod(text));
}

Rational Rational::from_double_snap(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("Rational: non-finite value");
    // continued fractions; thresholds arrive as small human rationals
    const double tol = 1e-9 * std::max(1.0, std::fabs(x));
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;    // (p0,q0) two steps behind
    double v = x;
    for (int it = 0; it < 64; ++it) {
        double fl = std::floor(v);
        long long a = static_cast<long long>(fl);
        long long p = a * p1 + p0, q = a * q1 + q0;
        if (q > 100000000ll) break;
        p0 = p1;
        q0 = q1;
        p1 = p;
        q1 = q;
        if (std::fabs(x - static_cast<double>(p) / static_cast<double>(q)) <= tol)
            return Rational(p, q);
        double frac = v - fl;
        if (frac < 1e-15) break;
        v = 1.0 / frac;
    }
    throw std::invalid_argument("Rational: no small rational within tolerance");
}

std::string Rational::str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

double moment_bound(int m, int k, double tau) {
    if (m < 1 || m > 170) throw std::invalid_argument("moment_bound: m out of range");
    if (k < 1) throw std::invalid_argument("moment_bound: k must be >= 1");
    if (!(tau >= 0.0 && tau < 1.0))
        throw std::invalid_argument("moment_bound: tau must lie in [0, 1)");
    return 4.0 * std::tgamma(m + 1.0) * (k + 1) / (1.0 - tau);
}

namespace {

// tanh-sinh quadrature over (a, b) with node offsets from the endpoints
// computed directly, so integrable endpoint singularities are fine.
template <class F>
double tanh_sinh(F&& f, double a, double b) {
    const double scale = b - a;
    const double tmax = 6.5;
    auto node_pair = [&](double t, double& sp, double& w) {
        double u = std::numbers::pi / 2.0 * std::sinh(t);
        sp = 1.0 / (1.0 + std::exp(-2.0 * u));    // fraction of the way from a to b
        double sm = 1.0 - sp;
        w = std::numbers::pi * std::cosh(t) * sp * sm;
    };
    double h = 1.0;
    double sum = 0.0;
    {
        double sp, w;
        node_pair(0.0, sp, w);
        sum = w * f(a + scale * sp);
        for (double t = h; t <= tmax; t += h) {
            node_pair(t, sp, w);
            if (w < 1e-320) break;
            sum += w * (f(a + scale * sp) + f(a + scale * (1.0 - sp)));
        }
    }
    double prev = sum * h * scale;
    for (int level = 1; level <= 12; ++level) {
        h /= 2.0;
        double add = 0.0;
        for (double t = h; t <= tmax; t += 2.0 * h) {
            double sp, w;
            node_pair(t, sp, w);
            if (w < 1e-320) break;
            add += w * (f(a + scale * sp) + f(a + scale * (1.0 - sp)));
        }
        sum += add;
        double cur = sum * h * scale;
        if (level >= 3 && std::fabs(cur - prev) <= 1e-13 * (1.0 + std::fabs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace

double gauss_log_integral() {
    static const double value = [] {
        auto f = [](double rho) { return std::exp(-rho) * std::log(rho); };
        // log singularity at 0 handled by the first piece; the tail beyond 50
        // is below 1e-20
        return tanh_sinh(f, 0.0, 1.0) + tanh_sinh(f, 1.0, 50.0);
    }();
    return value;
}

double expected_log_norm(int k, double tau) {
    if (k < 1) throw std::invalid_argument("expected_log_norm: k must be >= 1");
    if (!(tau >= 0.0 && tau <= 1.0))
        throw std::invalid_argument("expected_log_norm: tau must lie in [0, 1]");
    double root = std::sqrt(std::max(0.0, 1.0 - tau * tau));
    return std::log((k + 1) / 4.0) + gauss_log_integral() + std::log1p(root);
}

namespace {
double norm_sq_sum(const poly::ProjPoint& p) {
    double s = 0;
    for (const auto& z : p.z) s += std::norm(z);
    return s;
}
}  // namespace

double tau_phi_norm(const GeometryTag& g, const poly::ProjPoint& p, int d) {
    if (d < 1) throw std::invalid_argument("tau_phi_norm: d must be >= 1");
    switch (g.kind) {
        case GeometryTag::projective_space: {
            if (p.z.size() != static_cast<size_t>(g.n) + 1)
                throw std::invalid_argument("tau_phi_norm: point has wrong dimension");
            return std::pow(poly::tau_norm(p), d);
        }
        case GeometryTag::ellipsoid: {
            if (p.z.size() != static_cast<size_t>(g.n) + 2)
                throw std::invalid_argument("tau_phi_norm: point has wrong dimension");
            poly::cdouble q{};
            for (size_t i = 1; i < p.z.size(); ++i) q += p.z[i] * p.z[i];
            double scale = norm_sq_sum(p);
            if (std::abs(p.z[0] * p.z[0] - q) > 1e-9 * scale)
                throw std::invalid_argument("tau_phi_norm: point is not on the quadric");
            double x0 = 2.0 * std::norm(p.z[0]) / scale;
            return std::pow(x0, d);
        }
        case GeometryTag::hyperboloid:
            throw std::invalid_argument("tau_phi_norm: hyperboloid needs two factor points");
    }
    throw std::invalid_argument("tau_phi_norm: unknown geometry");
}

double tau_phi_norm(const GeometryTag& g, const poly::ProjPoint& p1,
                    const poly::ProjPoint& p2, int d) {
    if (g.kind != GeometryTag::hyperboloid)
        throw std::invalid_argument("tau_phi_norm: two points only make sense for a product");
    if (d < 1) throw std::invalid_argument("tau_phi_norm: d must be >= 1");
    if (g.a < 1 || g.b < 1) throw std::invalid_argument("tau_phi_norm: bidegree must be >= 1");
    if (p1.z.size() != 2 || p2.z.size() != 2)
        throw std::invalid_argument("tau_phi_norm: factors live on the projective line");
    double t1 = poly::tau_norm(p1), t2 = poly::tau_norm(p2);
    return std::pow(std::pow(t1, g.a) * std::pow(t2, g.b), d);
}

long long genus_plane_curve(long long d) {
    if (d < 1) throw std::invalid_argument("genus_plane_curve: d must be >= 1");
    return (d - 1) * (d - 2) / 2;
}

long long harnack_bound_plane(long long d) { return genus_plane_curve(d) + 1; }

long long maximality_threshold(long long d, const Rational& a) {
    long long g1 = harnack_bound_plane(d);
    // ceil((g1*den - num*d) / den) in integers
    long long x = g1 * a.den - a.num * d;
    long long q = x >= 0 ? (x + a.den - 1) / a.den : -((-x) / a.den);
    return q > 0 ? q : 0;
}

}  // namespace klab::forms
