#pragma once

#include <cstdint>
#include <string>

#include "klab/poly.hpp"

// Closed-form quantities: moment bounds, the expected log-norm of a unit
// Gaussian section, pull-back norms of the tau section for the three model
// geometries, and the plane-curve component-count bookkeeping.

namespace klab::forms {

// Exact rational, used where a threshold must not wobble across a float
// rounding (ceil of g+1 - a*d sits exactly on integers for natural a).
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d);
    static Rational parse(const std::string& text);     // "3", "-1/2", "0.25"
    static Rational from_double_snap(double x);          // continued fractions
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;
};

// Upper bound 4 * m! * (k+1) / (1 - tau) for the m-th absolute moment of
// log ||sigma(z)||^2 over unit Gaussian sections.  Requires tau < 1.
double moment_bound(int m, int k, double tau);

// Integral of e^{-rho} log rho over (0, inf), evaluated by tanh-sinh
// quadrature on first use and cached.  (Equals -EulerGamma; the quadrature
// is the source of truth here, the constant only appears in tests.)
double gauss_log_integral();

// E[log ||sigma(z)||^2] = log((k+1)/4) + gauss_log_integral()
//                         + log(1 + sqrt(1 - tau^2)),  tau in [0, 1].
double expected_log_norm(int k, double tau);

struct GeometryTag {
    enum Kind { projective_space, ellipsoid, hyperboloid };
    Kind kind = projective_space;
    int n = 1;       // complex dimension of the variety
    int a = 1;       // bidegree, hyperboloid only
    int b = 1;
};

// Pointwise norm of the d-th power section pulled back by the degree-d
// embedding: tau_norm^d on projective space, (2 |x_0|^2/|x|^2)^d on the
// ellipsoid quadric, (tau1^a tau2^b)^d on the hyperboloid.
double tau_phi_norm(const GeometryTag& g, const poly::ProjPoint& p, int d);
double tau_phi_norm(const GeometryTag& g, const poly::ProjPoint& p1,
                    const poly::ProjPoint& p2, int d);

long long genus_plane_curve(long long d);          // (d-1)(d-2)/2
long long harnack_bound_plane(long long d);        // genus + 1
// ceil(genus + 1 - a*d), floored at zero: the component count that puts a
// degree-d curve in the "a-maximal" tail set.
long long maximality_threshold(long long d, const Rational& a);

}  // namespace klab::forms
