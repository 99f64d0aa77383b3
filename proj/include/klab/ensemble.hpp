#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "klab/poly.hpp"

// The Kostlan ensemble: independent standard normal coefficients in the
// basis that makes the monomial weights sqrt((d+n)! / (n! j! (d-|j|)!)).
// Multi-indices are enumerated in lexicographic order, so for n=1 the k-th
// entry is the exponent k and for n=2 the pair (j1, j2) sorted j1-major.

namespace klab::ensemble {

struct KostlanWeights {
    int n = 1;
    int d = 0;
    std::vector<double> w;                      // weights, lex multi-index order
    std::vector<std::array<int, 2>> exps;       // exponents; exps[i][1] == 0 when n == 1

    size_t size() const { return w.size(); }
};

// Weights are evaluated through lgamma so they stay finite for d <= 500.
KostlanWeights kostlan_weights(int n, int d);

struct KostlanSample {
    int n = 1;
    int d = 0;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    std::vector<double> a;    // orthonormal-basis coefficients, lex order

    size_t size() const { return a.size(); }
};

// Draw sample `index` of the stream `seed`.  Pure function of its arguments.
KostlanSample sample(int n, int d, std::uint64_t seed, std::uint64_t index);

// Monomial-coefficient polynomials a(j) * w(j).
poly::Poly1 to_poly1(const KostlanSample& s, const KostlanWeights& w);
poly::Poly1 to_poly1(const KostlanSample& s);
poly::Poly2 to_poly2(const KostlanSample& s, const KostlanWeights& w);
poly::Poly2 to_poly2(const KostlanSample& s);

// One JSON object per line: {"n":..,"d":..,"seed":..,"index":..,"coeffs":[..]}
std::string to_jsonl(const KostlanSample& s);
KostlanSample from_jsonl(const std::string& line);

}  // namespace klab::ensemble
