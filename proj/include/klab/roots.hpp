#pragma once

#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

#include "klab/poly.hpp"

// Real root counting and isolation through Sturm chains, plus a simultaneous
// (Aberth) iteration for the full complex root set.

namespace klab::roots {

// Sign of p at x, evaluated so that large |x| cannot overflow: for |x| > 1
// the reversed coefficients are used at 1/x.
int sign_at(const poly::Poly1& p, double x);

// Negated-remainder chain.  Built in doubles with per-element max-norm
// scaling; if a division amplifies past recovery, a remainder's leading
// coefficient collapses below 1e-10 of its neighbor coefficients, or a
// remainder cannot be told apart from zero, the whole chain is rebuilt in
// exact integer arithmetic (pseudo-remainder / subresultant form; the input
// doubles convert exactly).
class SturmChain {
public:
    static SturmChain build(const poly::Poly1& p);

    int variations_at(double x) const;
    int variations_at_neg_inf() const;
    int variations_at_pos_inf() const;

    // Distinct real roots in (a, b]; requires a <= b.
    int count_in(double a, double b) const;
    int count_all() const;

    bool exact() const { return exact_ != nullptr; }
    // Last chain element; proportional to gcd(p, p') when that has degree >= 1.
    const poly::Poly1& gcd_part() const { return chain_.back(); }
    const std::vector<poly::Poly1>& elements() const { return chain_; }

private:
    struct ExactChain;
    std::vector<poly::Poly1> chain_;
    std::shared_ptr<const ExactChain> exact_;
};

int count_real_roots(const poly::Poly1& p);

// All real roots lie in [-B, B].
double fujiwara_bound(const poly::Poly1& p);
double fujiwara_bound(const poly::CPoly1& p);

struct RootBracket {
    double lo = 0;
    double hi = 0;
    bool multiple = false;    // p and p' share a root inside

    double mid() const { return lo + (hi - lo) / 2; }
    double width() const { return hi - lo; }
};

// Disjoint brackets, one per distinct real root (the square-free part is
// taken internally).  Brackets are bisected down to at most `width`.
std::vector<RootBracket> isolate_real_roots(const poly::Poly1& p, double width = 1e-12);

// Shrink one bracket further with Sturm-count bisection.
RootBracket refine_bracket(const SturmChain& chain, RootBracket b, double width);

// Iteration gave up before meeting the residual target; partial results kept.
class RootsError : public std::runtime_error {
public:
    RootsError(const std::string& msg, std::vector<poly::cdouble> got)
        : std::runtime_error(msg), partial(std::move(got)) {}
    std::vector<poly::cdouble> partial;
};

struct AberthOptions {
    int max_iter = 1000;
    double tol = 1e-10;       // backward error: |p(z)| <= tol * sum |c_j||z|^j
};

// All complex roots (with multiplicity as cluster repeats), in no particular
// order beyond being deterministic.  Throws RootsError on non-convergence.
std::vector<poly::cdouble> complex_roots(const poly::Poly1& p, const AberthOptions& opt = {});
std::vector<poly::cdouble> complex_roots(const poly::CPoly1& p, const AberthOptions& opt = {});

// A few guarded Newton steps per root; tightens |Im| of real roots.
void newton_polish(const poly::Poly1& p, std::vector<poly::cdouble>& zs, int steps = 4);

}  // namespace klab::roots
