#include "klab/roots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/multiprecision/cpp_int.hpp>

namespace klab::roots {

using poly::CPoly1;
using poly::Poly1;
using poly::cdouble;
namespace mp = boost::multiprecision;
using bigint = mp::cpp_int;

namespace {

int sgn(double v) { return v > 0 ? 1 : v < 0 ? -1 : 0; }

int trimmed_degree(const std::vector<double>& c) {
    for (int j = static_cast<int>(c.size()) - 1; j >= 0; --j)
        if (c[j] != 0.0) return j;
    return -1;
}

// divide out the largest coefficient magnitude; positive scaling keeps every
// sign in the chain intact
void max_normalize(std::vector<double>& c) {
    double m = 0;
    for (double v : c) m = std::max(m, std::fabs(v));
    if (m == 0 || m == 1) return;
    for (double& v : c) v /= m;
}

// remainder of a mod b in doubles; b must have nonzero lead at degree db.
// amp records the largest quotient magnitude seen, the caller's measure of
// how much this division amplified.
std::vector<double> poly_rem(const std::vector<double>& a, const std::vector<double>& b, int db,
                             double* amp = nullptr) {
    std::vector<double> r = a;
    const double lead = b[db];
    for (int i = static_cast<int>(r.size()) - 1; i >= db; --i) {
        double f = r[i] / lead;
        if (f != 0.0) {
            if (amp) *amp = std::max(*amp, std::fabs(f));
            for (int t = 0; t < db; ++t) r[i - db + t] -= f * b[t];
        }
        r[i] = 0.0;
    }
    r.resize(db);
    if (r.empty()) r.push_back(0.0);
    return r;
}

int int_degree(const std::vector<bigint>& c) {
    for (int j = static_cast<int>(c.size()) - 1; j >= 0; --j)
        if (c[j] != 0) return j;
    return -1;
}

// every finite double is mant*2^e exactly, so one common power of two turns
// the whole coefficient vector into integers with no rounding at all
std::vector<bigint> to_scaled_int(const std::vector<double>& c) {
    std::vector<std::pair<long long, int>> parts(c.size(), {0, 0});
    int min_e = 0;
    bool seen = false;
    for (size_t i = 0; i < c.size(); ++i) {
        if (c[i] == 0.0) continue;
        int e2 = 0;
        double mant = std::frexp(c[i], &e2);
        auto m = static_cast<long long>(std::ldexp(mant, 53));
        int e = e2 - 53;
        while ((m & 1) == 0) {
            m >>= 1;
            ++e;
        }
        parts[i] = {m, e};
        min_e = seen ? std::min(min_e, e) : e;
        seen = true;
    }
    std::vector<bigint> out(c.size());
    for (size_t i = 0; i < c.size(); ++i)
        if (parts[i].first != 0) out[i] = bigint(parts[i].first) << (parts[i].second - min_e);
    return out;
}

// sign of an integer-coefficient polynomial at a double x, evaluated exactly:
// x = num*2^k with num odd, and the power of two is cleared from the value
int int_sign_at(const std::vector<bigint>& c, double x) {
    int e = int_degree(c);
    if (e < 0) return 0;
    if (e == 0 || x == 0.0) return c[0].sign();
    int e2 = 0;
    double mant = std::frexp(x, &e2);
    auto num = static_cast<long long>(std::ldexp(mant, 53));
    int k = e2 - 53;
    while ((num & 1) == 0) {
        num >>= 1;
        ++k;
    }
    bigint acc;
    if (k >= 0) {
        bigint xz = bigint(num) << k;
        acc = c[e];
        for (int j = e - 1; j >= 0; --j) acc = acc * xz + c[j];
    } else {
        // evaluate sum c_j num^j 2^(s(e-j)), the value scaled by 2^(se) > 0
        int s = -k;
        acc = c[e];
        for (int j = e - 1; j >= 0; --j) acc = acc * num + (c[j] << (s * (e - j)));
    }
    return acc.sign();
}

// negated pseudo-remainder chain over the integers (subresultant variant).
// Every element comes out as a positive integer multiple of the true Sturm
// chain element, so all sign queries agree with the exact chain while the
// coefficient sizes only grow polynomially.
std::vector<std::vector<bigint>> build_int_chain(const std::vector<bigint>& p0) {
    std::vector<std::vector<bigint>> elems;
    elems.push_back(p0);
    int e = int_degree(p0);
    std::vector<bigint> p1(static_cast<size_t>(e));
    for (int j = 1; j <= e; ++j) p1[j - 1] = p0[j] * j;
    elems.push_back(std::move(p1));
    bigint g = 1, h = 1;
    while (true) {
        const auto& a = elems[elems.size() - 2];
        const auto& b = elems.back();
        int da = int_degree(a), db = int_degree(b);
        if (db <= 0) break;
        int delta = da - db;
        const bigint ell = b[db];
        // pseudo-remainder: eliminate down to degree < db, multiplying by the
        // lead instead of dividing; the accumulated factor is ell^(delta+1)
        std::vector<bigint> r(a.begin(), a.begin() + da + 1);
        int scale_left = delta + 1;
        while (true) {
            int dr = int_degree(r);
            if (dr < db) break;
            bigint top = r[dr];
            for (auto& v : r) v *= ell;
            for (int t = 0; t <= db; ++t) r[dr - db + t] -= top * b[t];
            r[dr] = 0;
            --scale_left;
        }
        if (scale_left > 0) {
            bigint extra = mp::pow(ell, static_cast<unsigned>(scale_left));
            for (auto& v : r) v *= extra;
        }
        int dr = int_degree(r);
        if (dr < 0) break;    // b divides a: b is the gcd and ends the chain
        r.resize(static_cast<size_t>(dr) + 1);
        // r = ell^(delta+1) * rem(a, b); flip so the stored element is a
        // positive multiple of -rem, then strip the known subresultant factor
        const bool flip = !(ell < 0 && ((delta + 1) & 1));
        const bigint divisor = g * mp::pow(h, static_cast<unsigned>(delta));
        for (auto& v : r) {
            bigint q, rm;
            mp::divide_qr(flip ? bigint(-v) : v, divisor, q, rm);
            if (rm != 0) throw std::logic_error("SturmChain: inexact subresultant division");
            v = std::move(q);
        }
        elems.push_back(std::move(r));
        g = mp::abs(ell);
        h = delta == 1 ? g : bigint(mp::pow(g, static_cast<unsigned>(delta)) /
                                    mp::pow(h, static_cast<unsigned>(delta - 1)));
    }
    return elems;
}

// shrink an integer chain element back into doubles for the heuristic
// consumers (gcd_part, isolation seeds); shifted first so nothing overflows
std::vector<double> int_to_double(const std::vector<bigint>& el) {
    unsigned long top_bit = 0;
    for (const auto& v : el)
        if (v != 0) top_bit = std::max(top_bit, static_cast<unsigned long>(mp::msb(mp::abs(v))));
    const unsigned shift = top_bit > 512 ? static_cast<unsigned>(top_bit - 512) : 0u;
    std::vector<double> out(el.size(), 0.0);
    for (size_t i = 0; i < el.size(); ++i) {
        if (el[i] == 0) continue;
        double mag = static_cast<double>(bigint(mp::abs(el[i]) >> shift));
        out[i] = el[i] < 0 ? -mag : mag;
    }
    max_normalize(out);
    return out;
}

}  // namespace

int sign_at(const Poly1& p, double x) {
    int e = p.effective_degree();
    if (e < 0) return 0;
    if (std::fabs(x) <= 1.0) {
        double acc = p.c[e];
        for (int j = e - 1; j >= 0; --j) acc = acc * x + p.c[j];
        return sgn(acc);
    }
    // p(x) = x^e * prev(1/x) with reversed coefficients; |1/x| < 1 so the
    // evaluation cannot overflow no matter how wild the coefficients are
    double t = 1.0 / x;
    double acc = p.c[0];
    for (int j = 1; j <= e; ++j) acc = acc * t + p.c[j];
    int s = sgn(acc);
    if (x < 0 && (e & 1)) s = -s;
    return s;
}

struct SturmChain::ExactChain {
    std::vector<std::vector<bigint>> elems;
};

SturmChain SturmChain::build(const Poly1& p) {
    int e = trimmed_degree(p.c);
    if (e < 0) throw std::invalid_argument("SturmChain: zero polynomial");

    SturmChain sc;
    std::vector<double> q0(p.c.begin(), p.c.begin() + e + 1);
    max_normalize(q0);
    sc.chain_.push_back(Poly1(q0));
    if (e == 0) return sc;

    std::vector<double> q1(static_cast<size_t>(e));
    for (int j = 1; j <= e; ++j) q1[j - 1] = q0[j] * j;
    max_normalize(q1);
    sc.chain_.push_back(Poly1(q1));

    bool ill = false;
    while (true) {
        const auto& a = sc.chain_[sc.chain_.size() - 2].c;
        const auto& b = sc.chain_.back().c;
        int db = trimmed_degree(b);
        if (db <= 0) break;
        double amp = 0;
        std::vector<double> r = poly_rem(a, b, db, &amp);
        double m = 0;
        for (double v : r) m = std::max(m, std::fabs(v));
        // tripwires, each meaning the double chain cannot be trusted: the
        // division just amplified past recovery, the remainder is too small
        // to tell apart from zero (a computed 0.0 proves nothing, since the
        // normalized copy already rounded), or the new lead sits far below
        // the coefficients right next to it, so the next division would blow
        // up.  The lead is judged against its neighbors, not the largest
        // coefficient: Kostlan samples carry a binomial profile whose central
        // coefficients tower ~1e15 over a perfectly healthy lead.
        if (!(amp <= 1e12) || !(m >= 1e-12)) {
            ill = true;
            break;
        }
        int dr = trimmed_degree(r);
        double neigh = dr >= 1 ? std::fabs(r[dr - 1]) : 0.0;
        if (dr >= 2) neigh = std::max(neigh, std::fabs(r[dr - 2]));
        if (!(std::fabs(r[dr]) >= 1e-10 * neigh)) {
            ill = true;
            break;
        }
        for (double& v : r) v = -v;
        max_normalize(r);
        r.resize(static_cast<size_t>(dr) + 1);
        sc.chain_.push_back(Poly1(std::move(r)));
    }

    if (ill) {
        auto ex = std::make_shared<ExactChain>();
        // rebuilt from the original coefficients, not the normalized copy:
        // dividing by the max rounds, and the exact path must not
        ex->elems = build_int_chain(to_scaled_int(std::vector<double>(p.c.begin(), p.c.begin() + e + 1)));
        // mirror the exact chain into doubles so gcd_part/elements stay usable
        sc.chain_.clear();
        for (const auto& el : ex->elems) sc.chain_.push_back(Poly1(int_to_double(el)));
        sc.exact_ = std::move(ex);
    }
    return sc;
}

namespace {
int count_variations(const std::vector<int>& signs) {
    int v = 0, prev = 0;
    for (int s : signs) {
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++v;
        prev = s;
    }
    return v;
}
}  // namespace

int SturmChain::variations_at(double x) const {
    std::vector<int> signs;
    signs.reserve(chain_.size());
    if (exact_) {
        for (const auto& el : exact_->elems) signs.push_back(int_sign_at(el, x));
    } else {
        for (const auto& q : chain_) signs.push_back(sign_at(q, x));
    }
    return count_variations(signs);
}

int SturmChain::variations_at_neg_inf() const {
    std::vector<int> signs;
    signs.reserve(chain_.size());
    if (exact_) {
        for (const auto& el : exact_->elems) {
            int e = int_degree(el);
            int s = e < 0 ? 0 : el[e].sign();
            if (e > 0 && (e & 1)) s = -s;
            signs.push_back(s);
        }
    } else {
        for (const auto& q : chain_) {
            int e = q.effective_degree();
            int s = e < 0 ? 0 : sgn(q.c[e]);
            if (e > 0 && (e & 1)) s = -s;
            signs.push_back(s);
        }
    }
    return count_variations(signs);
}

int SturmChain::variations_at_pos_inf() const {
    std::vector<int> signs;
    signs.reserve(chain_.size());
    if (exact_) {
        for (const auto& el : exact_->elems) {
            int e = int_degree(el);
            signs.push_back(e < 0 ? 0 : el[e].sign());
        }
    } else {
        for (const auto& q : chain_) {
            int e = q.effective_degree();
            signs.push_back(e < 0 ? 0 : sgn(q.c[e]));
        }
    }
    return count_variations(signs);
}

int SturmChain::count_in(double a, double b) const {
    if (!(a <= b)) throw std::invalid_argument("count_in: need a <= b");
    return variations_at(a) - variations_at(b);
}

int SturmChain::count_all() const {
    return variations_at_neg_inf() - variations_at_pos_inf();
}

int count_real_roots(const Poly1& p) {
    int e = trimmed_degree(p.c);
    if (e < 0) throw std::invalid_argument("count_real_roots: zero polynomial");
    if (e == 0) return 0;
    return SturmChain::build(p).count_all();
}

namespace {
template <class T>
double fujiwara_impl(const std::vector<T>& c) {
    int e = -1;
    for (int j = static_cast<int>(c.size()) - 1; j >= 0; --j)
        if (std::abs(c[j]) != 0.0) {
            e = j;
            break;
        }
    if (e <= 0) return 0.0;
    const double log_lead = std::log(std::abs(c[e]));
    double best = 0.0;
    for (int k = 1; k <= e; ++k) {
        double mag = std::abs(c[e - k]);
        if (mag == 0.0) continue;
        double lg = std::log(mag) - log_lead;
        if (k == e) lg -= std::numbers::ln2;
        best = std::max(best, std::exp(lg / k));
    }
    return 2.0 * best;
}
}  // namespace

double fujiwara_bound(const Poly1& p) { return fujiwara_impl(p.c); }
double fujiwara_bound(const CPoly1& p) { return fujiwara_impl(p.c); }

RootBracket refine_bracket(const SturmChain& chain, RootBracket b, double width) {
    while (b.hi - b.lo > width) {
        double m = b.lo + (b.hi - b.lo) / 2;
        if (m <= b.lo || m >= b.hi) break;    // hit double resolution
        if (chain.count_in(b.lo, m) >= 1)
            b.hi = m;
        else
            b.lo = m;
    }
    return b;
}

std::vector<RootBracket> isolate_real_roots(const Poly1& p, double width) {
    int e = trimmed_degree(p.c);
    if (e < 0) throw std::invalid_argument("isolate_real_roots: zero polynomial");
    std::vector<RootBracket> out;
    if (e == 0) return out;

    SturmChain chain = SturmChain::build(p);
    int total = chain.count_all();
    if (total == 0) return out;

    double bound = fujiwara_bound(p) + 1.0;
    struct Piece {
        double lo, hi;
        int count;
    };
    std::vector<Piece> stack{{-bound, bound, chain.count_in(-bound, bound)}};

    // a multiplicity certificate only exists when gcd(p, p') is nontrivial
    std::optional<SturmChain> gcd_chain;
    if (chain.elements().size() >= 2 && chain.gcd_part().effective_degree() >= 1)
        gcd_chain = SturmChain::build(chain.gcd_part());

    while (!stack.empty()) {
        Piece pc = stack.back();
        stack.pop_back();
        if (pc.count == 0) continue;
        double w = pc.hi - pc.lo;
        double m = pc.lo + w / 2;
        if (pc.count == 1 || m <= pc.lo || m >= pc.hi) {
            RootBracket b{pc.lo, pc.hi, false};
            b = refine_bracket(chain, b, width);
            // brackets that double precision cannot split any further keep
            // their cluster and get flagged
            b.multiple = pc.count > 1;
            if (gcd_chain && gcd_chain->count_in(b.lo, b.hi) > 0) b.multiple = true;
            out.push_back(b);
            continue;
        }
        int left = chain.count_in(pc.lo, m);
        stack.push_back({pc.lo, m, left});
        stack.push_back({m, pc.hi, pc.count - left});
    }
    std::sort(out.begin(), out.end(),
              [](const RootBracket& a, const RootBracket& b) { return a.lo < b.lo; });
    return out;
}

namespace {

template <class T>
std::vector<cdouble> aberth_impl(const std::vector<T>& coeffs, const AberthOptions& opt) {
    // strip exact zero leads (degree drop) and zero roots at the tail
    int e = -1;
    for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j)
        if (std::abs(coeffs[j]) != 0.0) {
            e = j;
            break;
        }
    if (e <= 0) return {};
    int z0 = 0;
    while (z0 < e && std::abs(coeffs[z0]) == 0.0) ++z0;

    std::vector<cdouble> c(coeffs.begin() + z0, coeffs.begin() + e + 1);
    const int deg = static_cast<int>(c.size()) - 1;
    std::vector<cdouble> roots(static_cast<size_t>(z0), cdouble{0.0, 0.0});
    if (deg == 0) return roots;

    double m = 0;
    for (auto& v : c) m = std::max(m, std::abs(v));
    for (auto& v : c) v /= m;

    poly::CPoly1 q(c);
    double bound = fujiwara_bound(q);
    if (bound == 0.0) bound = 1.0;

    // starting radii from the Newton polygon: the slopes of the upper convex
    // hull of (j, log|c_j|) estimate the moduli of the root clusters, so each
    // iterate starts near its own ring; one far circle would instead make the
    // whole cloud crawl inward a ring per sweep when the scales are spread out
    std::vector<double> logc(static_cast<size_t>(deg) + 1,
                             -std::numeric_limits<double>::infinity());
    for (int j = 0; j <= deg; ++j)
        if (c[static_cast<size_t>(j)] != cdouble{})
            logc[static_cast<size_t>(j)] = std::log(std::abs(c[static_cast<size_t>(j)]));
    std::vector<int> hull;
    for (int j = 0; j <= deg; ++j) {
        if (std::isinf(logc[static_cast<size_t>(j)])) continue;
        while (hull.size() >= 2) {
            int a = hull[hull.size() - 2], b = hull.back();
            // drop b when it sits on or below the chord from a to j
            if ((logc[static_cast<size_t>(j)] - logc[static_cast<size_t>(a)]) * (b - a) >=
                (logc[static_cast<size_t>(b)] - logc[static_cast<size_t>(a)]) * (j - a))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(j);
    }

    // evenly spaced angles per ring, rotated by multiples of the golden angle
    // so symmetric root configurations never see a symmetric start
    constexpr double golden = 2.399963229728653;
    std::vector<cdouble> z(static_cast<size_t>(deg));
    int k = 0;
    for (size_t h = 0; h + 1 < hull.size(); ++h) {
        int j1 = hull[h], j2 = hull[h + 1];
        int s = j2 - j1;
        double r = std::exp((logc[static_cast<size_t>(j1)] - logc[static_cast<size_t>(j2)]) / s);
        r = std::min(std::max(r, 1e-300), bound);
        for (int t = 0; t < s; ++t, ++k) {
            double th = 2.0 * std::numbers::pi * t / s + golden * static_cast<double>(h + 1);
            z[static_cast<size_t>(k)] = r * cdouble{std::cos(th), std::sin(th)};
        }
    }

    // Newton correction p/p' plus the relative-residual test, evaluated at
    // 1/x through the reversed coefficients once |x| > 1: near-degree-drop
    // samples own roots far beyond the overflow horizon of x^deg, and those
    // must be iterated on, not fed NaNs.  With rev(w) = sum c_j w^(deg-j),
    // p(x) = x^deg rev(1/x) and p/p' = x rev / (deg rev - w rev').
    auto eval_newton = [&](const cdouble& x, cdouble& nk, bool& resid_ok, bool& dzero) {
        if (std::abs(x) <= 1.0) {
            cdouble pv = c[deg], dv{};
            double sc = std::abs(c[deg]);
            const double ax = std::abs(x);
            for (int j = deg - 1; j >= 0; --j) {
                dv = dv * x + pv;
                pv = pv * x + c[j];
                sc = sc * ax + std::abs(c[j]);
            }
            resid_ok = std::abs(pv) <= opt.tol * sc;
            dzero = dv == cdouble{};
            nk = dzero ? cdouble{} : pv / dv;
        } else {
            const cdouble w = 1.0 / x;
            cdouble rv = c[0], rdv{};
            double sc = std::abs(c[0]);
            const double aw = std::abs(w);
            for (int j = 1; j <= deg; ++j) {
                rdv = rdv * w + rv;
                rv = rv * w + c[j];
                sc = sc * aw + std::abs(c[j]);
            }
            resid_ok = std::abs(rv) <= opt.tol * sc;
            cdouble dd = static_cast<double>(deg) * rv - w * rdv;
            dzero = dd == cdouble{};
            nk = dzero ? cdouble{} : x * rv / dd;
        }
    };

    // every point keeps moving until its correction reaches noise level; a
    // point with a small residual must not be frozen out, because the
    // repulsion sum is what pries apart two iterates that landed on the same
    // root (a frozen duplicate silently drops some other root)
    bool done = false;
    for (int it = 0; it < opt.max_iter && !done; ++it) {
        done = true;
        for (int k = 0; k < deg; ++k) {
            cdouble nk;
            bool resid_ok = false, dzero = false;
            eval_newton(z[k], nk, resid_ok, dzero);
            cdouble corr;
            if (dzero) {
                if (resid_ok) continue;    // sitting exactly on a root
                corr = cdouble{1e-3 * (1.0 + std::abs(z[k])), 1e-3};
            } else {
                cdouble s{};
                for (int j = 0; j < deg; ++j) {
                    if (j == k) continue;
                    cdouble dz = z[k] - z[j];
                    if (dz == cdouble{}) dz = cdouble{1e-12 * (1.0 + std::abs(z[k])), 0.0};
                    s += 1.0 / dz;
                }
                cdouble denom = 1.0 - nk * s;
                corr = denom == cdouble{} ? nk : nk / denom;
            }
            z[k] -= corr;
            if (std::abs(corr) > 5e-15 * (1.0 + std::abs(z[k]))) done = false;
        }
    }

    std::vector<cdouble> bad;
    for (int k = 0; k < deg; ++k) {
        cdouble nk;
        bool resid_ok = false, dzero = false;
        eval_newton(z[k], nk, resid_ok, dzero);
        if (!resid_ok) bad.push_back(z[k]);
    }
    roots.insert(roots.end(), z.begin(), z.end());
    if (!bad.empty())
        throw RootsError("complex_roots: " + std::to_string(bad.size()) +
                             " root(s) missed the residual target",
                         std::move(roots));
    return roots;
}

}  // namespace

std::vector<cdouble> complex_roots(const Poly1& p, const AberthOptions& opt) {
    return aberth_impl(p.c, opt);
}

std::vector<cdouble> complex_roots(const CPoly1& p, const AberthOptions& opt) {
    return aberth_impl(p.c, opt);
}

void newton_polish(const Poly1& p, std::vector<cdouble>& zs, int steps) {
    int e = trimmed_degree(p.c);
    if (e <= 0) return;
    poly::CPoly1 q(std::vector<cdouble>(p.c.begin(), p.c.begin() + e + 1));
    poly::CPoly1 dq = q.derivative();
    for (auto& z : zs) {
        for (int s = 0; s < steps; ++s) {
            cdouble pv = q.eval(z), dv = dq.eval(z);
            if (dv == cdouble{}) break;
            cdouble step = pv / dv;
            cdouble z2 = z - step;
            if (std::abs(q.eval(z2)) <= std::abs(pv))
                z = z2;
            else
                break;
        }
    }
}

}  // namespace klab::roots
