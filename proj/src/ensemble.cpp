#include "klab/ensemble.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>
#include <json.hpp>

#include "klab/rng.hpp"

namespace klab::rng {

double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("normal_quantile: u must lie in (0,1)");
    return std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
}

}  // namespace klab::rng

namespace klab::ensemble {

static void check_nd(int n, int d) {
    if (n != 1 && n != 2)
        throw std::invalid_argument("kostlan: n must be 1 or 2");
    if (d < 1 || d > 500)
        throw std::invalid_argument("kostlan: d must lie in [1, 500]");
}

KostlanWeights kostlan_weights(int n, int d) {
    check_nd(n, d);
    KostlanWeights kw;
    kw.n = n;
    kw.d = d;
    const double log_top = std::lgamma(d + n + 1.0) - std::lgamma(n + 1.0);
    if (n == 1) {
        kw.w.reserve(d + 1);
        kw.exps.reserve(d + 1);
        for (int j = 0; j <= d; ++j) {
            double logw2 = log_top - std::lgamma(j + 1.0) - std::lgamma(d - j + 1.0);
            kw.w.push_back(std::exp(0.5 * logw2));
            kw.exps.push_back({j, 0});
        }
    } else {
        kw.w.reserve(poly::Poly2::size(d));
        kw.exps.reserve(poly::Poly2::size(d));
        for (int j1 = 0; j1 <= d; ++j1)
            for (int j2 = 0; j2 <= d - j1; ++j2) {
                double logw2 = log_top - std::lgamma(j1 + 1.0) - std::lgamma(j2 + 1.0) -
                               std::lgamma(d - j1 - j2 + 1.0);
                kw.w.push_back(std::exp(0.5 * logw2));
                kw.exps.push_back({j1, j2});
            }
    }
    return kw;
}

KostlanSample sample(int n, int d, std::uint64_t seed, std::uint64_t index) {
    check_nd(n, d);
    KostlanSample s;
    s.n = n;
    s.d = d;
    s.seed = seed;
    s.index = index;
    const size_t count = n == 1 ? static_cast<size_t>(d + 1) : poly::Poly2::size(d);
    s.a.resize(count);
    std::uint64_t round = 0;
    for (;;) {
        bool all_zero = true;
        for (size_t i = 0; i < count; ++i) {
            s.a[i] = rng::std_normal(seed, index, i + round);
            all_zero = all_zero && s.a[i] == 0.0;
        }
        if (!all_zero) break;
        // never hand back the zero section; step to a fresh counter block
        round += count;
    }
    return s;
}

poly::Poly1 to_poly1(const KostlanSample& s, const KostlanWeights& w) {
    if (s.n != 1) throw std::invalid_argument("to_poly1: sample has n != 1");
    if (w.n != s.n || w.d != s.d) throw std::invalid_argument("to_poly1: weight table mismatch");
    std::vector<double> c(s.a.size());
    for (size_t i = 0; i < c.size(); ++i) c[i] = s.a[i] * w.w[i];
    return poly::Poly1(std::move(c));
}

poly::Poly1 to_poly1(const KostlanSample& s) { return to_poly1(s, kostlan_weights(s.n, s.d)); }

poly::Poly2 to_poly2(const KostlanSample& s, const KostlanWeights& w) {
    if (s.n != 2) throw std::invalid_argument("to_poly2: sample has n != 2");
    if (w.n != s.n || w.d != s.d) throw std::invalid_argument("to_poly2: weight table mismatch");
    poly::Poly2 p(s.d);
    for (size_t i = 0; i < s.a.size(); ++i)
        p.at(w.exps[i][0], w.exps[i][1]) = s.a[i] * w.w[i];
    return p;
}

poly::Poly2 to_poly2(const KostlanSample& s) { return to_poly2(s, kostlan_weights(s.n, s.d)); }

std::string to_jsonl(const KostlanSample& s) {
    nlohmann::ordered_json j;
    j["n"] = s.n;
    j["d"] = s.d;
    j["seed"] = s.seed;
    j["index"] = s.index;
    j["coeffs"] = s.a;
    return j.dump();
}

KostlanSample from_jsonl(const std::string& line) {
    auto j = nlohmann::json::parse(line);
    KostlanSample s;
    s.n = j.at("n").get<int>();
    s.d = j.at("d").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.index = j.at("index").get<std::uint64_t>();
    s.a = j.at("coeffs").get<std::vector<double>>();
    const size_t want = s.n == 1 ? static_cast<size_t>(s.d + 1) : poly::Poly2::size(s.d);
    if (s.a.size() != want)
        throw std::invalid_argument("from_jsonl: coefficient count does not match n, d");
    return s;
}

}  // namespace klab::ensemble
