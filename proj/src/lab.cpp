#include "klab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

#include "klab/rng.hpp"
#include "klab/roots.hpp"

namespace klab::lab {

namespace {

using poly::cdouble;
using poly::CPoly1;
using poly::Poly1;

// Work items are scheduled by an atomic index and each writes only its own
// slot, so the per-index results never depend on the thread count; callers
// then reduce in index order.
template <class F>
void parallel_for_indexed(long long n, int threads, F&& body) {
    threads = std::max(1, threads);
    if (n <= 0) return;
    if (threads == 1 || n == 1) {
        for (long long i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<long long> next{0};
    std::vector<std::exception_ptr> errs(static_cast<size_t>(threads));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (;;) {
                    long long i = next.fetch_add(1, std::memory_order_relaxed);
                    if (i >= n) return;
                    body(i);
                }
            } catch (...) {
                errs[static_cast<size_t>(t)] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

// log |q(z)|^2 without overflow: for |z| > 1 evaluate the reversed
// coefficients at 1/z and add deg * log |z|^2.
double log_abs_sq(const CPoly1& q, cdouble z) {
    int deg = q.d;
    cdouble acc;
    double shift = 0;
    if (std::norm(z) <= 1.0) {
        acc = q.c[static_cast<size_t>(deg)];
        for (int j = deg - 1; j >= 0; --j) acc = acc * z + q.c[static_cast<size_t>(j)];
    } else {
        cdouble w = 1.0 / z;
        acc = q.c[0];
        for (int j = 1; j <= deg; ++j) acc = acc * w + q.c[static_cast<size_t>(j)];
        shift = deg * std::log(std::norm(z));
    }
    return std::log(std::max(std::norm(acc), 1e-300)) + shift;
}

double log_hd_norm_sq(const CPoly1& q, int d, cdouble z) {
    return log_abs_sq(q, z) - d * std::log1p(std::norm(z));
}

CPoly1 complexify(const Poly1& p) {
    std::vector<cdouble> c(p.c.begin(), p.c.end());
    return CPoly1(std::move(c));
}

// Midpoint nodes over the cutoff support square with the Laplacian weights,
// recentred so the weights sum to zero exactly as the continuous integral of
// a Laplacian does; constants in the integrand then drop out identically.
struct QuadGrid {
    std::vector<cdouble> nodes;
    std::vector<double> lap_w;     // centred Delta f * cell area
    std::vector<double> fs_w;      // f * Fubini-Study density * cell area
    double h = 0;
    double x0 = 0, y0 = 0;
    double offx = 0.5, offy = 0.5;
};

QuadGrid make_grid(const CutoffFn& f, int grid, double offx, double offy) {
    if (grid < 2) throw std::invalid_argument("quadrature grid must be >= 2");
    QuadGrid g;
    double R = f.radius;
    g.x0 = f.center.real() - R;
    g.y0 = f.center.imag() - R;
    g.h = 2 * R / grid;
    g.offx = offx;
    g.offy = offy;
    double area = g.h * g.h;
    for (int iy = 0; iy < grid; ++iy)
        for (int ix = 0; ix < grid; ++ix) {
            cdouble z(g.x0 + (ix + offx) * g.h, g.y0 + (iy + offy) * g.h);
            if (std::abs(z - f.center) >= R) continue;
            g.nodes.push_back(z);
            g.lap_w.push_back(f.laplacian(z) * area);
            double dens = 1.0 / (std::numbers::pi * std::pow(1.0 + std::norm(z), 2));
            g.fs_w.push_back(f(z) * dens * area);
        }
    if (g.nodes.empty()) throw std::invalid_argument("quadrature grid misses the cutoff support");
    double mean = 0;
    for (double w : g.lap_w) mean += w;
    mean /= static_cast<double>(g.lap_w.size());
    for (double& w : g.lap_w) w -= mean;
    return g;
}

bool grid_clear_of(const QuadGrid& g, const std::vector<cdouble>& zs, int grid, double tol) {
    for (const cdouble& r : zs) {
        // only nodes in the cell neighbourhood of the root can be close
        double fx = (r.real() - g.x0) / g.h - g.offx;
        double fy = (r.imag() - g.y0) / g.h - g.offy;
        long ix0 = std::lround(fx), iy0 = std::lround(fy);
        for (long ix = ix0 - 1; ix <= ix0 + 1; ++ix)
            for (long iy = iy0 - 1; iy <= iy0 + 1; ++iy) {
                if (ix < 0 || ix >= grid || iy < 0 || iy >= grid) continue;
                cdouble z(g.x0 + (ix + g.offx) * g.h, g.y0 + (iy + g.offy) * g.h);
                if (std::abs(z - r) < tol) return false;
            }
    }
    return true;
}

json tail_estimate_json(const TailEstimate& t) {
    return json{{"threshold", t.threshold}, {"hits", t.hits},   {"trials", t.trials},
                {"p_hat", t.p_hat},         {"ci_lo", t.ci_lo}, {"ci_hi", t.ci_hi}};
}

json decay_fit_json(const DecayFit& f) {
    return json{{"fitted", f.fitted},
                {"slope", f.slope},
                {"intercept", f.intercept},
                {"r2", f.r2},
                {"used_cells", f.used_cells}};
}

}  // namespace

std::pair<double, double> wilson_ci(long long hits, long long trials, double level) {
    if (trials <= 0) throw std::invalid_argument("wilson_ci: trials must be positive");
    if (hits < 0 || hits > trials) throw std::invalid_argument("wilson_ci: hits out of range");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("wilson_ci: level in (0,1)");
    double z = rng::normal_quantile(0.5 + level / 2);
    double n = static_cast<double>(trials);
    double p = static_cast<double>(hits) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2 * n)) / denom;
    double half = (z / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

TailEstimate make_tail_estimate(double threshold, long long hits, long long trials) {
    TailEstimate t;
    t.threshold = threshold;
    t.hits = hits;
    t.trials = trials;
    if (trials > 0) {
        t.p_hat = static_cast<double>(hits) / static_cast<double>(trials);
        std::tie(t.ci_lo, t.ci_hi) = wilson_ci(hits, trials);
    } else {
        t.p_hat = 0;
        t.ci_lo = 0;
        t.ci_hi = 1;
    }
    return t;
}

DecayFit fit_decay(const std::vector<std::pair<double, double>>& xy) {
    size_t n = xy.size();
    if (n < 2) throw std::invalid_argument("fit_decay: need at least two points");
    double sx = 0, sy = 0;
    for (auto [x, y] : xy) {
        sx += x;
        sy += y;
    }
    double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (auto [x, y] : xy) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx <= 0) throw std::invalid_argument("fit_decay: abscissae are all equal");
    DecayFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (auto [x, y] : xy) {
        double e = y - (f.intercept + f.slope * x);
        ss_res += e * e;
    }
    f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    f.used_cells = static_cast<int>(n);
    f.fitted = true;
    return f;
}

CutoffFn::CutoffFn(std::complex<double> c, double r) : center(c), radius(r) {
    if (!(r > 0)) throw std::invalid_argument("CutoffFn: radius must be positive");
    if (std::fabs(c.imag()) <= r)
        throw std::invalid_argument("CutoffFn: support must stay clear of the real axis");
}

double CutoffFn::operator()(std::complex<double> z) const {
    double u = std::norm(z - center) / (radius * radius);
    if (u >= 1.0) return 0.0;
    double v = 1.0 - u;
    return v * v * v;
}

double CutoffFn::laplacian(std::complex<double> z) const {
    double u = std::norm(z - center) / (radius * radius);
    if (u >= 1.0) return 0.0;
    return 12.0 / (radius * radius) * (1.0 - u) * (3.0 * u - 1.0);
}

MeanRootsResult run_mean_roots(int d, long long trials, std::uint64_t seed, int threads) {
    if (trials <= 0) throw std::invalid_argument("run_mean_roots: trials must be positive");
    auto w = ensemble::kostlan_weights(1, d);
    std::vector<int> counts(static_cast<size_t>(trials));
    parallel_for_indexed(trials, threads, [&](long long i) {
        auto s = ensemble::sample(1, d, seed, static_cast<std::uint64_t>(i));
        counts[static_cast<size_t>(i)] = roots::count_real_roots(ensemble::to_poly1(s, w));
    });
    MeanRootsResult r;
    r.d = d;
    r.trials = trials;
    double sum = 0;
    for (int c : counts) sum += c;
    r.mean = sum / static_cast<double>(trials);
    double ss = 0;
    for (int c : counts) ss += (c - r.mean) * (c - r.mean);
    r.std_err = trials > 1
                    ? std::sqrt(ss / static_cast<double>(trials - 1) / static_cast<double>(trials))
                    : 0.0;
    return r;
}

Tail1dResult run_tail_1d(int d, const std::vector<double>& eps, long long trials,
                         std::uint64_t seed, int threads) {
    if (trials <= 0) throw std::invalid_argument("run_tail_1d: trials must be positive");
    for (double e : eps)
        if (e < 0) throw std::invalid_argument("run_tail_1d: epsilon must be >= 0");
    auto w = ensemble::kostlan_weights(1, d);
    std::vector<int> counts(static_cast<size_t>(trials));
    parallel_for_indexed(trials, threads, [&](long long i) {
        auto s = ensemble::sample(1, d, seed, static_cast<std::uint64_t>(i));
        counts[static_cast<size_t>(i)] = roots::count_real_roots(ensemble::to_poly1(s, w));
    });

    Tail1dResult r;
    r.d = d;
    r.eps = eps;
    std::vector<std::pair<double, double>> fit_pts;
    for (double e : eps) {
        double thr = e * std::sqrt(static_cast<double>(d));
        long long hits = 0;
        for (int c : counts)
            if (c >= thr - 1e-9) ++hits;
        r.cells.push_back(make_tail_estimate(thr, hits, trials));
        if (hits >= 20)
            fit_pts.emplace_back(e * e, std::log(static_cast<double>(hits) /
                                                 static_cast<double>(trials)));
        else
            ++r.censored_cells;
    }
    bool distinct = false;
    for (size_t i = 1; i < fit_pts.size(); ++i)
        distinct = distinct || fit_pts[i].first != fit_pts[0].first;
    if (fit_pts.size() >= 2 && distinct) r.fit = fit_decay(fit_pts);
    return r;
}

Tail2dResult run_tail_2d(int d, const std::vector<forms::Rational>& a_values, long long trials,
                         std::uint64_t seed, const std::string& mode,
                         const topo::TopoOptions& topt, int threads, const topo::Box2* window) {
    if (trials <= 0) throw std::invalid_argument("run_tail_2d: trials must be positive");
    bool projective = mode == "projective";
    if (!projective && mode != "affine")
        throw std::invalid_argument("run_tail_2d: mode must be affine or projective");
    auto w = ensemble::kostlan_weights(2, d);
    topo::Box2 win = window ? *window : topo::Box2{{-8.0, 8.0}, {-8.0, 8.0}, 0};

    struct Cell {
        int b0 = 0;
        topo::Certification cert = topo::Certification::uncertified;
    };
    std::vector<Cell> res(static_cast<size_t>(trials));
    parallel_for_indexed(trials, threads, [&](long long i) {
        auto s = ensemble::sample(2, d, seed, static_cast<std::uint64_t>(i));
        auto p = ensemble::to_poly2(s, w);
        topo::TopoOptions t2 = topt;
        t2.seed = rng::counter_hash(seed, 0x70b0u, static_cast<std::uint64_t>(i));
        topo::TopologyResult tr =
            projective ? topo::b0_projective(p, t2) : topo::b0_affine(p, win, t2);
        res[static_cast<size_t>(i)] = {tr.b0, tr.certified};
    });

    Tail2dResult out;
    out.d = d;
    out.mode = projective ? "projective" : "affine";
    long long bound = forms::harnack_bound_plane(d);
    for (const Cell& c : res) {
        if (c.cert == topo::Certification::certified) {
            // the genus bound is a theorem for projective curves; a certified
            // violation means the certification itself is broken
            if (projective && c.b0 > bound)
                throw std::logic_error("run_tail_2d: certified component count exceeds the genus bound");
            ++out.histogram[c.b0];
            ++out.certified;
            out.max_b0 = std::max(out.max_b0, c.b0);
        } else {
            ++out.quarantined;
        }
    }
    for (const auto& a : a_values) {
        long long thr = forms::maximality_threshold(d, a);
        long long hits = 0;
        for (const auto& [b0, n] : out.histogram)
            if (b0 >= thr) hits += n;
        out.cells.push_back(make_tail_estimate(static_cast<double>(thr), hits, out.certified));
        out.a_values.push_back(a.str());
    }
    out.unreliable = out.quarantined * 5 > trials;
    return out;
}

double lelong_residual(const CPoly1& q, int d, const CutoffFn& f, const QuadOptions& qopt,
                       std::uint64_t jitter_key) {
    if (d < 1) throw std::invalid_argument("lelong_residual: degree must be >= 1");
    std::vector<cdouble> zs = roots::complex_roots(q);

    // jitter the whole grid off the section's zeros so the log singularities
    // never sit on a node; the offset depends only on (jitter_key, attempt)
    QuadGrid g;
    bool placed = false;
    for (std::uint64_t attempt = 0; attempt < 32 && !placed; ++attempt) {
        double ox = attempt == 0 ? 0.5 : rng::uniform01(jitter_key, 0x9d1edu, 2 * attempt);
        double oy = attempt == 0 ? 0.5 : rng::uniform01(jitter_key, 0x9d1edu, 2 * attempt + 1);
        g = make_grid(f, qopt.grid, ox, oy);
        placed = grid_clear_of(g, zs, qopt.grid, 1e-9);
    }
    if (!placed) throw std::runtime_error("lelong_residual: could not jitter grid off the roots");

    double term_roots = 0;
    for (const cdouble& z : zs) term_roots += f(z);
    term_roots /= d;

    double term_fs = 0;
    for (double w : g.fs_w) term_fs += w;

    double term_log = 0;
    for (size_t i = 0; i < g.nodes.size(); ++i)
        term_log += g.lap_w[i] * log_hd_norm_sq(q, d, g.nodes[i]);
    term_log /= 4.0 * std::numbers::pi * d;

    return std::fabs(term_roots - term_fs - term_log);
}

double lelong_residual(const ensemble::KostlanSample& s, const CutoffFn& f,
                       const QuadOptions& qopt) {
    if (s.n != 1) throw std::invalid_argument("lelong_residual: one-variable samples only");
    CPoly1 q = complexify(ensemble::to_poly1(s));
    return lelong_residual(q, s.d, f, qopt, rng::counter_hash(s.seed, 0x1e10u, s.index));
}

LargeDevResult run_large_deviation(int d, const CutoffFn& f, const std::vector<double>& eps,
                                   long long trials, std::uint64_t seed,
                                   const QuadOptions& qopt, int threads) {
    if (trials <= 0) throw std::invalid_argument("run_large_deviation: trials must be positive");
    QuadGrid g = make_grid(f, qopt.grid, 0.5, 0.5);
    auto w = ensemble::kostlan_weights(1, d);
    std::vector<double> ys(static_cast<size_t>(trials));
    parallel_for_indexed(trials, threads, [&](long long i) {
        auto s = ensemble::sample(1, d, seed, static_cast<std::uint64_t>(i));
        CPoly1 q = complexify(ensemble::to_poly1(s, w));
        double acc = 0;
        for (size_t k = 0; k < g.nodes.size(); ++k)
            acc += g.lap_w[k] * log_hd_norm_sq(q, d, g.nodes[k]);
        ys[static_cast<size_t>(i)] = std::fabs(acc) / (4.0 * std::numbers::pi * d);
    });
    LargeDevResult r;
    r.d = d;
    r.eps = eps;
    for (double e : eps) {
        long long hits = 0;
        for (double y : ys)
            if (y >= e) ++hits;
        r.cells.push_back(make_tail_estimate(e, hits, trials));
    }
    return r;
}

EquidistResult run_equidist(int d, long long trials, int bands, double exclusion,
                            std::uint64_t seed, int threads) {
    if (trials <= 0) throw std::invalid_argument("run_equidist: trials must be positive");
    if (bands < 2) throw std::invalid_argument("run_equidist: need at least two bands");
    if (!(exclusion >= 0.0 && exclusion < 1.0))
        throw std::invalid_argument("run_equidist: exclusion must lie in [0,1)");
    auto w = ensemble::kostlan_weights(1, d);
    std::vector<std::vector<double>> lat(static_cast<size_t>(trials));
    parallel_for_indexed(trials, threads, [&](long long i) {
        auto s = ensemble::sample(1, d, seed, static_cast<std::uint64_t>(i));
        Poly1 p = ensemble::to_poly1(s, w);
        auto zs = roots::complex_roots(p);
        roots::newton_polish(p, zs);
        auto& out = lat[static_cast<size_t>(i)];
        out.reserve(zs.size());
        // sin of the latitude on the round sphere; the real axis maps to the
        // equator and Fubini-Study-uniform points make it uniform on [-1,1]
        for (const cdouble& z : zs) out.push_back(2.0 * z.imag() / (1.0 + std::norm(z)));
    });

    EquidistResult r;
    r.d = d;
    r.trials = trials;
    r.bands = bands;
    r.exclusion = exclusion;
    r.band_counts.assign(static_cast<size_t>(bands), 0);
    long long upper = 0, lower = 0;
    double span = 2.0 * (1.0 - exclusion);
    for (const auto& ys : lat)
        for (double y : ys) {
            if (std::fabs(y) < exclusion) {
                ++r.excluded;
                continue;
            }
            (y > 0 ? upper : lower) += 1;
            double u = y < 0 ? y + 1.0 : y + 1.0 - 2.0 * exclusion;
            int band = static_cast<int>(u / span * bands);
            band = std::clamp(band, 0, bands - 1);
            ++r.band_counts[static_cast<size_t>(band)];
        }
    r.kept_total = upper + lower;
    if (r.kept_total > 0) {
        double expect = static_cast<double>(r.kept_total) / bands;
        for (long long c : r.band_counts) {
            double e = static_cast<double>(c) - expect;
            r.chi2 += e * e / expect;
        }
        boost::math::chi_squared dist(bands - 1);
        r.p_value = boost::math::cdf(boost::math::complement(dist, r.chi2));
        r.hemisphere_z = static_cast<double>(upper - lower) /
                         std::sqrt(static_cast<double>(r.kept_total));
    } else {
        r.p_value = 1.0;
    }
    return r;
}

json ExperimentConfig::to_json() const {
    json j;
    j["kind"] = kind;
    j["n"] = n;
    j["d_list"] = d_list;
    j["thresholds"] = thresholds;
    j["trials"] = trials;
    j["seed"] = seed;
    j["mode"] = mode;
    j["threads"] = threads;
    j["max_depth"] = max_depth;
    j["window"] = window;
    j["grid"] = grid;
    j["cutoff_center_re"] = cutoff_center_re;
    j["cutoff_center_im"] = cutoff_center_im;
    j["cutoff_radius"] = cutoff_radius;
    j["bands"] = bands;
    j["exclusion"] = exclusion;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.kind = j.value("kind", std::string{});
    c.n = j.value("n", 1);
    c.d_list = j.value("d_list", std::vector<int>{});
    c.thresholds = j.value("thresholds", std::vector<std::string>{});
    c.trials = j.value("trials", 0LL);
    c.seed = j.value("seed", std::uint64_t{0});
    c.mode = j.value("mode", std::string{"projective"});
    c.threads = j.value("threads", 1);
    c.max_depth = j.value("max_depth", 12);
    c.window = j.value("window", std::vector<double>{-8, 8, -8, 8});
    c.grid = j.value("grid", 400);
    c.cutoff_center_re = j.value("cutoff_center_re", 0.0);
    c.cutoff_center_im = j.value("cutoff_center_im", 1.0);
    c.cutoff_radius = j.value("cutoff_radius", 0.5);
    c.bands = j.value("bands", 10);
    c.exclusion = j.value("exclusion", 0.2);
    return c;
}

json ExperimentRecord::to_json() const {
    json j;
    j["version"] = version;
    j["config"] = config.to_json();
    j["payload"] = payload;
    j["meta"] = {{"wall_ms", wall_ms}};
    return j;
}

std::string ExperimentRecord::to_csv() const {
    std::string out = "d,threshold,hits,trials,p_hat,ci_lo,ci_hi\n";
    if (!payload.contains("experiments")) return out;
    for (const auto& exp : payload["experiments"]) {
        if (!exp.contains("cells")) continue;
        for (const auto& cell : exp["cells"]) {
            out += exp["d"].dump();
            out += ',';
            out += cell["threshold"].dump();
            out += ',';
            out += cell["hits"].dump();
            out += ',';
            out += cell["trials"].dump();
            out += ',';
            out += cell["p_hat"].dump();
            out += ',';
            out += cell["ci_lo"].dump();
            out += ',';
            out += cell["ci_hi"].dump();
            out += '\n';
        }
    }
    return out;
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentRecord rec;
    rec.config = cfg;
    rec.version = kVersion;
    if (cfg.d_list.empty()) throw std::invalid_argument("run_experiment: d_list is empty");

    json exps = json::array();
    if (cfg.kind == "mean_roots") {
        for (int d : cfg.d_list) {
            auto r = run_mean_roots(d, cfg.trials, cfg.seed, cfg.threads);
            exps.push_back(json{{"d", r.d},
                                {"trials", r.trials},
                                {"mean", r.mean},
                                {"std_err", r.std_err},
                                {"sqrt_d", std::sqrt(static_cast<double>(d))}});
        }
    } else if (cfg.kind == "tail1d") {
        std::vector<double> eps;
        for (const auto& t : cfg.thresholds) eps.push_back(forms::Rational::parse(t).value());
        for (int d : cfg.d_list) {
            auto r = run_tail_1d(d, eps, cfg.trials, cfg.seed, cfg.threads);
            json cells = json::array();
            for (size_t i = 0; i < r.cells.size(); ++i) {
                json c = tail_estimate_json(r.cells[i]);
                c["eps"] = r.eps[i];
                cells.push_back(c);
            }
            exps.push_back(json{{"d", r.d},
                                {"cells", cells},
                                {"fit", decay_fit_json(r.fit)},
                                {"censored_cells", r.censored_cells}});
        }
    } else if (cfg.kind == "tail2d") {
        std::vector<forms::Rational> av;
        for (const auto& t : cfg.thresholds) av.push_back(forms::Rational::parse(t));
        if (cfg.window.size() != 4)
            throw std::invalid_argument("run_experiment: window needs 4 entries");
        topo::Box2 win{{cfg.window[0], cfg.window[1]}, {cfg.window[2], cfg.window[3]}, 0};
        topo::TopoOptions topt;
        topt.max_depth = cfg.max_depth;
        for (int d : cfg.d_list) {
            auto r = run_tail_2d(d, av, cfg.trials, cfg.seed, cfg.mode, topt, cfg.threads,
                                 cfg.mode == "affine" ? &win : nullptr);
            json hist = json::object();
            for (const auto& [b0, n] : r.histogram) hist[std::to_string(b0)] = n;
            json cells = json::array();
            for (size_t i = 0; i < r.cells.size(); ++i) {
                json c = tail_estimate_json(r.cells[i]);
                c["a"] = r.a_values[i];
                cells.push_back(c);
            }
            exps.push_back(json{{"d", d},
                                {"mode", r.mode},
                                {"histogram", hist},
                                {"cells", cells},
                                {"certified", r.certified},
                                {"quarantined", r.quarantined},
                                {"max_b0", r.max_b0},
                                {"harnack_bound", forms::harnack_bound_plane(d)},
                                {"unreliable", r.unreliable}});
        }
    } else if (cfg.kind == "lelong") {
        CutoffFn f({cfg.cutoff_center_re, cfg.cutoff_center_im}, cfg.cutoff_radius);
        QuadOptions qopt;
        qopt.grid = cfg.grid;
        for (int d : cfg.d_list) {
            std::vector<double> res(static_cast<size_t>(cfg.trials));
            parallel_for_indexed(cfg.trials, cfg.threads, [&](long long i) {
                auto s = ensemble::sample(1, d, cfg.seed, static_cast<std::uint64_t>(i));
                res[static_cast<size_t>(i)] = lelong_residual(s, f, qopt);
            });
            std::vector<double> sorted = res;
            std::sort(sorted.begin(), sorted.end());
            double median = cfg.trials > 0 ? sorted[static_cast<size_t>(cfg.trials / 2)] : 0.0;
            exps.push_back(json{{"d", d},
                                {"trials", cfg.trials},
                                {"residuals", res},
                                {"max", sorted.empty() ? 0.0 : sorted.back()},
                                {"median", median}});
        }
    } else if (cfg.kind == "large_dev") {
        CutoffFn f({cfg.cutoff_center_re, cfg.cutoff_center_im}, cfg.cutoff_radius);
        QuadOptions qopt;
        qopt.grid = cfg.grid;
        std::vector<double> eps;
        for (const auto& t : cfg.thresholds) eps.push_back(forms::Rational::parse(t).value());
        for (int d : cfg.d_list) {
            auto r = run_large_deviation(d, f, eps, cfg.trials, cfg.seed, qopt, cfg.threads);
            json cells = json::array();
            for (const auto& c : r.cells) cells.push_back(tail_estimate_json(c));
            exps.push_back(json{{"d", r.d}, {"cells", cells}});
        }
    } else if (cfg.kind == "equidist") {
        for (int d : cfg.d_list) {
            auto r = run_equidist(d, cfg.trials, cfg.bands, cfg.exclusion, cfg.seed, cfg.threads);
            exps.push_back(json{{"d", r.d},
                                {"trials", r.trials},
                                {"bands", r.bands},
                                {"exclusion", r.exclusion},
                                {"band_counts", r.band_counts},
                                {"kept_total", r.kept_total},
                                {"excluded", r.excluded},
                                {"chi2", r.chi2},
                                {"p_value", r.p_value},
                                {"hemisphere_z", r.hemisphere_z}});
        }
    } else {
        throw std::invalid_argument("run_experiment: unknown kind '" + cfg.kind + "'");
    }

    rec.payload = json{{"kind", cfg.kind}, {"experiments", exps}};
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return rec;
}

}  // namespace klab::lab
