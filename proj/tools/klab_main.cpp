// Command-line front door.  Subcommands mirror the experiment kinds 1:1 plus
// direct access to sampling, root finding, curve topology and the closed
// forms.  Every command that touches randomness requires --seed; outputs are
// written atomically (temp file + rename).  Exit codes: 0 ok, 2 config
// error, 3 numerical failure.  Errors go to stderr as "E:<code>:<message>".

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "klab/ensemble.hpp"
#include "klab/forms.hpp"
#include "klab/lab.hpp"
#include "klab/poly.hpp"
#include "klab/roots.hpp"
#include "klab/rng.hpp"
#include "klab/topo.hpp"

namespace {

using json = nlohmann::ordered_json;

struct CfgError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f << content;
        f.flush();
        if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content << "\n";
    else
        write_atomic(out_path, content + "\n");
}

std::string format_value(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CfgError("cannot read config file " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw CfgError("config file " + path + " is not valid JSON: " + e.what());
    }
    return j;
}

// Shared flag block for the experiment subcommands; option pointers are kept
// so a config file can supply defaults that explicit flags override.
struct ExpCmd {
    std::string kind;
    std::string config_path, out, csv_out;
    bool dump = false;
    std::vector<int> d;
    std::vector<std::string> thresholds;
    long long trials = 1000;
    std::uint64_t seed = 0;
    std::string mode = "projective";
    int threads = 1;
    int max_depth = 12;
    std::vector<double> window{-8, 8, -8, 8};
    int grid = 400;
    double cutoff_re = 0, cutoff_im = 1, cutoff_radius = 0.5;
    int bands = 10;
    double exclusion = 0.2;

    CLI::Option* o_d = nullptr;
    CLI::Option* o_thr = nullptr;
    CLI::Option* o_trials = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_mode = nullptr;
    CLI::Option* o_threads = nullptr;
    CLI::Option* o_depth = nullptr;
    CLI::Option* o_window = nullptr;
    CLI::Option* o_grid = nullptr;
    CLI::Option* o_cre = nullptr;
    CLI::Option* o_cim = nullptr;
    CLI::Option* o_rad = nullptr;
    CLI::Option* o_bands = nullptr;
    CLI::Option* o_excl = nullptr;

    void run() const {
        klab::lab::ExperimentConfig cfg;
        bool seed_in_file = false;
        if (!config_path.empty()) {
            json j = read_json_file(config_path);
            cfg = klab::lab::ExperimentConfig::from_json(j);
            seed_in_file = j.contains("seed");
        }
        cfg.kind = kind;
        if (o_d->count()) cfg.d_list = d;
        if (o_thr && o_thr->count()) cfg.thresholds = thresholds;
        if (o_trials->count()) cfg.trials = trials;
        if (o_seed->count()) cfg.seed = seed;
        if (o_mode && o_mode->count()) cfg.mode = mode;
        if (o_threads->count()) cfg.threads = threads;
        if (o_depth && o_depth->count()) cfg.max_depth = max_depth;
        if (o_window && o_window->count()) cfg.window = window;
        if (o_grid && o_grid->count()) cfg.grid = grid;
        if (o_cre && o_cre->count()) cfg.cutoff_center_re = cutoff_re;
        if (o_cim && o_cim->count()) cfg.cutoff_center_im = cutoff_im;
        if (o_rad && o_rad->count()) cfg.cutoff_radius = cutoff_radius;
        if (o_bands && o_bands->count()) cfg.bands = bands;
        if (o_excl && o_excl->count()) cfg.exclusion = exclusion;
        if (!o_seed->count() && !seed_in_file)
            throw CfgError("--seed is required (or a config file that carries one)");

        if (dump) {
            emit(out, cfg.to_json().dump(2));
            return;
        }
        auto rec = klab::lab::run_experiment(cfg);
        emit(out, rec.to_json().dump(2));
        if (!csv_out.empty()) write_atomic(csv_out, rec.to_csv());
    }
};

ExpCmd* add_experiment(CLI::App& app, const std::string& name, const std::string& kind,
                       const std::string& desc,
                       std::vector<std::unique_ptr<ExpCmd>>& store) {
    store.push_back(std::make_unique<ExpCmd>());
    ExpCmd* e = store.back().get();
    e->kind = kind;
    CLI::App* c = app.add_subcommand(name, desc);
    c->add_option("--config", e->config_path, "Config JSON supplying defaults for all flags");
    c->add_option("--out", e->out, "Write the record here (atomic); stdout if absent");
    c->add_option("--csv-out", e->csv_out, "Also write the per-cell CSV here");
    c->add_flag("--dump-config", e->dump, "Print the effective config and exit");
    e->o_d = c->add_option("--d", e->d, "Degree list")->delimiter(',');
    e->o_trials = c->add_option("--trials", e->trials, "Samples per degree");
    e->o_seed = c->add_option("--seed", e->seed, "Master seed (required)");
    e->o_threads = c->add_option("--threads", e->threads, "Worker threads");
    if (kind == "tail1d" || kind == "large_dev")
        e->o_thr = c->add_option("--eps", e->thresholds, "Threshold list")->delimiter(',');
    if (kind == "tail2d") {
        e->o_thr = c->add_option("--a", e->thresholds,
                                 "Maximality margins, rationals like 1 or 1/2")
                       ->delimiter(',');
        e->o_mode = c->add_option("--mode", e->mode, "affine or projective");
        e->o_depth = c->add_option("--max-depth", e->max_depth, "Subdivision depth cap");
        e->o_window = c->add_option("--window", e->window, "Affine window x0,x1,y0,y1")
                          ->delimiter(',')
                          ->expected(4);
    }
    if (kind == "lelong" || kind == "large_dev") {
        e->o_grid = c->add_option("--grid", e->grid, "Quadrature nodes per side");
        e->o_cre = c->add_option("--cutoff-center-re", e->cutoff_re, "Cutoff center, real part");
        e->o_cim = c->add_option("--cutoff-center-im", e->cutoff_im, "Cutoff center, imag part");
        e->o_rad = c->add_option("--cutoff-radius", e->cutoff_radius, "Cutoff support radius");
    }
    if (kind == "equidist") {
        e->o_bands = c->add_option("--bands", e->bands, "Latitude band count");
        e->o_excl = c->add_option("--exclusion", e->exclusion, "Equatorial half-width dropped");
    }
    c->callback([e] { e->run(); });
    return e;
}

std::vector<klab::poly::cdouble> parse_point(const std::vector<double>& flat,
                                             const char* flag) {
    if (flat.size() < 4 || flat.size() % 2 != 0)
        throw CfgError(std::string(flag) + " wants re,im pairs, at least two coordinates");
    std::vector<klab::poly::cdouble> z;
    for (size_t i = 0; i < flat.size(); i += 2) z.emplace_back(flat[i], flat[i + 1]);
    return z;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random real algebraic geometry laboratory: Kostlan sampling, certified "
                 "root and component counts, closed forms, rarefaction experiments"};
    app.name("klab");    // keep usage lines independent of the invocation path
    app.require_subcommand(1);
    std::vector<std::unique_ptr<ExpCmd>> experiments;

    // sample -----------------------------------------------------------
    struct {
        int n = 1, d = 1;
        long long count = 1;
        std::uint64_t index = 0, seed = 0;
        std::string out;
        CLI::Option* o_seed = nullptr;
    } smp;
    {
        CLI::App* c = app.add_subcommand("sample", "Draw Kostlan samples, one JSON per line");
        c->add_option("--n", smp.n, "Variables (1 or 2)");
        c->add_option("--d", smp.d, "Degree");
        c->add_option("--count", smp.count, "How many consecutive sample indices");
        c->add_option("--index", smp.index, "First sample index");
        smp.o_seed = c->add_option("--seed", smp.seed, "Master seed (required)");
        c->add_option("--out", smp.out, "Output path; stdout if absent");
        c->callback([&] {
            if (!smp.o_seed->count()) throw CfgError("--seed is required");
            if (smp.count < 1) throw CfgError("--count must be >= 1");
            std::string lines;
            for (long long i = 0; i < smp.count; ++i)
                lines += klab::ensemble::to_jsonl(klab::ensemble::sample(
                             smp.n, smp.d, smp.seed, smp.index + static_cast<std::uint64_t>(i))) +
                         "\n";
            if (smp.out.empty())
                std::cout << lines;
            else
                write_atomic(smp.out, lines);
        });
    }

    // roots ------------------------------------------------------------
    struct {
        std::vector<double> coeffs;
        int d = 0;
        std::uint64_t index = 0, seed = 0;
        bool complex_too = false;
        std::string out;
        CLI::Option *o_seed = nullptr, *o_coeffs = nullptr, *o_d = nullptr;
    } rt;
    {
        CLI::App* c = app.add_subcommand(
            "roots", "Count and isolate real roots (optionally all complex roots)");
        rt.o_coeffs = c->add_option("--coeffs", rt.coeffs,
                                    "Monomial coefficients c0,c1,... (low degree first)")
                          ->delimiter(',');
        rt.o_d = c->add_option("--d", rt.d, "Draw a Kostlan sample of this degree instead");
        c->add_option("--index", rt.index, "Sample index when drawing");
        rt.o_seed = c->add_option("--seed", rt.seed, "Master seed (required)");
        c->add_flag("--complex", rt.complex_too, "Also run the simultaneous complex solver");
        c->add_option("--out", rt.out, "Output path; stdout if absent");
        c->callback([&] {
            if (!rt.o_seed->count()) throw CfgError("--seed is required");
            // count() tallies parsed values, not occurrences, for list options
            if ((rt.o_coeffs->count() > 0) == (rt.o_d->count() > 0))
                throw CfgError("pass exactly one of --coeffs and --d");
            klab::poly::Poly1 p = rt.o_coeffs->count()
                                      ? klab::poly::Poly1(rt.coeffs)
                                      : klab::ensemble::to_poly1(klab::ensemble::sample(
                                            1, rt.d, rt.seed, rt.index));
            json j;
            j["degree"] = p.d;
            j["effective_degree"] = p.effective_degree();
            j["real_root_count"] = klab::roots::count_real_roots(p);
            j["brackets"] = json::array();
            for (const auto& b : klab::roots::isolate_real_roots(p))
                j["brackets"].push_back(
                    {{"lo", b.lo}, {"hi", b.hi}, {"multiple", b.multiple}});
            if (rt.complex_too) {
                auto zs = klab::roots::complex_roots(p);
                klab::roots::newton_polish(p, zs);
                j["complex_roots"] = json::array();
                for (auto z : zs) j["complex_roots"].push_back({z.real(), z.imag()});
            }
            emit(rt.out, j.dump(2));
        });
    }

    // curve-topo ---------------------------------------------------------
    struct {
        std::vector<double> coeffs;
        int d = 0;
        std::uint64_t index = 0, seed = 0;
        std::string mode = "affine", out;
        std::vector<double> window{-8, 8, -8, 8};
        int max_depth = 12;
        bool arc_graph = false;
        CLI::Option *o_seed = nullptr, *o_coeffs = nullptr, *o_d = nullptr;
    } ct;
    {
        CLI::App* c = app.add_subcommand(
            "curve-topo", "Certified connected-component count of a plane curve");
        ct.o_coeffs = c->add_option("--coeffs", ct.coeffs,
                                    "Triangular coefficients, exponent-lex (j,k) order")
                          ->delimiter(',');
        ct.o_d = c->add_option("--d", ct.d, "Draw a two-variable Kostlan sample instead");
        c->add_option("--index", ct.index, "Sample index when drawing");
        ct.o_seed = c->add_option("--seed", ct.seed, "Master seed (required)");
        c->add_option("--mode", ct.mode, "affine or projective");
        c->add_option("--window", ct.window, "Affine window x0,x1,y0,y1")
            ->delimiter(',')
            ->expected(4);
        c->add_option("--max-depth", ct.max_depth, "Subdivision depth cap");
        c->add_flag("--arc-graph", ct.arc_graph, "Include the certified arc graph");
        c->add_option("--out", ct.out, "Output path; stdout if absent");
        c->callback([&] {
            if (!ct.o_seed->count()) throw CfgError("--seed is required");
            if ((ct.o_coeffs->count() > 0) == (ct.o_d->count() > 0))
                throw CfgError("pass exactly one of --coeffs and --d");
            klab::poly::Poly2 p;
            if (ct.o_coeffs->count()) {
                size_t m = ct.coeffs.size();
                int deg = static_cast<int>(std::lround((std::sqrt(8.0 * m + 1.0) - 3.0) / 2.0));
                if (deg < 1 || klab::poly::Poly2::size(deg) != m)
                    throw CfgError("--coeffs length must be a triangular number (d+1)(d+2)/2");
                p = klab::poly::Poly2(deg, ct.coeffs);
            } else {
                p = klab::ensemble::to_poly2(klab::ensemble::sample(2, ct.d, ct.seed, ct.index));
            }
            klab::topo::TopoOptions opt;
            opt.max_depth = ct.max_depth;
            opt.seed = klab::rng::counter_hash(ct.seed, 0x70b0u, ct.index);
            opt.keep_arc_graph = ct.arc_graph;
            klab::topo::TopologyResult r;
            if (ct.mode == "projective") {
                r = klab::topo::b0_projective(p, opt);
            } else if (ct.mode == "affine") {
                klab::topo::Box2 win{{ct.window[0], ct.window[1]},
                                     {ct.window[2], ct.window[3]},
                                     0};
                r = klab::topo::b0_affine(p, win, opt);
            } else {
                throw CfgError("--mode must be affine or projective");
            }
            emit(ct.out, r.to_json(ct.arc_graph));
        });
    }

    // experiments --------------------------------------------------------
    add_experiment(app, "mean-roots", "mean_roots",
                   "Mean real-root count against the square-root law", experiments);
    add_experiment(app, "tail1d", "tail1d",
                   "Tail of the real-root count over eps*sqrt(d) thresholds", experiments);
    add_experiment(app, "tail2d", "tail2d",
                   "Component-count histogram and maximality tails for plane curves",
                   experiments);
    add_experiment(app, "lelong", "lelong",
                   "Residual of the current identity on random samples", experiments);
    add_experiment(app, "large-dev", "large_dev",
                   "Tail of the log-norm large-deviation functional", experiments);
    add_experiment(app, "equidist", "equidist",
                   "Chi-square test of root equidistribution on the sphere", experiments);

    // closed-form --------------------------------------------------------
    {
        CLI::App* cf = app.add_subcommand("closed-form",
                                          "Evaluate the closed-form quantities and bounds");
        cf->require_subcommand(1);
        struct {
            int m = 1, k = 1;
            double tau = 0;
            std::string out;
        } mb;
        {
            CLI::App* c = cf->add_subcommand("moment-bound",
                                             "4 m! (k+1) / (1 - tau), the moment bound");
            c->add_option("--m", mb.m, "Moment order");
            c->add_option("--k", mb.k, "Ambient dimension");
            c->add_option("--tau", mb.tau, "Quadric-section norm in [0,1)");
            c->add_option("--out", mb.out, "Output path; stdout if absent");
            c->callback([&] { emit(mb.out, format_value(klab::forms::moment_bound(mb.m, mb.k, mb.tau))); });
        }
        struct {
            int k = 1;
            double tau = 0;
            std::string out;
        } el;
        {
            CLI::App* c = cf->add_subcommand("expected-log-norm",
                                             "Expected log squared norm of a unit Gaussian section");
            c->add_option("--k", el.k, "Ambient dimension");
            c->add_option("--tau", el.tau, "Quadric-section norm in [0,1]");
            c->add_option("--out", el.out, "Output path; stdout if absent");
            c->callback(
                [&] { emit(el.out, format_value(klab::forms::expected_log_norm(el.k, el.tau))); });
        }
        struct {
            std::string geometry = "projective";
            std::vector<double> point, point2;
            int d = 1, a = 1, b = 1;
            std::string out;
        } tp;
        {
            CLI::App* c = cf->add_subcommand("tau-phi",
                                             "Norm of the embedded quadric power at a point");
            c->add_option("--geometry", tp.geometry, "projective, ellipsoid or hyperboloid");
            c->add_option("--point", tp.point, "Coordinates as re,im pairs")->delimiter(',');
            c->add_option("--point2", tp.point2, "Second factor point (hyperboloid)")
                ->delimiter(',');
            c->add_option("--d", tp.d, "Power of the embedding");
            c->add_option("--a", tp.a, "First bidegree (hyperboloid)");
            c->add_option("--b", tp.b, "Second bidegree (hyperboloid)");
            c->add_option("--out", tp.out, "Output path; stdout if absent");
            c->callback([&] {
                klab::forms::GeometryTag g;
                g.a = tp.a;
                g.b = tp.b;
                double v = 0;
                if (tp.geometry == "projective")
                    g.kind = klab::forms::GeometryTag::projective_space;
                else if (tp.geometry == "ellipsoid")
                    g.kind = klab::forms::GeometryTag::ellipsoid;
                else if (tp.geometry == "hyperboloid")
                    g.kind = klab::forms::GeometryTag::hyperboloid;
                else
                    throw CfgError("--geometry must be projective, ellipsoid or hyperboloid");
                klab::poly::ProjPoint p1(parse_point(tp.point, "--point"));
                // a quadric of dimension n sits in an ambient space one larger
                g.n = static_cast<int>(p1.z.size()) -
                      (g.kind == klab::forms::GeometryTag::ellipsoid ? 2 : 1);
                if (g.kind == klab::forms::GeometryTag::hyperboloid) {
                    if (tp.point2.empty()) throw CfgError("hyperboloid needs --point2");
                    klab::poly::ProjPoint p2(parse_point(tp.point2, "--point2"));
                    v = klab::forms::tau_phi_norm(g, p1, p2, tp.d);
                } else {
                    v = klab::forms::tau_phi_norm(g, p1, tp.d);
                }
                emit(tp.out, format_value(v));
            });
        }
        struct {
            long long d = 1;
            std::string a = "1", out;
            bool threshold = false;
        } gh;
        {
            CLI::App* c = cf->add_subcommand("genus", "Plane-curve genus (d-1)(d-2)/2");
            c->add_option("--d", gh.d, "Curve degree");
            c->add_option("--out", gh.out, "Output path; stdout if absent");
            c->callback([&] {
                emit(gh.out, std::to_string(klab::forms::genus_plane_curve(gh.d)));
            });
        }
        {
            CLI::App* c = cf->add_subcommand("harnack", "Component bound genus + 1");
            c->add_option("--d", gh.d, "Curve degree");
            c->add_option("--out", gh.out, "Output path; stdout if absent");
            c->callback([&] {
                emit(gh.out, std::to_string(klab::forms::harnack_bound_plane(gh.d)));
            });
        }
        {
            CLI::App* c = cf->add_subcommand(
                "threshold", "Component count entering the a-maximal tail set");
            c->add_option("--d", gh.d, "Curve degree");
            c->add_option("--a", gh.a, "Margin, a rational like 1 or 1/2");
            c->add_option("--out", gh.out, "Output path; stdout if absent");
            c->callback([&] {
                emit(gh.out, std::to_string(klab::forms::maximality_threshold(
                                 gh.d, klab::forms::Rational::parse(gh.a))));
            });
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "E:2:" << e.get_name() << ": " << e.what() << "\n";
        return 2;
    } catch (const CfgError& e) {
        std::cerr << "E:2:" << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "E:2:" << e.what() << "\n";
        return 2;
    } catch (const klab::roots::RootsError& e) {
        std::cerr << "E:3:" << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "E:3:" << e.what() << "\n";
        return 3;
    }

    return 0;
}
