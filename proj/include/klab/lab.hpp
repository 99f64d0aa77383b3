#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "klab/ensemble.hpp"
#include "klab/forms.hpp"
#include "klab/poly.hpp"
#include "klab/topo.hpp"

// Experiment engine: Monte Carlo estimates of the rarefaction tails, the
// Lelong residual check, large-deviation functionals and root
// equidistribution.  Every run is a pure function of (config, seed); samples
// are scheduled by index and reduced in index order, so results are
// byte-identical for any thread count.

namespace klab::lab {

using json = nlohmann::ordered_json;

struct TailEstimate {
    double threshold = 0;
    long long hits = 0;
    long long trials = 0;
    double p_hat = 0;
    double ci_lo = 0;
    double ci_hi = 0;
};

// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_ci(long long hits, long long trials, double level = 0.95);

TailEstimate make_tail_estimate(double threshold, long long hits, long long trials);

struct DecayFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
    int used_cells = 0;
    bool fitted = false;
};

// OLS of y against x.  Throws std::invalid_argument when x is degenerate.
DecayFit fit_decay(const std::vector<std::pair<double, double>>& xy);

// C^2 radial bump (1 - t^2)^3 supported on |z - center| <= radius; the
// support must stay clear of the real axis.
struct CutoffFn {
    std::complex<double> center{0.0, 1.0};
    double radius = 0.5;

    CutoffFn() = default;
    CutoffFn(std::complex<double> c, double r);
    double operator()(std::complex<double> z) const;
    double laplacian(std::complex<double> z) const;    // closed form
};

struct QuadOptions {
    int grid = 400;    // tensor midpoint nodes per side over the support square
};

struct MeanRootsResult {
    int d = 0;
    long long trials = 0;
    double mean = 0;
    double std_err = 0;
};

MeanRootsResult run_mean_roots(int d, long long trials, std::uint64_t seed, int threads = 1);

struct Tail1dResult {
    int d = 0;
    std::vector<TailEstimate> cells;    // one per epsilon, threshold = eps*sqrt(d)
    std::vector<double> eps;
    DecayFit fit;                       // log p_hat against eps^2, cells with >= 20 hits
    int censored_cells = 0;
};

Tail1dResult run_tail_1d(int d, const std::vector<double>& eps, long long trials,
                         std::uint64_t seed, int threads = 1);

struct Tail2dResult {
    int d = 0;
    std::string mode;                       // "affine" or "projective"
    std::map<int, long long> histogram;     // b0 -> count, certified samples only
    std::vector<TailEstimate> cells;        // per a-value, threshold from maximality_threshold
    std::vector<std::string> a_values;
    long long quarantined = 0;              // uncertified or singular-suspect samples
    long long certified = 0;
    int max_b0 = 0;
    bool unreliable = false;                // quarantine fraction above 20%
};

Tail2dResult run_tail_2d(int d, const std::vector<forms::Rational>& a_values,
                         long long trials, std::uint64_t seed, const std::string& mode,
                         const topo::TopoOptions& topt = {}, int threads = 1,
                         const topo::Box2* window = nullptr);

// |(1/d) sum_roots f  -  integral f w_FS  -  (1/(4 pi d)) integral log||s||^2 Lap f|
// which is exactly zero for the true current equation; the return value is
// pure quadrature and root-finding error.
double lelong_residual(const poly::CPoly1& q, int d, const CutoffFn& f,
                       const QuadOptions& qopt = {}, std::uint64_t jitter_key = 0);
double lelong_residual(const ensemble::KostlanSample& s, const CutoffFn& f,
                       const QuadOptions& qopt = {});

struct LargeDevResult {
    int d = 0;
    std::vector<TailEstimate> cells;    // per epsilon, P[Y >= eps]
    std::vector<double> eps;
};

// Y = (1/(4 pi d)) | integral log||sigma||^2 Lap f |
LargeDevResult run_large_deviation(int d, const CutoffFn& f, const std::vector<double>& eps,
                                   long long trials, std::uint64_t seed,
                                   const QuadOptions& qopt = {}, int threads = 1);

struct EquidistResult {
    int d = 0;
    long long trials = 0;
    int bands = 0;
    double exclusion = 0;
    std::vector<long long> band_counts;    // equal-width sin-latitude bands
    long long kept_total = 0;
    long long excluded = 0;
    double chi2 = 0;
    double p_value = 0;
    double hemisphere_z = 0;               // (upper - lower) / sqrt(total)
};

// Pools complex roots of `trials` samples, maps them to the round sphere
// (real axis -> equator), drops |sin latitude| < exclusion and chi-square
// tests the band counts against the uniform prediction.
EquidistResult run_equidist(int d, long long trials, int bands, double exclusion,
                            std::uint64_t seed, int threads = 1);

struct ExperimentConfig {
    std::string kind;                       // mean_roots tail1d tail2d lelong large_dev equidist
    int n = 1;
    std::vector<int> d_list;
    std::vector<std::string> thresholds;    // eps values or rational a values
    long long trials = 0;
    std::uint64_t seed = 0;
    std::string mode = "projective";
    int threads = 1;
    // topology options
    int max_depth = 12;
    std::vector<double> window = {-8, 8, -8, 8};
    // quadrature options
    int grid = 400;
    double cutoff_center_re = 0;
    double cutoff_center_im = 1;
    double cutoff_radius = 0.5;
    int bands = 10;
    double exclusion = 0.2;

    json to_json() const;
    static ExperimentConfig from_json(const json& j);
};

struct ExperimentRecord {
    ExperimentConfig config;
    json payload;          // deterministic: identical for identical config
    double wall_ms = 0;    // meta, excluded from the determinism contract
    std::string version;

    json to_json() const;
    std::string payload_string() const { return payload.dump(); }
    // One row per cell: d,threshold,hits,trials,p_hat,ci_lo,ci_hi
    std::string to_csv() const;
};

ExperimentRecord run_experiment(const ExperimentConfig& cfg);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace klab::lab
