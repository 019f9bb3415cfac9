// Acceptance suite: ten end-to-end properties, one PASS/FAIL line each.
// Every criterion is self-contained (seeded data, fit, verdict) and checks
// the stationary-point equality, the certification prover, or the numeric
// kernels against independent oracles. Exit status is 0 iff all ten pass.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "elbosum/cli.hpp"
#include "elbosum/criterion.hpp"
#include "elbosum/decompose.hpp"
#include "elbosum/efcore.hpp"
#include "elbosum/inference.hpp"
#include "elbosum/models.hpp"
#include "elbosum/numerics.hpp"
#include "elbosum/rng.hpp"
#include "elbosum/serialize.hpp"

using namespace elbosum;
using models::ComponentFamily;
using models::EfMixtureModel;
using models::LinearGaussianModel;
using models::ModelSpec;
using models::NoiseKind;
using models::SbnModel;

namespace {

struct Recorder {
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void require_le(double value, double bound, const std::string& what) {
        if (!(value <= bound)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, ": %.3e exceeds %.1e", value, bound);
            failures.push_back(what + buf);
        }
    }
};

// ---------------------------------------------------------------------------
// Ground-truth models. Fixed literals where the generative structure matters
// (separated mixture components), seeded draws for loadings and offsets.

EfMixtureModel gmm_truth() {
    EfMixtureModel m;
    m.C = 3;
    m.D = 2;
    m.component_family = ComponentFamily::GaussianDiagonal;
    m.pi = {0.5, 0.3, 0.2};
    m.components = {{-4.0, -3.0, 0.6, 0.9}, {0.0, 1.0, 1.1, 0.5}, {4.5, -2.0, 0.8, 1.4}};
    return m;
}

SbnModel sbn_truth() {
    SbnModel m;
    m.H = 3;
    m.D = 8;
    m.pi = {0.35, 0.6, 0.5};
    m.W = numerics::Matrix(8, 3);
    m.mu.resize(8);
    std::mt19937_64 gen = rng::stream(17, 0);
    std::normal_distribution<double> loading(0.0, 1.5);
    std::normal_distribution<double> offset(0.0, 0.5);
    for (double& w : m.W.data()) w = loading(gen);
    for (double& b : m.mu) b = offset(gen);
    return m;
}

LinearGaussianModel lg_truth(std::size_t h, std::size_t d, NoiseKind kind,
                             std::vector<double> noise, std::uint64_t seed) {
    LinearGaussianModel m;
    m.H = h;
    m.D = d;
    m.prior_mean.assign(h, 0.0);
    m.prior_var.assign(h, 1.0);
    m.trainable_prior = false;
    m.W = numerics::Matrix(d, h);
    m.mu.resize(d);
    m.noise_kind = kind;
    m.noise_var = std::move(noise);
    std::mt19937_64 gen = rng::stream(seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& w : m.W.data()) w = normal(gen);
    for (double& b : m.mu) b = normal(gen);
    return m;
}

LinearGaussianModel ppca_truth() { return lg_truth(2, 8, NoiseKind::Scalar, {0.5}, 18); }

LinearGaussianModel fa_truth() {
    return lg_truth(2, 6, NoiseKind::Diagonal, {0.4, 0.9, 0.6, 1.3, 0.5, 0.8}, 19);
}

EfMixtureModel gamma_truth() {
    EfMixtureModel m;
    m.C = 2;
    m.D = 1;
    m.component_family = ComponentFamily::Gamma;
    m.pi = {0.4, 0.6};
    m.components = {{2.0, 2.0}, {12.0, 2.0}};  // means 1 and 6
    return m;
}

EfMixtureModel poisson_truth() {
    EfMixtureModel m;
    m.C = 3;
    m.D = 4;
    m.component_family = ComponentFamily::PoissonProduct;
    m.pi = {0.3, 0.4, 0.3};
    m.components = {{1.0, 2.0, 3.0, 1.5}, {6.0, 5.0, 8.0, 7.0}, {15.0, 12.0, 10.0, 14.0}};
    return m;
}

// Prototypes handed to the certification prover (shapes only; the prover
// samples its own parameter points).

SbnModel proto_sbn(std::size_t h, std::size_t d, std::uint64_t seed) {
    SbnModel m;
    m.H = h;
    m.D = d;
    m.pi.assign(h, 0.5);
    m.W = numerics::Matrix(d, h);
    m.mu.assign(d, 0.0);
    std::mt19937_64 gen = rng::stream(seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    for (double& p : m.pi) p = unit(gen);
    for (double& w : m.W.data()) w = normal(gen);
    for (double& b : m.mu) b = normal(gen);
    return m;
}

LinearGaussianModel proto_lg(std::size_t h, std::size_t d, NoiseKind kind, bool trainable,
                             std::uint64_t seed) {
    LinearGaussianModel m;
    m.H = h;
    m.D = d;
    m.prior_mean.assign(h, 0.0);
    m.prior_var.assign(h, 1.0);
    m.trainable_prior = trainable;
    m.W = numerics::Matrix(d, h);
    m.mu.assign(d, 0.0);
    m.noise_kind = kind;
    m.noise_var.assign(kind == NoiseKind::Scalar ? 1 : d, 1.0);
    std::mt19937_64 gen = rng::stream(seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> logv(-1.0, 1.0);
    for (double& w : m.W.data()) w = normal(gen);
    for (double& b : m.mu) b = normal(gen);
    for (double& s : m.noise_var) s = std::exp(logv(gen));
    if (trainable) {
        for (double& v : m.prior_mean) v = normal(gen);
        for (double& v : m.prior_var) v = std::exp(logv(gen));
    }
    return m;
}

EfMixtureModel proto_mixture(ComponentFamily family, std::size_t c, std::size_t d) {
    EfMixtureModel m;
    m.C = c;
    m.D = d;
    m.component_family = family;
    m.pi.assign(c, 1.0 / static_cast<double>(c));
    const std::size_t len = family == ComponentFamily::Gamma          ? 2
                            : family == ComponentFamily::GaussianDiagonal ? 2 * d
                                                                           : d;
    m.components.assign(c, std::vector<double>(len, 1.0));
    return m;
}

std::vector<std::pair<std::string, ModelSpec>> certification_prototypes() {
    return {
        {"sbn", ModelSpec{proto_sbn(3, 4, 31)}},
        {"lg-scalar", ModelSpec{proto_lg(2, 5, NoiseKind::Scalar, false, 32)}},
        {"lg-diagonal", ModelSpec{proto_lg(2, 3, NoiseKind::Diagonal, true, 33)}},
        {"gaussian-mixture", ModelSpec{proto_mixture(ComponentFamily::GaussianDiagonal, 3, 2)}},
        {"gamma-mixture", ModelSpec{proto_mixture(ComponentFamily::Gamma, 2, 1)}},
        {"poisson-mixture", ModelSpec{proto_mixture(ComponentFamily::PoissonProduct, 3, 2)}},
    };
}

// ---------------------------------------------------------------------------
// Independent oracles.

// -integral of p log p for Gamma(alpha, beta): composite Simpson in t = log x
// so both tails are resolved smoothly. The lower cutoff scales with the shape
// parameter because the mass below x_lo behaves like x_lo^alpha: a fixed
// cutoff leaves an O(1e-12^alpha) hole for alpha < 1.
double gamma_entropy_quadrature(double alpha, double beta) {
    const auto log_pdf = [&](double x) {
        return alpha * std::log(beta) - std::lgamma(alpha) + (alpha - 1.0) * std::log(x) -
               beta * x;
    };
    const auto integrand = [&](double t) {
        const double x = std::exp(t);
        const double lp = log_pdf(x);
        return -std::exp(lp) * lp * x;  // extra x from dx = e^t dt
    };
    const double lo = std::min(std::log(1e-12), -37.0 / alpha);
    const double hi = std::log(std::max(200.0, 60.0 * alpha / beta));
    const int n = 40000;  // even
    const double h = (hi - lo) / n;
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < n; ++i) acc += integrand(lo + i * h) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

struct FitCase {
    ModelSpec truth;
    std::size_t n = 0;
    std::uint64_t data_seed = 0;
    std::uint64_t init_seed = 0;
    double tol_eq = 1e-6;
    std::size_t max_iters = 2000;
};

FitCase gmm_case() { return {ModelSpec{gmm_truth()}, 500, 2101, 7, 1e-8, 2000}; }
FitCase sbn_case() { return {ModelSpec{sbn_truth()}, 200, 2202, 8, 1e-6, 5000}; }
FitCase fa_case() { return {ModelSpec{fa_truth()}, 500, 2404, 9, 1e-6, 20000}; }
FitCase gamma_case() { return {ModelSpec{gamma_truth()}, 1000, 2505, 10, 1e-6, 20000}; }
FitCase poisson_case() { return {ModelSpec{poisson_truth()}, 1000, 2606, 11, 1e-8, 2000}; }

// Shared fit-then-verify skeleton for the equality criteria.
decompose::VerificationVerdict fit_and_verify(Recorder& r, const FitCase& c,
                                              inference::FitReport* out = nullptr) {
    const models::Dataset data = models::sample(c.truth, c.n, c.data_seed);
    inference::FitOptions opt;
    opt.max_iters = c.max_iters;
    const auto fit =
        inference::fit_em(inference::init_from_data(c.truth, data, c.init_seed), data, opt);
    r.require(fit.converged, "EM did not converge");
    const auto verdict = decompose::verify_stationary(fit, data, c.tol_eq);
    r.require_le(verdict.rel_gap, c.tol_eq, "elbo vs entropy-sum relative gap");
    r.require(verdict.pass, "verification verdict failed");
    if (out) *out = fit;
    return verdict;
}

// ---------------------------------------------------------------------------
// Criterion bodies.

void criterion_1_gmm(Recorder& r) { fit_and_verify(r, gmm_case()); }

void criterion_2_sbn(Recorder& r) {
    inference::FitReport fit;
    fit_and_verify(r, sbn_case(), &fit);
    r.require_le(fit.stationarity.grad_inf_norm, 1e-8, "gradient infinity norm at the fit");
}

void criterion_3_ppca(Recorder& r) {
    const ModelSpec truth{ppca_truth()};
    const models::Dataset data = models::sample(truth, 2000, 2303);
    bool clamped = false;
    const ModelSpec fit = inference::fit_ppca_closed_form(data, 2, &clamped);
    r.require(!clamped, "closed-form fit clamped a loading column");

    const auto q = inference::e_step(fit, data);
    const auto grad = inference::gradient_elbo(fit, data, q);
    r.require_le(numerics::inf_norm(grad), 1e-7, "elbo gradient infinity norm at the fit");

    const double el = decompose::elbo(fit, data, q);
    const auto dec = decompose::entropy_sum(fit, q);
    r.require_le(std::abs(el - dec.total) / std::max(1.0, std::abs(el)), 1e-8,
                 "elbo vs entropy-sum relative gap");

    const auto& lg = std::get<LinearGaussianModel>(fit);
    const double closed = decompose::ppca_stationary_elbo(lg.W, lg.noise_var[0]);
    r.require_le(std::abs(el - closed) / std::max(1.0, std::abs(closed)), 1e-9,
                 "elbo vs closed-form stationary value");
    r.require_le(std::abs(dec.total - closed) / std::max(1.0, std::abs(closed)), 1e-9,
                 "entropy sum vs closed-form stationary value");
}

void criterion_4_fa(Recorder& r) { fit_and_verify(r, fa_case()); }

void criterion_5_gamma(Recorder& r) {
    fit_and_verify(r, gamma_case());

    std::mt19937_64 gen = rng::stream(2506, 0);
    std::uniform_real_distribution<double> ua(0.5, 6.0);
    std::uniform_real_distribution<double> ub(0.3, 4.0);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double alpha = ua(gen), beta = ub(gen);
        worst = std::max(worst, std::abs(efcore::gamma_entropy(alpha, beta).value -
                                         gamma_entropy_quadrature(alpha, beta)));
    }
    r.require_le(worst, 1e-6, "gamma entropy vs quadrature oracle");
}

void criterion_6_poisson(Recorder& r) {
    const FitCase c = poisson_case();
    inference::FitReport fit;
    fit_and_verify(r, c, &fit);

    const models::Dataset data = models::sample(c.truth, c.n, c.data_seed);
    const auto dec =
        decompose::entropy_sum(fit.final_params, inference::e_step(fit.final_params, data));
    r.require(dec.kind == efcore::EntropyKind::PseudoEntropy,
              "entropy sum was not flagged as pseudo-entropy");

    // The pseudo-ELBO offset is the mean log base measure of the data,
    // independent of the parameter point; spot-check away from stationarity.
    numerics::KahanSum base;
    for (const auto& row : data.rows) base.add(models::log_base_measure(c.truth, row));
    const double mean_log_h = base.value() / static_cast<double>(data.N);

    double worst = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        std::mt19937_64 gen = rng::stream(2607, k);
        std::exponential_distribution<double> expo(1.0);
        std::uniform_real_distribution<double> lograte(-1.0, 3.0);
        EfMixtureModel m = poisson_truth();
        double total = 0.0;
        for (double& p : m.pi) {
            p = expo(gen) + 1e-3;
            total += p;
        }
        for (double& p : m.pi) p /= total;
        for (auto& comp : m.components)
            for (double& lam : comp) lam = std::exp(lograte(gen));

        const ModelSpec point{m};
        const auto q = inference::e_step(point, data);
        const double el = decompose::elbo(point, data, q);
        const double pel = decompose::pseudo_elbo(point, data, q);
        worst = std::max(worst, std::abs((pel - el) + mean_log_h));
    }
    r.require_le(worst, 1e-12, "pseudo-elbo minus elbo vs mean log base measure");
}

void criterion_7_certification(Recorder& r) {
    const auto prototypes = certification_prototypes();
    for (std::size_t which = 0; which < prototypes.size(); ++which) {
        const auto& [name, proto] = prototypes[which];
        const auto certs = criterion::certify_model(proto, 50, 32, 5000 + which, 1e-8);
        r.require(certs.size() == 50, name + ": expected one certificate per parameter draw");
        bool all_pass = true;
        double worst = 0.0;
        for (const auto& cert : certs) {
            all_pass = all_pass && cert.pass;
            worst = std::max(worst, cert.part_b.residual_rel);
            if (cert.part_a.applicable) worst = std::max(worst, cert.part_a.residual_rel);
        }
        r.require(all_pass, name + ": a certificate failed");
        r.require_le(worst, 1e-8, name + ": worst relative residual");
    }

    // Counterexample A: a constant entry appended to the prior map cannot be
    // written as J alpha.
    const criterion::VectorMap bad_prior = [](std::span<const double> p) {
        std::vector<double> out(p.begin(), p.end());
        out.push_back(0.75);
        return out;
    };
    const std::vector<double> psi = {0.4, 0.6};
    r.require(!criterion::check_part_a(bad_prior, psi).pass,
              "appended-constant prior map was not rejected");

    // Counterexample B: eta = theta + z has a z-dependent intercept, so no
    // single beta solves every latent jointly.
    const criterion::EtaMap bad_obs = [](std::span<const double> z,
                                         std::span<const double> theta) {
        std::vector<double> out(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) out[i] = theta[i] + z[i];
        return out;
    };
    const std::vector<double> theta = {0.5, -0.3};
    const std::vector<std::vector<double>> zs = {{0.0, 0.0}, {1.0, 0.5}, {-0.7, 0.2}};
    r.require(!criterion::check_part_b(bad_obs, theta, zs).pass,
              "latent-dependent observable map was not rejected");
}

void criterion_8_negative_control(Recorder& r) {
    const std::vector<std::pair<std::string, FitCase>> cases = {
        {"gaussian mixture", gmm_case()},
        {"gamma mixture", gamma_case()},
        {"poisson mixture", poisson_case()},
    };
    bool any_large_gap = false;
    for (const auto& [name, c] : cases) {
        const models::Dataset data = models::sample(c.truth, c.n, c.data_seed);
        inference::FitOptions opt;
        opt.max_iters = 2;
        const auto fit =
            inference::fit_em(inference::init_from_data(c.truth, data, c.init_seed), data, opt);
        r.require(!fit.converged, name + ": truncated run claims convergence");
        const auto verdict = decompose::verify_stationary(fit, data, c.tol_eq);
        r.require(!verdict.pass, name + ": truncated run passed verification");
        if (verdict.rel_gap >= 10.0 * c.tol_eq) any_large_gap = true;
    }
    r.require(any_large_gap, "no truncated run showed rel_gap >= 10x the equality tolerance");
}

void criterion_9_numerics(Recorder& r) {
    // Eigendecomposition: V diag(lambda) V^T reproduces the input.
    double worst_recon = 0.0;
    for (std::size_t n : {2u, 3u, 5u, 8u}) {
        std::mt19937_64 gen = rng::stream(9100, n);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        numerics::Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(gen);
        const auto eig = numerics::sym_eigen(a);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double rec = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    rec += eig.eigenvectors(i, k) * eig.eigenvalues[k] * eig.eigenvectors(j, k);
                worst_recon = std::max(worst_recon, std::abs(a(i, j) - rec));
            }
    }
    r.require_le(worst_recon, 1e-9, "eigendecomposition reconstruction");

    // Special functions against reference identities and known values.
    const double euler = 0.57721566490153286061;
    const std::vector<double> grid = {0.1, 0.37, 0.5, 1.0, 1.8, 2.5, 3.7, 7.25, 10.5, 41.5};

    double worst_lg = std::abs(numerics::log_gamma(0.5) - 0.5 * std::log(std::numbers::pi));
    worst_lg = std::max(worst_lg, std::abs(numerics::log_gamma(1.0)));
    worst_lg = std::max(worst_lg, std::abs(numerics::log_gamma(2.0)));
    worst_lg = std::max(worst_lg, std::abs(numerics::log_gamma(5.0) - std::log(24.0)));
    for (double a : grid) {
        const double lhs = numerics::log_gamma(a + 1.0);
        const double rhs = numerics::log_gamma(a) + std::log(a);
        worst_lg = std::max(worst_lg, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    r.require_le(worst_lg, 1e-12, "log_gamma recurrence and reference values");

    double worst_dg = std::abs(numerics::digamma(1.0) + euler);
    worst_dg =
        std::max(worst_dg, std::abs(numerics::digamma(0.5) + euler + 2.0 * std::log(2.0)));
    for (double a : grid) {
        const double gap = numerics::digamma(a + 1.0) - numerics::digamma(a) - 1.0 / a;
        worst_dg = std::max(worst_dg, std::abs(gap));
    }
    r.require_le(worst_dg, 1e-10, "digamma recurrence and reference values");

    // Analytic frozen-q ELBO gradient vs central finite differences.
    double worst_grad = 0.0;
    const auto fd_check = [&](const ModelSpec& spec, std::uint64_t data_seed) {
        const models::Dataset data = models::sample(spec, 25, data_seed);
        const auto q = inference::e_step(spec, data);
        const auto analytic = inference::gradient_elbo(spec, data, q);
        const std::vector<double> params = inference::trainable_params(spec);
        for (std::size_t j = 0; j < params.size(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(params[j]));
            std::vector<double> up = params, dn = params;
            up[j] += h;
            dn[j] -= h;
            const double fd =
                (decompose::elbo(inference::with_trainable_params(spec, up), data, q) -
                 decompose::elbo(inference::with_trainable_params(spec, dn), data, q)) /
                (2.0 * h);
            worst_grad =
                std::max(worst_grad, std::abs(analytic[j] - fd) / std::max(1.0, std::abs(fd)));
        }
    };
    fd_check(ModelSpec{proto_sbn(2, 3, 911)}, 61);
    fd_check(ModelSpec{proto_lg(2, 3, NoiseKind::Scalar, false, 912)}, 62);
    fd_check(ModelSpec{proto_lg(2, 4, NoiseKind::Diagonal, true, 913)}, 63);
    {
        EfMixtureModel m = gmm_truth();
        fd_check(ModelSpec{m}, 64);
    }
    {
        EfMixtureModel m = gamma_truth();
        fd_check(ModelSpec{m}, 65);
    }
    {
        EfMixtureModel m = poisson_truth();
        fd_check(ModelSpec{m}, 66);
    }
    r.require_le(worst_grad, 1e-5, "analytic elbo gradient vs finite differences");
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_10_determinism(Recorder& r) {
    namespace fs = std::filesystem;
    const fs::path dir =
        fs::temp_directory_path() / ("elbosum-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(dir);

    const auto run_twice = [&](const cli::RunConfig& cfg, const std::string& what) {
        const int rc1 = cli::run(cfg);
        const std::string first = slurp(cfg.output_path);
        const int rc2 = cli::run(cfg);
        const std::string second = slurp(cfg.output_path);
        r.require(rc1 == cli::kExitPass && rc2 == cli::kExitPass, what + ": pipeline run failed");
        r.require(!first.empty(), what + ": no artifact was written");
        r.require(first == second, what + ": artifacts differ between identical runs");
    };

    const std::vector<std::pair<std::string, FitCase>> pipelines = {
        {"gmm", gmm_case()},         {"sbn", sbn_case()},         {"fa", fa_case()},
        {"gamma-mix", gamma_case()}, {"poisson-mix", poisson_case()},
    };
    for (const auto& [name, c] : pipelines) {
        const fs::path model_path = dir / (name + "-model.json");
        {
            std::ofstream out(model_path);
            out << serialize::dump_json(serialize::model_to_json(c.truth)) << '\n';
        }

        cli::RunConfig gen;
        gen.command = "gen";
        gen.model = model_path.string();
        gen.seed = c.data_seed;
        gen.n = c.n;
        gen.threads = 1;
        gen.output_path = (dir / (name + "-data.jsonl")).string();
        run_twice(gen, name + " gen");

        cli::RunConfig verify;
        verify.command = "verify";
        verify.model = model_path.string();
        verify.data_path = gen.output_path;
        verify.seed = c.init_seed;
        verify.max_iters = c.max_iters;
        verify.threads = 1;
        verify.tol.tol_eq = c.tol_eq;
        verify.output_path = (dir / (name + "-verify.json")).string();
        run_twice(verify, name + " verify");
    }

    // Certification pipeline, one artifact per prototype family.
    const auto prototypes = certification_prototypes();
    for (std::size_t which = 0; which < prototypes.size(); ++which) {
        const auto& [name, proto] = prototypes[which];
        const fs::path model_path = dir / (name + "-proto.json");
        {
            std::ofstream out(model_path);
            out << serialize::dump_json(serialize::model_to_json(proto)) << '\n';
        }
        cli::RunConfig crit;
        crit.command = "criterion";
        crit.model = model_path.string();
        crit.seed = 5000 + which;
        crit.draws = 50;
        crit.z_samples = 32;
        crit.threads = 1;
        crit.tol.tol_criterion = 1e-8;
        crit.output_path = (dir / (name + "-criterion.json")).string();
        run_twice(crit, name + " criterion");
    }

    // Closed-form p-PCA route (no CLI command): dataset and fitted-model
    // artifacts from two independent executions must agree byte for byte.
    const ModelSpec truth{ppca_truth()};
    const std::string tag = serialize::family_tag(truth);
    std::string data_json[2];
    std::string model_json[2];
    for (int rep = 0; rep < 2; ++rep) {
        const models::Dataset data = models::sample(truth, 2000, 2303);
        data_json[rep] = serialize::dataset_to_jsonl(data, tag, 2303);
        model_json[rep] =
            serialize::dump_json(serialize::model_to_json(inference::fit_ppca_closed_form(data, 2)));
    }
    r.require(data_json[0] == data_json[1], "p-pca dataset artifacts differ between runs");
    r.require(model_json[0] == model_json[1], "p-pca fit artifacts differ between runs");

    std::error_code ec;
    fs::remove_all(dir, ec);
}

struct Entry {
    int id;
    const char* label;
    double time_limit;  // seconds; 0 = no limit
    std::function<void(Recorder&)> body;
};

}  // namespace

int main() {
    const std::vector<Entry> entries = {
        {1, "gaussian mixture equality at the fitted stationary point", 5.0, criterion_1_gmm},
        {2, "sigmoid belief network equality with gradient M-steps", 30.0, criterion_2_sbn},
        {3, "probabilistic PCA triple agreement with the closed form", 5.0, criterion_3_ppca},
        {4, "factor analysis equality under diagonal noise", 10.0, criterion_4_fa},
        {5, "gamma mixture equality and entropy quadrature oracle", 10.0, criterion_5_gamma},
        {6, "poisson mixture pseudo equality and base-measure shift", 10.0, criterion_6_poisson},
        {7, "parameterization criterion certification and counterexamples", 20.0,
         criterion_7_certification},
        {8, "negative control: truncated runs fail verification", 0.0,
         criterion_8_negative_control},
        {9, "numeric kernels against independent oracles", 10.0, criterion_9_numerics},
        {10, "byte-identical artifacts across repeated seeded runs", 0.0,
         criterion_10_determinism},
    };

    int failed = 0;
    for (const auto& entry : entries) {
        Recorder r;
        const auto start = std::chrono::steady_clock::now();
        try {
            entry.body(r);
        } catch (const std::exception& e) {
            r.failures.push_back(std::string("unhandled exception: ") + e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (entry.time_limit > 0.0 && seconds > entry.time_limit) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "runtime %.2fs exceeds the %.0fs budget", seconds,
                          entry.time_limit);
            r.failures.push_back(buf);
        }
        const bool pass = r.failures.empty();
        failed += pass ? 0 : 1;
        std::printf("[%2d] %-62s %s  (%.2fs)\n", entry.id, entry.label,
                    pass ? "PASS" : "FAIL", seconds);
        for (const auto& why : r.failures) std::printf("     - %s\n", why.c_str());
    }

    if (failed == 0) {
        std::printf("acceptance: all %zu criteria passed\n", entries.size());
        return 0;
    }
    std::printf("acceptance: %d of %zu criteria FAILED\n", failed, entries.size());
    return 1;
}
