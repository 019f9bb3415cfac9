#include "elbosum/models.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "elbosum/errors.hpp"
#include "elbosum/rng.hpp"

namespace elbosum::models {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr std::size_t kSbnEnumerationCap = 20;  // 2^20 posterior states

void require_finite(std::span<const double> v, const char* who) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::domain_error(std::string(who) + ": non-finite value");
}

void validate_sbn(const SbnModel& m) {
    if (m.H == 0 || m.D == 0) throw std::domain_error("SbnModel: H and D must be positive");
    if (m.pi.size() != m.H || m.mu.size() != m.D || m.W.rows() != m.D || m.W.cols() != m.H)
        throw std::domain_error("SbnModel: inconsistent dimensions");
    for (double p : m.pi)
        if (!(p > 0.0) || !(p < 1.0))
            throw std::domain_error("SbnModel: prior probabilities must lie in (0,1)");
    require_finite(m.mu, "SbnModel");
    if (!m.W.all_finite()) throw std::domain_error("SbnModel: W has non-finite entries");
}

void validate_linear_gaussian(const LinearGaussianModel& m) {
    if (m.H == 0 || m.D == 0)
        throw std::domain_error("LinearGaussianModel: H and D must be positive");
    if (m.prior_mean.size() != m.H || m.prior_var.size() != m.H || m.mu.size() != m.D ||
        m.W.rows() != m.D || m.W.cols() != m.H)
        throw std::domain_error("LinearGaussianModel: inconsistent dimensions");
    const std::size_t want = m.noise_kind == NoiseKind::Scalar ? 1 : m.D;
    if (m.noise_var.size() != want)
        throw std::domain_error("LinearGaussianModel: noise variance length mismatch");
    for (double v : m.prior_var)
        if (!(v > 0.0)) throw std::domain_error("LinearGaussianModel: prior variances must be positive");
    for (double v : m.noise_var)
        if (!(v > 0.0)) throw std::domain_error("LinearGaussianModel: noise variances must be positive");
    require_finite(m.prior_mean, "LinearGaussianModel");
    require_finite(m.mu, "LinearGaussianModel");
    if (!m.W.all_finite()) throw std::domain_error("LinearGaussianModel: W has non-finite entries");
}

std::size_t component_param_length(ComponentFamily family, std::size_t d) {
    switch (family) {
        case ComponentFamily::GaussianDiagonal: return 2 * d;
        case ComponentFamily::Gamma: return 2;
        case ComponentFamily::PoissonProduct: return d;
    }
    throw std::logic_error("component_param_length: unhandled family");
}

void validate_mixture(const EfMixtureModel& m) {
    if (m.C == 0 || m.D == 0) throw std::domain_error("EfMixtureModel: C and D must be positive");
    if (m.component_family == ComponentFamily::Gamma && m.D != 1)
        throw std::domain_error("EfMixtureModel: Gamma mixtures are scalar (D must be 1)");
    if (m.pi.size() != m.C || m.components.size() != m.C)
        throw std::domain_error("EfMixtureModel: inconsistent component count");
    double sum = 0.0;
    for (double p : m.pi) {
        if (!(p > 0.0)) throw std::domain_error("EfMixtureModel: mixture weights must be positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::domain_error("EfMixtureModel: mixture weights must sum to 1");
    const std::size_t len = component_param_length(m.component_family, m.D);
    for (const auto& comp : m.components) {
        if (comp.size() != len)
            throw std::domain_error("EfMixtureModel: component parameter length mismatch");
        require_finite(comp, "EfMixtureModel");
        switch (m.component_family) {
            case ComponentFamily::GaussianDiagonal:
                for (std::size_t d = 0; d < m.D; ++d)
                    if (!(comp[m.D + d] > 0.0))
                        throw std::domain_error("EfMixtureModel: Gaussian variances must be positive");
                break;
            case ComponentFamily::Gamma:
                if (!(comp[0] > 0.0) || !(comp[1] > 0.0))
                    throw std::domain_error("EfMixtureModel: Gamma shape/rate must be positive");
                break;
            case ComponentFamily::PoissonProduct:
                for (double l : comp)
                    if (!(l > 0.0))
                        throw std::domain_error("EfMixtureModel: Poisson rates must be positive");
                break;
        }
    }
}

double log_sigmoid(double a) { return -numerics::softplus(-a); }

// log N(x; mean, var) for a scalar coordinate.
double log_normal_1d(double x, double mean, double var) {
    const double r = x - mean;
    return -0.5 * (kLog2Pi + std::log(var)) - r * r / (2.0 * var);
}

long long checked_count(double x, const char* who) {
    if (!(x >= 0.0) || std::floor(x) != x || x > 9.0e15)
        throw std::domain_error(std::string(who) + ": Poisson data must be non-negative integers");
    return static_cast<long long>(x);
}

}  // namespace

void validate(const ModelSpec& model) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SbnModel>) validate_sbn(m);
            else if constexpr (std::is_same_v<T, LinearGaussianModel>) validate_linear_gaussian(m);
            else validate_mixture(m);
        },
        model);
}

std::size_t data_dim(const ModelSpec& model) {
    return std::visit([](const auto& m) { return m.D; }, model);
}

efcore::Family observable_family(const ModelSpec& model) {
    if (std::holds_alternative<SbnModel>(model)) return efcore::Family::BernoulliProduct;
    if (const auto* lg = std::get_if<LinearGaussianModel>(&model))
        return lg->noise_kind == NoiseKind::Scalar ? efcore::Family::GaussianScalarVar
                                                   : efcore::Family::GaussianDiagonal;
    switch (std::get<EfMixtureModel>(model).component_family) {
        case ComponentFamily::GaussianDiagonal: return efcore::Family::GaussianDiagonal;
        case ComponentFamily::Gamma: return efcore::Family::Gamma;
        case ComponentFamily::PoissonProduct: return efcore::Family::PoissonProduct;
    }
    throw std::logic_error("observable_family: unhandled mixture family");
}

bool has_constant_base_measure(const ModelSpec& model) {
    return efcore::constant_base_measure(observable_family(model));
}

double log_base_measure(const ModelSpec& model, std::span<const double> x) {
    if (observable_family(model) != efcore::Family::PoissonProduct) return 0.0;
    double s = 0.0;
    for (double xd : x) s -= numerics::log_factorial(checked_count(xd, "log_base_measure"));
    return s;
}

Dataset sample(const ModelSpec& model, std::size_t n, std::uint64_t seed) {
    validate(model);
    if (n == 0) throw std::domain_error("sample: need at least one draw");

    Dataset data;
    data.N = n;
    data.D = data_dim(model);
    data.rows.assign(n, std::vector<double>(data.D, 0.0));

    for (std::size_t row = 0; row < n; ++row) {
        std::mt19937_64 gen = rng::stream(seed, row);
        std::vector<double>& x = data.rows[row];

        if (const auto* sbn = std::get_if<SbnModel>(&model)) {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::vector<int> z(sbn->H);
            for (std::size_t h = 0; h < sbn->H; ++h) z[h] = u(gen) < sbn->pi[h] ? 1 : 0;
            const std::vector<double> means = sbn_conditional_means(*sbn, z);
            for (std::size_t d = 0; d < sbn->D; ++d) x[d] = u(gen) < means[d] ? 1.0 : 0.0;
        } else if (const auto* lg = std::get_if<LinearGaussianModel>(&model)) {
            std::normal_distribution<double> nd(0.0, 1.0);
            std::vector<double> z(lg->H);
            for (std::size_t h = 0; h < lg->H; ++h)
                z[h] = lg->prior_mean[h] + std::sqrt(lg->prior_var[h]) * nd(gen);
            const std::vector<double> mean = lg->W.mat_vec(z);
            for (std::size_t d = 0; d < lg->D; ++d) {
                const double v =
                    lg->noise_kind == NoiseKind::Scalar ? lg->noise_var[0] : lg->noise_var[d];
                x[d] = mean[d] + lg->mu[d] + std::sqrt(v) * nd(gen);
            }
        } else {
            const auto& mix = std::get<EfMixtureModel>(model);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            // Inverse-CDF draw of the component keeps the stream layout fixed.
            const double r = u(gen);
            std::size_t c = mix.C - 1;
            double acc = 0.0;
            for (std::size_t k = 0; k < mix.C; ++k) {
                acc += mix.pi[k];
                if (r < acc) {
                    c = k;
                    break;
                }
            }
            const std::vector<double>& p = mix.components[c];
            switch (mix.component_family) {
                case ComponentFamily::GaussianDiagonal: {
                    std::normal_distribution<double> nd(0.0, 1.0);
                    for (std::size_t d = 0; d < mix.D; ++d)
                        x[d] = p[d] + std::sqrt(p[mix.D + d]) * nd(gen);
                    break;
                }
                case ComponentFamily::Gamma: {
                    std::gamma_distribution<double> gd(p[0], 1.0 / p[1]);
                    x[0] = gd(gen);
                    break;
                }
                case ComponentFamily::PoissonProduct: {
                    for (std::size_t d = 0; d < mix.D; ++d) {
                        std::poisson_distribution<long long> pd(p[d]);
                        x[d] = static_cast<double>(pd(gen));
                    }
                    break;
                }
            }
        }
    }
    return data;
}

std::vector<double> sbn_conditional_means(const SbnModel& model, std::span<const int> z) {
    if (z.size() != model.H) throw std::domain_error("sbn_conditional_means: latent length mismatch");
    std::vector<double> a(model.mu.begin(), model.mu.end());
    for (std::size_t h = 0; h < model.H; ++h) {
        if (z[h] != 0 && z[h] != 1)
            throw std::domain_error("sbn_conditional_means: latents must be binary");
        if (z[h] == 0) continue;
        for (std::size_t d = 0; d < model.D; ++d) a[d] += model.W(d, h);
    }
    for (double& v : a) v = numerics::sigmoid(v);
    return a;
}

std::vector<int> sbn_state(std::size_t k, std::size_t h_dims) {
    std::vector<int> z(h_dims);
    for (std::size_t h = 0; h < h_dims; ++h) z[h] = static_cast<int>((k >> h) & 1u);
    return z;
}

double log_joint(const SbnModel& model, std::span<const double> x, std::span<const int> z) {
    if (x.size() != model.D) throw std::domain_error("log_joint(sbn): data length mismatch");
    if (z.size() != model.H) throw std::domain_error("log_joint(sbn): latent length mismatch");
    double lp = 0.0;
    std::vector<double> a(model.mu.begin(), model.mu.end());
    for (std::size_t h = 0; h < model.H; ++h) {
        if (z[h] != 0 && z[h] != 1) throw std::domain_error("log_joint(sbn): latents must be binary");
        lp += z[h] ? std::log(model.pi[h]) : std::log(1.0 - model.pi[h]);
        if (z[h])
            for (std::size_t d = 0; d < model.D; ++d) a[d] += model.W(d, h);
    }
    for (std::size_t d = 0; d < model.D; ++d) {
        if (x[d] != 0.0 && x[d] != 1.0)
            throw std::domain_error("log_joint(sbn): observables must be binary");
        // log S(a) = -softplus(-a); log(1 - S(a)) = -softplus(a).
        lp += x[d] == 1.0 ? log_sigmoid(a[d]) : log_sigmoid(-a[d]);
    }
    return lp;
}

double log_joint(const EfMixtureModel& model, std::span<const double> x, std::size_t c) {
    if (c >= model.C) throw std::domain_error("log_joint(mixture): component index out of range");
    return std::log(model.pi[c]) +
           component_log_density(model.component_family, model.components[c], x);
}

double log_joint(const LinearGaussianModel& model, std::span<const double> x,
                 std::span<const double> z) {
    if (x.size() != model.D) throw std::domain_error("log_joint(linear-gaussian): data length mismatch");
    if (z.size() != model.H)
        throw std::domain_error("log_joint(linear-gaussian): latent length mismatch");
    double lp = 0.0;
    for (std::size_t h = 0; h < model.H; ++h)
        lp += log_normal_1d(z[h], model.prior_mean[h], model.prior_var[h]);
    const std::vector<double> wz = model.W.mat_vec(z);
    for (std::size_t d = 0; d < model.D; ++d) {
        const double v = model.noise_kind == NoiseKind::Scalar ? model.noise_var[0]
                                                               : model.noise_var[d];
        lp += log_normal_1d(x[d], wz[d] + model.mu[d], v);
    }
    return lp;
}

double component_log_density(ComponentFamily family, std::span<const double> params,
                             std::span<const double> x) {
    switch (family) {
        case ComponentFamily::GaussianDiagonal: {
            const std::size_t d = params.size() / 2;
            if (x.size() != d)
                throw std::domain_error("component_log_density: data length mismatch");
            double lp = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                lp += log_normal_1d(x[i], params[i], params[d + i]);
            return lp;
        }
        case ComponentFamily::Gamma: {
            if (x.size() != 1) throw std::domain_error("component_log_density: Gamma data is scalar");
            if (!(x[0] > 0.0))
                throw std::domain_error("component_log_density: Gamma data must be positive");
            const double alpha = params[0], beta = params[1];
            return alpha * std::log(beta) - numerics::log_gamma(alpha) +
                   (alpha - 1.0) * std::log(x[0]) - beta * x[0];
        }
        case ComponentFamily::PoissonProduct: {
            if (x.size() != params.size())
                throw std::domain_error("component_log_density: data length mismatch");
            double lp = 0.0;
            for (std::size_t d = 0; d < params.size(); ++d) {
                const long long k = checked_count(x[d], "component_log_density");
                lp += static_cast<double>(k) * std::log(params[d]) - params[d] -
                      numerics::log_factorial(k);
            }
            return lp;
        }
    }
    throw std::logic_error("component_log_density: unhandled family");
}

std::vector<double> exact_posterior(const EfMixtureModel& model, std::span<const double> x) {
    std::vector<double> logp(model.C);
    for (std::size_t c = 0; c < model.C; ++c) logp[c] = log_joint(model, x, c);
    const double lse = numerics::logsumexp(logp);
    std::vector<double> post(model.C);
    for (std::size_t c = 0; c < model.C; ++c) post[c] = std::exp(logp[c] - lse);
    return post;
}

std::vector<double> exact_posterior(const SbnModel& model, std::span<const double> x) {
    if (model.H > kSbnEnumerationCap)
        throw CapacityError("exact_posterior: SBN enumeration supports at most 20 latents");
    const std::size_t states = std::size_t{1} << model.H;
    std::vector<double> logp(states);
    for (std::size_t k = 0; k < states; ++k)
        logp[k] = log_joint(model, x, sbn_state(k, model.H));
    const double lse = numerics::logsumexp(logp);
    std::vector<double> post(states);
    for (std::size_t k = 0; k < states; ++k) post[k] = std::exp(logp[k] - lse);
    return post;
}

GaussianPosterior exact_posterior(const LinearGaussianModel& model, std::span<const double> x) {
    if (x.size() != model.D) throw std::domain_error("exact_posterior: data length mismatch");
    const std::size_t h = model.H;
    // Precision: W^T R^{-1} W + P^{-1} with diagonal noise R and prior P.
    numerics::Matrix prec(h, h);
    std::vector<double> rhs(h, 0.0);
    for (std::size_t d = 0; d < model.D; ++d) {
        const double v = model.noise_kind == NoiseKind::Scalar ? model.noise_var[0]
                                                               : model.noise_var[d];
        const double resid = x[d] - model.mu[d];
        for (std::size_t i = 0; i < h; ++i) {
            rhs[i] += model.W(d, i) * resid / v;
            for (std::size_t j = i; j < h; ++j) prec(i, j) += model.W(d, i) * model.W(d, j) / v;
        }
    }
    for (std::size_t i = 0; i < h; ++i) {
        prec(i, i) += 1.0 / model.prior_var[i];
        rhs[i] += model.prior_mean[i] / model.prior_var[i];
        for (std::size_t j = i + 1; j < h; ++j) prec(j, i) = prec(i, j);
    }
    GaussianPosterior post;
    post.cov = numerics::inverse_psd(prec);
    post.mean = post.cov.mat_vec(rhs);
    return post;
}

double marginal_log_likelihood(const ModelSpec& model, std::span<const double> x) {
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        if (sbn->H > kSbnEnumerationCap)
            throw CapacityError("marginal_log_likelihood: SBN enumeration supports at most 20 latents");
        const std::size_t states = std::size_t{1} << sbn->H;
        std::vector<double> logp(states);
        for (std::size_t k = 0; k < states; ++k)
            logp[k] = log_joint(*sbn, x, sbn_state(k, sbn->H));
        return numerics::logsumexp(logp);
    }
    if (const auto* mix = std::get_if<EfMixtureModel>(&model)) {
        std::vector<double> logp(mix->C);
        for (std::size_t c = 0; c < mix->C; ++c) logp[c] = log_joint(*mix, x, c);
        return numerics::logsumexp(logp);
    }
    const auto& lg = std::get<LinearGaussianModel>(model);
    if (x.size() != lg.D) throw std::domain_error("marginal_log_likelihood: data length mismatch");
    // x ~ N(W m0 + mu, W P W^T + R).
    numerics::Matrix cov(lg.D, lg.D);
    for (std::size_t i = 0; i < lg.D; ++i)
        for (std::size_t j = 0; j < lg.D; ++j) {
            double s = 0.0;
            for (std::size_t h = 0; h < lg.H; ++h)
                s += lg.W(i, h) * lg.prior_var[h] * lg.W(j, h);
            cov(i, j) = s;
        }
    for (std::size_t d = 0; d < lg.D; ++d)
        cov(d, d) += lg.noise_kind == NoiseKind::Scalar ? lg.noise_var[0] : lg.noise_var[d];

    const std::vector<double> wm = lg.W.mat_vec(lg.prior_mean);
    std::vector<double> resid(lg.D);
    for (std::size_t d = 0; d < lg.D; ++d) resid[d] = x[d] - wm[d] - lg.mu[d];

    const numerics::Matrix chol = numerics::cholesky(cov);
    const std::vector<double> solved = numerics::cholesky_solve(chol, resid);
    double logdet = 0.0;
    for (std::size_t d = 0; d < lg.D; ++d) logdet += 2.0 * std::log(chol(d, d));
    return -0.5 * (static_cast<double>(lg.D) * kLog2Pi + logdet +
                   numerics::dot(resid, solved));
}

PriorNaturalMap prior_natural_map(const ModelSpec& model) {
    PriorNaturalMap out;
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        const auto map =
            efcore::natural_params_and_jacobian(efcore::Family::BernoulliProduct, sbn->pi);
        out.applicable = true;
        out.psi = sbn->pi;
        out.zeta = map.eta;
        out.jacobian = map.jacobian;
        out.alpha.resize(sbn->H);
        // J is diagonal with entries 1/(pi(1-pi)), so alpha = J^{-1} zeta.
        for (std::size_t h = 0; h < sbn->H; ++h)
            out.alpha[h] = sbn->pi[h] * (1.0 - sbn->pi[h]) * map.eta[h];
        return out;
    }
    if (const auto* mix = std::get_if<EfMixtureModel>(&model)) {
        const std::vector<double> free(mix->pi.begin(), mix->pi.end() - 1);
        const auto map = efcore::natural_params_and_jacobian(efcore::Family::Categorical, free);
        out.applicable = true;
        out.psi = free;
        out.zeta = map.eta;
        out.jacobian = map.jacobian;
        // alpha_i = pi_i (zeta_i - rho) with rho = sum_i pi_i zeta_i.
        double rho = 0.0;
        for (std::size_t i = 0; i < free.size(); ++i) rho += free[i] * map.eta[i];
        out.alpha.resize(free.size());
        for (std::size_t i = 0; i < free.size(); ++i)
            out.alpha[i] = free[i] * (map.eta[i] - rho);
        return out;
    }
    const auto& lg = std::get<LinearGaussianModel>(model);
    if (!lg.trainable_prior) return out;  // fixed N(0, I): nothing to differentiate by
    std::vector<double> psi(lg.prior_mean);
    psi.insert(psi.end(), lg.prior_var.begin(), lg.prior_var.end());
    const auto map = efcore::natural_params_and_jacobian(efcore::Family::GaussianDiagonal, psi);
    out.applicable = true;
    out.psi = psi;
    out.zeta = map.eta;
    out.jacobian = map.jacobian;
    // Solving the block-triangular J alpha = zeta gives alpha = (0, -var).
    out.alpha.assign(2 * lg.H, 0.0);
    for (std::size_t h = 0; h < lg.H; ++h) out.alpha[lg.H + h] = -lg.prior_var[h];
    return out;
}

ObsNaturalMap observable_natural_map(const SbnModel& model, std::span<const int> z) {
    if (z.size() != model.H)
        throw std::domain_error("observable_natural_map: latent length mismatch");
    ObsNaturalMap out;
    const std::size_t d = model.D, h = model.H;
    out.eta.assign(model.mu.begin(), model.mu.end());
    for (std::size_t k = 0; k < h; ++k) {
        if (z[k] != 0 && z[k] != 1)
            throw std::domain_error("observable_natural_map: latents must be binary");
        if (z[k])
            for (std::size_t i = 0; i < d; ++i) out.eta[i] += model.W(i, k);
    }
    // theta = (w_1, ..., w_H, mu) with w_k the k-th column of W.
    out.jacobian = numerics::Matrix(d, h * d + d);
    for (std::size_t k = 0; k < h; ++k)
        if (z[k])
            for (std::size_t i = 0; i < d; ++i) out.jacobian(i, k * d + i) = 1.0;
    for (std::size_t i = 0; i < d; ++i) out.jacobian(i, h * d + i) = 1.0;

    out.beta.resize(h * d + d);
    for (std::size_t k = 0; k < h; ++k)
        for (std::size_t i = 0; i < d; ++i) out.beta[k * d + i] = model.W(i, k);
    for (std::size_t i = 0; i < d; ++i) out.beta[h * d + i] = model.mu[i];
    return out;
}

ObsNaturalMap observable_natural_map(const LinearGaussianModel& model,
                                     std::span<const double> z) {
    if (z.size() != model.H)
        throw std::domain_error("observable_natural_map: latent length mismatch");
    ObsNaturalMap out;
    const std::size_t d = model.D;
    const std::vector<double> wz = model.W.mat_vec(z);

    if (model.noise_kind == NoiseKind::Scalar) {
        const double s = model.noise_var[0];
        out.eta.resize(d + 1);
        for (std::size_t i = 0; i < d; ++i) out.eta[i] = (wz[i] + model.mu[i]) / s;
        out.eta[d] = -0.5 / s;
        // theta = (sigma^2); d eta / d sigma^2 = -eta / sigma^2.
        out.jacobian = numerics::Matrix(d + 1, 1);
        for (std::size_t i = 0; i <= d; ++i) out.jacobian(i, 0) = -out.eta[i] / s;
        out.beta = {-s};
        return out;
    }

    out.eta.resize(2 * d);
    out.jacobian = numerics::Matrix(2 * d, d);
    out.beta.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double s = model.noise_var[i];
        const double mean = wz[i] + model.mu[i];
        out.eta[i] = mean / s;
        out.eta[d + i] = -0.5 / s;
        out.jacobian(i, i) = -mean / (s * s);
        out.jacobian(d + i, i) = 0.5 / (s * s);
        out.beta[i] = -s;
    }
    return out;
}

ObsNaturalMap observable_natural_map(const EfMixtureModel& model, std::size_t c) {
    if (c >= model.C)
        throw std::domain_error("observable_natural_map: component index out of range");
    ObsNaturalMap out;
    const std::size_t len = component_param_length(model.component_family, model.D);

    efcore::Family f;
    switch (model.component_family) {
        case ComponentFamily::GaussianDiagonal: f = efcore::Family::GaussianDiagonal; break;
        case ComponentFamily::Gamma: f = efcore::Family::Gamma; break;
        case ComponentFamily::PoissonProduct: f = efcore::Family::PoissonProduct; break;
        default: throw std::logic_error("observable_natural_map: unhandled family");
    }
    const efcore::NaturalMap map = efcore::natural_params_and_jacobian(f, model.components[c]);

    // theta concatenates all component parameter blocks; eta(x | component c)
    // depends only on block c, so the Jacobian is zero outside that block.
    out.eta = map.eta;
    out.jacobian = numerics::Matrix(len, model.C * len);
    for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < len; ++j)
            out.jacobian(i, c * len + j) = map.jacobian(i, j);

    // beta solves J(c) beta = eta(c) simultaneously for every c: block c of
    // beta is J_c^{-1} eta(Theta_c), which has a closed form per family.

    out.beta.assign(model.C * len, 0.0);
    for (std::size_t k = 0; k < model.C; ++k) {
        const std::vector<double>& p = model.components[k];
        double* beta_k = out.beta.data() + k * len;
        switch (model.component_family) {
            case ComponentFamily::GaussianDiagonal:
                for (std::size_t d2 = 0; d2 < model.D; ++d2)
                    beta_k[model.D + d2] = -p[model.D + d2];
                break;
            case ComponentFamily::Gamma:
                beta_k[0] = p[0] - 1.0;
                beta_k[1] = p[1];
                break;
            case ComponentFamily::PoissonProduct:
                for (std::size_t d2 = 0; d2 < model.D; ++d2)
                    beta_k[d2] = p[d2] * std::log(p[d2]);
                break;
        }
    }
    return out;
}

}  // namespace elbosum::models
