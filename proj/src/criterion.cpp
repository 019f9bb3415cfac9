#include "elbosum/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <utility>
#include <variant>

#include "elbosum/rng.hpp"

namespace elbosum::criterion {

namespace {

using models::EfMixtureModel;
using models::LinearGaussianModel;
using models::ModelSpec;
using models::SbnModel;
using numerics::Matrix;

std::vector<double> eval_map(const VectorMap& map, std::span<const double> point) {
    std::vector<double> out = map(point);
    for (double v : out)
        if (!std::isfinite(v))
            throw std::domain_error("criterion: map produced a non-finite value near the point");
    return out;
}

struct LsSolution {
    std::vector<double> coeffs;
    bool rank_deficient = false;
};

// Normal-equations least squares with spectral rank detection; a Tikhonov
// ridge (floored at 1e-12) is added only when the Gram matrix is
// rank-deficient, so full-rank solves stay exact.
LsSolution least_squares(const Matrix& jac, std::span<const double> target) {
    if (jac.rows() != target.size())
        throw std::invalid_argument("criterion: Jacobian/target row mismatch");
    const std::size_t n = jac.cols();
    Matrix gram(n, n);
    std::vector<double> rhs(n, 0.0);
    for (std::size_t i = 0; i < jac.rows(); ++i)
        for (std::size_t a = 0; a < n; ++a) {
            rhs[a] += jac(i, a) * target[i];
            for (std::size_t b = a; b < n; ++b) gram(a, b) += jac(i, a) * jac(i, b);
        }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < a; ++b) gram(a, b) = gram(b, a);

    const numerics::SpectralDecomposition eig = numerics::sym_eigen(gram);
    const double lambda_max = std::max(eig.eigenvalues.front(), 0.0);
    const double lambda_min = eig.eigenvalues.back();

    LsSolution out;
    out.rank_deficient = lambda_min <= 1e-10 * lambda_max;
    Matrix system = gram;
    double ridge = out.rank_deficient ? 1e-12 * std::max(1.0, lambda_max) : 0.0;
    for (int attempt = 0;; ++attempt) {
        if (ridge > 0.0)
            for (std::size_t a = 0; a < n; ++a) system(a, a) = gram(a, a) + ridge;
        try {
            out.coeffs = numerics::solve_psd(system, rhs);
            return out;
        } catch (const std::domain_error&) {
            if (attempt >= 3) throw;
            ridge = std::max(ridge * 100.0, 1e-12 * std::max(1.0, lambda_max));
            out.rank_deficient = true;
        }
    }
}

double rel_residual(const Matrix& jac, std::span<const double> coeffs,
                    std::span<const double> target) {
    const std::vector<double> pred = jac.mat_vec(coeffs);
    std::vector<double> diff(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) diff[i] = pred[i] - target[i];
    return numerics::two_norm(diff) / std::max(1.0, numerics::two_norm(target));
}

double max_abs_gap(std::span<const double> a, std::span<const double> b) {
    double gap = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
    return gap;
}

// Entrywise gap between the finite-difference and analytic Jacobians,
// floored-relative so entries that grow like 1/pi or 1/sigma^2 are judged
// on the scale they actually live at.
double max_entry_gap(const Matrix& fd, const Matrix& analytic) {
    if (fd.rows() != analytic.rows() || fd.cols() != analytic.cols())
        throw std::invalid_argument("criterion: Jacobian shape mismatch");
    double gap = 0.0;
    for (std::size_t i = 0; i < fd.data().size(); ++i)
        gap = std::max(gap, std::abs(fd.data()[i] - analytic.data()[i]) /
                                std::max(1.0, std::abs(analytic.data()[i])));
    return gap;
}

std::size_t component_length(models::ComponentFamily family, std::size_t d) {
    switch (family) {
        case models::ComponentFamily::GaussianDiagonal: return 2 * d;
        case models::ComponentFamily::Gamma: return 2;
        case models::ComponentFamily::PoissonProduct: return d;
    }
    throw std::logic_error("criterion: unhandled component family");
}

// --- family adapters: rebuild a model at perturbed prior / observable
// --- parameter points, matching the layouts models.cpp differentiates by.

ModelSpec with_prior_point(const ModelSpec& model, std::span<const double> psi) {
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        SbnModel m = *sbn;
        m.pi.assign(psi.begin(), psi.end());
        return m;
    }
    if (const auto* mix = std::get_if<EfMixtureModel>(&model)) {
        EfMixtureModel m = *mix;
        double tail = 1.0;
        for (std::size_t i = 0; i + 1 < m.C; ++i) {
            m.pi[i] = psi[i];
            tail -= psi[i];
        }
        m.pi[m.C - 1] = tail;
        return m;
    }
    const auto& lg = std::get<LinearGaussianModel>(model);
    if (!lg.trainable_prior)
        throw std::logic_error("criterion: fixed prior has no parameter point");
    LinearGaussianModel m = lg;
    for (std::size_t h = 0; h < m.H; ++h) {
        m.prior_mean[h] = psi[h];
        m.prior_var[h] = psi[m.H + h];
    }
    return m;
}

std::vector<double> obs_point(const ModelSpec& model) {
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        std::vector<double> theta(sbn->H * sbn->D + sbn->D);
        for (std::size_t k = 0; k < sbn->H; ++k)
            for (std::size_t i = 0; i < sbn->D; ++i) theta[k * sbn->D + i] = sbn->W(i, k);
        for (std::size_t i = 0; i < sbn->D; ++i) theta[sbn->H * sbn->D + i] = sbn->mu[i];
        return theta;
    }
    if (const auto* mix = std::get_if<EfMixtureModel>(&model)) {
        std::vector<double> theta;
        for (const auto& comp : mix->components) theta.insert(theta.end(), comp.begin(), comp.end());
        return theta;
    }
    return std::get<LinearGaussianModel>(model).noise_var;
}

ModelSpec with_obs_point(const ModelSpec& model, std::span<const double> theta) {
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        SbnModel m = *sbn;
        for (std::size_t k = 0; k < m.H; ++k)
            for (std::size_t i = 0; i < m.D; ++i) m.W(i, k) = theta[k * m.D + i];
        for (std::size_t i = 0; i < m.D; ++i) m.mu[i] = theta[m.H * m.D + i];
        return m;
    }
    if (const auto* mix = std::get_if<EfMixtureModel>(&model)) {
        EfMixtureModel m = *mix;
        const std::size_t len = component_length(m.component_family, m.D);
        for (std::size_t c = 0; c < m.C; ++c)
            m.components[c].assign(theta.begin() + c * len, theta.begin() + (c + 1) * len);
        return m;
    }
    LinearGaussianModel m = std::get<LinearGaussianModel>(model);
    m.noise_var.assign(theta.begin(), theta.end());
    return m;
}

models::ObsNaturalMap obs_map_at(const ModelSpec& model, std::span<const double> z) {
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        std::vector<int> bits(z.size());
        for (std::size_t h = 0; h < z.size(); ++h) bits[h] = static_cast<int>(std::lround(z[h]));
        return models::observable_natural_map(*sbn, bits);
    }
    if (const auto* mix = std::get_if<EfMixtureModel>(&model)) {
        const auto c = static_cast<std::size_t>(std::lround(z[0]));
        return models::observable_natural_map(*mix, c);
    }
    return models::observable_natural_map(std::get<LinearGaussianModel>(model), z);
}

// --- parameter and latent sampling for the batch harness.

double log_uniform(std::mt19937_64& gen) {
    return std::exp(std::uniform_real_distribution<double>(-2.0, 2.0)(gen));
}

std::vector<double> flat_dirichlet_clamped(std::size_t n, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> pi(n);
    double total = 0.0;
    for (double& p : pi) {
        p = -std::log(std::max(unit(gen), 1e-300));
        total += p;
    }
    for (double& p : pi) p = std::clamp(p / total, 1e-3, 1.0 - 1e-3);
    total = 0.0;
    for (double p : pi) total += p;
    for (double& p : pi) p /= total;
    return pi;
}

ModelSpec sample_parameter_point(const ModelSpec& proto, std::mt19937_64& gen) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (const auto* sbn = std::get_if<SbnModel>(&proto)) {
        SbnModel m = *sbn;
        for (double& p : m.pi) p = std::clamp(unit(gen), 1e-3, 1.0 - 1e-3);
        for (double& w : m.W.data()) w = normal(gen);
        for (double& b : m.mu) b = normal(gen);
        return m;
    }
    if (const auto* mix = std::get_if<EfMixtureModel>(&proto)) {
        EfMixtureModel m = *mix;
        m.pi = flat_dirichlet_clamped(m.C, gen);
        for (auto& comp : m.components) switch (m.component_family) {
                case models::ComponentFamily::GaussianDiagonal:
                    for (std::size_t d = 0; d < m.D; ++d) comp[d] = normal(gen);
                    for (std::size_t d = 0; d < m.D; ++d) comp[m.D + d] = log_uniform(gen);
                    break;
                case models::ComponentFamily::Gamma:
                    comp[0] = log_uniform(gen);
                    comp[1] = log_uniform(gen);
                    break;
                case models::ComponentFamily::PoissonProduct:
                    for (double& lam : comp) lam = log_uniform(gen);
                    break;
            }
        return m;
    }
    LinearGaussianModel m = std::get<LinearGaussianModel>(proto);
    for (double& w : m.W.data()) w = normal(gen);
    for (double& b : m.mu) b = normal(gen);
    for (double& s : m.noise_var) s = log_uniform(gen);
    if (m.trainable_prior) {
        for (double& v : m.prior_mean) v = normal(gen);
        for (double& v : m.prior_var) v = log_uniform(gen);
    }
    return m;
}

std::vector<std::vector<double>> draw_latents(const ModelSpec& model, std::size_t n_z,
                                              std::mt19937_64& gen) {
    std::vector<std::vector<double>> zs;
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        if (sbn->H <= 8) {  // full enumeration up to 256 states
            const std::size_t states = std::size_t{1} << sbn->H;
            for (std::size_t k = 0; k < states; ++k) {
                const std::vector<int> bits = models::sbn_state(k, sbn->H);
                zs.emplace_back(bits.begin(), bits.end());
            }
        } else {
            std::bernoulli_distribution coin(0.5);
            for (std::size_t k = 0; k < n_z; ++k) {
                std::vector<double> z(sbn->H);
                for (double& b : z) b = coin(gen) ? 1.0 : 0.0;
                zs.push_back(std::move(z));
            }
        }
        return zs;
    }
    if (const auto* mix = std::get_if<EfMixtureModel>(&model)) {
        for (std::size_t c = 0; c < mix->C; ++c) zs.push_back({static_cast<double>(c)});
        return zs;
    }
    const auto& lg = std::get<LinearGaussianModel>(model);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < n_z; ++k) {
        std::vector<double> z(lg.H);
        for (double& v : z) v = normal(gen);
        zs.push_back(std::move(z));
    }
    return zs;
}

}  // namespace

Matrix fd_jacobian(const VectorMap& map, std::span<const double> point) {
    std::vector<double> p(point.begin(), point.end());
    const std::vector<double> base = eval_map(map, p);
    Matrix jac(base.size(), p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        // Five-point central stencil: truncation O(h^4 f^(5)) keeps the
        // Jacobian accurate even where the maps are stiff (logit near the
        // interior clamp, reciprocal variances at the log-uniform edge).
        const double h = 1e-5 * std::max(1.0, std::abs(p[j]));
        const double saved = p[j];
        const auto at = [&](double offset) {
            p[j] = saved + offset;
            std::vector<double> v = eval_map(map, p);
            if (v.size() != base.size())
                throw std::invalid_argument(
                    "criterion: map output length changed under perturbation");
            return v;
        };
        const std::vector<double> p2 = at(2.0 * h);
        const std::vector<double> p1 = at(h);
        const std::vector<double> m1 = at(-h);
        const std::vector<double> m2 = at(-2.0 * h);
        p[j] = saved;
        for (std::size_t i = 0; i < base.size(); ++i)
            jac(i, j) = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
    }
    return jac;
}

PartACertificate check_part_a(const VectorMap& zeta_map, std::span<const double> psi,
                              std::span<const double> closed_alpha, double tol) {
    if (psi.empty())
        throw std::invalid_argument("criterion: Part A needs at least one prior parameter");
    PartACertificate cert;
    cert.applicable = true;
    cert.jacobian = fd_jacobian(zeta_map, psi);
    const std::vector<double> zeta = eval_map(zeta_map, psi);

    LsSolution ls = least_squares(cert.jacobian, zeta);
    cert.alpha_recovered = std::move(ls.coeffs);
    cert.rank_deficient = ls.rank_deficient;
    cert.residual_rel = rel_residual(cert.jacobian, cert.alpha_recovered, zeta);
    cert.pass = cert.residual_rel <= tol;

    if (!closed_alpha.empty()) {
        if (closed_alpha.size() != cert.alpha_recovered.size())
            throw std::invalid_argument("criterion: closed-form alpha length mismatch");
        cert.alpha_closed_form.assign(closed_alpha.begin(), closed_alpha.end());
        // Rank deficiency makes the recovered coefficients non-unique, so the
        // comparison is only meaningful at full column rank.
        if (!cert.rank_deficient)
            cert.closed_form_gap = max_abs_gap(cert.alpha_recovered, closed_alpha);
    }
    return cert;
}

PartBCertificate check_part_b(const EtaMap& eta_map, std::span<const double> theta,
                              const std::vector<std::vector<double>>& z_samples,
                              std::span<const double> closed_beta, double tol) {
    if (theta.empty())
        throw std::invalid_argument("criterion: Part B needs at least one observable parameter");
    if (z_samples.empty())
        throw std::invalid_argument("criterion: Part B needs at least one latent sample");

    PartBCertificate cert;
    std::vector<std::vector<double>> etas;
    std::size_t total_rows = 0;
    for (const auto& z : z_samples) {
        const VectorMap at_z = [&eta_map, &z](std::span<const double> th) {
            return eta_map(z, th);
        };
        PartBZRecord rec;
        rec.z = z;
        rec.jacobian = fd_jacobian(at_z, theta);
        etas.push_back(eval_map(at_z, theta));
        total_rows += rec.jacobian.rows();
        cert.per_z_records.push_back(std::move(rec));
    }

    // One joint system across every latent sample: a solution exists only if
    // a single z-independent beta reproduces eta(z) for all of them.
    Matrix stacked(total_rows, theta.size());
    std::vector<double> target(total_rows);
    std::size_t row = 0;
    for (std::size_t k = 0; k < cert.per_z_records.size(); ++k) {
        const Matrix& jz = cert.per_z_records[k].jacobian;
        for (std::size_t i = 0; i < jz.rows(); ++i, ++row) {
            target[row] = etas[k][i];
            for (std::size_t j = 0; j < jz.cols(); ++j) stacked(row, j) = jz(i, j);
        }
    }

    LsSolution ls = least_squares(stacked, target);
    cert.beta_recovered = std::move(ls.coeffs);
    cert.rank_deficient = ls.rank_deficient;
    cert.residual_rel = rel_residual(stacked, cert.beta_recovered, target);
    for (std::size_t k = 0; k < cert.per_z_records.size(); ++k)
        cert.per_z_records[k].residual_rel =
            rel_residual(cert.per_z_records[k].jacobian, cert.beta_recovered, etas[k]);
    cert.pass = cert.residual_rel <= tol;

    if (!closed_beta.empty()) {
        if (closed_beta.size() != cert.beta_recovered.size())
            throw std::invalid_argument("criterion: closed-form beta length mismatch");
        cert.beta_closed_form.assign(closed_beta.begin(), closed_beta.end());
        if (!cert.rank_deficient)
            cert.closed_form_gap = max_abs_gap(cert.beta_recovered, closed_beta);
    }
    return cert;
}

std::vector<CriterionCertificate> certify_model(const models::ModelSpec& model,
                                                std::size_t n_param_draws,
                                                std::size_t n_z_samples, std::uint64_t seed,
                                                double tol) {
    models::validate(model);
    if (n_z_samples == 0)
        throw std::invalid_argument("criterion: need at least one latent sample per point");

    std::vector<CriterionCertificate> certificates;
    certificates.reserve(n_param_draws);
    for (std::size_t draw = 0; draw < n_param_draws; ++draw) {
        std::mt19937_64 gen = rng::stream(seed, draw);
        const ModelSpec point = sample_parameter_point(model, gen);
        models::validate(point);

        CriterionCertificate cert;
        cert.tolerance = tol;
        cert.non_constant_base_measure = !models::has_constant_base_measure(point);

        const models::PriorNaturalMap prior = models::prior_natural_map(point);
        if (prior.applicable) {
            const VectorMap zeta_map = [&point](std::span<const double> psi) {
                return models::prior_natural_map(with_prior_point(point, psi)).zeta;
            };
            cert.part_a = check_part_a(zeta_map, prior.psi, prior.alpha, tol);
            cert.part_a.jacobian_vs_analytic = max_entry_gap(cert.part_a.jacobian, prior.jacobian);
            cert.prior_parameter_point = prior.psi;
        } else {
            cert.part_a.applicable = false;
        }

        const std::vector<double> theta = obs_point(point);
        const std::vector<std::vector<double>> zs = draw_latents(point, n_z_samples, gen);
        const EtaMap eta_map = [&point](std::span<const double> z, std::span<const double> th) {
            return obs_map_at(with_obs_point(point, th), z).eta;
        };
        const std::vector<double> closed_beta = obs_map_at(point, zs.front()).beta;
        cert.part_b = check_part_b(eta_map, theta, zs, closed_beta, tol);
        for (std::size_t k = 0; k < zs.size(); ++k)
            cert.part_b.jacobian_vs_analytic =
                std::max(cert.part_b.jacobian_vs_analytic,
                         max_entry_gap(cert.part_b.per_z_records[k].jacobian,
                                       obs_map_at(point, zs[k]).jacobian));
        cert.obs_parameter_point = theta;

        cert.pass = cert.part_b.pass && (!cert.part_a.applicable || cert.part_a.pass);
        certificates.push_back(std::move(cert));
    }
    return certificates;
}

}  // namespace elbosum::criterion
