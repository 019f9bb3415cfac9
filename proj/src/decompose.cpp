#include "elbosum/decompose.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "elbosum/errors.hpp"

namespace elbosum::decompose {

namespace {

constexpr double kLog2PiE = 2.8378770664093454836;

// -sum q log q with the 0 log 0 = 0 convention responsibilities need.
double row_entropy(std::span<const double> q) {
    double h = 0.0;
    for (double p : q)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

void check_state(const models::ModelSpec& model, const models::Dataset& data,
                 const inference::VariationalState& q) {
    if (q.rows() != data.N)
        throw std::invalid_argument("variational state row count does not match data");
    const bool continuous = std::holds_alternative<models::LinearGaussianModel>(model);
    if (continuous != !q.discrete())
        throw std::invalid_argument("variational state kind does not match model");
}

// E_{q_n}[log p(x, z)] + H[q_n] for one row of a discrete-latent model.
double discrete_row_term(const models::ModelSpec& model, std::span<const double> x,
                         std::span<const double> q) {
    numerics::KahanSum sum;
    if (const auto* sbn = std::get_if<models::SbnModel>(&model)) {
        const std::size_t states = std::size_t{1} << sbn->H;
        if (q.size() != states)
            throw std::invalid_argument("responsibility vector length does not match model");
        for (std::size_t k = 0; k < states; ++k) {
            if (q[k] <= 0.0) continue;
            sum.add(q[k] * (models::log_joint(*sbn, x, models::sbn_state(k, sbn->H)) -
                            std::log(q[k])));
        }
        return sum.value();
    }
    const auto& mix = std::get<models::EfMixtureModel>(model);
    if (q.size() != mix.C)
        throw std::invalid_argument("responsibility vector length does not match model");
    for (std::size_t c = 0; c < mix.C; ++c) {
        if (q[c] <= 0.0) continue;
        sum.add(q[c] * (models::log_joint(mix, x, c) - std::log(q[c])));
    }
    return sum.value();
}

// E_{q_n}[log p(x, z)] + H[q_n] in closed form for the linear-Gaussian model.
double gaussian_row_term(const models::LinearGaussianModel& m, std::span<const double> x,
                         const models::GaussianPosterior& q) {
    const std::size_t h = m.H, d = m.D;
    if (q.mean.size() != h || q.cov.rows() != h)
        throw std::invalid_argument("posterior record does not match model");

    // E_q[log p(z)] for the diagonal Gaussian prior.
    double prior_term = 0.0;
    for (std::size_t i = 0; i < h; ++i) {
        const double dv = q.mean[i] - m.prior_mean[i];
        prior_term += std::log(m.prior_var[i]) + (q.cov(i, i) + dv * dv) / m.prior_var[i];
    }
    prior_term = -0.5 * (static_cast<double>(h) * (kLog2PiE - 1.0) + prior_term);

    // E_q[log p(x|z)]: residual moment is (x - W m - mu)^2 + w^T S w per axis.
    const std::vector<double> wm = m.W.mat_vec(q.mean);
    double obs_term = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double v = m.noise_kind == models::NoiseKind::Scalar ? m.noise_var[0]
                                                                   : m.noise_var[i];
        const double r = x[i] - wm[i] - m.mu[i];
        double wsw = 0.0;
        for (std::size_t a = 0; a < h; ++a)
            for (std::size_t b = 0; b < h; ++b) wsw += m.W(i, a) * q.cov(a, b) * m.W(i, b);
        obs_term += std::log(v) + (r * r + wsw) / v;
    }
    obs_term = -0.5 * (static_cast<double>(d) * (kLog2PiE - 1.0) + obs_term);

    const double q_entropy =
        0.5 * (static_cast<double>(h) * kLog2PiE + numerics::logdet_psd(q.cov));
    return prior_term + obs_term + q_entropy;
}

}  // namespace

double elbo(const models::ModelSpec& model, const models::Dataset& data,
            const inference::VariationalState& q) {
    check_state(model, data, q);
    numerics::KahanSum total;
    if (const auto* lg = std::get_if<models::LinearGaussianModel>(&model)) {
        for (std::size_t n = 0; n < data.N; ++n)
            total.add(gaussian_row_term(*lg, data.rows[n], q.gaussians[n]));
    } else {
        for (std::size_t n = 0; n < data.N; ++n)
            total.add(discrete_row_term(model, data.rows[n], q.responsibilities[n]));
    }
    return total.value() / static_cast<double>(data.N);
}

double pseudo_elbo(const models::ModelSpec& model, const models::Dataset& data,
                   const inference::VariationalState& q) {
    numerics::KahanSum base;
    for (std::size_t n = 0; n < data.N; ++n)
        base.add(models::log_base_measure(model, data.rows[n]));
    return elbo(model, data, q) - base.value() / static_cast<double>(data.N);
}

std::vector<double> aggregate_posterior(const inference::VariationalState& q) {
    if (!q.discrete())
        throw std::invalid_argument(
            "aggregate posterior is only materialized for discrete latents");
    if (q.responsibilities.empty())
        throw std::invalid_argument("aggregate posterior needs at least one row");
    const std::size_t k = q.responsibilities.front().size();
    std::vector<numerics::KahanSum> cols(k);
    for (const auto& row : q.responsibilities) {
        if (row.size() != k)
            throw std::invalid_argument("responsibility rows have inconsistent lengths");
        for (std::size_t c = 0; c < k; ++c) cols[c].add(row[c]);
    }
    std::vector<double> mean(k);
    for (std::size_t c = 0; c < k; ++c)
        mean[c] = cols[c].value() / static_cast<double>(q.responsibilities.size());
    return mean;
}

EntropyDecomposition entropy_sum(const models::ModelSpec& model,
                                 const inference::VariationalState& q) {
    EntropyDecomposition out;
    const bool pseudo = !models::has_constant_base_measure(model);
    out.kind = pseudo ? efcore::EntropyKind::PseudoEntropy : efcore::EntropyKind::Entropy;

    // Term 1: mean entropy of the per-row variational distributions.
    numerics::KahanSum term1;
    if (q.discrete())
        for (const auto& row : q.responsibilities) term1.add(row_entropy(row));
    else
        for (const auto& g : q.gaussians) term1.add(efcore::gaussian_entropy_full(g.cov).value);
    out.mean_q_entropy = term1.value() / static_cast<double>(q.rows());

    if (const auto* sbn = std::get_if<models::SbnModel>(&model)) {
        out.prior_entropy = efcore::bernoulli_product_entropy(sbn->pi).value;
        // Term 3 by exact enumeration: sum_z qbar(z) sum_d H[Bernoulli(S(a_d(z)))],
        // evaluated from the logits so saturated means stay finite.
        const std::vector<double> qbar = aggregate_posterior(q);
        const std::size_t states = std::size_t{1} << sbn->H;
        if (qbar.size() != states)
            throw std::invalid_argument("aggregate posterior length does not match model");
        numerics::KahanSum term3;
        for (std::size_t k = 0; k < states; ++k) {
            const std::vector<int> z = models::sbn_state(k, sbn->H);
            std::vector<double> a(sbn->mu.begin(), sbn->mu.end());
            for (std::size_t h = 0; h < sbn->H; ++h)
                if (z[h])
                    for (std::size_t d = 0; d < sbn->D; ++d) a[d] += sbn->W(d, h);
            double hz = 0.0;
            for (double ad : a) {
                const double p = numerics::sigmoid(ad);
                hz += p * numerics::softplus(-ad) + (1.0 - p) * numerics::softplus(ad);
            }
            term3.add(qbar[k] * hz);
        }
        out.expected_obs_entropy = term3.value();
    } else if (const auto* lg = std::get_if<models::LinearGaussianModel>(&model)) {
        out.prior_entropy = efcore::gaussian_entropy_diagonal(lg->prior_var).value;
        out.expected_obs_entropy =
            lg->noise_kind == models::NoiseKind::Scalar
                ? efcore::gaussian_entropy_scalar(lg->D, lg->noise_var[0]).value
                : efcore::gaussian_entropy_diagonal(lg->noise_var).value;
    } else {
        const auto& mix = std::get<models::EfMixtureModel>(model);
        out.prior_entropy = efcore::categorical_entropy(mix.pi).value;
        const std::vector<double> qbar = aggregate_posterior(q);
        if (qbar.size() != mix.C)
            throw std::invalid_argument("aggregate posterior length does not match model");
        numerics::KahanSum term3;
        for (std::size_t c = 0; c < mix.C; ++c) {
            double hc = 0.0;
            switch (mix.component_family) {
                case models::ComponentFamily::GaussianDiagonal: {
                    std::span<const double> params = mix.components[c];
                    hc = efcore::gaussian_entropy_diagonal(params.subspan(mix.D)).value;
                    break;
                }
                case models::ComponentFamily::Gamma:
                    hc = efcore::gamma_entropy(mix.components[c][0], mix.components[c][1]).value;
                    break;
                case models::ComponentFamily::PoissonProduct:
                    hc = efcore::poisson_pseudo_entropy(mix.components[c]).value;
                    break;
            }
            term3.add(qbar[c] * hc);
        }
        out.expected_obs_entropy = term3.value();
    }

    out.total = out.mean_q_entropy - out.prior_entropy - out.expected_obs_entropy;
    return out;
}

double ppca_stationary_elbo(const numerics::Matrix& w, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::domain_error("ppca_stationary_elbo: sigma2 must be positive");
    const std::size_t d = w.rows(), h = w.cols();
    numerics::Matrix m(h, h);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < h; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r) s += w(r, i) * w(r, j);
            m(i, j) = s / sigma2;
        }
    for (std::size_t i = 0; i < h; ++i) m(i, i) += 1.0;
    return -0.5 * numerics::logdet_psd(m) -
           0.5 * static_cast<double>(d) * (kLog2PiE + std::log(sigma2));
}

VerificationVerdict verify_stationary(const inference::FitReport& fit,
                                      const models::Dataset& data, double tol_eq) {
    if (!(tol_eq > 0.0)) throw std::domain_error("verify_stationary: tolerance must be positive");
    const models::ModelSpec& model = fit.final_params;
    const inference::VariationalState state = inference::e_step(model, data);

    VerificationVerdict verdict;
    verdict.elbo = models::has_constant_base_measure(model) ? elbo(model, data, state)
                                                            : pseudo_elbo(model, data, state);
    verdict.entropy_sum = entropy_sum(model, state).total;
    verdict.abs_gap = std::abs(verdict.elbo - verdict.entropy_sum);
    verdict.rel_gap = verdict.abs_gap / std::max(1.0, std::abs(verdict.elbo));
    verdict.stationarity_evidence = fit.stationarity;
    verdict.converged = fit.converged;
    verdict.pass = fit.converged && verdict.rel_gap <= tol_eq;
    return verdict;
}

}  // namespace elbosum::decompose
