#include "elbosum/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "elbosum/decompose.hpp"
#include "elbosum/errors.hpp"
#include "elbosum/rng.hpp"

namespace elbosum::inference {

namespace {

using models::Dataset;
using models::EfMixtureModel;
using models::LinearGaussianModel;
using models::ModelSpec;
using models::SbnModel;
using numerics::KahanSum;
using numerics::Matrix;

void check_data(const ModelSpec& model, const Dataset& data) {
    if (data.N == 0 || data.rows.size() != data.N)
        throw std::invalid_argument("dataset is empty or inconsistently sized");
    if (data.D != models::data_dim(model))
        throw std::invalid_argument("dataset dimension does not match model");
    for (const auto& row : data.rows)
        if (row.size() != data.D)
            throw std::invalid_argument("dataset row length does not match header");
}

// Solves log(a) - digamma(a) = s for the Gamma shape. The left side
// decreases monotonically from +inf to 0, so the root is unique; safeguarded
// Newton with a bisection fallback keeps every iterate inside the bracket.
double solve_gamma_shape(double s) {
    constexpr double kLo = 1e-3, kHi = 1e6;
    const auto f = [](double a) { return std::log(a) - numerics::digamma(a); };
    if (f(kHi) >= s) return kHi;
    if (f(kLo) <= s) return kLo;

    double lo = kLo, hi = kHi;
    double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    a = std::clamp(a, lo, hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double resid = f(a) - s;
        if (resid > 0.0)
            lo = a;  // root lies above a
        else
            hi = a;
        const double slope = 1.0 / a - numerics::trigamma(a);
        double next = a - resid / slope;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - a) <= 1e-12 * std::max(1.0, std::abs(a))) return next;
        a = next;
    }
    return a;
}

// ---------------------------------------------------------------------------
// E-step

void e_step_rows(const ModelSpec& model, const Dataset& data, VariationalState& state,
                 std::size_t lo, std::size_t hi) {
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        for (std::size_t n = lo; n < hi; ++n)
            state.responsibilities[n] = models::exact_posterior(*sbn, data.rows[n]);
    } else if (const auto* lg = std::get_if<LinearGaussianModel>(&model)) {
        for (std::size_t n = lo; n < hi; ++n)
            state.gaussians[n] = models::exact_posterior(*lg, data.rows[n]);
    } else {
        const auto& mix = std::get<EfMixtureModel>(model);
        for (std::size_t n = lo; n < hi; ++n)
            state.responsibilities[n] = models::exact_posterior(mix, data.rows[n]);
    }
}

// ---------------------------------------------------------------------------
// Collapsed SBN statistics: per-state responsibility mass and weighted data
// sums, which make the M-step inner loop independent of N.

struct SbnStats {
    std::vector<double> mass;  // m(z) = sum_n q_n(z)
    Matrix xbar;               // xbar(z, d) = sum_n q_n(z) x_nd
    std::vector<double> marginals;  // (1/N) sum_n E_{q_n}[z_h]
};

SbnStats sbn_collapse(const SbnModel& model, const Dataset& data,
                      const VariationalState& q) {
    const std::size_t states = std::size_t{1} << model.H;
    std::vector<KahanSum> mass(states);
    std::vector<KahanSum> xsum(states * model.D);
    for (std::size_t n = 0; n < data.N; ++n) {
        const auto& row = q.responsibilities[n];
        if (row.size() != states)
            throw std::invalid_argument("responsibility length does not match SBN states");
        for (std::size_t k = 0; k < states; ++k) {
            mass[k].add(row[k]);
            for (std::size_t d = 0; d < model.D; ++d)
                xsum[k * model.D + d].add(row[k] * data.rows[n][d]);
        }
    }
    SbnStats stats;
    stats.mass.resize(states);
    stats.xbar = Matrix(states, model.D);
    for (std::size_t k = 0; k < states; ++k) {
        stats.mass[k] = mass[k].value();
        for (std::size_t d = 0; d < model.D; ++d) stats.xbar(k, d) = xsum[k * model.D + d].value();
    }
    stats.marginals.assign(model.H, 0.0);
    for (std::size_t k = 0; k < states; ++k)
        for (std::size_t h = 0; h < model.H; ++h)
            if ((k >> h) & 1u) stats.marginals[h] += stats.mass[k];
    for (double& m : stats.marginals) m /= static_cast<double>(data.N);
    return stats;
}

// Gradient of the expected complete log-likelihood terms that depend on
// (W, mu), summed over rows (not divided by N).
void sbn_objective_gradient(const SbnModel& model, const SbnStats& stats, Matrix& grad_w,
                            std::vector<double>& grad_mu) {
    grad_w = Matrix(model.D, model.H);
    grad_mu.assign(model.D, 0.0);
    const std::size_t states = stats.mass.size();
    for (std::size_t k = 0; k < states; ++k) {
        std::vector<double> a(model.mu.begin(), model.mu.end());
        for (std::size_t h = 0; h < model.H; ++h)
            if ((k >> h) & 1u)
                for (std::size_t d = 0; d < model.D; ++d) a[d] += model.W(d, h);
        for (std::size_t d = 0; d < model.D; ++d) {
            const double g = stats.xbar(k, d) - stats.mass[k] * numerics::sigmoid(a[d]);
            grad_mu[d] += g;
            for (std::size_t h = 0; h < model.H; ++h)
                if ((k >> h) & 1u) grad_w(d, h) += g;
        }
    }
}

// The (W, mu) subproblem separates per data coordinate d into a weighted
// logistic-regression fit over the 2^H latent states: maximize
//   G_d(theta) = sum_z [ xbar_d(z) log S(a) + (m(z) - xbar_d(z)) log(1-S(a)) ]
// with a = theta^T (z, 1). G_d is concave, so damped Newton with Armijo
// backtracking reaches tight stationarity in a handful of iterations where
// plain gradient ascent stalls on ill-conditioned state designs.
void sbn_newton_coordinate(std::size_t d, const SbnStats& stats, std::size_t h_dims,
                           SbnModel& model, double grad_tol) {
    const std::size_t states = stats.mass.size();
    const std::size_t aug = h_dims + 1;

    std::vector<double> theta(aug);
    for (std::size_t h = 0; h < h_dims; ++h) theta[h] = model.W(d, h);
    theta[h_dims] = model.mu[d];

    const auto objective = [&](const std::vector<double>& t) {
        KahanSum total;
        for (std::size_t k = 0; k < states; ++k) {
            double a = t[h_dims];
            for (std::size_t h = 0; h < h_dims; ++h)
                if ((k >> h) & 1u) a += t[h];
            total.add(-stats.xbar(k, d) * numerics::softplus(-a) -
                      (stats.mass[k] - stats.xbar(k, d)) * numerics::softplus(a));
        }
        return total.value();
    };

    double value = objective(theta);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<double> grad(aug, 0.0);
        Matrix curv(aug, aug);  // -Hessian, positive semidefinite
        for (std::size_t k = 0; k < states; ++k) {
            double a = theta[h_dims];
            for (std::size_t h = 0; h < h_dims; ++h)
                if ((k >> h) & 1u) a += theta[h];
            const double s = numerics::sigmoid(a);
            const double g = stats.xbar(k, d) - stats.mass[k] * s;
            const double w = stats.mass[k] * s * (1.0 - s);
            for (std::size_t i = 0; i < aug; ++i) {
                const bool zi = i == h_dims || ((k >> i) & 1u);
                if (!zi) continue;
                grad[i] += g;
                for (std::size_t j = 0; j < aug; ++j) {
                    const bool zj = j == h_dims || ((k >> j) & 1u);
                    if (zj) curv(i, j) += w;
                }
            }
        }
        if (numerics::inf_norm(grad) <= grad_tol) break;

        double trace = 0.0;
        for (std::size_t i = 0; i < aug; ++i) trace += curv(i, i);
        const double damp = 1e-12 * std::max(1.0, trace / static_cast<double>(aug));
        for (std::size_t i = 0; i < aug; ++i) curv(i, i) += damp;
        const std::vector<double> step = numerics::solve_psd(curv, grad);

        const double slope = numerics::dot(grad, step);  // > 0: ascent direction
        double t = 1.0;
        bool accepted = false;
        for (int shrink = 0; shrink < 60; ++shrink) {
            std::vector<double> trial = theta;
            for (std::size_t i = 0; i < aug; ++i) trial[i] += t * step[i];
            const double trial_value = objective(trial);
            if (trial_value >= value + 1e-4 * t * slope) {
                theta = std::move(trial);
                value = trial_value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // line-search underflow: gradient is noise-level
    }

    for (std::size_t h = 0; h < h_dims; ++h) model.W(d, h) = theta[h];
    model.mu[d] = theta[h_dims];
}

SbnModel m_step_sbn(const SbnModel& model, const Dataset& data, const VariationalState& q,
                    double inner_tol) {
    const SbnStats stats = sbn_collapse(model, data, q);
    SbnModel next = model;
    for (std::size_t h = 0; h < model.H; ++h)
        next.pi[h] = std::clamp(stats.marginals[h], 1e-12, 1.0 - 1e-12);

    const double grad_tol = inner_tol * static_cast<double>(data.N);
    for (std::size_t d = 0; d < model.D; ++d)
        sbn_newton_coordinate(d, stats, model.H, next, grad_tol);
    return next;
}

// ---------------------------------------------------------------------------
// Mixture M-step

EfMixtureModel m_step_mixture(const EfMixtureModel& model, const Dataset& data,
                              const VariationalState& q) {
    const std::size_t c_count = model.C, d_count = model.D;
    std::vector<double> wsum(c_count, 0.0);
    {
        std::vector<KahanSum> acc(c_count);
        for (std::size_t n = 0; n < data.N; ++n) {
            const auto& row = q.responsibilities[n];
            if (row.size() != c_count)
                throw std::invalid_argument("responsibility length does not match components");
            for (std::size_t c = 0; c < c_count; ++c) acc[c].add(row[c]);
        }
        for (std::size_t c = 0; c < c_count; ++c) {
            wsum[c] = acc[c].value();
            if (wsum[c] < 1e-12) throw DegenerateComponentError(c);
        }
    }

    EfMixtureModel next = model;
    for (std::size_t c = 0; c < c_count; ++c)
        next.pi[c] = wsum[c] / static_cast<double>(data.N);

    switch (model.component_family) {
        case models::ComponentFamily::GaussianDiagonal: {
            for (std::size_t c = 0; c < c_count; ++c) {
                std::vector<KahanSum> mean_acc(d_count);
                for (std::size_t n = 0; n < data.N; ++n)
                    for (std::size_t d = 0; d < d_count; ++d)
                        mean_acc[d].add(q.responsibilities[n][c] * data.rows[n][d]);
                std::vector<double> mean(d_count);
                for (std::size_t d = 0; d < d_count; ++d) mean[d] = mean_acc[d].value() / wsum[c];

                std::vector<KahanSum> var_acc(d_count);
                for (std::size_t n = 0; n < data.N; ++n)
                    for (std::size_t d = 0; d < d_count; ++d) {
                        const double r = data.rows[n][d] - mean[d];
                        var_acc[d].add(q.responsibilities[n][c] * r * r);
                    }
                for (std::size_t d = 0; d < d_count; ++d) {
                    next.components[c][d] = mean[d];
                    next.components[c][d_count + d] =
                        std::max(var_acc[d].value() / wsum[c], 1e-12);
                }
            }
            break;
        }
        case models::ComponentFamily::Gamma: {
            for (std::size_t c = 0; c < c_count; ++c) {
                KahanSum x_acc, logx_acc;
                for (std::size_t n = 0; n < data.N; ++n) {
                    const double r = q.responsibilities[n][c];
                    x_acc.add(r * data.rows[n][0]);
                    logx_acc.add(r * std::log(data.rows[n][0]));
                }
                const double xbar = x_acc.value() / wsum[c];
                const double s = std::max(std::log(xbar) - logx_acc.value() / wsum[c], 1e-12);
                const double alpha = solve_gamma_shape(s);
                next.components[c] = {alpha, alpha / xbar};
            }
            break;
        }
        case models::ComponentFamily::PoissonProduct: {
            for (std::size_t c = 0; c < c_count; ++c) {
                std::vector<KahanSum> acc(d_count);
                for (std::size_t n = 0; n < data.N; ++n)
                    for (std::size_t d = 0; d < d_count; ++d)
                        acc[d].add(q.responsibilities[n][c] * data.rows[n][d]);
                for (std::size_t d = 0; d < d_count; ++d)
                    next.components[c][d] = std::max(acc[d].value() / wsum[c], 1e-12);
            }
            break;
        }
    }
    return next;
}

// ---------------------------------------------------------------------------
// Linear-Gaussian M-step

LinearGaussianModel m_step_linear_gaussian(const LinearGaussianModel& model,
                                           const Dataset& data, const VariationalState& q) {
    const std::size_t h = model.H, d = model.D, aug = h + 1;

    // Augmented second-moment and cross-moment sums over the posterior.
    Matrix zz(aug, aug);
    Matrix xz(d, aug);
    for (std::size_t n = 0; n < data.N; ++n) {
        const auto& g = q.gaussians[n];
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < h; ++j) zz(i, j) += g.cov(i, j) + g.mean[i] * g.mean[j];
            zz(i, h) += g.mean[i];
            zz(h, i) += g.mean[i];
        }
        zz(h, h) += 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < h; ++j) xz(i, j) += data.rows[n][i] * g.mean[j];
            xz(i, h) += data.rows[n][i];
        }
    }

    LinearGaussianModel next = model;
    const Matrix chol = numerics::cholesky(zz);
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> rhs(aug);
        for (std::size_t j = 0; j < aug; ++j) rhs[j] = xz(i, j);
        const std::vector<double> b = numerics::cholesky_solve(chol, rhs);
        for (std::size_t j = 0; j < h; ++j) next.W(i, j) = b[j];
        next.mu[i] = b[h];
    }

    // Expected squared residuals with the fresh (W, mu).
    std::vector<KahanSum> resid(d);
    for (std::size_t n = 0; n < data.N; ++n) {
        const auto& g = q.gaussians[n];
        const std::vector<double> wm = next.W.mat_vec(g.mean);
        for (std::size_t i = 0; i < d; ++i) {
            const double r = data.rows[n][i] - wm[i] - next.mu[i];
            double wsw = 0.0;
            for (std::size_t a = 0; a < h; ++a)
                for (std::size_t b = 0; b < h; ++b) wsw += next.W(i, a) * g.cov(a, b) * next.W(i, b);
            resid[i].add(r * r + wsw);
        }
    }
    if (model.noise_kind == models::NoiseKind::Scalar) {
        KahanSum all;
        for (std::size_t i = 0; i < d; ++i) all.add(resid[i].value());
        next.noise_var[0] =
            std::max(all.value() / static_cast<double>(data.N * d), 1e-12);
    } else {
        for (std::size_t i = 0; i < d; ++i)
            next.noise_var[i] = std::max(resid[i].value() / static_cast<double>(data.N), 1e-12);
    }

    if (model.trainable_prior) {
        std::vector<KahanSum> mean_acc(h);
        for (std::size_t n = 0; n < data.N; ++n)
            for (std::size_t i = 0; i < h; ++i) mean_acc[i].add(q.gaussians[n].mean[i]);
        for (std::size_t i = 0; i < h; ++i)
            next.prior_mean[i] = mean_acc[i].value() / static_cast<double>(data.N);
        std::vector<KahanSum> var_acc(h);
        for (std::size_t n = 0; n < data.N; ++n)
            for (std::size_t i = 0; i < h; ++i) {
                const double r = q.gaussians[n].mean[i] - next.prior_mean[i];
                var_acc[i].add(q.gaussians[n].cov(i, i) + r * r);
            }
        for (std::size_t i = 0; i < h; ++i)
            next.prior_var[i] = std::max(var_acc[i].value() / static_cast<double>(data.N), 1e-12);
    }
    return next;
}

}  // namespace

VariationalState e_step(const ModelSpec& model, const Dataset& data, std::size_t threads) {
    models::validate(model);
    check_data(model, data);

    VariationalState state;
    if (std::holds_alternative<LinearGaussianModel>(model))
        state.gaussians.resize(data.N);
    else
        state.responsibilities.resize(data.N);

    if (threads <= 1 || data.N < 2 * threads) {
        e_step_rows(model, data, state, 0, data.N);
        return state;
    }

    // Rows land in preallocated slots, so the result is identical for any
    // thread count; only the wall-clock changes.
    const std::size_t workers = std::min(threads, data.N);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (data.N + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(data.N, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(
            [&model, &data, &state, lo, hi] { e_step_rows(model, data, state, lo, hi); });
    }
    for (auto& t : pool) t.join();
    return state;
}

ModelSpec m_step(const ModelSpec& model, const Dataset& data, const VariationalState& q,
                 double sbn_inner_tol) {
    check_data(model, data);
    if (q.rows() != data.N)
        throw std::invalid_argument("variational state row count does not match data");
    if (const auto* sbn = std::get_if<SbnModel>(&model))
        return m_step_sbn(*sbn, data, q, sbn_inner_tol);
    if (const auto* lg = std::get_if<LinearGaussianModel>(&model))
        return m_step_linear_gaussian(*lg, data, q);
    return m_step_mixture(std::get<EfMixtureModel>(model), data, q);
}

FitReport fit_em(const ModelSpec& model0, const Dataset& data, const FitOptions& options) {
    models::validate(model0);
    check_data(model0, data);

    ModelSpec model = model0;
    VariationalState state = e_step(model, data, options.threads);

    FitReport report;
    report.elbo_trajectory.push_back(decompose::elbo(model, data, state));
    report.stationarity = {std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};

    const double inner_tol = std::min(1e-10, 0.1 * options.tol_grad);

    // One outer iteration = two EM updates plus a monotone-safeguarded
    // extrapolation along the EM map's recent displacement (a SQUAREM-style
    // squared step). Plain EM converges only linearly — and mercilessly
    // slowly for weakly separated mixtures and SBNs — while the extrapolated
    // candidate, accepted only when it does not lower the ELBO, restores a
    // fast rate without giving up the monotone trajectory.
    for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
        const std::vector<double> p0 = trainable_params(model);

        ModelSpec m1 = m_step(model, data, state, inner_tol);
        VariationalState s1 = e_step(m1, data, options.threads);
        const std::vector<double> p1 = trainable_params(m1);

        ModelSpec m2 = m_step(m1, data, s1, inner_tol);
        VariationalState s2 = e_step(m2, data, options.threads);
        const std::vector<double> p2 = trainable_params(m2);
        const double f2 = decompose::elbo(m2, data, s2);

        model = std::move(m2);
        state = std::move(s2);
        double value = f2;

        std::vector<double> r(p0.size()), v(p0.size());
        double r2 = 0.0, v2 = 0.0;
        for (std::size_t j = 0; j < p0.size(); ++j) {
            r[j] = p1[j] - p0[j];
            v[j] = p2[j] - p1[j] - r[j];
            r2 += r[j] * r[j];
            v2 += v[j] * v[j];
        }
        if (v2 > 0.0 && r2 > 0.0) {
            const double alpha = std::min(-std::sqrt(r2 / v2), -1.0);
            std::vector<double> extrapolated(p0.size());
            for (std::size_t j = 0; j < p0.size(); ++j)
                extrapolated[j] = p0[j] - 2.0 * alpha * r[j] + alpha * alpha * v[j];
            try {
                ModelSpec candidate = with_trainable_params(model, extrapolated);
                models::validate(candidate);
                VariationalState cand_state = e_step(candidate, data, options.threads);
                // One stabilizing EM update keeps the accepted point on the
                // EM map's attractor.
                candidate = m_step(candidate, data, cand_state, inner_tol);
                cand_state = e_step(candidate, data, options.threads);
                const double cand_value = decompose::elbo(candidate, data, cand_state);
                if (cand_value >= f2) {
                    model = std::move(candidate);
                    state = std::move(cand_state);
                    value = cand_value;
                }
            } catch (const std::exception&) {
                // Extrapolation left the feasible set; keep the plain step.
            }
        }

        const double delta = std::abs(value - report.elbo_trajectory.back());
        report.elbo_trajectory.push_back(value);
        report.iterations = iter + 1;

        const std::vector<double> grad = gradient_elbo(model, data, state);
        report.stationarity = {delta, numerics::inf_norm(grad)};
        if (delta <= options.tol_elbo && report.stationarity.grad_inf_norm <= options.tol_grad) {
            report.converged = true;
            break;
        }
    }
    report.final_params = std::move(model);
    return report;
}

ModelSpec fit_ppca_closed_form(const Dataset& data, std::size_t h_dims, bool* clamped) {
    if (clamped) *clamped = false;
    if (data.N == 0) throw std::invalid_argument("fit_ppca_closed_form: empty dataset");
    const std::size_t d = data.D;
    if (h_dims == 0 || h_dims >= d)
        throw std::domain_error("fit_ppca_closed_form: need 1 <= H < D");

    std::vector<double> mean(d, 0.0);
    for (const auto& row : data.rows) {
        if (row.size() != d) throw std::invalid_argument("fit_ppca_closed_form: ragged rows");
        for (std::size_t i = 0; i < d; ++i) mean[i] += row[i];
    }
    for (double& m : mean) m /= static_cast<double>(data.N);

    Matrix cov(d, d);
    for (const auto& row : data.rows)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                cov(i, j) += (row[i] - mean[i]) * (row[j] - mean[j]);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) cov(i, j) /= static_cast<double>(data.N);

    const numerics::SpectralDecomposition eig = numerics::sym_eigen(cov);
    double sigma2 = 0.0;
    for (std::size_t i = h_dims; i < d; ++i) sigma2 += eig.eigenvalues[i];
    sigma2 /= static_cast<double>(d - h_dims);
    sigma2 = std::max(sigma2, 1e-12);

    LinearGaussianModel model;
    model.H = h_dims;
    model.D = d;
    model.prior_mean.assign(h_dims, 0.0);
    model.prior_var.assign(h_dims, 1.0);
    model.trainable_prior = false;
    model.W = Matrix(d, h_dims);
    for (std::size_t j = 0; j < h_dims; ++j) {
        const double excess = eig.eigenvalues[j] - sigma2;
        if (excess <= 0.0) {
            if (clamped) *clamped = true;
            continue;  // column stays zero
        }
        const double scale = std::sqrt(excess);
        for (std::size_t i = 0; i < d; ++i) model.W(i, j) = scale * eig.eigenvectors(i, j);
    }
    model.mu = std::move(mean);
    model.noise_kind = models::NoiseKind::Scalar;
    model.noise_var = {sigma2};
    return model;
}

std::vector<double> trainable_params(const ModelSpec& model) {
    std::vector<double> out;
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        out.insert(out.end(), sbn->pi.begin(), sbn->pi.end());
        for (std::size_t i = 0; i < sbn->D; ++i)
            for (std::size_t j = 0; j < sbn->H; ++j) out.push_back(sbn->W(i, j));
        out.insert(out.end(), sbn->mu.begin(), sbn->mu.end());
        return out;
    }
    if (const auto* lg = std::get_if<LinearGaussianModel>(&model)) {
        for (std::size_t i = 0; i < lg->D; ++i)
            for (std::size_t j = 0; j < lg->H; ++j) out.push_back(lg->W(i, j));
        out.insert(out.end(), lg->mu.begin(), lg->mu.end());
        out.insert(out.end(), lg->noise_var.begin(), lg->noise_var.end());
        if (lg->trainable_prior) {
            out.insert(out.end(), lg->prior_mean.begin(), lg->prior_mean.end());
            out.insert(out.end(), lg->prior_var.begin(), lg->prior_var.end());
        }
        return out;
    }
    const auto& mix = std::get<EfMixtureModel>(model);
    out.insert(out.end(), mix.pi.begin(), mix.pi.end() - 1);
    for (const auto& comp : mix.components) out.insert(out.end(), comp.begin(), comp.end());
    return out;
}

ModelSpec with_trainable_params(const ModelSpec& model, std::span<const double> params) {
    const std::size_t expected = trainable_params(model).size();
    if (params.size() != expected)
        throw std::invalid_argument("parameter vector length does not match model layout");
    std::size_t at = 0;
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        SbnModel next = *sbn;
        for (std::size_t h = 0; h < next.H; ++h) next.pi[h] = params[at++];
        for (std::size_t i = 0; i < next.D; ++i)
            for (std::size_t j = 0; j < next.H; ++j) next.W(i, j) = params[at++];
        for (std::size_t i = 0; i < next.D; ++i) next.mu[i] = params[at++];
        return next;
    }
    if (const auto* lg = std::get_if<LinearGaussianModel>(&model)) {
        LinearGaussianModel next = *lg;
        for (std::size_t i = 0; i < next.D; ++i)
            for (std::size_t j = 0; j < next.H; ++j) next.W(i, j) = params[at++];
        for (std::size_t i = 0; i < next.D; ++i) next.mu[i] = params[at++];
        for (double& v : next.noise_var) v = params[at++];
        if (next.trainable_prior) {
            for (double& v : next.prior_mean) v = params[at++];
            for (double& v : next.prior_var) v = params[at++];
        }
        return next;
    }
    EfMixtureModel next = std::get<EfMixtureModel>(model);
    double head = 0.0;
    for (std::size_t c = 0; c + 1 < next.C; ++c) {
        next.pi[c] = params[at++];
        head += next.pi[c];
    }
    next.pi[next.C - 1] = 1.0 - head;
    for (auto& comp : next.components)
        for (double& v : comp) v = params[at++];
    return next;
}

std::vector<double> gradient_elbo(const ModelSpec& model, const Dataset& data,
                                  const VariationalState& q) {
    check_data(model, data);
    if (q.rows() != data.N)
        throw std::invalid_argument("variational state row count does not match data");
    const double n_rows = static_cast<double>(data.N);

    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        const SbnStats stats = sbn_collapse(*sbn, data, q);
        std::vector<double> grad;
        grad.reserve(sbn->H + sbn->D * sbn->H + sbn->D);
        for (std::size_t h = 0; h < sbn->H; ++h) {
            const double p = sbn->pi[h];
            if (!(p > 0.0) || !(p < 1.0))
                throw std::domain_error("gradient_elbo: prior probability on boundary");
            grad.push_back((stats.marginals[h] - p) / (p * (1.0 - p)));
        }
        Matrix grad_w;
        std::vector<double> grad_mu;
        sbn_objective_gradient(*sbn, stats, grad_w, grad_mu);
        for (std::size_t i = 0; i < sbn->D; ++i)
            for (std::size_t j = 0; j < sbn->H; ++j) grad.push_back(grad_w(i, j) / n_rows);
        for (std::size_t i = 0; i < sbn->D; ++i) grad.push_back(grad_mu[i] / n_rows);
        return grad;
    }

    if (const auto* lg = std::get_if<LinearGaussianModel>(&model)) {
        const std::size_t h = lg->H, d = lg->D;
        Matrix gw(d, h);
        std::vector<double> gmu(d, 0.0);
        std::vector<double> gvar(lg->noise_var.size(), 0.0);
        std::vector<double> gprior_mean(h, 0.0), gprior_var(h, 0.0);
        for (double v : lg->noise_var)
            if (!(v > 0.0)) throw std::domain_error("gradient_elbo: noise variance on boundary");

        for (std::size_t n = 0; n < data.N; ++n) {
            const auto& g = q.gaussians[n];
            const std::vector<double> wm = lg->W.mat_vec(g.mean);
            for (std::size_t i = 0; i < d; ++i) {
                const double v = lg->noise_kind == models::NoiseKind::Scalar ? lg->noise_var[0]
                                                                             : lg->noise_var[i];
                const double r = data.rows[n][i] - wm[i] - lg->mu[i];
                double wsw = 0.0;
                for (std::size_t a = 0; a < h; ++a) {
                    double sw = 0.0;
                    for (std::size_t b = 0; b < h; ++b) sw += g.cov(a, b) * lg->W(i, b);
                    gw(i, a) += (r * g.mean[a] - sw) / v;
                    wsw += lg->W(i, a) * sw;
                }
                gmu[i] += r / v;
                const double e2 = r * r + wsw;
                const double dv = e2 / (2.0 * v * v) - 0.5 / v;
                if (lg->noise_kind == models::NoiseKind::Scalar)
                    gvar[0] += dv;
                else
                    gvar[i] += dv;
            }
            if (lg->trainable_prior) {
                for (std::size_t a = 0; a < h; ++a) {
                    const double v0 = lg->prior_var[a];
                    const double r0 = g.mean[a] - lg->prior_mean[a];
                    gprior_mean[a] += r0 / v0;
                    gprior_var[a] += (g.cov(a, a) + r0 * r0) / (2.0 * v0 * v0) - 0.5 / v0;
                }
            }
        }

        std::vector<double> grad;
        grad.reserve(d * h + d + gvar.size() + (lg->trainable_prior ? 2 * h : 0));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < h; ++j) grad.push_back(gw(i, j) / n_rows);
        for (std::size_t i = 0; i < d; ++i) grad.push_back(gmu[i] / n_rows);
        for (double v : gvar) grad.push_back(v / n_rows);
        if (lg->trainable_prior) {
            for (double v : gprior_mean) grad.push_back(v / n_rows);
            for (double v : gprior_var) grad.push_back(v / n_rows);
        }
        return grad;
    }

    const auto& mix = std::get<EfMixtureModel>(model);
    const std::size_t c_count = mix.C, d_count = mix.D;
    std::vector<double> qbar(c_count, 0.0);
    for (std::size_t n = 0; n < data.N; ++n)
        for (std::size_t c = 0; c < c_count; ++c) qbar[c] += q.responsibilities[n][c];
    for (double& v : qbar) v /= n_rows;

    std::vector<double> grad;
    const double tail = mix.pi[c_count - 1];
    for (std::size_t c = 0; c + 1 < c_count; ++c)
        grad.push_back(qbar[c] / mix.pi[c] - qbar[c_count - 1] / tail);

    for (std::size_t c = 0; c < c_count; ++c) {
        const std::vector<double>& p = mix.components[c];
        switch (mix.component_family) {
            case models::ComponentFamily::GaussianDiagonal: {
                std::vector<double> gm(d_count, 0.0), gv(d_count, 0.0);
                for (std::size_t n = 0; n < data.N; ++n) {
                    const double r = q.responsibilities[n][c];
                    for (std::size_t i = 0; i < d_count; ++i) {
                        const double v = p[d_count + i];
                        const double e = data.rows[n][i] - p[i];
                        gm[i] += r * e / v;
                        gv[i] += r * (e * e / (2.0 * v * v) - 0.5 / v);
                    }
                }
                for (double v : gm) grad.push_back(v / n_rows);
                for (double v : gv) grad.push_back(v / n_rows);
                break;
            }
            case models::ComponentFamily::Gamma: {
                const double alpha = p[0], beta = p[1];
                const double psi_alpha = numerics::digamma(alpha);
                double ga = 0.0, gb = 0.0;
                for (std::size_t n = 0; n < data.N; ++n) {
                    const double r = q.responsibilities[n][c];
                    const double x = data.rows[n][0];
                    ga += r * (std::log(beta) - psi_alpha + std::log(x));
                    gb += r * (alpha / beta - x);
                }
                grad.push_back(ga / n_rows);
                grad.push_back(gb / n_rows);
                break;
            }
            case models::ComponentFamily::PoissonProduct: {
                std::vector<double> gl(d_count, 0.0);
                for (std::size_t n = 0; n < data.N; ++n) {
                    const double r = q.responsibilities[n][c];
                    for (std::size_t i = 0; i < d_count; ++i)
                        gl[i] += r * (data.rows[n][i] / p[i] - 1.0);
                }
                for (double v : gl) grad.push_back(v / n_rows);
                break;
            }
        }
    }
    return grad;
}

ModelSpec init_from_data(const ModelSpec& prototype, const Dataset& data, std::uint64_t seed) {
    check_data(prototype, data);
    const std::size_t d = data.D;

    std::vector<double> col_mean(d, 0.0), col_var(d, 0.0);
    for (const auto& row : data.rows)
        for (std::size_t i = 0; i < d; ++i) col_mean[i] += row[i];
    for (double& v : col_mean) v /= static_cast<double>(data.N);
    for (const auto& row : data.rows)
        for (std::size_t i = 0; i < d; ++i) {
            const double r = row[i] - col_mean[i];
            col_var[i] += r * r;
        }
    for (double& v : col_var) v = std::max(v / static_cast<double>(data.N), 1e-8);

    std::mt19937_64 gen = rng::stream(seed, 0);

    if (const auto* sbn = std::get_if<SbnModel>(&prototype)) {
        SbnModel next = *sbn;
        std::normal_distribution<double> nd(0.0, 0.1);
        next.pi.assign(next.H, 0.5);
        for (std::size_t i = 0; i < next.D; ++i)
            for (std::size_t j = 0; j < next.H; ++j) next.W(i, j) = nd(gen);
        for (std::size_t i = 0; i < next.D; ++i) {
            const double p = std::clamp(col_mean[i], 0.01, 0.99);
            next.mu[i] = std::log(p / (1.0 - p));
        }
        return next;
    }

    if (const auto* lg = std::get_if<LinearGaussianModel>(&prototype)) {
        LinearGaussianModel next = *lg;
        double ave_var = 0.0;
        for (double v : col_var) ave_var += v;
        ave_var /= static_cast<double>(d);
        std::normal_distribution<double> nd(0.0, std::sqrt(ave_var) * 0.5);
        for (std::size_t i = 0; i < next.D; ++i)
            for (std::size_t j = 0; j < next.H; ++j) next.W(i, j) = nd(gen);
        next.mu = col_mean;
        if (next.noise_kind == models::NoiseKind::Scalar)
            next.noise_var = {ave_var};
        else
            next.noise_var = col_var;
        next.prior_mean.assign(next.H, 0.0);
        next.prior_var.assign(next.H, 1.0);
        return next;
    }

    const auto& mix = std::get<EfMixtureModel>(prototype);
    EfMixtureModel next = mix;
    next.pi.assign(next.C, 1.0 / static_cast<double>(next.C));

    // k-means++-style center seeding on the raw rows.
    std::vector<std::size_t> centers;
    std::uniform_int_distribution<std::size_t> pick(0, data.N - 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    centers.push_back(pick(gen));
    std::vector<double> dist2(data.N);
    auto sqdist = [&](std::size_t n, std::size_t center) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double r = data.rows[n][i] - data.rows[center][i];
            s += r * r;
        }
        return s;
    };
    for (std::size_t n = 0; n < data.N; ++n) dist2[n] = sqdist(n, centers[0]);
    while (centers.size() < next.C) {
        double total = 0.0;
        for (double v : dist2) total += v;
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = pick(gen);
        } else {
            const double target = u01(gen) * total;
            double acc = 0.0;
            chosen = data.N - 1;
            for (std::size_t n = 0; n < data.N; ++n) {
                acc += dist2[n];
                if (target < acc) {
                    chosen = n;
                    break;
                }
            }
        }
        centers.push_back(chosen);
        for (std::size_t n = 0; n < data.N; ++n) dist2[n] = std::min(dist2[n], sqdist(n, chosen));
    }

    for (std::size_t c = 0; c < next.C; ++c) {
        const std::vector<double>& center = data.rows[centers[c]];
        switch (next.component_family) {
            case models::ComponentFamily::GaussianDiagonal:
                for (std::size_t i = 0; i < d; ++i) {
                    next.components[c][i] = center[i];
                    next.components[c][d + i] = col_var[i];
                }
                break;
            case models::ComponentFamily::Gamma: {
                const double m = std::max(center[0], 1e-3);
                const double v = col_var[0];
                next.components[c] = {std::clamp(m * m / v, 0.05, 1e4),
                                      std::clamp(m / v, 0.05, 1e4)};
                break;
            }
            case models::ComponentFamily::PoissonProduct:
                for (std::size_t i = 0; i < d; ++i)
                    next.components[c][i] = std::max(center[i], 0.05);
                break;
        }
    }
    return next;
}

}  // namespace elbosum::inference
