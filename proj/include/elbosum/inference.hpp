#pragma once

// EM-style drivers that take each generative model to a stationary point of
// the ELBO, plus the analytic ELBO gradient used as a stationarity witness.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "elbosum/models.hpp"

namespace elbosum::inference {

// Per-row variational distributions. Discrete-latent models (mixtures, SBN)
// fill `responsibilities` (one simplex vector per row: length C for mixtures,
// 2^H for SBN states); the linear-Gaussian model fills `gaussians`.
struct VariationalState {
    std::vector<std::vector<double>> responsibilities;
    std::vector<models::GaussianPosterior> gaussians;

    bool discrete() const { return gaussians.empty(); }
    std::size_t rows() const {
        return discrete() ? responsibilities.size() : gaussians.size();
    }
};

struct FitOptions {
    std::size_t max_iters = 2000;
    double tol_elbo = 1e-10;  // |F(t) - F(t-1)| threshold
    double tol_grad = 1e-8;   // parameter-gradient infinity norm threshold
    std::size_t threads = 1;  // E-step row parallelism; reductions stay serial
};

struct Stationarity {
    double elbo_delta = 0.0;
    double grad_inf_norm = 0.0;
};

struct FitReport {
    std::vector<double> elbo_trajectory;
    models::ModelSpec final_params;
    Stationarity stationarity;
    std::size_t iterations = 0;
    bool converged = false;
};

// Exact-posterior E-step; rows may be computed on `threads` workers (results
// land in preallocated slots, so the outcome is thread-count independent).
VariationalState e_step(const models::ModelSpec& model, const models::Dataset& data,
                        std::size_t threads = 1);

// Exact M-step given frozen q. Mixtures and linear-Gaussian models use closed
// forms; the SBN (W, mu) update runs backtracking gradient ascent on the
// expected complete log-likelihood down to gradient infinity-norm
// `sbn_inner_tol`. Throws DegenerateComponentError when a mixture component's
// total responsibility falls below 1e-12.
models::ModelSpec m_step(const models::ModelSpec& model, const models::Dataset& data,
                         const VariationalState& q, double sbn_inner_tol = 1e-10);

// Alternates e_step/m_step until both |delta F| <= tol_elbo and the analytic
// gradient infinity norm <= tol_grad, or max_iters is hit (converged=false).
FitReport fit_em(const models::ModelSpec& model0, const models::Dataset& data,
                 const FitOptions& options = {});

// Closed-form probabilistic-PCA fit: mu = data mean, sigma^2 = mean of the
// D-H smallest eigenvalues of the (1/N)-covariance, W = U_H (Lambda_H -
// sigma^2 I)^{1/2}. Requires 1 <= H < D. When an eigenvalue of the leading
// block falls below sigma^2 the corresponding column is clamped to zero and
// *clamped is set.
models::ModelSpec fit_ppca_closed_form(const models::Dataset& data, std::size_t h_dims,
                                       bool* clamped = nullptr);

// Flat vector of the model's trainable parameters. Layouts:
//   SBN:             (pi, W row-major, mu)
//   linear-Gaussian: (W row-major, mu, noise_var, [prior_mean, prior_var])
//   mixture:         (pi_1..pi_{C-1} free weights, component blocks in order)
std::vector<double> trainable_params(const models::ModelSpec& model);

// Rebuilds a model of the same shape from a flat parameter vector.
models::ModelSpec with_trainable_params(const models::ModelSpec& model,
                                        std::span<const double> params);

// Analytic gradient of the ELBO with q frozen, in trainable_params layout.
// Mixture weight gradients are with respect to the C-1 free weights (the last
// weight absorbs the simplex constraint).
std::vector<double> gradient_elbo(const models::ModelSpec& model,
                                  const models::Dataset& data, const VariationalState& q);

// Reproducible data-driven starting point preserving the prototype's shape:
// mixtures seed component centers k-means++-style with moment-matched spread,
// SBN draws small-variance weights, linear-Gaussian starts from data moments.
models::ModelSpec init_from_data(const models::ModelSpec& prototype,
                                 const models::Dataset& data, std::uint64_t seed);

}  // namespace elbosum::inference
