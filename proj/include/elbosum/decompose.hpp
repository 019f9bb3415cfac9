#pragma once

// ELBO evaluation, the entropy-sum decomposition it collapses to at
// stationary points, the pseudo-ELBO variant for non-constant base measures,
// and the verdict object that certifies the equality numerically.

#include <cstddef>
#include <vector>

#include "elbosum/efcore.hpp"
#include "elbosum/inference.hpp"
#include "elbosum/models.hpp"
#include "elbosum/numerics.hpp"

namespace elbosum::decompose {

// total = mean_q_entropy - prior_entropy - expected_obs_entropy, evaluated
// with the same floating-point order every call. kind distinguishes true
// entropies from the pseudo-entropy used for non-constant base measures.
struct EntropyDecomposition {
    double mean_q_entropy = 0.0;
    double prior_entropy = 0.0;
    double expected_obs_entropy = 0.0;
    double total = 0.0;
    efcore::EntropyKind kind = efcore::EntropyKind::Entropy;
};

struct VerificationVerdict {
    double elbo = 0.0;
    double entropy_sum = 0.0;
    double abs_gap = 0.0;
    double rel_gap = 0.0;  // abs_gap / max(1, |elbo|)
    inference::Stationarity stationarity_evidence;
    bool converged = false;
    bool pass = false;
};

// (1/N) sum_n [ E_{q_n}[log p(x_n | z)] - KL(q_n || p(z)) ]. Discrete
// expectations are exact sums; the linear-Gaussian case uses closed-form
// Gaussian integrals.
double elbo(const models::ModelSpec& model, const models::Dataset& data,
            const inference::VariationalState& q);

// elbo minus the mean log base measure of the data; identical to elbo for
// constant-base-measure families.
double pseudo_elbo(const models::ModelSpec& model, const models::Dataset& data,
                   const inference::VariationalState& q);

// q-bar(z) = (1/N) sum_n q_n(z). Discrete latents only; a continuous-latent
// state throws std::invalid_argument because every entropy-sum term it would
// feed is z-independent and computed directly.
std::vector<double> aggregate_posterior(const inference::VariationalState& q);

// The three-term entropy sum at the given parameters/state. Uses
// pseudo-entropies (and reports kind accordingly) when the observable family
// has a non-constant base measure.
EntropyDecomposition entropy_sum(const models::ModelSpec& model,
                                 const inference::VariationalState& q);

// Closed-form stationary ELBO of probabilistic PCA with the standard prior:
//   -1/2 log det(sigma^{-2} W^T W + I) - (D/2) log(2 pi e sigma^2).
double ppca_stationary_elbo(const numerics::Matrix& w, double sigma2);

// Recomputes the ELBO (pseudo-ELBO for non-constant base measures) and the
// entropy sum at the fit's final parameters with exact posteriors; pass
// requires convergence and rel_gap <= tol_eq.
VerificationVerdict verify_stationary(const inference::FitReport& fit,
                                      const models::Dataset& data, double tol_eq = 1e-6);

}  // namespace elbosum::decompose
