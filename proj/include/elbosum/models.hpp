#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "elbosum/efcore.hpp"
#include "elbosum/numerics.hpp"

namespace elbosum::models {

// Sigmoid belief net: H Bernoulli latents, D Bernoulli observables whose
// means are sigmoid(W z + mu).
struct SbnModel {
    std::size_t H = 0;
    std::size_t D = 0;
    std::vector<double> pi;  // H entries, each strictly in (0,1)
    numerics::Matrix W;      // D x H
    std::vector<double> mu;  // D
};

enum class NoiseKind { Scalar, Diagonal };

// Gaussian latents z ~ N(prior_mean, diag(prior_var)), observables
// x ~ N(W z + mu, noise). Probabilistic PCA is the scalar-noise instance
// with the prior fixed at N(0, I) (trainable_prior = false); factor
// analysis is the diagonal-noise instance.
struct LinearGaussianModel {
    std::size_t H = 0;
    std::size_t D = 0;
    std::vector<double> prior_mean;  // H
    std::vector<double> prior_var;   // H, positive
    bool trainable_prior = false;
    numerics::Matrix W;              // D x H
    std::vector<double> mu;          // D
    NoiseKind noise_kind = NoiseKind::Scalar;
    std::vector<double> noise_var;   // 1 entry (scalar) or D entries (diagonal)
};

enum class ComponentFamily { GaussianDiagonal, Gamma, PoissonProduct };

// Categorical mixture over C exponential-family components. Component
// standard-parameter layouts follow efcore: GaussianDiagonal components
// store (mu_1..mu_D, var_1..var_D), Gamma components (alpha, beta) with
// D = 1, PoissonProduct components (lambda_1..lambda_D).
struct EfMixtureModel {
    std::size_t C = 0;
    std::size_t D = 0;
    std::vector<double> pi;  // C mixture weights, positive, summing to 1
    ComponentFamily component_family = ComponentFamily::GaussianDiagonal;
    std::vector<std::vector<double>> components;  // C standard-parameter vectors
};

using ModelSpec = std::variant<SbnModel, LinearGaussianModel, EfMixtureModel>;

struct Dataset {
    std::size_t N = 0;
    std::size_t D = 0;
    std::vector<std::vector<double>> rows;
};

// Gaussian posterior over the latents of a linear-Gaussian model.
struct GaussianPosterior {
    std::vector<double> mean;  // H
    numerics::Matrix cov;      // H x H, symmetric PD
};

// Throws std::domain_error when dimensions or parameter domains are violated.
void validate(const ModelSpec& model);

std::size_t data_dim(const ModelSpec& model);

// Observable exponential family of the model (the distribution of x given
// the latent) and whether its base measure is constant.
efcore::Family observable_family(const ModelSpec& model);
bool has_constant_base_measure(const ModelSpec& model);

// log h(x) of the observable base measure; zero for every family except
// PoissonProduct, where it is -sum_d log(x_d!).
double log_base_measure(const ModelSpec& model, std::span<const double> x);

// n i.i.d. draws from the generative process; deterministic given seed, and
// row n depends only on (seed, n) so generation order is irrelevant.
Dataset sample(const ModelSpec& model, std::size_t n, std::uint64_t seed);

// Componentwise sigmoid(W z + mu); every entry strictly inside (0,1).
std::vector<double> sbn_conditional_means(const SbnModel& model, std::span<const int> z);

// Latent bit-vector of enumeration state k (bit h of k gives z_h).
std::vector<int> sbn_state(std::size_t k, std::size_t h_dims);

// log p(z) + log p(x|z) for each latent encoding.
double log_joint(const SbnModel& model, std::span<const double> x, std::span<const int> z);
double log_joint(const EfMixtureModel& model, std::span<const double> x, std::size_t c);
double log_joint(const LinearGaussianModel& model, std::span<const double> x,
                 std::span<const double> z);

// log p(x | component c) in the component's standard parameterization.
double component_log_density(ComponentFamily family, std::span<const double> params,
                             std::span<const double> x);

// Exact posteriors. Discrete latents return a probability vector (length C
// for mixtures, length 2^H in sbn_state order for SBNs); the SBN variant is
// capped at H <= 20 and throws CapacityError beyond it.
std::vector<double> exact_posterior(const EfMixtureModel& model, std::span<const double> x);
std::vector<double> exact_posterior(const SbnModel& model, std::span<const double> x);
GaussianPosterior exact_posterior(const LinearGaussianModel& model, std::span<const double> x);

// log p(x) marginalized over the latents: enumeration for discrete latents,
// the closed-form Gaussian marginal N(W m0 + mu, W P W^T + noise) otherwise.
double marginal_log_likelihood(const ModelSpec& model, std::span<const double> x);

// Prior-side natural-parameter map zeta(Psi), its analytic Jacobian, and the
// closed-form alpha with J alpha = zeta. Not applicable when the prior has
// no trainable parameters (the standard p-PCA form).
struct PriorNaturalMap {
    bool applicable = false;
    std::vector<double> psi;    // the prior parameter vector the map differentiates by
    std::vector<double> zeta;
    numerics::Matrix jacobian;  // d zeta / d psi^T
    std::vector<double> alpha;
};
PriorNaturalMap prior_natural_map(const ModelSpec& model);

// Observable-side natural parameters eta(z; Theta), the Jacobian over the
// model's chosen theta subset, and the closed-form z-independent beta with
// J(z) beta = eta(z). Theta subsets: all weights and offsets for the SBN
// (columns of W then mu), the noise variance(s) for linear-Gaussian models,
// and all component parameters for mixtures.
struct ObsNaturalMap {
    std::vector<double> eta;
    numerics::Matrix jacobian;  // d eta / d theta^T at this latent value
    std::vector<double> beta;
};
ObsNaturalMap observable_natural_map(const SbnModel& model, std::span<const int> z);
ObsNaturalMap observable_natural_map(const LinearGaussianModel& model, std::span<const double> z);
ObsNaturalMap observable_natural_map(const EfMixtureModel& model, std::size_t c);

}  // namespace elbosum::models
