#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "elbosum/numerics.hpp"

namespace elbosum::efcore {

// The six distribution families used across the toolkit, identified by how
// their natural-parameter vectors are laid out:
//   BernoulliProduct  - H independent Bernoullis; eta_h = logit(pi_h)
//   Categorical       - C classes, C-1 natural params with class C as the
//                       reference: eta_i = log(pi_i / pi_C)
//   GaussianScalarVar - D-dim isotropic Gaussian; eta = (mu/s, -1/(2s)) with
//                       s the shared variance, length D+1
//   GaussianDiagonal  - D-dim diagonal Gaussian; eta = (mu_d/s_d ...,
//                       -1/(2 s_d) ...), length 2D
//   Gamma             - scalar shape/rate; eta = (alpha-1, -beta)
//   PoissonProduct    - D independent Poissons; eta_d = log(lambda_d)
// All log-partition functions fold the Gaussian (2*pi)^{-D/2} factor into
// A(eta) so every family except PoissonProduct has base measure h == 1.
enum class Family {
    BernoulliProduct,
    Categorical,
    GaussianScalarVar,
    GaussianDiagonal,
    Gamma,
    PoissonProduct,
};

bool constant_base_measure(Family family);

struct EfDistribution {
    Family family;
    std::vector<double> natural_params;
};

enum class EntropyKind { Entropy, PseudoEntropy };

struct EntropyValue {
    double value = 0.0;  // nats
    EntropyKind kind = EntropyKind::Entropy;
};

// Closed-form (pseudo-)entropies in the standard parameterization.
EntropyValue bernoulli_product_entropy(std::span<const double> pi);
EntropyValue categorical_entropy(std::span<const double> pi);
EntropyValue gaussian_entropy_scalar(std::size_t d, double sigma2);
EntropyValue gaussian_entropy_diagonal(std::span<const double> sigma2);
EntropyValue gaussian_entropy_full(const numerics::Matrix& sigma);
EntropyValue gamma_entropy(double alpha, double beta);
EntropyValue poisson_pseudo_entropy(std::span<const double> lambda);

// Log-partition A(eta) and its gradient (the mean of the sufficient
// statistic) for each family.
double log_partition(const EfDistribution& dist);
std::vector<double> log_partition_gradient(const EfDistribution& dist);

// -eta^T grad A(eta) + A(eta). Coincides with the entropy whenever the base
// measure is constant; for PoissonProduct it is the pseudo-entropy.
EntropyValue pseudo_entropy_generic(const EfDistribution& dist);

// Map from standard parameters to natural parameters together with the
// analytic Jacobian d(eta)/d(standard)^T. Standard-parameter layouts:
//   BernoulliProduct:  (pi_1..pi_H)
//   Categorical:       the C-1 free probabilities (pi_1..pi_{C-1}); pi_C is
//                      implied as 1 - sum
//   GaussianScalarVar: (mu_1..mu_D, s) with s the variance
//   GaussianDiagonal:  (mu_1..mu_D, s_1..s_D)
//   Gamma:             (alpha, beta)
//   PoissonProduct:    (lambda_1..lambda_D)
struct NaturalMap {
    std::vector<double> eta;
    numerics::Matrix jacobian;
};
NaturalMap natural_params_and_jacobian(Family family, std::span<const double> standard_params);

}  // namespace elbosum::efcore
