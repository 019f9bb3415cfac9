#include "elbosum/efcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "elbosum/errors.hpp"

namespace elbosum::efcore {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

// Sums per-component terms in value order so the result is bit-identical
// under any permutation of independent components.
double order_invariant_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    numerics::KahanSum acc;
    for (double t : terms) acc.add(t);
    return acc.value();
}

void require_open_unit(std::span<const double> pi, const char* who) {
    for (double p : pi)
        if (!(p > 0.0) || !(p < 1.0))
            throw std::domain_error(std::string(who) + ": probabilities must lie strictly in (0,1)");
}

void require_positive(std::span<const double> v, const char* who) {
    for (double x : v)
        if (!(x > 0.0))
            throw std::domain_error(std::string(who) + ": values must be positive");
}

// Dimension D of the data space implied by the natural-parameter length.
std::size_t data_dim(const EfDistribution& dist) {
    const std::size_t len = dist.natural_params.size();
    switch (dist.family) {
        case Family::GaussianScalarVar:
            if (len < 2) throw std::domain_error("GaussianScalarVar needs >= 2 natural params");
            return len - 1;
        case Family::GaussianDiagonal:
            if (len == 0 || len % 2 != 0)
                throw std::domain_error("GaussianDiagonal needs an even natural-param count");
            return len / 2;
        case Family::Gamma:
            if (len != 2) throw std::domain_error("Gamma needs exactly 2 natural params");
            return 1;
        default:
            if (len == 0) throw std::domain_error("empty natural-parameter vector");
            return len;
    }
}

}  // namespace

bool constant_base_measure(Family family) { return family != Family::PoissonProduct; }

EntropyValue bernoulli_product_entropy(std::span<const double> pi) {
    require_open_unit(pi, "bernoulli_product_entropy");
    std::vector<double> terms;
    terms.reserve(pi.size());
    for (double p : pi) terms.push_back(-p * std::log(p) - (1.0 - p) * std::log(1.0 - p));
    return {order_invariant_sum(std::move(terms)), EntropyKind::Entropy};
}

EntropyValue categorical_entropy(std::span<const double> pi) {
    if (pi.empty()) throw std::domain_error("categorical_entropy: empty probability vector");
    double sum = 0.0;
    std::vector<double> terms;
    terms.reserve(pi.size());
    for (double p : pi) {
        if (!(p > 0.0))
            throw std::domain_error("categorical_entropy: probabilities must be positive");
        sum += p;
        terms.push_back(-p * std::log(p));
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::domain_error("categorical_entropy: probabilities must sum to 1");
    return {order_invariant_sum(std::move(terms)), EntropyKind::Entropy};
}

EntropyValue gaussian_entropy_scalar(std::size_t d, double sigma2) {
    if (d < 1) throw std::domain_error("gaussian_entropy_scalar: dimension must be >= 1");
    if (!(sigma2 > 0.0)) throw std::domain_error("gaussian_entropy_scalar: variance must be positive");
    return {0.5 * static_cast<double>(d) * (kLog2Pi + 1.0 + std::log(sigma2)),
            EntropyKind::Entropy};
}

EntropyValue gaussian_entropy_diagonal(std::span<const double> sigma2) {
    require_positive(sigma2, "gaussian_entropy_diagonal");
    std::vector<double> terms;
    terms.reserve(sigma2.size());
    for (double s : sigma2) terms.push_back(0.5 * (kLog2Pi + 1.0 + std::log(s)));
    return {order_invariant_sum(std::move(terms)), EntropyKind::Entropy};
}

EntropyValue gaussian_entropy_full(const numerics::Matrix& sigma) {
    const double h = 0.5 * (static_cast<double>(sigma.rows()) * (kLog2Pi + 1.0) +
                            numerics::logdet_psd(sigma));
    return {h, EntropyKind::Entropy};
}

EntropyValue gamma_entropy(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw std::domain_error("gamma_entropy: shape and rate must be positive");
    const double h = alpha - std::log(beta) + numerics::log_gamma(alpha) +
                     (1.0 - alpha) * numerics::digamma(alpha);
    return {h, EntropyKind::Entropy};
}

EntropyValue poisson_pseudo_entropy(std::span<const double> lambda) {
    require_positive(lambda, "poisson_pseudo_entropy");
    std::vector<double> terms;
    terms.reserve(lambda.size());
    for (double l : lambda) terms.push_back(l * (1.0 - std::log(l)));
    return {order_invariant_sum(std::move(terms)), EntropyKind::PseudoEntropy};
}

double log_partition(const EfDistribution& dist) {
    const std::vector<double>& eta = dist.natural_params;
    const std::size_t d = data_dim(dist);
    switch (dist.family) {
        case Family::BernoulliProduct: {
            double a = 0.0;
            for (double e : eta) a += numerics::softplus(e);
            return a;
        }
        case Family::Categorical: {
            // A = log(1 + sum exp(eta_i)); the reference class contributes 1.
            std::vector<double> terms(eta.begin(), eta.end());
            terms.push_back(0.0);
            return numerics::logsumexp(terms);
        }
        case Family::GaussianScalarVar: {
            const double b = eta[d];
            if (!(b < 0.0))
                throw std::domain_error("log_partition: Gaussian precision component must be < 0");
            double q = 0.0;
            for (std::size_t i = 0; i < d; ++i) q += eta[i] * eta[i];
            return -q / (4.0 * b) + 0.5 * static_cast<double>(d) * std::log(-std::numbers::pi / b);
        }
        case Family::GaussianDiagonal: {
            double a = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double ai = eta[i], bi = eta[d + i];
                if (!(bi < 0.0))
                    throw std::domain_error(
                        "log_partition: Gaussian precision component must be < 0");
                a += -ai * ai / (4.0 * bi) + 0.5 * std::log(-std::numbers::pi / bi);
            }
            return a;
        }
        case Family::Gamma: {
            const double alpha = eta[0] + 1.0, negb = eta[1];
            if (!(alpha > 0.0) || !(negb < 0.0))
                throw std::domain_error("log_partition: Gamma natural params out of domain");
            return numerics::log_gamma(alpha) - alpha * std::log(-negb);
        }
        case Family::PoissonProduct: {
            double a = 0.0;
            for (double e : eta) a += std::exp(e);
            return a;
        }
    }
    throw std::logic_error("log_partition: unhandled family");
}

std::vector<double> log_partition_gradient(const EfDistribution& dist) {
    const std::vector<double>& eta = dist.natural_params;
    const std::size_t d = data_dim(dist);
    std::vector<double> g(eta.size(), 0.0);
    switch (dist.family) {
        case Family::BernoulliProduct:
            for (std::size_t i = 0; i < eta.size(); ++i) g[i] = numerics::sigmoid(eta[i]);
            return g;
        case Family::Categorical: {
            std::vector<double> terms(eta.begin(), eta.end());
            terms.push_back(0.0);
            const double lse = numerics::logsumexp(terms);
            for (std::size_t i = 0; i < eta.size(); ++i) g[i] = std::exp(eta[i] - lse);
            return g;
        }
        case Family::GaussianScalarVar: {
            const double b = eta[d];
            if (!(b < 0.0))
                throw std::domain_error(
                    "log_partition_gradient: Gaussian precision component must be < 0");
            double q = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                g[i] = -eta[i] / (2.0 * b);  // = mu_i = E[x_i]
                q += eta[i] * eta[i];
            }
            // dA/db = |eta_1|^2/(4 b^2) - D/(2b) = |mu|^2 + D*s = E[|x|^2].
            g[d] = q / (4.0 * b * b) - 0.5 * static_cast<double>(d) / b;
            return g;
        }
        case Family::GaussianDiagonal: {
            for (std::size_t i = 0; i < d; ++i) {
                const double ai = eta[i], bi = eta[d + i];
                if (!(bi < 0.0))
                    throw std::domain_error(
                        "log_partition_gradient: Gaussian precision component must be < 0");
                g[i] = -ai / (2.0 * bi);                                // E[x_i]
                g[d + i] = ai * ai / (4.0 * bi * bi) - 0.5 / bi;        // E[x_i^2]
            }
            return g;
        }
        case Family::Gamma: {
            const double alpha = eta[0] + 1.0, negb = eta[1];
            if (!(alpha > 0.0) || !(negb < 0.0))
                throw std::domain_error(
                    "log_partition_gradient: Gamma natural params out of domain");
            g[0] = numerics::digamma(alpha) - std::log(-negb);  // E[log x]
            g[1] = -alpha / negb;                               // E[x] = alpha/beta
            return g;
        }
        case Family::PoissonProduct:
            for (std::size_t i = 0; i < eta.size(); ++i) g[i] = std::exp(eta[i]);  // lambda_i
            return g;
    }
    throw std::logic_error("log_partition_gradient: unhandled family");
}

EntropyValue pseudo_entropy_generic(const EfDistribution& dist) {
    const std::vector<double> grad = log_partition_gradient(dist);
    const double value = -numerics::dot(dist.natural_params, grad) + log_partition(dist);
    return {value, constant_base_measure(dist.family) ? EntropyKind::Entropy
                                                      : EntropyKind::PseudoEntropy};
}

NaturalMap natural_params_and_jacobian(Family family, std::span<const double> params) {
    using numerics::Matrix;
    NaturalMap out;
    switch (family) {
        case Family::BernoulliProduct: {
            require_open_unit(params, "natural_params_and_jacobian(bernoulli)");
            const std::size_t h = params.size();
            out.eta.resize(h);
            out.jacobian = Matrix(h, h);
            for (std::size_t i = 0; i < h; ++i) {
                out.eta[i] = std::log(params[i] / (1.0 - params[i]));
                out.jacobian(i, i) = 1.0 / (params[i] * (1.0 - params[i]));
            }
            return out;
        }
        case Family::Categorical: {
            // params are the C-1 free probabilities; the reference class
            // carries the remaining mass.
            const std::size_t k = params.size();
            if (k == 0)
                throw std::domain_error("natural_params_and_jacobian(categorical): empty params");
            double rest = 1.0;
            for (double p : params) {
                if (!(p > 0.0))
                    throw std::domain_error(
                        "natural_params_and_jacobian(categorical): probabilities must be positive");
                rest -= p;
            }
            if (!(rest > 0.0))
                throw std::domain_error(
                    "natural_params_and_jacobian(categorical): free probabilities must sum to < 1");
            out.eta.resize(k);
            out.jacobian = Matrix(k, k);
            for (std::size_t i = 0; i < k; ++i) {
                out.eta[i] = std::log(params[i] / rest);
                for (std::size_t c = 0; c < k; ++c)
                    out.jacobian(i, c) = (i == c ? 1.0 / params[i] : 0.0) + 1.0 / rest;
            }
            return out;
        }
        case Family::GaussianScalarVar: {
            if (params.size() < 2)
                throw std::domain_error(
                    "natural_params_and_jacobian(gaussian-scalar): needs (mu..., variance)");
            const std::size_t d = params.size() - 1;
            const double s = params[d];
            if (!(s > 0.0))
                throw std::domain_error(
                    "natural_params_and_jacobian(gaussian-scalar): variance must be positive");
            out.eta.resize(d + 1);
            out.jacobian = Matrix(d + 1, d + 1);
            for (std::size_t i = 0; i < d; ++i) {
                out.eta[i] = params[i] / s;
                out.jacobian(i, i) = 1.0 / s;
                out.jacobian(i, d) = -params[i] / (s * s);
            }
            out.eta[d] = -0.5 / s;
            out.jacobian(d, d) = 0.5 / (s * s);
            return out;
        }
        case Family::GaussianDiagonal: {
            if (params.empty() || params.size() % 2 != 0)
                throw std::domain_error(
                    "natural_params_and_jacobian(gaussian-diagonal): needs (mu..., variances...)");
            const std::size_t d = params.size() / 2;
            out.eta.resize(2 * d);
            out.jacobian = Matrix(2 * d, 2 * d);
            for (std::size_t i = 0; i < d; ++i) {
                const double m = params[i], s = params[d + i];
                if (!(s > 0.0))
                    throw std::domain_error(
                        "natural_params_and_jacobian(gaussian-diagonal): variances must be positive");
                out.eta[i] = m / s;
                out.eta[d + i] = -0.5 / s;
                out.jacobian(i, i) = 1.0 / s;
                out.jacobian(i, d + i) = -m / (s * s);
                out.jacobian(d + i, d + i) = 0.5 / (s * s);
            }
            return out;
        }
        case Family::Gamma: {
            if (params.size() != 2)
                throw std::domain_error("natural_params_and_jacobian(gamma): needs (alpha, beta)");
            const double alpha = params[0], beta = params[1];
            if (!(alpha > 0.0) || !(beta > 0.0))
                throw std::domain_error(
                    "natural_params_and_jacobian(gamma): shape and rate must be positive");
            out.eta = {alpha - 1.0, -beta};
            out.jacobian = Matrix(2, 2);
            out.jacobian(0, 0) = 1.0;
            out.jacobian(1, 1) = -1.0;
            return out;
        }
        case Family::PoissonProduct: {
            require_positive(params, "natural_params_and_jacobian(poisson)");
            const std::size_t d = params.size();
            out.eta.resize(d);
            out.jacobian = Matrix(d, d);
            for (std::size_t i = 0; i < d; ++i) {
                out.eta[i] = std::log(params[i]);
                out.jacobian(i, i) = 1.0 / params[i];
            }
            return out;
        }
    }
    throw std::logic_error("natural_params_and_jacobian: unhandled family");
}

}  // namespace elbosum::efcore
