#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "elbosum/efcore.hpp"
#include "elbosum/numerics.hpp"

using elbosum::efcore::EfDistribution;
using elbosum::efcore::EntropyKind;
using elbosum::efcore::Family;
using elbosum::numerics::Matrix;

namespace {

constexpr double kLog2PiE = 2.8378770664093454836;  // log(2*pi*e)

// Brute-force entropy of a product of H Bernoullis by enumerating all 2^H
// states; the independent oracle for the closed form.
double bernoulli_enumeration_entropy(const std::vector<double>& pi) {
    const std::size_t h = pi.size();
    double ent = 0.0;
    for (std::size_t state = 0; state < (std::size_t{1} << h); ++state) {
        double p = 1.0;
        for (std::size_t i = 0; i < h; ++i)
            p *= ((state >> i) & 1u) ? pi[i] : (1.0 - pi[i]);
        ent -= p * std::log(p);
    }
    return ent;
}

// -integral of p log p for Gamma(alpha, beta), via composite Simpson after
// the substitution x = e^t (handles both tails smoothly).
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
    const double lo = std::log(1e-12), hi = std::log(std::max(200.0, 60.0 * alpha / beta));
    const int n = 40000;  // even
    const double h = (hi - lo) / n;
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < n; ++i) acc += integrand(lo + i * h) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

std::vector<double> random_natural_params(Family family, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto in = [&](double a, double b) { return a + (b - a) * u(gen); };
    switch (family) {
        case Family::BernoulliProduct:
            return {in(-3, 3), in(-3, 3), in(-3, 3), in(-3, 3)};
        case Family::Categorical:
            return {in(-2, 2), in(-2, 2), in(-2, 2), in(-2, 2), in(-2, 2)};
        case Family::GaussianScalarVar:
            return {in(-2, 2), in(-2, 2), in(-2, 2), in(-3.0, -0.3)};
        case Family::GaussianDiagonal:
            return {in(-2, 2), in(-2, 2), in(-2, 2), in(-3.0, -0.3), in(-3.0, -0.3),
                    in(-3.0, -0.3)};
        case Family::Gamma:
            return {in(-0.8, 4.0), in(-4.0, -0.2)};
        case Family::PoissonProduct:
            return {in(-1.5, 2.0), in(-1.5, 2.0), in(-1.5, 2.0)};
    }
    return {};
}

}  // namespace

TEST_CASE("bernoulli product entropy against enumeration") {
    const std::vector<double> fair = {0.5};
    CHECK(elbosum::efcore::bernoulli_product_entropy(fair).value ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));

    const std::vector<double> three = {0.5, 0.5, 0.5};
    CHECK(elbosum::efcore::bernoulli_product_entropy(three).value ==
          doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-14));

    const std::vector<double> skew = {0.1, 0.9};
    CHECK(elbosum::efcore::bernoulli_product_entropy(skew).value ==
          doctest::Approx(bernoulli_enumeration_entropy(skew)).epsilon(1e-13));

    const std::vector<double> bad = {0.3, 1.0};
    CHECK_THROWS_AS(elbosum::efcore::bernoulli_product_entropy(bad), std::domain_error);
}

TEST_CASE("categorical entropy") {
    const std::vector<double> uniform = {0.25, 0.25, 0.25, 0.25};
    CHECK(elbosum::efcore::categorical_entropy(uniform).value ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));

    const double eps = 1e-4;
    const std::vector<double> near = {1.0 - eps, eps};
    const double direct = -(1.0 - eps) * std::log(1.0 - eps) - eps * std::log(eps);
    CHECK(elbosum::efcore::categorical_entropy(near).value ==
          doctest::Approx(direct).epsilon(1e-14));

    std::mt19937_64 gen(11u);
    std::gamma_distribution<double> g(1.0, 1.0);
    std::vector<double> pi(6);
    double s = 0.0;
    for (double& p : pi) {
        p = g(gen) + 0.05;
        s += p;
    }
    for (double& p : pi) p /= s;
    double oracle = 0.0;
    for (double p : pi) oracle -= p * std::log(p);
    CHECK(elbosum::efcore::categorical_entropy(pi).value ==
          doctest::Approx(oracle).epsilon(1e-14));

    const std::vector<double> unnormalized = {0.5, 0.4};
    CHECK_THROWS_AS(elbosum::efcore::categorical_entropy(unnormalized), std::domain_error);
}

TEST_CASE("gaussian scalar entropy with Monte-Carlo oracle") {
    CHECK(elbosum::efcore::gaussian_entropy_scalar(2, 1.0 / (2.0 * std::numbers::pi * std::numbers::e))
              .value == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
    CHECK(elbosum::efcore::gaussian_entropy_scalar(1, 1.0).value ==
          doctest::Approx(0.5 * kLog2PiE).epsilon(1e-14));

    // D=3, sigma^2=0.25: -E[log p] estimated from 10^6 draws.
    const std::size_t d = 3, n = 1000000;
    const double sigma2 = 0.25;
    std::mt19937_64 gen(2024u);
    std::normal_distribution<double> nd(0.0, std::sqrt(sigma2));
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double q = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double x = nd(gen);
            q += x * x;
        }
        const double neg_log_p = 0.5 * d * std::log(2.0 * std::numbers::pi * sigma2) +
                                 q / (2.0 * sigma2);
        sum += neg_log_p;
        sum2 += neg_log_p * neg_log_p;
    }
    const double mc = sum / n;
    const double se = std::sqrt((sum2 / n - mc * mc) / n);
    const double closed = elbosum::efcore::gaussian_entropy_scalar(d, sigma2).value;
    CHECK(std::abs(closed - mc) <= 3.0 * se);

    CHECK_THROWS_AS(elbosum::efcore::gaussian_entropy_scalar(3, 0.0), std::domain_error);
}

TEST_CASE("gaussian diagonal entropy") {
    const double unit = 1.0 / (2.0 * std::numbers::pi * std::numbers::e);
    const std::vector<double> two_units = {unit, unit};
    CHECK(elbosum::efcore::gaussian_entropy_diagonal(two_units).value ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-13));

    const std::vector<double> ones(5, 1.0);
    CHECK(elbosum::efcore::gaussian_entropy_diagonal(ones).value ==
          doctest::Approx(2.5 * kLog2PiE).epsilon(1e-14));

    const std::vector<double> mix = {0.1, 1.0, 10.0};
    double scalar_sum = 0.0;
    for (double s : mix) scalar_sum += elbosum::efcore::gaussian_entropy_scalar(1, s).value;
    CHECK(elbosum::efcore::gaussian_entropy_diagonal(mix).value ==
          doctest::Approx(scalar_sum).epsilon(1e-14));
}

TEST_CASE("gaussian full-covariance entropy") {
    CHECK(elbosum::efcore::gaussian_entropy_full(Matrix::identity(2)).value ==
          doctest::Approx(kLog2PiE).epsilon(1e-14));

    const std::vector<double> vars = {0.3, 2.0, 5.5};
    CHECK(elbosum::efcore::gaussian_entropy_full(Matrix::diagonal(vars)).value ==
          doctest::Approx(elbosum::efcore::gaussian_entropy_diagonal(vars).value).epsilon(1e-13));

    // Random PD matrix: oracle via eigenvalues.
    std::mt19937_64 gen(5u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix b(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) b(i, j) = u(gen);
    Matrix s = b.transpose() * b;
    for (std::size_t i = 0; i < 3; ++i) s(i, i) += 1.0;
    const auto eig = elbosum::numerics::sym_eigen(s);
    double oracle = 1.5 * kLog2PiE;
    for (double lam : eig.eigenvalues) oracle += 0.5 * std::log(lam);
    CHECK(elbosum::efcore::gaussian_entropy_full(s).value ==
          doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("gamma entropy against quadrature") {
    CHECK(elbosum::efcore::gamma_entropy(1.0, 1.0).value == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(elbosum::efcore::gamma_entropy(1.0, 2.0).value ==
          doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-13));
    CHECK(std::abs(elbosum::efcore::gamma_entropy(3.5, 0.7).value -
                   gamma_entropy_quadrature(3.5, 0.7)) <= 1e-6);
    CHECK_THROWS_AS(elbosum::efcore::gamma_entropy(0.0, 1.0), std::domain_error);
}

TEST_CASE("poisson pseudo-entropy") {
    const std::vector<double> ones = {1.0, 1.0, 1.0};
    const auto ent_ones = elbosum::efcore::poisson_pseudo_entropy(ones);
    CHECK(ent_ones.value == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(ent_ones.kind == EntropyKind::PseudoEntropy);

    const std::vector<double> at_e = {std::numbers::e};
    CHECK(elbosum::efcore::poisson_pseudo_entropy(at_e).value ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-14));

    // lambda=(2, 0.5) against the generic -eta^T grad A + A formula.
    const std::vector<double> lam = {2.0, 0.5};
    EfDistribution pois{Family::PoissonProduct, {std::log(2.0), std::log(0.5)}};
    CHECK(elbosum::efcore::poisson_pseudo_entropy(lam).value ==
          doctest::Approx(elbosum::efcore::pseudo_entropy_generic(pois).value).epsilon(1e-13));

    const std::vector<double> bad = {1.0, 0.0};
    CHECK_THROWS_AS(elbosum::efcore::poisson_pseudo_entropy(bad), std::domain_error);
}

TEST_CASE("generic pseudo-entropy equals closed-form entropy for constant base measures") {
    // Gaussian scalar family: mu=(0.7,-0.2), variance 0.6.
    const std::vector<double> gauss_std = {0.7, -0.2, 0.6};
    const auto gauss = elbosum::efcore::natural_params_and_jacobian(Family::GaussianScalarVar,
                                                                    gauss_std);
    const auto generic = elbosum::efcore::pseudo_entropy_generic(
        EfDistribution{Family::GaussianScalarVar, gauss.eta});
    CHECK(generic.value ==
          doctest::Approx(elbosum::efcore::gaussian_entropy_scalar(2, 0.6).value).epsilon(1e-12));
    CHECK(generic.kind == EntropyKind::Entropy);

    // Categorical: random point on the simplex.
    const std::vector<double> pi = {0.23, 0.41, 0.36};
    const std::vector<double> free(pi.begin(), pi.end() - 1);
    const auto cat = elbosum::efcore::natural_params_and_jacobian(Family::Categorical, free);
    CHECK(elbosum::efcore::pseudo_entropy_generic(EfDistribution{Family::Categorical, cat.eta})
              .value ==
          doctest::Approx(elbosum::efcore::categorical_entropy(pi).value).epsilon(1e-12));
}

TEST_CASE("pseudo-entropy equals entropy across 100 random draws per constant-base family") {
    std::mt19937_64 gen(77u);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto in = [&](double a, double b) { return a + (b - a) * u(gen); };

    for (int draw = 0; draw < 100; ++draw) {
        // Bernoulli product, H = 3.
        std::vector<double> pi = {in(0.05, 0.95), in(0.05, 0.95), in(0.05, 0.95)};
        auto bern = elbosum::efcore::natural_params_and_jacobian(Family::BernoulliProduct, pi);
        CHECK(std::abs(elbosum::efcore::pseudo_entropy_generic(
                           EfDistribution{Family::BernoulliProduct, bern.eta})
                           .value -
                       elbosum::efcore::bernoulli_product_entropy(pi).value) <= 1e-11);

        // Categorical, C = 4.
        std::vector<double> w = {in(0.1, 1.0), in(0.1, 1.0), in(0.1, 1.0), in(0.1, 1.0)};
        double s = w[0] + w[1] + w[2] + w[3];
        for (double& x : w) x /= s;
        std::vector<double> free(w.begin(), w.end() - 1);
        auto cat = elbosum::efcore::natural_params_and_jacobian(Family::Categorical, free);
        CHECK(std::abs(elbosum::efcore::pseudo_entropy_generic(
                           EfDistribution{Family::Categorical, cat.eta})
                           .value -
                       elbosum::efcore::categorical_entropy(w).value) <= 1e-11);

        // Gaussian scalar variance, D = 2.
        const double sv = std::exp(in(-2.0, 2.0));
        std::vector<double> gs = {in(-3.0, 3.0), in(-3.0, 3.0), sv};
        auto gmap = elbosum::efcore::natural_params_and_jacobian(Family::GaussianScalarVar, gs);
        CHECK(std::abs(elbosum::efcore::pseudo_entropy_generic(
                           EfDistribution{Family::GaussianScalarVar, gmap.eta})
                           .value -
                       elbosum::efcore::gaussian_entropy_scalar(2, sv).value) <= 1e-11);

        // Gaussian diagonal, D = 2.
        std::vector<double> vars = {std::exp(in(-2.0, 2.0)), std::exp(in(-2.0, 2.0))};
        std::vector<double> gd = {in(-3.0, 3.0), in(-3.0, 3.0), vars[0], vars[1]};
        auto dmap = elbosum::efcore::natural_params_and_jacobian(Family::GaussianDiagonal, gd);
        CHECK(std::abs(elbosum::efcore::pseudo_entropy_generic(
                           EfDistribution{Family::GaussianDiagonal, dmap.eta})
                           .value -
                       elbosum::efcore::gaussian_entropy_diagonal(vars).value) <= 1e-11);

        // Gamma.
        const double alpha = std::exp(in(-1.0, 1.5)), beta = std::exp(in(-1.0, 1.5));
        auto gam = elbosum::efcore::natural_params_and_jacobian(Family::Gamma, {{alpha, beta}});
        CHECK(std::abs(
                  elbosum::efcore::pseudo_entropy_generic(EfDistribution{Family::Gamma, gam.eta})
                      .value -
                  elbosum::efcore::gamma_entropy(alpha, beta).value) <= 1e-11);
    }
}

TEST_CASE("log-partition gradient matches central finite differences") {
    std::mt19937_64 gen(31u);
    const Family families[] = {Family::BernoulliProduct, Family::Categorical,
                               Family::GaussianScalarVar, Family::GaussianDiagonal,
                               Family::Gamma, Family::PoissonProduct};
    for (Family family : families) {
        for (int draw = 0; draw < 50; ++draw) {
            const std::vector<double> eta = random_natural_params(family, gen);
            const EfDistribution dist{family, eta};
            const std::vector<double> grad = elbosum::efcore::log_partition_gradient(dist);
            for (std::size_t i = 0; i < eta.size(); ++i) {
                const double h = 1e-5 * std::max(1.0, std::abs(eta[i]));
                EfDistribution hi = dist, lo = dist;
                hi.natural_params[i] += h;
                lo.natural_params[i] -= h;
                const double fd = (elbosum::efcore::log_partition(hi) -
                                   elbosum::efcore::log_partition(lo)) /
                                  (2.0 * h);
                CHECK(std::abs(grad[i] - fd) <= 1e-6);
            }
        }
    }
}

TEST_CASE("natural parameter maps and analytic Jacobians") {
    const std::vector<double> half = {0.5};
    const auto bern = elbosum::efcore::natural_params_and_jacobian(Family::BernoulliProduct, half);
    CHECK(bern.eta[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(bern.jacobian(0, 0) == doctest::Approx(4.0).epsilon(1e-14));

    const std::vector<double> gamma_params = {2.0, 3.0};
    const auto gam = elbosum::efcore::natural_params_and_jacobian(Family::Gamma, gamma_params);
    CHECK(gam.eta[0] == doctest::Approx(1.0));
    CHECK(gam.eta[1] == doctest::Approx(-3.0));
    CHECK(gam.jacobian(0, 0) == 1.0);
    CHECK(gam.jacobian(0, 1) == 0.0);
    CHECK(gam.jacobian(1, 0) == 0.0);
    CHECK(gam.jacobian(1, 1) == -1.0);

    const std::vector<double> lam = {2.0, 4.0};
    const auto pois = elbosum::efcore::natural_params_and_jacobian(Family::PoissonProduct, lam);
    CHECK(pois.eta[0] == doctest::Approx(std::log(2.0)));
    CHECK(pois.eta[1] == doctest::Approx(std::log(4.0)));
    CHECK(pois.jacobian(0, 0) == doctest::Approx(0.5));
    CHECK(pois.jacobian(1, 1) == doctest::Approx(0.25));
    CHECK(pois.jacobian(0, 1) == 0.0);
}

TEST_CASE("analytic Jacobians match finite-difference Jacobians") {
    std::mt19937_64 gen(42u);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto in = [&](double a, double b) { return a + (b - a) * u(gen); };

    struct Case {
        Family family;
        std::vector<double> params;
    };
    std::vector<Case> cases;
    for (int rep = 0; rep < 10; ++rep) {
        cases.push_back({Family::BernoulliProduct, {in(0.1, 0.9), in(0.1, 0.9), in(0.1, 0.9)}});
        cases.push_back({Family::Categorical, {in(0.1, 0.4), in(0.1, 0.4)}});
        cases.push_back({Family::GaussianScalarVar, {in(-2, 2), in(-2, 2), in(0.2, 3.0)}});
        cases.push_back(
            {Family::GaussianDiagonal, {in(-2, 2), in(-2, 2), in(0.2, 3.0), in(0.2, 3.0)}});
        cases.push_back({Family::Gamma, {in(0.5, 5.0), in(0.2, 4.0)}});
        cases.push_back({Family::PoissonProduct, {in(0.3, 5.0), in(0.3, 5.0)}});
    }

    for (const Case& c : cases) {
        const auto map = elbosum::efcore::natural_params_and_jacobian(c.family, c.params);
        for (std::size_t j = 0; j < c.params.size(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(c.params[j]));
            std::vector<double> hi = c.params, lo = c.params;
            hi[j] += h;
            lo[j] -= h;
            const auto eta_hi = elbosum::efcore::natural_params_and_jacobian(c.family, hi).eta;
            const auto eta_lo = elbosum::efcore::natural_params_and_jacobian(c.family, lo).eta;
            for (std::size_t i = 0; i < map.eta.size(); ++i) {
                const double fd = (eta_hi[i] - eta_lo[i]) / (2.0 * h);
                CHECK(std::abs(map.jacobian(i, j) - fd) <= 1e-6);
            }
        }
    }
}

TEST_CASE("entropies are exactly permutation invariant") {
    const std::vector<double> pi = {0.2, 0.5, 0.7};
    const std::vector<double> rot = {0.7, 0.2, 0.5};
    CHECK(elbosum::efcore::bernoulli_product_entropy(pi).value ==
          elbosum::efcore::bernoulli_product_entropy(rot).value);

    const std::vector<double> cat = {0.1, 0.25, 0.65};
    const std::vector<double> cat_rot = {0.65, 0.1, 0.25};
    CHECK(elbosum::efcore::categorical_entropy(cat).value ==
          elbosum::efcore::categorical_entropy(cat_rot).value);

    const std::vector<double> vars = {0.3, 4.0, 1.7};
    const std::vector<double> vars_rot = {1.7, 0.3, 4.0};
    CHECK(elbosum::efcore::gaussian_entropy_diagonal(vars).value ==
          elbosum::efcore::gaussian_entropy_diagonal(vars_rot).value);

    const std::vector<double> lam = {2.0, 0.5, 7.3};
    const std::vector<double> lam_rot = {7.3, 2.0, 0.5};
    CHECK(elbosum::efcore::poisson_pseudo_entropy(lam).value ==
          elbosum::efcore::poisson_pseudo_entropy(lam_rot).value);
}

TEST_CASE("base measure constancy per family") {
    CHECK(elbosum::efcore::constant_base_measure(Family::BernoulliProduct));
    CHECK(elbosum::efcore::constant_base_measure(Family::Categorical));
    CHECK(elbosum::efcore::constant_base_measure(Family::GaussianScalarVar));
    CHECK(elbosum::efcore::constant_base_measure(Family::GaussianDiagonal));
    CHECK(elbosum::efcore::constant_base_measure(Family::Gamma));
    CHECK_FALSE(elbosum::efcore::constant_base_measure(Family::PoissonProduct));
}
