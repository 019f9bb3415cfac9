#include "elbosum/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "elbosum/errors.hpp"

namespace elbosum::numerics {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix();
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols())
            throw std::invalid_argument("Matrix::from_rows: ragged rows");
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (cols_ != rhs.rows_)
        throw std::invalid_argument("Matrix multiply: inner dimensions differ");
    Matrix out(rows_, rhs.cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(k, j);
        }
    }
    return out;
}

std::vector<double> Matrix::mat_vec(std::span<const double> v) const {
    if (cols_ != v.size())
        throw std::invalid_argument("Matrix::mat_vec: dimension mismatch");
    std::vector<double> out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = dot(row(i), v);
    return out;
}

double Matrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

bool Matrix::is_symmetric(double tol) const {
    if (rows_ != cols_) return false;
    double scale = 0.0;
    for (double x : data_) scale = std::max(scale, std::abs(x));
    const double bound = tol * std::max(1.0, scale);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j)
            if (std::abs((*this)(i, j) - (*this)(j, i)) > bound) return false;
    return true;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace

SpectralDecomposition sym_eigen(const Matrix& input) {
    if (input.rows() != input.cols())
        throw std::invalid_argument("sym_eigen: matrix must be square");
    if (!input.all_finite())
        throw std::invalid_argument("sym_eigen: matrix has non-finite entries");
    if (!input.is_symmetric(1e-12))
        throw std::invalid_argument("sym_eigen: matrix is not symmetric");

    const std::size_t n = input.rows();
    Matrix a = input;
    Matrix v = Matrix::identity(n);

    const double tol = 1e-13 * std::max(1.0, input.frobenius_norm());
    constexpr int max_sweeps = 100;

    bool converged = (n <= 1) || off_diagonal_norm(a) <= tol;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Classic symmetric Schur rotation.
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(a) <= tol;
    }
    if (!converged)
        throw NumericalFailure("sym_eigen: Jacobi sweeps did not converge");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SpectralDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

Matrix cholesky(const Matrix& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("cholesky: matrix must be square");
    if (!a.is_symmetric(1e-10))
        throw std::invalid_argument("cholesky: matrix is not symmetric");

    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0))
            throw std::domain_error("cholesky: matrix is not positive definite");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

double logdet_psd(const Matrix& a) {
    const Matrix l = cholesky(a);
    double s = 0.0;
    for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    if (b.size() != n)
        throw std::invalid_argument("cholesky_solve: dimension mismatch");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

std::vector<double> solve_psd(const Matrix& a, std::span<const double> b) {
    return cholesky_solve(cholesky(a), b);
}

Matrix inverse_psd(const Matrix& a) {
    const std::size_t n = a.rows();
    const Matrix l = cholesky(a);
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const std::vector<double> col = cholesky_solve(l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    // Symmetrize away the last bits of solve noise.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = m;
            inv(j, i) = m;
        }
    return inv;
}

double log_gamma(double a) {
    if (!(a > 0.0))
        throw std::domain_error("log_gamma: argument must be positive");

    // Lanczos, g = 7, 9 coefficients.
    static constexpr double kCoeff[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };

    if (a < 0.5) {
        // Reflection: log Gamma(a) = log(pi / sin(pi a)) - log Gamma(1 - a).
        return std::log(std::numbers::pi / std::sin(std::numbers::pi * a)) - log_gamma(1.0 - a);
    }

    const double x = a - 1.0;
    double sum = kCoeff[0];
    for (int i = 1; i < 9; ++i) sum += kCoeff[i] / (x + static_cast<double>(i));
    const double base = x + 7.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(base) - base +
           std::log(sum);
}

double digamma(double a) {
    if (!(a > 0.0))
        throw std::domain_error("digamma: argument must be positive");

    double result = 0.0;
    double x = a;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    // Asymptotic series through the x^-16 Bernoulli term; at x >= 6 the
    // truncation error is ~3e-14.
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = -0.5 * inv;
    double p = inv2;
    series -= p / 12.0;
    p *= inv2;
    series += p / 120.0;
    p *= inv2;
    series -= p / 252.0;
    p *= inv2;
    series += p / 240.0;
    p *= inv2;
    series -= p / 132.0;
    p *= inv2;
    series += p * (691.0 / 32760.0);
    p *= inv2;
    series -= p / 12.0;
    p *= inv2;
    series += p * (3617.0 / 8160.0);
    return result + std::log(x) + series;
}

double trigamma(double a) {
    if (!(a > 0.0))
        throw std::domain_error("trigamma: argument must be positive");

    double result = 0.0;
    double x = a;
    while (x < 6.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // psi'(x) ~ 1/x + 1/(2x^2) + sum_k B_{2k} / x^{2k+1}.
    double series = inv + 0.5 * inv2;
    double p = inv * inv2;
    series += p / 6.0;
    p *= inv2;
    series -= p / 30.0;
    p *= inv2;
    series += p / 42.0;
    p *= inv2;
    series -= p / 30.0;
    p *= inv2;
    series += p * (5.0 / 66.0);
    p *= inv2;
    series -= p * (691.0 / 2730.0);
    p *= inv2;
    series += p * (7.0 / 6.0);
    return result + series;
}

double log_factorial(long long k) {
    if (k < 0)
        throw std::domain_error("log_factorial: argument must be non-negative");
    // Exact factorials up to 20! fit in 64 bits, so log them directly.
    static const std::array<double, 21> kTable = [] {
        std::array<double, 21> t{};
        unsigned long long f = 1;
        t[0] = 0.0;
        for (unsigned long long i = 1; i <= 20; ++i) {
            f *= i;
            t[i] = std::log(static_cast<double>(f));
        }
        return t;
    }();
    if (k <= 20) return kTable[static_cast<std::size_t>(k)];
    return log_gamma(static_cast<double>(k) + 1.0);
}

double softplus(double a) {
    // log(1 + e^a) without overflow.
    return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a)));
}

double sigmoid(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double two_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double logsumexp(std::span<const double> v) {
    if (v.empty())
        throw std::invalid_argument("logsumexp: empty input");
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace elbosum::numerics
