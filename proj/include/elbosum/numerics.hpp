#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace elbosum::numerics {

// Dense row-major matrix. Everything in this project is small (<= 64 dims),
// so no attempt at blocking or BLAS is made.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(data_.data() + i * cols_, cols_);
    }
    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    Matrix transpose() const;
    Matrix operator*(const Matrix& rhs) const;
    std::vector<double> mat_vec(std::span<const double> v) const;

    double trace() const;
    double frobenius_norm() const;
    bool all_finite() const;
    bool is_symmetric(double tol = 1e-12) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct SpectralDecomposition {
    std::vector<double> eigenvalues;  // sorted descending
    Matrix eigenvectors;              // column i pairs with eigenvalues[i]
};

// Cyclic Jacobi rotations; iteration cap 100 sweeps, off-diagonal tolerance
// 1e-13 relative to the Frobenius norm of the input.
SpectralDecomposition sym_eigen(const Matrix& a);

// log det of a symmetric positive-definite matrix via Cholesky.
// Throws std::domain_error when a pivot drops to (or below) zero.
double logdet_psd(const Matrix& a);

// Lower-triangular Cholesky factor; domain error on non-PD input.
Matrix cholesky(const Matrix& a);
std::vector<double> cholesky_solve(const Matrix& chol_lower, std::span<const double> b);
std::vector<double> solve_psd(const Matrix& a, std::span<const double> b);
Matrix inverse_psd(const Matrix& a);

// Special functions. log_gamma is a Lanczos approximation (g = 7, 9
// coefficients) with reflection below 0.5; digamma shifts the argument to
// >= 6 by the recurrence and then evaluates the asymptotic series.
double log_gamma(double a);
double digamma(double a);
double trigamma(double a);
double log_factorial(long long k);

double softplus(double a);
double sigmoid(double a);

double dot(std::span<const double> a, std::span<const double> b);
double two_norm(std::span<const double> v);
double inf_norm(std::span<const double> v);
double logsumexp(std::span<const double> v);

// Compensated summation, used wherever reductions feed tolerances tighter
// than plain accumulation noise.
class KahanSum {
public:
    void add(double x) {
        const double y = x - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

}  // namespace elbosum::numerics
