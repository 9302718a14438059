#pragma once

// Small dense linear algebra, seeded sampling and order statistics used
// throughout the library. Everything is 64-bit.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace wnci {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, Vector entries);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    const Vector& entries() const { return data_; }

    Vector multiply(std::span<const double> x) const;
    DenseMatrix multiply(const DenseMatrix& other) const;
    DenseMatrix transposed() const;

    /// Largest |a_ij - a_ji| relative to the largest |a_ij|.
    double asymmetry() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double s);
bool all_finite(std::span<const double> a);

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Throws DefinitenessError on a non-positive pivot.
DenseMatrix cholesky(const DenseMatrix& a);
/// Solves L L^T x = b given the factor from cholesky().
Vector cholesky_solve(const DenseMatrix& chol, std::span<const double> b);

/// Direct solve of a symmetric positive definite system. Symmetry is checked,
/// not assumed.
Vector dense_sym_solve(const DenseMatrix& a, std::span<const double> b);

/// Reproducible generator: splitmix64-seeded xoshiro256** with our own
/// uniform and normal transforms, so streams do not depend on the standard
/// library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    /// Uniform on [0, 1).
    double uniform();
    /// Uniform integer on [0, n).
    std::size_t below(std::size_t n);
    double normal();

    /// Independent child stream, deterministic in (seed, stream).
    Rng split(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

Vector gaussian_vector(Rng& rng, std::size_t dim);

/// Nearest-rank empirical quantile: sorted[ceil(q * n) - 1], clamped.
double quantile(std::span<const double> values, double q);
double mean(std::span<const double> values);
double stddev(std::span<const double> values);

/// Worker count from WNCI_WORKERS, falling back to hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
/// visited exactly once; exceptions are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

}  // namespace wnci
