#include "wnci/numkit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "wnci/errors.hpp"

namespace wnci {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Vector entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols)
        throw DimensionError("DenseMatrix: entries length " + std::to_string(data_.size()) +
                             " != " + std::to_string(rows) + "x" + std::to_string(cols));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector DenseMatrix::multiply(std::span<const double> x) const {
    if (x.size() != cols_) throw DimensionError("DenseMatrix::multiply: vector length mismatch");
    Vector y(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) y[r] = dot(row(r), x);
    return y;
}

DenseMatrix DenseMatrix::multiply(const DenseMatrix& other) const {
    if (other.rows_ != cols_) throw DimensionError("DenseMatrix::multiply: shape mismatch");
    DenseMatrix out(rows_, other.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            auto src = other.row(k);
            auto dst = out.row(i);
            for (std::size_t j = 0; j < other.cols_; ++j) dst[j] += a * src[j];
        }
    return out;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double DenseMatrix::asymmetry() const {
    if (rows_ != cols_) throw DimensionError("asymmetry: matrix is not square");
    double scale = 0.0, worst = 0.0;
    for (double v : data_) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j)
            worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
    return scale > 0.0 ? worst / scale : 0.0;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector add(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("add: length mismatch");
    Vector out(a.begin(), a.end());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += b[i];
    return out;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("subtract: length mismatch");
    Vector out(a.begin(), a.end());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] -= b[i];
    return out;
}

Vector scaled(std::span<const double> a, double s) {
    Vector out(a.begin(), a.end());
    for (double& v : out) v *= s;
    return out;
}

bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix cholesky(const DenseMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("cholesky: matrix is not square");
    const std::size_t n = a.rows();
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0))
            throw DefinitenessError("cholesky: non-positive pivot at index " + std::to_string(j));
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            auto li = l.row(i);
            auto lj = l.row(j);
            for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
            l(i, j) = s / ljj;
        }
    }
    return l;
}

Vector cholesky_solve(const DenseMatrix& chol, std::span<const double> b) {
    const std::size_t n = chol.rows();
    if (b.size() != n) throw DimensionError("cholesky_solve: rhs length mismatch");
    Vector y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        double s = y[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol(i, k) * y[k];
        y[i] = s / chol(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= chol(k, i) * y[k];
        y[i] = s / chol(i, i);
    }
    return y;
}

Vector dense_sym_solve(const DenseMatrix& a, std::span<const double> b) {
    if (a.rows() != a.cols()) throw DimensionError("dense_sym_solve: matrix is not square");
    if (b.size() != a.rows()) throw DimensionError("dense_sym_solve: rhs length mismatch");
    if (a.asymmetry() > 1e-12) throw DefinitenessError("dense_sym_solve: matrix is not symmetric");
    const DenseMatrix l = cholesky(a);
    Vector x = cholesky_solve(l, b);
    // one step of iterative refinement keeps the residual near machine precision
    // on moderately conditioned systems
    const Vector r = subtract(b, a.multiply(x));
    const Vector dx = cholesky_solve(l, r);
    axpy(1.0, dx, x);
    return x;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t state = seed;
    for (auto& s : s_) s = splitmix64(state);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw DomainError("Rng::below: empty range");
    // Lemire-style rejection keeps the draw unbiased
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = -bound % bound;
    for (;;) {
        const std::uint64_t x = next_u64();
        const __uint128_t m = static_cast<__uint128_t>(x) * bound;
        if (static_cast<std::uint64_t>(m) >= limit) return static_cast<std::size_t>(m >> 64);
    }
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Marsaglia polar method
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

Rng Rng::split(std::uint64_t stream) const {
    std::uint64_t state = seed_ ^ (0xd1b54a32d192ed03ULL * (stream + 1));
    return Rng(splitmix64(state));
}

Vector gaussian_vector(Rng& rng, std::size_t dim) {
    if (dim == 0) throw DimensionError("gaussian_vector: dim must be >= 1");
    Vector out(dim);
    for (double& v : out) v = rng.normal();
    return out;
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw EmptyInputError("quantile: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile: q outside [0, 1]");
    Vector sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = std::ceil(q * static_cast<double>(sorted.size()));
    const long idx = std::clamp(static_cast<long>(rank) - 1, 0L, static_cast<long>(sorted.size()) - 1);
    return sorted[static_cast<std::size_t>(idx)];
}

double mean(std::span<const double> values) {
    if (values.empty()) throw EmptyInputError("mean: empty input");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size() - 1));
}

std::size_t worker_count() {
    if (const char* env = std::getenv("WNCI_WORKERS")) {
        try {
            const long n = std::stol(env);
            if (n >= 1) return static_cast<std::size_t>(n);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t workers) {
    if (workers == 0) workers = worker_count();
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace wnci
