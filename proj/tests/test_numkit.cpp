#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>

#include "support.hpp"
#include "wnci/errors.hpp"
#include "wnci/numkit.hpp"

using namespace wnci;
using doctest::Approx;

TEST_CASE("dense_sym_solve on small systems") {
    CHECK(dense_sym_solve(DenseMatrix(2, 2, {2, 0, 0, 2}), Vector{1, 1}) == Vector{0.5, 0.5});
    const Vector x = dense_sym_solve(DenseMatrix::identity(3), Vector{1, 2, 3});
    CHECK(x == Vector{1, 2, 3});
    const Vector y = dense_sym_solve(DenseMatrix(2, 2, {2, 1, 1, 2}), Vector{3, 3});
    CHECK(y[0] == Approx(1.0).epsilon(1e-14));
    CHECK(y[1] == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("dense_sym_solve rejects bad input") {
    CHECK_THROWS_AS(dense_sym_solve(DenseMatrix(2, 3), Vector{1, 1}), DimensionError);
    CHECK_THROWS_AS(dense_sym_solve(DenseMatrix(2, 2, {1, 0.5, 0, 1}), Vector{1, 1}), DefinitenessError);
    CHECK_THROWS_AS(dense_sym_solve(DenseMatrix(2, 2, {1, 2, 2, 1}), Vector{1, 1}), DefinitenessError);
    CHECK_THROWS_AS(dense_sym_solve(DenseMatrix::identity(2), Vector{1, 1, 1}), DimensionError);
}

TEST_CASE("dense_sym_solve on a random SPD system") {
    Rng rng(3);
    const DenseMatrix a = testing::random_spd(rng, 40);
    const Vector x = gaussian_vector(rng, 40);
    const Vector b = a.multiply(x);
    CHECK(testing::rel_err(dense_sym_solve(a, b), x) < 1e-12);
}

TEST_CASE("matrix basics") {
    DenseMatrix m(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(m.entries().size() == 6);
    CHECK(m.multiply(Vector{1, 0, -1}) == Vector{-2, -2});
    const DenseMatrix t = m.transposed();
    CHECK(t.rows() == 3);
    CHECK(t(2, 1) == 6);
    const DenseMatrix p = m.multiply(t);
    CHECK(p(0, 0) == 14);
    CHECK(p(0, 1) == 32);
    CHECK_THROWS_AS(DenseMatrix(2, 2, Vector{1, 2, 3}), DimensionError);
    CHECK(DenseMatrix(2, 2, {1, 2, 2, 1}).asymmetry() == 0.0);
}

TEST_CASE("gaussian_vector is reproducible and standard") {
    Rng a(42), b(42);
    CHECK(gaussian_vector(a, 50) == gaussian_vector(b, 50));
    Rng big(7);
    const Vector z = gaussian_vector(big, 100000);
    double s = 0.0;
    for (double v : z) s += v * v;
    const double var = s / static_cast<double>(z.size());
    CHECK(var >= 0.97);
    CHECK(var <= 1.03);
    CHECK(std::abs(mean(z)) < 0.02);
    CHECK_THROWS_AS(gaussian_vector(big, 0), DimensionError);
}

TEST_CASE("affine transform of a scalar normal draw") {
    Rng a(5), b(5);
    const double m = 2.0, s = 3.0;
    const double z = gaussian_vector(a, 1)[0];
    CHECK(m + s * z == Approx(m + s * b.normal()));
}

TEST_CASE("rng streams") {
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(r.below(7) < 7);
    }
    Rng base(9);
    Rng s1 = base.split(1), s1b = base.split(1), s2 = base.split(2);
    const auto x = s1.next_u64();
    CHECK(x == s1b.next_u64());
    CHECK(x != s2.next_u64());
}

TEST_CASE("quantile uses nearest rank") {
    CHECK(quantile(Vector{1, 2, 3, 4}, 0.5) == 2);
    CHECK(quantile(Vector{5}, 0.0) == 5);
    CHECK(quantile(Vector{5}, 0.37) == 5);
    CHECK(quantile(Vector{5}, 1.0) == 5);
    CHECK(quantile(Vector{3, 1, 2}, 0.99) == 3);
    CHECK(quantile(Vector{3, 1, 2}, 0.0) == 1);
    CHECK_THROWS_AS(quantile(Vector{}, 0.5), EmptyInputError);
    CHECK_THROWS_AS(quantile(Vector{1}, 1.5), DomainError);
}

TEST_CASE("mean and stddev") {
    CHECK(mean(Vector{1, 2, 3}) == Approx(2.0));
    CHECK(stddev(Vector{1, 2, 3}) == Approx(1.0));
}

TEST_CASE("cholesky round trip") {
    Rng rng(11);
    const DenseMatrix a = testing::random_spd(rng, 8);
    const DenseMatrix l = cholesky(a);
    const DenseMatrix back = l.multiply(l.transposed());
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) CHECK(back(i, j) == Approx(a(i, j)).epsilon(1e-12));
}

TEST_CASE("parallel_for visits each index once") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, 4);
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS(parallel_for(10, [](std::size_t i) { if (i == 3) throw DomainError("boom"); }, 3));
}
