#include "wnci/linoracle.hpp"

#include <cmath>
#include <numbers>

#include "wnci/errors.hpp"

namespace wnci {

DenseMatrix regularized_gram(const DenseMatrix& inputs, double lambda) {
    if (lambda < 0.0) throw DomainError("ridge: lambda must be nonnegative");
    const std::size_t n = inputs.rows(), d = inputs.cols();
    if (n == 0) throw EmptyInputError("ridge: no samples");
    DenseMatrix gram(d, d);
    for (std::size_t s = 0; s < n; ++s) {
        auto x = inputs.row(s);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) gram(a, b) += x[a] * x[b];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) gram(a, b) = gram(a, b) * inv_n + (a == b ? lambda : 0.0);
    return gram;
}

Vector ridge_fit(const DenseMatrix& inputs, std::span<const double> responses, double lambda) {
    if (responses.size() != inputs.rows()) throw DimensionError("ridge_fit: responses length != n");
    const DenseMatrix gram = regularized_gram(inputs, lambda);
    Vector rhs(inputs.cols(), 0.0);
    for (std::size_t s = 0; s < inputs.rows(); ++s) axpy(responses[s], inputs.row(s), rhs);
    for (double& r : rhs) r /= static_cast<double>(inputs.rows());
    return dense_sym_solve(gram, rhs);
}

RidgeNorms ridge_weighted_norm(const DenseMatrix& inputs, double lambda, std::span<const double> x) {
    if (x.size() != inputs.cols()) throw DimensionError("ridge_weighted_norm: x dimension mismatch");
    const DenseMatrix gram = regularized_gram(inputs, lambda);
    const Vector s_inv_x = dense_sym_solve(gram, x);
    // Sigma_hat = Sigma_lambda - lambda I
    const Vector hat_s = subtract(gram.multiply(s_inv_x), scaled(s_inv_x, lambda));
    return {dot(s_inv_x, hat_s), dot(x, s_inv_x)};
}

RidgeInterval ridge_ci(const DenseMatrix& inputs, double lambda, std::span<const double> x, double sigma,
                       double delta, std::span<const double> theta_star) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("ridge_ci: delta must lie in (0, 1)");
    if (!(sigma >= 0.0)) throw DomainError("ridge_ci: sigma must be nonnegative");
    if (theta_star.size() != inputs.cols()) throw DimensionError("ridge_ci: theta* dimension mismatch");
    const DenseMatrix gram = regularized_gram(inputs, lambda);
    const Vector s_inv_x = dense_sym_solve(gram, x);
    const double n = static_cast<double>(inputs.rows());
    const double pi2 = std::numbers::pi * std::numbers::pi;
    RidgeInterval ci;
    ci.bias = lambda * std::abs(dot(s_inv_x, theta_star));
    ci.halfwidth = sigma * std::sqrt(0.5 * pi2 * std::log(2.0 / delta) / n) * std::sqrt(dot(x, s_inv_x));
    return ci;
}

double mc_coverage(const DenseMatrix& inputs, double lambda, std::span<const double> x, double sigma, double delta,
                   std::span<const double> theta_star, std::size_t trials, Rng& rng) {
    if (trials < 100) throw DomainError("mc_coverage: need at least 100 trials");
    const RidgeInterval ci = ridge_ci(inputs, lambda, x, sigma, delta, theta_star);
    const Vector clean = inputs.multiply(theta_star);
    const double target = dot(x, theta_star);
    std::size_t hits = 0;
    Vector y(clean.size());
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t s = 0; s < y.size(); ++s) y[s] = clean[s] + sigma * rng.normal();
        const Vector theta_hat = ridge_fit(inputs, y, lambda);
        if (std::abs(dot(x, theta_hat) - target) <= ci.bias + ci.halfwidth) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace wnci
