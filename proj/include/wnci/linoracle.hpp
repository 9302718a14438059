#pragma once

// Closed-form ridge regression: estimator, weighted norms and the linear
// confidence interval. Used as the analytic reference for the nonlinear path.

#include <cstddef>
#include <span>

#include "wnci/numkit.hpp"

namespace wnci {

/// Sigma_lambda = (1/n) X^T X + lambda I
DenseMatrix regularized_gram(const DenseMatrix& inputs, double lambda);

/// Sigma_lambda^{-1} (1/n) sum x_i Y_i
Vector ridge_fit(const DenseMatrix& inputs, std::span<const double> responses, double lambda);

struct RidgeNorms {
    /// x^T Sigma_lambda^{-1} Sigma_hat Sigma_lambda^{-1} x
    double exact = 0.0;
    /// x^T Sigma_lambda^{-1} x
    double upper = 0.0;
};
RidgeNorms ridge_weighted_norm(const DenseMatrix& inputs, double lambda, std::span<const double> x);

struct RidgeInterval {
    /// lambda |x^T Sigma_lambda^{-1} theta*|
    double bias = 0.0;
    /// sigma sqrt((pi^2/2) ln(2/delta) / n) ||x||_{Sigma_lambda^{-1}}
    double halfwidth = 0.0;
};
RidgeInterval ridge_ci(const DenseMatrix& inputs, double lambda, std::span<const double> x, double sigma,
                       double delta, std::span<const double> theta_star);

/// Fraction of noise redraws Y = X theta* + sigma eps for which
/// |x^T (theta_hat - theta*)| <= bias + halfwidth.
double mc_coverage(const DenseMatrix& inputs, double lambda, std::span<const double> x, double sigma, double delta,
                   std::span<const double> theta_star, std::size_t trials, Rng& rng);

}  // namespace wnci
