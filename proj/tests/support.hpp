#pragma once

#include <cmath>

#include "wnci/model.hpp"
#include "wnci/numkit.hpp"
#include "wnci/trainer.hpp"

namespace wnci::testing {

inline DenseMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

inline MlpModel random_model(const MlpArch& arch, Rng& rng, double scale = 1.0) {
    Vector theta = gaussian_vector(rng, arch.num_params());
    for (std::size_t k = 0; k < arch.num_layers(); ++k) {
        const double s = scale / std::sqrt(static_cast<double>(arch.layer_widths[k]));
        const std::size_t off = arch.weight_offset(k);
        for (std::size_t i = 0; i < arch.layer_widths[k] * arch.layer_widths[k + 1]; ++i) theta[off + i] *= s;
    }
    return MlpModel(arch, std::move(theta));
}

inline Dataset random_data(Rng& rng, std::size_t n, std::size_t d, double sigma = 0.1) {
    return Dataset(random_matrix(rng, n, d), gaussian_vector(rng, n), sigma);
}

inline double rel_err(std::span<const double> a, std::span<const double> b) {
    const double denom = std::max(norm2(b), 1e-300);
    return norm2(subtract(a, b)) / denom;
}

/// Columns H e_j of the regularized Hessian.
inline DenseMatrix assemble_hessian(const MlpModel& model, const Dataset& data, double lambda) {
    const std::size_t p = model.num_params();
    DenseMatrix h(p, p);
    for (std::size_t j = 0; j < p; ++j) {
        Vector e(p, 0.0);
        e[j] = 1.0;
        const Vector col = hvp_loss(model, data, lambda, e);
        for (std::size_t i = 0; i < p; ++i) h(i, j) = col[i];
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j) h(i, j) = h(j, i) = 0.5 * (h(i, j) + h(j, i));
    return h;
}

/// Central-difference gradient of L_lambda.
inline Vector fd_gradient(const MlpModel& model, const Dataset& data, double lambda, double h = 1e-6) {
    Vector g(model.num_params());
    for (std::size_t i = 0; i < g.size(); ++i) {
        MlpModel a = model, b = model;
        a.theta[i] += h;
        b.theta[i] -= h;
        g[i] = (loss_reg(a, data, lambda) - loss_reg(b, data, lambda)) / (2.0 * h);
    }
    return g;
}

inline Vector fd_hvp(const MlpModel& model, const Dataset& data, double lambda, std::span<const double> z,
                     double h = 1e-5) {
    MlpModel a = model, b = model;
    axpy(h, z, a.theta);
    axpy(-h, z, b.theta);
    return scaled(subtract(grad_theta_loss(a, data, lambda), grad_theta_loss(b, data, lambda)), 0.5 / h);
}

inline DenseMatrix random_spd(Rng& rng, std::size_t n, double shift = 1.0) {
    const DenseMatrix b = random_matrix(rng, n, n, 1.0 / std::sqrt(static_cast<double>(n)));
    DenseMatrix a = b.transposed().multiply(b);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += shift;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
    return a;
}

/// The 2-point orthonormal design x1 = (1,0), x2 = (0,1).
inline DenseMatrix two_point_design() { return DenseMatrix(2, 2, Vector{1, 0, 0, 1}); }

}  // namespace wnci::testing
