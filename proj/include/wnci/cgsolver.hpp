#pragma once

// Matrix-free conjugate gradient for symmetric positive (semi)definite
// operators, used to apply (grad^2 L + lambda I)^{-1} to a vector.

#include <cstddef>
#include <functional>
#include <span>

#include "wnci/numkit.hpp"

namespace wnci {

using LinearOperator = std::function<Vector(std::span<const double>)>;

struct CgConfig {
    std::size_t max_iters = 1000;
    /// relative residual target ||A h - v|| / ||v||
    double tolerance = 1e-12;
    /// stop and flag when p^T A p <= 0
    bool curvature_guard = true;

    void validate() const;
};

struct CgResult {
    Vector solution;
    std::size_t iterations = 0;
    /// true relative residual ||A h - v|| / ||v|| of the returned solution
    double final_residual = 0.0;
    bool curvature_flag = false;
    bool converged = false;
};

/// Conjugate gradient from h0 (empty span means zero start).
CgResult cg_solve(const LinearOperator& apply_a, std::span<const double> v, std::span<const double> h0,
                  const CgConfig& config);

/// ceil(sqrt(1 + B^2 / lambda) * ln(1 / epsilon))
std::size_t estimate_iterations(double grad_norm_max, double lambda, double epsilon);

}  // namespace wnci
