#include "wnci/cgsolver.hpp"

#include <cmath>

#include "wnci/errors.hpp"

namespace wnci {

void CgConfig::validate() const {
    if (max_iters < 1) throw DomainError("CgConfig: max_iters must be >= 1");
    if (!(tolerance > 0.0)) throw DomainError("CgConfig: tolerance must be positive");
}

CgResult cg_solve(const LinearOperator& apply_a, std::span<const double> v, std::span<const double> h0,
                  const CgConfig& config) {
    config.validate();
    if (!all_finite(v)) throw NumericError("cg_solve: non-finite right-hand side");
    const std::size_t p = v.size();
    if (!h0.empty() && h0.size() != p) throw DimensionError("cg_solve: h0 length mismatch");

    CgResult res;
    res.solution = h0.empty() ? Vector(p, 0.0) : Vector(h0.begin(), h0.end());
    const double v_norm = norm2(v);
    if (v_norm == 0.0 && h0.empty()) {
        res.converged = true;
        return res;
    }

    const double scale = v_norm > 0.0 ? v_norm : 1.0;
    const double target = config.tolerance * scale;
    Vector r(v.begin(), v.end());
    if (!h0.empty()) axpy(-1.0, apply_a(res.solution), r);

    // The recursive residual drifts from the true one in floating point; when it
    // claims convergence but the true residual disagrees, restart from the
    // current iterate with a freshly computed residual.
    for (int restart = 0;; ++restart) {
        Vector d = r;
        double rr = dot(r, r);
        while (std::sqrt(rr) > target && res.iterations < config.max_iters) {
            const Vector ad = apply_a(d);
            const double curvature = dot(d, ad);
            if (config.curvature_guard && !(curvature > 0.0)) {
                res.curvature_flag = true;
                break;
            }
            const double alpha = rr / curvature;
            axpy(alpha, d, res.solution);
            axpy(-alpha, ad, r);
            ++res.iterations;
            if (!all_finite(res.solution)) throw NumericError("cg_solve: non-finite iterate");
            const double rr_next = dot(r, r);
            const double beta = rr_next / rr;
            rr = rr_next;
            for (std::size_t i = 0; i < p; ++i) d[i] = r[i] + beta * d[i];
        }
        r = subtract(v, apply_a(res.solution));
        res.final_residual = norm2(r) / scale;
        res.converged = !res.curvature_flag && res.final_residual <= config.tolerance;
        if (res.converged || res.curvature_flag || res.iterations >= config.max_iters || restart >= 4) break;
    }
    return res;
}

std::size_t estimate_iterations(double grad_norm_max, double lambda, double epsilon) {
    if (!(lambda > 0.0)) throw DomainError("estimate_iterations: lambda must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("estimate_iterations: epsilon must be in (0, 1)");
    const double k = std::sqrt(1.0 + grad_norm_max * grad_norm_max / lambda) * std::log(1.0 / epsilon);
    return static_cast<std::size_t>(std::ceil(k - 1e-12 * k));
}

}  // namespace wnci
