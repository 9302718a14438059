#pragma once

// Pointwise confidence bands for least-squares predictors from the weighted
// norm ||grad_theta f(x; theta)||^2_M with
//   M = H^{-1} (1/n sum_i g_i g_i^T) H^{-1},  H = grad^2 L + lambda I.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wnci/cgsolver.hpp"
#include "wnci/model.hpp"
#include "wnci/trainer.hpp"

namespace wnci {

enum class NormMode { regularized, interpolation };
std::string to_string(NormMode m);

struct WeightedNormResult {
    double value = 0.0;
    CgResult cg;
    NormMode mode = NormMode::regularized;
};

struct BoundParams {
    double sigma = 0.1;
    double delta = 0.01;
    /// sub-gamma variance factor
    double v = 1.0;
    /// sub-gamma scale
    double c = 1.0;
    std::size_t n = 1;

    void validate() const;
};

enum class BandMode { pointwise_thm31, pointwise_poly, uniform };
std::string to_string(BandMode m);
BandMode parse_band_mode(const std::string& s);

struct ConfidenceBand {
    double center = 0.0;
    double half_width = 0.0;
    double lb = 0.0;
    double ub = 0.0;
    BoundParams params;
    WeightedNormResult norm;
    BandMode mode = BandMode::pointwise_thm31;
};

/// Training losses at or below this count as interpolating when lambda == 0.
inline constexpr double kInterpolationLoss = 1e-10;

/// Solves H h = grad_theta f(x) by CG from zero and reduces it to the weighted
/// norm. `hessian` must be built from (model, data, lambda).
WeightedNormResult weighted_norm(const MlpModel& model, const Dataset& data, const RegularizedHessian& hessian,
                                 std::span<const double> x, const CgConfig& cg);
WeightedNormResult weighted_norm(const MlpModel& model, const Dataset& data, double lambda,
                                 std::span<const double> x, const CgConfig& cg);

/// Half-width with the expected weighted norm replaced by its empirical
/// sub-gamma upper estimate W + sqrt(2 v^2 ln(2/delta)) + c ln(2/delta).
double halfwidth_thm31(double weighted_norm, const BoundParams& params);
/// Same bound with a caller-supplied expected weighted norm (no substitution).
double halfwidth_thm31_oracle(double expected_norm, const BoundParams& params);
/// Both of the above with ln(2/delta) replaced by an arbitrary log term.
double halfwidth_from_log(double weighted_norm, const BoundParams& params, double log_term);
double halfwidth_from_log_oracle(double expected_norm, const BoundParams& params, double log_term);

/// sigma * sqrt(W / (delta n)); no tail assumption on W.
double halfwidth_poly(double weighted_norm, double sigma, std::size_t n, double delta);

struct UniformTerm {
    /// replaces ln(1/delta) in the pointwise bound
    double logterm = 0.0;
    /// added to the half-width
    double additive = 0.0;
};

/// d ln(3 n Lip(Delta) / delta), additive 1/n.
UniformTerm uniform_logterm(std::size_t d, std::size_t n, double lip_delta, double delta);
/// d ln(6 n / delta) + (K d / 2) ln(C / (lambda K)), additive 1/n.
UniformTerm uniform_logterm_network(std::size_t d, std::size_t n, double delta, std::size_t num_layers,
                                    double initial_loss_bound, double lambda);

struct BandOptions {
    BandMode mode = BandMode::pointwise_thm31;
    /// Lip(Delta) for uniform mode; <= 0 selects 2 * lipschitz_bound(model, lambda, C)
    double lip_delta = 0.0;
    /// C = L_lambda(theta_0) for the default Lip(Delta)
    double initial_loss = 0.0;
};

ConfidenceBand band(const MlpModel& model, const Dataset& data, const RegularizedHessian& hessian,
                    std::span<const double> x, const BoundParams& params, const CgConfig& cg,
                    const BandOptions& options = {});
ConfidenceBand band(const MlpModel& model, const Dataset& data, double lambda, std::span<const double> x,
                    const BoundParams& params, const CgConfig& cg, const BandOptions& options = {});

/// Bands for every row of test_inputs with delta divided by the number of
/// rows (union bound). Rows are processed in parallel.
std::vector<ConfidenceBand> band_batch(const MlpModel& model, const Dataset& data, double lambda,
                                       const DenseMatrix& test_inputs, BoundParams params, const CgConfig& cg,
                                       const BandOptions& options = {}, std::size_t workers = 0);

/// Band CSV: test_index,x,center,lb,ub,half_width,W,cg_iters,cg_residual,curvature_flag,mode
void write_band_csv(std::ostream& os, const std::vector<ConfidenceBand>& bands, const DenseMatrix& test_inputs,
                    const std::string& method);

struct SensitivityResult {
    double analytic = 0.0;
    double empirical = 0.0;
    double alignment_residual = 0.0;
};

struct SensitivityOptions {
    /// perturbation of the standardized noise eps_i
    double step = 1e-3;
    /// retrainings must reach this alignment residual
    double stationarity_tol = 1e-8;
    CgConfig cg;
};

/// d f(x; theta_hat) / d eps_i where Y_i = f*(x_i) + sigma eps_i, computed
/// from the inverse-Hessian identity and by central differences over full
/// retrainings with Y_i shifted by +- sigma * step.
SensitivityResult sensitivity_check(const MlpArch& arch, const Dataset& data, const TrainConfig& config,
                                    std::span<const double> x, std::size_t i, const SensitivityOptions& options = {});

}  // namespace wnci
