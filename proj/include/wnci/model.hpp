#pragma once

// Fully connected scalar-output network f(x; theta) = w_K^T h_{K-1},
// h_k = a(W_k h_{k-1} [+ b_k]), h_0 = x, together with exact first and
// second order derivatives of the least-squares objective.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wnci/numkit.hpp"

namespace wnci {

enum class Activation { relu, tanh, softplus, identity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

struct MlpArch {
    /// d, hidden widths..., 1
    std::vector<std::size_t> layer_widths;
    Activation activation = Activation::tanh;
    bool use_bias = false;

    /// Number of weight matrices K.
    std::size_t num_layers() const { return layer_widths.size() - 1; }
    std::size_t input_dim() const { return layer_widths.front(); }
    std::size_t num_params() const;
    /// Offset of W_k (row-major, out x in) in the flat parameter vector.
    std::size_t weight_offset(std::size_t k) const;

    /// Throws DimensionError when the widths do not describe a scalar network.
    void validate() const;
};

/// Convenience constructor: input d, hidden widths, scalar output.
MlpArch make_arch(std::size_t input_dim, const std::vector<std::size_t>& hidden, Activation act,
                  bool use_bias = false);

struct MlpModel {
    MlpArch arch;
    Vector theta;

    MlpModel() = default;
    MlpModel(MlpArch a, Vector t);

    std::size_t num_params() const { return theta.size(); }
    /// Reads W_k as a dense (out x in) matrix.
    DenseMatrix weight(std::size_t k) const;
};

/// Fixed-design regression data. Inputs are n x d.
struct Dataset {
    DenseMatrix inputs;
    Vector responses;
    double sigma = 1.0;
    std::optional<Vector> truth;

    Dataset() = default;
    Dataset(DenseMatrix x, Vector y, double noise_sd, std::optional<Vector> f_star = std::nullopt);

    std::size_t size() const { return inputs.rows(); }
    std::size_t dim() const { return inputs.cols(); }
    void validate() const;
};

double forward(const MlpModel& model, std::span<const double> x);
/// f(x_i; theta) for every row of inputs.
Vector forward_batch(const MlpModel& model, const DenseMatrix& inputs);

/// L(theta) = (1/2n) sum (f(x_i) - Y_i)^2
double loss(const MlpModel& model, const Dataset& data);
/// L(theta) + (lambda/2) ||theta||^2
double loss_reg(const MlpModel& model, const Dataset& data, double lambda);

Vector grad_theta_loss(const MlpModel& model, const Dataset& data, double lambda);

struct LossAndGrad {
    double loss = 0.0;      ///< L(theta)
    double reg_loss = 0.0;  ///< L_lambda(theta)
    Vector grad;            ///< grad L_lambda(theta)
};
/// One forward/backward sweep producing L, L_lambda and grad L_lambda.
LossAndGrad loss_and_grad(const MlpModel& model, const Dataset& data, double lambda);
Vector grad_theta_f(const MlpModel& model, std::span<const double> x);
/// Rows are grad_theta f(x_i) for each input row.
DenseMatrix jacobian(const MlpModel& model, const DenseMatrix& inputs);
/// (grad_theta f(x_i))^T direction for every input row, via one forward-mode pass.
Vector directional_derivatives(const MlpModel& model, const DenseMatrix& inputs,
                               std::span<const double> direction);
/// grad_x f(x; theta)
Vector grad_input(const MlpModel& model, std::span<const double> x);

/// The operator z -> (grad^2 L(theta) + lambda I) z with the forward pass over
/// the data cached once. Exact (forward-over-reverse); relu'' is taken as zero.
/// Copies share the cache; apply() is safe to call concurrently.
class RegularizedHessian {
public:
    RegularizedHessian(const MlpModel& model, const Dataset& data, double lambda);

    Vector apply(std::span<const double> z) const;
    Vector operator()(std::span<const double> z) const { return apply(z); }
    std::size_t dim() const { return dim_; }
    double lambda() const { return lambda_; }

private:
    struct State;
    std::shared_ptr<const State> state_;
    double lambda_;
    std::size_t dim_;
};

/// (grad^2 L(theta) + lambda I) z, exact (forward-over-reverse). The second
/// derivative of relu is taken as zero everywhere.
Vector hvp_loss(const MlpModel& model, const Dataset& data, double lambda, std::span<const double> z);

/// (L_lambda(theta) / (lambda K))^{K/2}; valid for 1-Lipschitz activations.
double lipschitz_bound(const MlpModel& model, double lambda, double loss_value);
/// prod_k ||W_k||_op (spectral norms by power iteration).
double operator_norm_product(const MlpModel& model);
double spectral_norm(const DenseMatrix& w);

}  // namespace wnci
