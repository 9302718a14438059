#include "wnci/model.hpp"

#include <algorithm>
#include <memory>
#include <cmath>

#include "wnci/errors.hpp"

namespace wnci {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::softplus: return "softplus";
        case Activation::identity: return "identity";
    }
    return "unknown";
}

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "softplus") return Activation::softplus;
    if (name == "identity" || name == "linear") return Activation::identity;
    throw DomainError("unknown activation '" + name + "'");
}

void MlpArch::validate() const {
    if (layer_widths.size() < 2) throw DimensionError("MlpArch: need at least one layer");
    if (layer_widths.back() != 1) throw DimensionError("MlpArch: output width must be 1");
    for (std::size_t w : layer_widths)
        if (w == 0) throw DimensionError("MlpArch: zero layer width");
}

std::size_t MlpArch::weight_offset(std::size_t k) const {
    std::size_t off = 0;
    for (std::size_t j = 0; j < k; ++j)
        off += layer_widths[j + 1] * layer_widths[j] + (use_bias ? layer_widths[j + 1] : 0);
    return off;
}

std::size_t MlpArch::num_params() const { return weight_offset(num_layers()); }

MlpArch make_arch(std::size_t input_dim, const std::vector<std::size_t>& hidden, Activation act,
                  bool use_bias) {
    MlpArch arch;
    arch.layer_widths.push_back(input_dim);
    arch.layer_widths.insert(arch.layer_widths.end(), hidden.begin(), hidden.end());
    arch.layer_widths.push_back(1);
    arch.activation = act;
    arch.use_bias = use_bias;
    arch.validate();
    return arch;
}

MlpModel::MlpModel(MlpArch a, Vector t) : arch(std::move(a)), theta(std::move(t)) {
    arch.validate();
    if (theta.size() != arch.num_params())
        throw DimensionError("MlpModel: theta has " + std::to_string(theta.size()) + " entries, arch needs " +
                             std::to_string(arch.num_params()));
    if (!all_finite(theta)) throw NumericError("MlpModel: non-finite parameter");
}

DenseMatrix MlpModel::weight(std::size_t k) const {
    const std::size_t in = arch.layer_widths[k], out = arch.layer_widths[k + 1];
    const std::size_t off = arch.weight_offset(k);
    return DenseMatrix(out, in, Vector(theta.begin() + off, theta.begin() + off + out * in));
}

Dataset::Dataset(DenseMatrix x, Vector y, double noise_sd, std::optional<Vector> f_star)
    : inputs(std::move(x)), responses(std::move(y)), sigma(noise_sd), truth(std::move(f_star)) {
    validate();
}

void Dataset::validate() const {
    if (inputs.rows() == 0) throw EmptyInputError("Dataset: no samples");
    if (responses.size() != inputs.rows()) throw DimensionError("Dataset: responses length != n");
    if (truth && truth->size() != inputs.rows()) throw DimensionError("Dataset: truth length != n");
    if (!(sigma >= 0.0)) throw DomainError("Dataset: sigma must be nonnegative");
}

namespace {

double act(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::softplus: return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
        case Activation::identity: return x;
    }
    return x;
}

double act_d1(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::softplus: return 1.0 / (1.0 + std::exp(-x));
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

double act_d2(Activation a, double x) {
    switch (a) {
        case Activation::relu: return 0.0;
        case Activation::tanh: {
            const double t = std::tanh(x);
            return -2.0 * t * (1.0 - t * t);
        }
        case Activation::softplus: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case Activation::identity: return 0.0;
    }
    return 0.0;
}

// Batch evaluation over n samples. Layer k maps inputs[k] (n x in_k) to
// pre[k] (n x out_k); inputs[k+1] = a(pre[k]) for hidden layers.
class Engine {
public:
    Engine(const MlpModel& model, const DenseMatrix& x)
        : arch_(model.arch), theta_(model.theta), n_(x.rows()), K_(arch_.num_layers()) {
        if (x.cols() != arch_.input_dim())
            throw DimensionError("input dimension " + std::to_string(x.cols()) + " != model input " +
                                 std::to_string(arch_.input_dim()));
        inputs_.resize(K_);
        pre_.resize(K_);
        inputs_[0] = x.entries();
        for (std::size_t k = 0; k < K_; ++k) {
            pre_[k] = affine(k, inputs_[k], theta_, true);
            if (k + 1 < K_) {
                Vector h(pre_[k].size());
                for (std::size_t i = 0; i < h.size(); ++i) h[i] = act(arch_.activation, pre_[k][i]);
                inputs_[k + 1] = std::move(h);
            }
        }
        if (!all_finite(pre_[K_ - 1])) throw NumericError("forward: non-finite network output");
    }

    const Vector& output() const { return pre_[K_ - 1]; }

    struct Tangent {
        std::vector<Vector> inputs;
        std::vector<Vector> pre;
        const Vector& output() const { return pre.back(); }
    };

    // Forward-mode pass along parameter direction v.
    Tangent tangent(std::span<const double> v) const {
        if (v.size() != theta_.size()) throw DimensionError("direction length != number of parameters");
        Tangent t;
        t.inputs.assign(K_, Vector());
        t.pre.assign(K_, Vector());
        t.inputs[0].assign(inputs_[0].size(), 0.0);
        for (std::size_t k = 0; k < K_; ++k) {
            // R{pre} = W R{h} + V h + vb
            Vector r = affine(k, inputs_[k], v, true);
            if (k > 0) {
                const Vector wr = affine(k, t.inputs[k], theta_, false);
                for (std::size_t i = 0; i < r.size(); ++i) r[i] += wr[i];
            }
            t.pre[k] = std::move(r);
            if (k + 1 < K_) {
                Vector rh(t.pre[k].size());
                for (std::size_t i = 0; i < rh.size(); ++i)
                    rh[i] = act_d1(arch_.activation, pre_[k][i]) * t.pre[k][i];
                t.inputs[k + 1] = std::move(rh);
            }
        }
        return t;
    }

    // Sum over samples of weight[s] * grad_theta f(x_s). Optionally also returns
    // the input gradient rows (n x d) in input_grad.
    Vector backward(std::span<const double> weights, Vector* input_grad = nullptr) const {
        Vector grad(theta_.size(), 0.0);
        Vector delta(weights.begin(), weights.end());
        for (std::size_t k = K_; k-- > 0;) {
            accumulate_outer(k, delta, inputs_[k], grad);
            if (k == 0 && !input_grad) break;
            Vector g = transpose_apply(k, delta, theta_);
            if (k == 0) {
                *input_grad = std::move(g);
                break;
            }
            const Vector& a = pre_[k - 1];
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= act_d1(arch_.activation, a[i]);
            delta = std::move(g);
        }
        return grad;
    }

    // Forward-over-reverse: directional derivative of backward(weights) along v,
    // where the weights themselves have tangent r_weights; t = tangent(v).
    Vector backward_tangent(const Tangent& t, std::span<const double> weights, std::span<const double> r_weights,
                            std::span<const double> v) const {
        Vector r_grad(theta_.size(), 0.0);
        Vector delta(weights.begin(), weights.end());
        Vector r_delta(r_weights.begin(), r_weights.end());
        for (std::size_t k = K_; k-- > 0;) {
            accumulate_outer(k, r_delta, inputs_[k], r_grad);
            if (k > 0) accumulate_outer_weights_only(k, delta, t.inputs[k], r_grad);
            if (k == 0) break;
            Vector g = transpose_apply(k, delta, theta_);
            Vector rg = transpose_apply(k, r_delta, theta_);
            const Vector vg = transpose_apply(k, delta, v);
            const Vector& a = pre_[k - 1];
            const Vector& ra = t.pre[k - 1];
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double d1 = act_d1(arch_.activation, a[i]);
                const double d2 = act_d2(arch_.activation, a[i]);
                rg[i] = d2 * ra[i] * g[i] + d1 * (rg[i] + vg[i]);
                g[i] *= d1;
            }
            delta = std::move(g);
            r_delta = std::move(rg);
        }
        return r_grad;
    }

private:
    // out[s, j] = sum_i W[j, i] x[s, i] (+ b[j])
    Vector affine(std::size_t k, const Vector& x, std::span<const double> params, bool with_bias) const {
        const std::size_t in = arch_.layer_widths[k], out = arch_.layer_widths[k + 1];
        const std::size_t off = arch_.weight_offset(k);
        const double* w = params.data() + off;
        Vector y(n_ * out, 0.0);
        for (std::size_t s = 0; s < n_; ++s) {
            const double* xs = x.data() + s * in;
            double* ys = y.data() + s * out;
            for (std::size_t j = 0; j < out; ++j) {
                const double* wj = w + j * in;
                double acc = 0.0;
                for (std::size_t i = 0; i < in; ++i) acc += wj[i] * xs[i];
                ys[j] = acc;
            }
            if (with_bias && arch_.use_bias) {
                const double* b = w + out * in;
                for (std::size_t j = 0; j < out; ++j) ys[j] += b[j];
            }
        }
        return y;
    }

    // g[s, i] = sum_j W[j, i] delta[s, j]
    Vector transpose_apply(std::size_t k, const Vector& delta, std::span<const double> params) const {
        const std::size_t in = arch_.layer_widths[k], out = arch_.layer_widths[k + 1];
        const double* w = params.data() + arch_.weight_offset(k);
        Vector g(n_ * in, 0.0);
        for (std::size_t s = 0; s < n_; ++s) {
            double* gs = g.data() + s * in;
            const double* ds = delta.data() + s * out;
            for (std::size_t j = 0; j < out; ++j) {
                const double dj = ds[j];
                if (dj == 0.0) continue;
                const double* wj = w + j * in;
                for (std::size_t i = 0; i < in; ++i) gs[i] += dj * wj[i];
            }
        }
        return g;
    }

    // grad W[j, i] += sum_s delta[s, j] x[s, i]; grad b[j] += sum_s delta[s, j]
    void accumulate_outer(std::size_t k, const Vector& delta, const Vector& x, Vector& grad) const {
        accumulate_outer_weights_only(k, delta, x, grad);
        if (!arch_.use_bias) return;
        const std::size_t in = arch_.layer_widths[k], out = arch_.layer_widths[k + 1];
        double* gb = grad.data() + arch_.weight_offset(k) + out * in;
        for (std::size_t s = 0; s < n_; ++s)
            for (std::size_t j = 0; j < out; ++j) gb[j] += delta[s * out + j];
    }

    void accumulate_outer_weights_only(std::size_t k, const Vector& delta, const Vector& x, Vector& grad) const {
        const std::size_t in = arch_.layer_widths[k], out = arch_.layer_widths[k + 1];
        double* gw = grad.data() + arch_.weight_offset(k);
        for (std::size_t s = 0; s < n_; ++s) {
            const double* xs = x.data() + s * in;
            const double* ds = delta.data() + s * out;
            for (std::size_t j = 0; j < out; ++j) {
                const double dj = ds[j];
                if (dj == 0.0) continue;
                double* gj = gw + j * in;
                for (std::size_t i = 0; i < in; ++i) gj[i] += dj * xs[i];
            }
        }
    }

    const MlpArch& arch_;
    std::span<const double> theta_;
    std::size_t n_;
    std::size_t K_;
    std::vector<Vector> inputs_;
    std::vector<Vector> pre_;
};

DenseMatrix single_row(std::span<const double> x) { return DenseMatrix(1, x.size(), Vector(x.begin(), x.end())); }

Vector residual_weights(const Vector& out, const Dataset& data) {
    const double inv_n = 1.0 / static_cast<double>(data.size());
    Vector w(out.size());
    for (std::size_t s = 0; s < out.size(); ++s) w[s] = (out[s] - data.responses[s]) * inv_n;
    return w;
}

}  // namespace

double forward(const MlpModel& model, std::span<const double> x) {
    return Engine(model, single_row(x)).output()[0];
}

Vector forward_batch(const MlpModel& model, const DenseMatrix& inputs) {
    return Engine(model, inputs).output();
}

double loss(const MlpModel& model, const Dataset& data) {
    const Vector out = forward_batch(model, data.inputs);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = out[i] - data.responses[i];
        s += r * r;
    }
    return s / (2.0 * static_cast<double>(data.size()));
}

double loss_reg(const MlpModel& model, const Dataset& data, double lambda) {
    if (lambda < 0.0) throw DomainError("loss_reg: lambda must be nonnegative");
    return loss(model, data) + 0.5 * lambda * dot(model.theta, model.theta);
}

Vector grad_theta_loss(const MlpModel& model, const Dataset& data, double lambda) {
    const Engine eng(model, data.inputs);
    Vector grad = eng.backward(residual_weights(eng.output(), data));
    axpy(lambda, model.theta, grad);
    return grad;
}

LossAndGrad loss_and_grad(const MlpModel& model, const Dataset& data, double lambda) {
    if (lambda < 0.0) throw DomainError("loss_and_grad: lambda must be nonnegative");
    const Engine eng(model, data.inputs);
    const Vector& out = eng.output();
    LossAndGrad res;
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = out[i] - data.responses[i];
        s += r * r;
    }
    res.loss = s / (2.0 * static_cast<double>(data.size()));
    res.reg_loss = res.loss + 0.5 * lambda * dot(model.theta, model.theta);
    res.grad = eng.backward(residual_weights(out, data));
    axpy(lambda, model.theta, res.grad);
    return res;
}

Vector grad_theta_f(const MlpModel& model, std::span<const double> x) {
    const Engine eng(model, single_row(x));
    const double one = 1.0;
    return eng.backward(std::span<const double>(&one, 1));
}

DenseMatrix jacobian(const MlpModel& model, const DenseMatrix& inputs) {
    DenseMatrix jac(inputs.rows(), model.num_params());
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        const Vector g = grad_theta_f(model, inputs.row(i));
        std::copy(g.begin(), g.end(), jac.row(i).begin());
    }
    return jac;
}

Vector directional_derivatives(const MlpModel& model, const DenseMatrix& inputs, std::span<const double> direction) {
    const Engine eng(model, inputs);
    return eng.tangent(direction).output();
}

Vector grad_input(const MlpModel& model, std::span<const double> x) {
    const Engine eng(model, single_row(x));
    const double one = 1.0;
    Vector gx;
    eng.backward(std::span<const double>(&one, 1), &gx);
    return gx;
}

// Engine keeps references into `model`, so State is never copied or moved.
struct RegularizedHessian::State {
    State(const MlpModel& m, const Dataset& d)
        : model(m), engine(model, d.inputs), weights(residual_weights(engine.output(), d)),
          inv_n(1.0 / static_cast<double>(d.size())) {}
    State(const State&) = delete;
    State& operator=(const State&) = delete;

    MlpModel model;
    Engine engine;
    Vector weights;
    double inv_n;
};

RegularizedHessian::RegularizedHessian(const MlpModel& model, const Dataset& data, double lambda)
    : lambda_(lambda), dim_(model.num_params()) {
    if (lambda < 0.0) throw DomainError("RegularizedHessian: lambda must be nonnegative");
    data.validate();
    state_ = std::make_shared<const State>(model, data);
}

Vector RegularizedHessian::apply(std::span<const double> z) const {
    const auto tan = state_->engine.tangent(z);
    Vector r_weights = tan.output();
    for (double& r : r_weights) r *= state_->inv_n;
    Vector hz = state_->engine.backward_tangent(tan, state_->weights, r_weights, z);
    axpy(lambda_, z, hz);
    return hz;
}

Vector hvp_loss(const MlpModel& model, const Dataset& data, double lambda, std::span<const double> z) {
    return RegularizedHessian(model, data, lambda).apply(z);
}

double spectral_norm(const DenseMatrix& w) {
    const std::size_t cols = w.cols();
    if (w.rows() == 1 || cols == 1) return norm2(w.entries());
    // power iteration on W^T W from a fixed start
    Vector v(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
    double sigma = 0.0;
    for (int it = 0; it < 1000; ++it) {
        const Vector wv = w.multiply(v);
        Vector wtwv(cols, 0.0);
        for (std::size_t r = 0; r < w.rows(); ++r) axpy(wv[r], w.row(r), wtwv);
        const double nrm = norm2(wtwv);
        if (nrm == 0.0) return 0.0;
        for (std::size_t i = 0; i < cols; ++i) v[i] = wtwv[i] / nrm;
        const double next = std::sqrt(nrm);
        if (std::abs(next - sigma) <= 1e-12 * next) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return norm2(w.multiply(v));
}

double operator_norm_product(const MlpModel& model) {
    double prod = 1.0;
    for (std::size_t k = 0; k < model.arch.num_layers(); ++k) prod *= spectral_norm(model.weight(k));
    return prod;
}

double lipschitz_bound(const MlpModel& model, double lambda, double loss_value) {
    if (!(lambda > 0.0)) throw DomainError("lipschitz_bound: lambda must be positive");
    if (loss_value < 0.0) throw DomainError("lipschitz_bound: loss must be nonnegative");
    const double k = static_cast<double>(model.arch.num_layers());
    return std::pow(loss_value / (lambda * k), k / 2.0);
}

}  // namespace wnci
