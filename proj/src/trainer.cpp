#include "wnci/trainer.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace wnci {

Optimizer parse_optimizer(const std::string& s) {
    if (s == "gd") return Optimizer::gd;
    if (s == "adamw") return Optimizer::adamw;
    throw DomainError("unknown optimizer '" + s + "'");
}

Schedule parse_schedule(const std::string& s) {
    if (s == "constant") return Schedule::constant;
    if (s == "cosine") return Schedule::cosine;
    throw DomainError("unknown schedule '" + s + "'");
}

InitScheme parse_init(const std::string& s) {
    if (s == "glorot") return InitScheme::glorot;
    if (s == "variance_scaling") return InitScheme::variance_scaling;
    throw DomainError("unknown init scheme '" + s + "'");
}

std::string to_string(Optimizer o) { return o == Optimizer::gd ? "gd" : "adamw"; }
std::string to_string(Schedule s) { return s == Schedule::constant ? "constant" : "cosine"; }
std::string to_string(InitScheme s) { return s == InitScheme::glorot ? "glorot" : "variance_scaling"; }

void TrainConfig::validate() const {
    if (epochs < 1) throw DomainError("TrainConfig: epochs must be >= 1");
    if (!(step_size > 0.0)) throw DomainError("TrainConfig: step size must be positive");
    if (!(lambda >= 0.0)) throw DomainError("TrainConfig: lambda must be nonnegative");
    if (!(init_std >= 0.0)) throw DomainError("TrainConfig: init std must be nonnegative");
    if (trace_every < 1) throw DomainError("TrainConfig: trace_every must be >= 1");
}

void TrainTrace::write_csv(std::ostream& os) const {
    os << "epoch,loss,reg_loss,step_size,alignment_residual\n";
    const auto old_precision = os.precision(17);
    for (const auto& r : rows)
        os << r.epoch << ',' << r.loss << ',' << r.reg_loss << ',' << r.step_size << ',' << r.alignment_residual
           << '\n';
    os.precision(old_precision);
}

MlpModel init_params(const MlpArch& arch, const TrainConfig& config, Rng& rng) {
    arch.validate();
    Vector theta(arch.num_params(), 0.0);
    for (std::size_t k = 0; k < arch.num_layers(); ++k) {
        const std::size_t in = arch.layer_widths[k], out = arch.layer_widths[k + 1];
        const double sd = config.init == InitScheme::glorot
                              ? std::sqrt(2.0 / static_cast<double>(in + out))
                              : config.init_std / std::sqrt(static_cast<double>(in));
        const std::size_t off = arch.weight_offset(k);
        for (std::size_t i = 0; i < in * out; ++i) theta[off + i] = sd * rng.normal();
    }
    return MlpModel(arch, std::move(theta));
}

double step_size_at(const TrainConfig& config, std::size_t epoch) {
    if (config.schedule == Schedule::constant) return config.step_size;
    const double t = static_cast<double>(epoch) / static_cast<double>(config.epochs);
    return config.step_size * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

TrainResult train(const MlpArch& arch, const Dataset& data, const TrainConfig& config) {
    Rng rng(config.seed);
    return train_from(init_params(arch, config, rng), data, config);
}

TrainResult train_from(MlpModel start, const Dataset& data, const TrainConfig& config) {
    config.validate();
    data.validate();
    TrainResult result{std::move(start), {}};
    MlpModel& model = result.model;
    TrainTrace& trace = result.trace;
    trace.beta1 = config.beta1;
    trace.beta2 = config.beta2;
    trace.adam_eps = config.adam_eps;

    const std::size_t p = model.num_params();
    Vector m(p, 0.0), v(p, 0.0);
    const double lambda = config.lambda;

    auto record = [&](std::size_t epoch, const LossAndGrad& lg, double step, bool force) {
        trace.reg_losses.push_back(lg.reg_loss);
        if (force || epoch % config.trace_every == 0)
            trace.rows.push_back({epoch, lg.loss, lg.reg_loss, step, norm2(lg.grad)});
    };

    LossAndGrad lg = loss_and_grad(model, data, lambda);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.tolerance > 0.0 && norm2(lg.grad) <= config.tolerance) break;
        const double step = step_size_at(config, epoch);
        record(epoch, lg, step, false);

        MlpModel previous = model;
        if (config.optimizer == Optimizer::gd) {
            axpy(-step, lg.grad, model.theta);
        } else {
            const double t = static_cast<double>(epoch + 1);
            const double c1 = 1.0 - std::pow(config.beta1, t);
            const double c2 = 1.0 - std::pow(config.beta2, t);
            for (std::size_t i = 0; i < p; ++i) {
                // moments track grad L only; the l2 part is applied as decoupled decay
                const double g = lg.grad[i] - lambda * model.theta[i];
                m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
                v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
                const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + config.adam_eps);
                model.theta[i] -= step * (update + lambda * model.theta[i]);
            }
        }
        ++trace.updates;

        if (!all_finite(model.theta))
            throw DivergenceError("train: non-finite parameters after update " + std::to_string(epoch),
                                  std::move(previous));
        try {
            lg = loss_and_grad(model, data, lambda);
        } catch (const NumericError&) {
            throw DivergenceError("train: non-finite output after update " + std::to_string(epoch),
                                  std::move(previous));
        }
        if (!std::isfinite(lg.reg_loss) || !all_finite(lg.grad))
            throw DivergenceError("train: loss diverged after update " + std::to_string(epoch), std::move(previous));
    }
    record(trace.updates, lg, 0.0, true);
    return result;
}

double alignment_residual(const MlpModel& model, const Dataset& data, double lambda) {
    if (lambda < 0.0) throw DomainError("alignment_residual: lambda must be nonnegative");
    return norm2(grad_theta_loss(model, data, lambda));
}

}  // namespace wnci
