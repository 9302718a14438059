#include "wnci/confidence.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "wnci/errors.hpp"

namespace wnci {

std::string to_string(NormMode m) { return m == NormMode::regularized ? "regularized" : "interpolation"; }

std::string to_string(BandMode m) {
    switch (m) {
        case BandMode::pointwise_thm31: return "pointwise_thm31";
        case BandMode::pointwise_poly: return "pointwise_poly";
        case BandMode::uniform: return "uniform";
    }
    return "unknown";
}

BandMode parse_band_mode(const std::string& s) {
    if (s == "pointwise_thm31" || s == "pointwise") return BandMode::pointwise_thm31;
    if (s == "pointwise_poly" || s == "poly") return BandMode::pointwise_poly;
    if (s == "uniform") return BandMode::uniform;
    throw DomainError("unknown band mode '" + s + "'");
}

void BoundParams::validate() const {
    if (!(sigma > 0.0)) throw DomainError("BoundParams: sigma must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("BoundParams: delta must lie in (0, 1)");
    if (!(v >= 0.0) || !(c >= 0.0)) throw DomainError("BoundParams: v and c must be nonnegative");
    if (n < 1) throw DomainError("BoundParams: n must be >= 1");
}

WeightedNormResult weighted_norm(const MlpModel& model, const Dataset& data, const RegularizedHessian& hessian,
                                 std::span<const double> x, const CgConfig& cg) {
    const Vector g = grad_theta_f(model, x);
    WeightedNormResult res;
    res.cg = cg_solve([&](std::span<const double> z) { return hessian.apply(z); }, g, {}, cg);
    const Vector& h = res.cg.solution;

    const bool interpolating = hessian.lambda() == 0.0 && loss(model, data) <= kInterpolationLoss;
    if (interpolating) {
        res.mode = NormMode::interpolation;
        res.value = dot(g, h);
        if (res.value < 0.0)
            throw NumericError("weighted_norm: negative interpolation-mode value (CG did not converge)");
    } else {
        res.mode = NormMode::regularized;
        const Vector jh = directional_derivatives(model, data.inputs, h);
        double s = 0.0;
        for (double t : jh) s += t * t;
        res.value = s / static_cast<double>(data.size());
    }
    return res;
}

WeightedNormResult weighted_norm(const MlpModel& model, const Dataset& data, double lambda,
                                 std::span<const double> x, const CgConfig& cg) {
    return weighted_norm(model, data, RegularizedHessian(model, data, lambda), x, cg);
}

double halfwidth_from_log_oracle(double expected_norm, const BoundParams& params, double log_term) {
    params.validate();
    if (!(expected_norm >= 0.0)) throw DomainError("halfwidth: weighted norm must be nonnegative");
    if (!(log_term >= 0.0)) throw DomainError("halfwidth: log term must be nonnegative");
    const double n = static_cast<double>(params.n);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double main = params.sigma * std::sqrt(0.5 * pi2 * log_term / n * expected_norm);
    const double tail =
        params.sigma * params.sigma * (std::sqrt(2.0 * log_term) * params.v + (2.0 / 3.0) * log_term * params.c) / n;
    return main + tail;
}

double halfwidth_from_log(double weighted_norm, const BoundParams& params, double log_term) {
    if (!(weighted_norm >= 0.0)) throw DomainError("halfwidth: weighted norm must be nonnegative");
    if (!(log_term >= 0.0)) throw DomainError("halfwidth: log term must be nonnegative");
    const double substituted =
        weighted_norm + std::sqrt(2.0 * params.v * params.v * log_term) + params.c * log_term;
    return halfwidth_from_log_oracle(substituted, params, log_term);
}

double halfwidth_thm31(double weighted_norm, const BoundParams& params) {
    params.validate();
    return halfwidth_from_log(weighted_norm, params, std::log(2.0 / params.delta));
}

double halfwidth_thm31_oracle(double expected_norm, const BoundParams& params) {
    params.validate();
    return halfwidth_from_log_oracle(expected_norm, params, std::log(2.0 / params.delta));
}

double halfwidth_poly(double weighted_norm, double sigma, std::size_t n, double delta) {
    if (!(weighted_norm >= 0.0)) throw DomainError("halfwidth_poly: weighted norm must be nonnegative");
    if (!(sigma >= 0.0)) throw DomainError("halfwidth_poly: sigma must be nonnegative");
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("halfwidth_poly: delta must lie in (0, 1]");
    if (n < 1) throw DomainError("halfwidth_poly: n must be >= 1");
    return sigma * std::sqrt(weighted_norm / (delta * static_cast<double>(n)));
}

UniformTerm uniform_logterm(std::size_t d, std::size_t n, double lip_delta, double delta) {
    if (!(lip_delta > 0.0)) throw DomainError("uniform_logterm: Lip(Delta) must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("uniform_logterm: delta must lie in (0, 1)");
    if (n < 1 || d < 1) throw DomainError("uniform_logterm: d and n must be >= 1");
    const double nd = static_cast<double>(n);
    return {static_cast<double>(d) * std::log(3.0 * nd * lip_delta / delta), 1.0 / nd};
}

UniformTerm uniform_logterm_network(std::size_t d, std::size_t n, double delta, std::size_t num_layers,
                                    double initial_loss_bound, double lambda) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("uniform_logterm: delta must lie in (0, 1)");
    if (!(lambda > 0.0) || !(initial_loss_bound > 0.0) || num_layers < 1)
        throw DomainError("uniform_logterm: need lambda > 0, C > 0, K >= 1");
    const double nd = static_cast<double>(n), dd = static_cast<double>(d), k = static_cast<double>(num_layers);
    return {dd * std::log(6.0 * nd / delta) + 0.5 * k * dd * std::log(initial_loss_bound / (lambda * k)), 1.0 / nd};
}

ConfidenceBand band(const MlpModel& model, const Dataset& data, const RegularizedHessian& hessian,
                    std::span<const double> x, const BoundParams& params, const CgConfig& cg,
                    const BandOptions& options) {
    params.validate();
    ConfidenceBand out;
    out.params = params;
    out.mode = options.mode;
    out.center = forward(model, x);
    out.norm = weighted_norm(model, data, hessian, x, cg);
    const double w = out.norm.value;
    switch (options.mode) {
        case BandMode::pointwise_thm31: out.half_width = halfwidth_thm31(w, params); break;
        case BandMode::pointwise_poly: out.half_width = halfwidth_poly(w, params.sigma, params.n, params.delta); break;
        case BandMode::uniform: {
            double lip = options.lip_delta;
            if (!(lip > 0.0)) lip = 2.0 * lipschitz_bound(model, hessian.lambda(), options.initial_loss);
            const UniformTerm u = uniform_logterm(model.arch.input_dim(), params.n, lip, params.delta);
            // the pointwise bound's ln(2/delta) is ln 2 + ln(1/delta)
            out.half_width = halfwidth_from_log(w, params, std::log(2.0) + std::max(0.0, u.logterm)) + u.additive;
            break;
        }
    }
    out.lb = out.center - out.half_width;
    out.ub = out.center + out.half_width;
    return out;
}

ConfidenceBand band(const MlpModel& model, const Dataset& data, double lambda, std::span<const double> x,
                    const BoundParams& params, const CgConfig& cg, const BandOptions& options) {
    return band(model, data, RegularizedHessian(model, data, lambda), x, params, cg, options);
}

std::vector<ConfidenceBand> band_batch(const MlpModel& model, const Dataset& data, double lambda,
                                       const DenseMatrix& test_inputs, BoundParams params, const CgConfig& cg,
                                       const BandOptions& options, std::size_t workers) {
    if (test_inputs.rows() == 0) return {};
    params.delta /= static_cast<double>(test_inputs.rows());
    const RegularizedHessian hessian(model, data, lambda);
    std::vector<ConfidenceBand> out(test_inputs.rows());
    parallel_for(
        test_inputs.rows(),
        [&](std::size_t j) { out[j] = band(model, data, hessian, test_inputs.row(j), params, cg, options); },
        workers);
    return out;
}

namespace {

void write_point(std::ostream& os, std::span<const double> x) {
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ";" : "") << x[k];
}

}  // namespace

void write_band_csv(std::ostream& os, const std::vector<ConfidenceBand>& bands, const DenseMatrix& test_inputs,
                    const std::string& method) {
    if (bands.size() != test_inputs.rows()) throw DimensionError("write_band_csv: bands/test_inputs mismatch");
    const auto old_precision = os.precision(17);
    os << "method,test_index,x,center,lb,ub,half_width,W,cg_iters,cg_residual,curvature_flag,mode\n";
    for (std::size_t j = 0; j < bands.size(); ++j) {
        const auto& b = bands[j];
        os << method << ',' << j << ',';
        write_point(os, test_inputs.row(j));
        os << ',' << b.center << ',' << b.lb << ',' << b.ub << ',' << b.half_width << ',' << b.norm.value << ','
           << b.norm.cg.iterations << ',' << b.norm.cg.final_residual << ',' << (b.norm.cg.curvature_flag ? 1 : 0)
           << ',' << to_string(b.mode) << '\n';
    }
    os.precision(old_precision);
}

SensitivityResult sensitivity_check(const MlpArch& arch, const Dataset& data, const TrainConfig& config,
                                    std::span<const double> x, std::size_t i, const SensitivityOptions& options) {
    if (!(config.lambda > 0.0)) throw DomainError("sensitivity_check: lambda must be positive");
    if (i >= data.size()) throw DimensionError("sensitivity_check: sample index out of range");
    if (!(options.step > 0.0)) throw DomainError("sensitivity_check: step must be positive");

    auto fit = [&](const Dataset& d) {
        TrainResult tr = train(arch, d, config);
        const double res = alignment_residual(tr.model, d, config.lambda);
        if (res > options.stationarity_tol)
            throw StationarityError("sensitivity_check: retraining stopped at alignment residual " +
                                    std::to_string(res));
        return tr.model;
    };

    SensitivityResult out;
    const MlpModel base = fit(data);
    out.alignment_residual = alignment_residual(base, data, config.lambda);

    const RegularizedHessian hessian(base, data, config.lambda);
    const Vector gi = grad_theta_f(base, data.inputs.row(i));
    const CgResult cg = cg_solve([&](std::span<const double> z) { return hessian.apply(z); }, gi, {}, options.cg);
    const Vector gx = grad_theta_f(base, x);
    out.analytic = data.sigma / static_cast<double>(data.size()) * dot(gx, cg.solution);

    Dataset plus = data, minus = data;
    plus.responses[i] += data.sigma * options.step;
    minus.responses[i] -= data.sigma * options.step;
    const double f_plus = forward(fit(plus), x);
    const double f_minus = forward(fit(minus), x);
    out.empirical = (f_plus - f_minus) / (2.0 * options.step);
    return out;
}

}  // namespace wnci
