#include "wnci/bootstrap.hpp"

#include <optional>

#include "wnci/errors.hpp"

namespace wnci {

std::vector<std::size_t> resample_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.below(n);
    return idx;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices) {
    DenseMatrix x(indices.size(), data.dim());
    Vector y(indices.size());
    std::optional<Vector> truth;
    if (data.truth) truth.emplace(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = data.inputs.row(indices[r]);
        std::copy(src.begin(), src.end(), x.row(r).begin());
        y[r] = data.responses[indices[r]];
        if (truth) (*truth)[r] = (*data.truth)[indices[r]];
    }
    return Dataset(std::move(x), std::move(y), data.sigma, std::move(truth));
}

std::vector<Interval> percentile_bands(const std::vector<Vector>& predictions, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("percentile_bands: alpha must lie in (0, 1)");
    if (predictions.empty()) throw EmptyInputError("percentile_bands: no predictions");
    const std::size_t m = predictions.front().size();
    std::vector<Interval> bands(m);
    Vector column(predictions.size());
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t r = 0; r < predictions.size(); ++r) column[r] = predictions[r][j];
        bands[j] = {quantile(column, alpha / 2.0), quantile(column, 1.0 - alpha / 2.0)};
    }
    return bands;
}

BootstrapResult bootstrap_bands(const MlpArch& arch, const Dataset& data, const TrainConfig& config,
                                const DenseMatrix& test_inputs, Rng& rng, const BootstrapOptions& options) {
    if (options.replicates < 2) throw DomainError("bootstrap: need at least 2 replicates");
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw DomainError("bootstrap: alpha must lie in (0, 1)");

    // all randomness is drawn up front so results do not depend on scheduling
    struct Plan {
        std::vector<std::size_t> indices;
        std::uint64_t seed;
    };
    std::vector<Plan> plans(options.replicates);
    for (auto& plan : plans) {
        plan.indices = resample_indices(data.size(), rng);
        plan.seed = options.shared_init ? config.seed : rng.next_u64();
    }

    std::vector<std::optional<Vector>> preds(options.replicates);
    Vector residuals(options.replicates, 0.0);
    std::vector<std::string> errors(options.replicates);
    parallel_for(
        options.replicates,
        [&](std::size_t r) {
            TrainConfig cfg = config;
            cfg.seed = plans[r].seed;
            try {
                const Dataset resampled = subset(data, plans[r].indices);
                const TrainResult tr = train(arch, resampled, cfg);
                preds[r] = forward_batch(tr.model, test_inputs);
                residuals[r] = alignment_residual(tr.model, resampled, cfg.lambda);
            } catch (const DivergenceError& e) {
                errors[r] = e.what();
            } catch (const NumericError& e) {
                errors[r] = e.what();
            }
        },
        options.workers);

    BootstrapResult out;
    for (std::size_t r = 0; r < options.replicates; ++r) {
        if (preds[r]) {
            out.predictions.push_back(std::move(*preds[r]));
            out.alignment_residuals.push_back(residuals[r]);
        } else {
            ++out.dropped;
            out.failures.push_back(errors[r]);
        }
    }
    if (out.predictions.size() < 2)
        throw EnsembleError("bootstrap: only " + std::to_string(out.predictions.size()) + " replicates survived");
    out.bands = percentile_bands(out.predictions, options.alpha);
    out.centers.assign(test_inputs.rows(), 0.0);
    for (const auto& p : out.predictions) axpy(1.0 / static_cast<double>(out.predictions.size()), p, out.centers);
    return out;
}

}  // namespace wnci
