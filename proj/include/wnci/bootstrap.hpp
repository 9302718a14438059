#pragma once

// Nonparametric bootstrap baseline: networks trained on with-replacement
// resamples, percentile intervals over their predictions.

#include <cstddef>
#include <string>
#include <vector>

#include "wnci/bench.hpp"
#include "wnci/model.hpp"
#include "wnci/trainer.hpp"

namespace wnci {

struct BootstrapOptions {
    std::size_t replicates = 10;
    double alpha = 0.01;
    /// every replicate starts from init_params(config.seed) instead of a fresh seed
    bool shared_init = false;
    std::size_t workers = 0;
};

struct BootstrapResult {
    std::vector<Interval> bands;
    /// mean prediction of the surviving replicates
    Vector centers;
    /// predictions[r][j] for surviving replicate r at test point j
    std::vector<Vector> predictions;
    /// ||grad L_lambda|| of each surviving replicate on its own resample
    Vector alignment_residuals;
    std::size_t dropped = 0;
    std::vector<std::string> failures;
};

/// Indices of one with-replacement resample of size n.
std::vector<std::size_t> resample_indices(std::size_t n, Rng& rng);
Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices);

/// Per-point alpha/2 and 1 - alpha/2 nearest-rank quantiles of the ensemble.
std::vector<Interval> percentile_bands(const std::vector<Vector>& predictions, double alpha);

BootstrapResult bootstrap_bands(const MlpArch& arch, const Dataset& data, const TrainConfig& config,
                                const DenseMatrix& test_inputs, Rng& rng, const BootstrapOptions& options = {});

}  // namespace wnci
