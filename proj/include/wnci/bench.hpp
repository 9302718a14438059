#pragma once

// Synthetic regression benchmark: a Matern-3/2 RKHS ground truth, Gaussian
// inputs with a box cut out of the training region, and the evaluation
// metrics (coverage, filtered width, Winkler score).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wnci/model.hpp"
#include "wnci/numkit.hpp"

namespace wnci {

/// s^2 (1 + sqrt(3) r / l) exp(-sqrt(3) r / l)
double matern32(double r, double length_scale, double output_scale);

struct MaternSpec {
    double length_scale = 1.0;
    double output_scale = 1.0;
    /// only 1.5 is supported
    double smoothness = 1.5;
    std::size_t anchors = 256;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Kernel interpolant f*(x) = k(x, C) K(C, C)^{-1} g through GP values g at
/// Gaussian anchors C. Immutable once built.
class GroundTruth {
public:
    GroundTruth(MaternSpec spec, DenseMatrix anchors, Vector values);

    double operator()(std::span<const double> x) const;
    Vector evaluate(const DenseMatrix& inputs) const;

    const DenseMatrix& anchors() const { return anchors_; }
    const Vector& values() const { return values_; }
    /// g^T K^{-1} g
    double rkhs_norm_sq() const { return dot(values_, coef_); }
    /// diagonal jitter that had to be added for K to factor
    double jitter() const { return jitter_; }
    const MaternSpec& spec() const { return spec_; }

private:
    MaternSpec spec_;
    DenseMatrix anchors_;
    Vector values_;
    Vector coef_;
    double jitter_ = 0.0;
};

GroundTruth sample_truth(const MaternSpec& spec, std::size_t d, Rng& rng);

enum class TestMode { gaussian, grid };

struct BenchmarkSpec {
    std::size_t d = 1;
    std::size_t n_train = 100;
    /// 0 means "same as n_train"
    std::size_t n_val = 0;
    std::size_t n_test = 500;
    double sigma = 0.1;
    double cutout = 0.5;
    TestMode test_mode = TestMode::gaussian;
    double grid_lo = -3.0;
    double grid_hi = 3.0;
    std::size_t grid_points = 512;
    MaternSpec matern;
    std::uint64_t design_seed = 1;
    std::uint64_t noise_seed = 2;

    void validate() const;
};

struct Benchmark {
    Dataset train;
    Dataset val;
    DenseMatrix test_inputs;
    Vector test_truth;
    /// truth + sigma * noise, for interval scores on the test split
    Vector test_responses;
};

/// True when every coordinate lies in [-cutout, cutout].
bool inside_box(std::span<const double> x, double cutout);

Benchmark generate(const BenchmarkSpec& spec, const GroundTruth& truth);
Benchmark generate(const BenchmarkSpec& spec);

struct Interval {
    double lb = 0.0;
    double ub = 0.0;
    double width() const { return ub - lb; }
};

double coverage(std::span<const Interval> bands, std::span<const double> truth);

struct FilteredWidth {
    double avg = 0.0;
    double median = 0.0;
    /// retained test indices, ascending
    std::vector<std::size_t> retained;
};
FilteredWidth filtered_width(std::span<const Interval> bands, const DenseMatrix& train_inputs,
                             const DenseMatrix& test_inputs);

double winkler(std::span<const Interval> bands, std::span<const double> responses, double alpha);
double mean_squared_error(std::span<const double> prediction, std::span<const double> truth);

struct MetricsReport {
    double coverage = 0.0;
    double avg_width = 0.0;
    double median_width = 0.0;
    double winkler = 0.0;
    double test_mse = 0.0;
};

MetricsReport evaluate_bands(std::span<const Interval> bands, std::span<const double> centers,
                             const Benchmark& bench, double winkler_alpha);

}  // namespace wnci
