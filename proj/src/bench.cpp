#include "wnci/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "wnci/errors.hpp"

namespace wnci {

double matern32(double r, double length_scale, double output_scale) {
    const double a = std::sqrt(3.0) * r / length_scale;
    return output_scale * output_scale * (1.0 + a) * std::exp(-a);
}

void MaternSpec::validate() const {
    if (!(length_scale > 0.0) || !(output_scale > 0.0))
        throw DomainError("MaternSpec: length and output scales must be positive");
    if (smoothness != 1.5) throw DomainError("MaternSpec: only smoothness 1.5 is supported");
    if (anchors < 1) throw DomainError("MaternSpec: need at least one anchor");
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

DenseMatrix kernel_matrix(const DenseMatrix& pts, const MaternSpec& spec) {
    const std::size_t m = pts.rows();
    DenseMatrix k(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            k(i, j) = k(j, i) = matern32(distance(pts.row(i), pts.row(j)), spec.length_scale, spec.output_scale);
    return k;
}

// Factor K, adding diagonal jitter starting at 1e-10 s^2 when it is not
// numerically positive definite.
DenseMatrix factor_with_jitter(DenseMatrix k, double base, double& jitter) {
    jitter = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        try {
            return cholesky(k);
        } catch (const DefinitenessError&) {
            const double next = jitter == 0.0 ? base : jitter * 10.0;
            for (std::size_t i = 0; i < k.rows(); ++i) k(i, i) += next - jitter;
            jitter = next;
        }
    }
    throw DefinitenessError("kernel matrix is not positive definite even with jitter " + std::to_string(jitter));
}

}  // namespace

GroundTruth::GroundTruth(MaternSpec spec, DenseMatrix anchors, Vector values)
    : spec_(std::move(spec)), anchors_(std::move(anchors)), values_(std::move(values)) {
    spec_.validate();
    if (values_.size() != anchors_.rows()) throw DimensionError("GroundTruth: values length != anchors");
    const DenseMatrix l =
        factor_with_jitter(kernel_matrix(anchors_, spec_), 1e-10 * spec_.output_scale * spec_.output_scale, jitter_);
    coef_ = cholesky_solve(l, values_);
}

double GroundTruth::operator()(std::span<const double> x) const {
    if (x.size() != anchors_.cols()) throw DimensionError("GroundTruth: input dimension mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < anchors_.rows(); ++j)
        s += coef_[j] * matern32(distance(x, anchors_.row(j)), spec_.length_scale, spec_.output_scale);
    return s;
}

Vector GroundTruth::evaluate(const DenseMatrix& inputs) const {
    Vector out(inputs.rows());
    for (std::size_t i = 0; i < inputs.rows(); ++i) out[i] = (*this)(inputs.row(i));
    return out;
}

GroundTruth sample_truth(const MaternSpec& spec, std::size_t d, Rng& rng) {
    spec.validate();
    if (d < 1) throw DimensionError("sample_truth: d must be >= 1");
    DenseMatrix anchors(spec.anchors, d);
    for (std::size_t i = 0; i < spec.anchors; ++i)
        for (std::size_t k = 0; k < d; ++k) anchors(i, k) = rng.normal();
    // g ~ N(0, K): g = L z
    double jitter = 0.0;
    const DenseMatrix l =
        factor_with_jitter(kernel_matrix(anchors, spec), 1e-10 * spec.output_scale * spec.output_scale, jitter);
    const Vector z = gaussian_vector(rng, spec.anchors);
    Vector g(spec.anchors, 0.0);
    for (std::size_t i = 0; i < spec.anchors; ++i)
        for (std::size_t k = 0; k <= i; ++k) g[i] += l(i, k) * z[k];
    return GroundTruth(spec, std::move(anchors), std::move(g));
}

void BenchmarkSpec::validate() const {
    if (d < 1) throw DomainError("BenchmarkSpec: d must be >= 1");
    if (n_train < 1) throw DomainError("BenchmarkSpec: n_train must be >= 1");
    if (!(sigma >= 0.0)) throw DomainError("BenchmarkSpec: sigma must be nonnegative");
    if (!(cutout >= 0.0)) throw DomainError("BenchmarkSpec: cutout must be nonnegative");
    if (test_mode == TestMode::grid && (grid_points < 2 || !(grid_hi > grid_lo)))
        throw DomainError("BenchmarkSpec: grid needs >= 2 points and hi > lo");
    if (test_mode == TestMode::gaussian && n_test < 1) throw DomainError("BenchmarkSpec: n_test must be >= 1");
    matern.validate();
}

bool inside_box(std::span<const double> x, double cutout) {
    return std::all_of(x.begin(), x.end(), [cutout](double v) { return std::abs(v) <= cutout; });
}

namespace {

DenseMatrix sample_outside_box(std::size_t n, std::size_t d, double cutout, Rng& rng) {
    DenseMatrix x(n, d);
    std::size_t accepted = 0, attempts = 0;
    Vector cand(d);
    while (accepted < n) {
        for (double& v : cand) v = rng.normal();
        ++attempts;
        if (!inside_box(cand, cutout)) {
            std::copy(cand.begin(), cand.end(), x.row(accepted).begin());
            ++accepted;
        } else if (attempts >= 10000 && static_cast<double>(accepted) < 1e-3 * static_cast<double>(attempts)) {
            throw GenerationError("generate: cut-out box rejects more than 99.9% of inputs");
        }
    }
    return x;
}

Vector add_noise(const Vector& truth, double sigma, Rng& rng) {
    Vector y(truth.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = truth[i] + sigma * rng.normal();
    return y;
}

}  // namespace

Benchmark generate(const BenchmarkSpec& spec, const GroundTruth& truth) {
    spec.validate();
    if (truth.anchors().cols() != spec.d) throw DimensionError("generate: truth dimension != d");
    const Rng design(spec.design_seed);
    const Rng noise(spec.noise_seed);
    Rng train_x = design.split(0), val_x = design.split(1), test_x = design.split(2);
    Rng train_e = noise.split(0), val_e = noise.split(1), test_e = noise.split(2);

    const std::size_t n_val = spec.n_val == 0 ? spec.n_train : spec.n_val;
    Benchmark b;
    {
        DenseMatrix x = sample_outside_box(spec.n_train, spec.d, spec.cutout, train_x);
        Vector f = truth.evaluate(x);
        Vector y = add_noise(f, spec.sigma, train_e);
        b.train = Dataset(std::move(x), std::move(y), spec.sigma, std::move(f));
    }
    {
        DenseMatrix x = sample_outside_box(n_val, spec.d, spec.cutout, val_x);
        Vector f = truth.evaluate(x);
        Vector y = add_noise(f, spec.sigma, val_e);
        b.val = Dataset(std::move(x), std::move(y), spec.sigma, std::move(f));
    }
    if (spec.test_mode == TestMode::grid) {
        if (spec.d != 1) throw DomainError("generate: grid test mode requires d = 1");
        b.test_inputs = DenseMatrix(spec.grid_points, 1);
        const double step = (spec.grid_hi - spec.grid_lo) / static_cast<double>(spec.grid_points - 1);
        for (std::size_t j = 0; j < spec.grid_points; ++j)
            b.test_inputs(j, 0) = spec.grid_lo + step * static_cast<double>(j);
    } else {
        b.test_inputs = DenseMatrix(spec.n_test, spec.d);
        for (std::size_t j = 0; j < spec.n_test; ++j)
            for (std::size_t k = 0; k < spec.d; ++k) b.test_inputs(j, k) = test_x.normal();
    }
    b.test_truth = truth.evaluate(b.test_inputs);
    b.test_responses = add_noise(b.test_truth, spec.sigma, test_e);
    return b;
}

Benchmark generate(const BenchmarkSpec& spec) {
    Rng truth_rng(spec.matern.seed);
    return generate(spec, sample_truth(spec.matern, spec.d, truth_rng));
}

double coverage(std::span<const Interval> bands, std::span<const double> truth) {
    if (bands.size() != truth.size()) throw DimensionError("coverage: bands and truth differ in length");
    if (bands.empty()) throw EmptyInputError("coverage: no points");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < bands.size(); ++i)
        if (bands[i].lb <= truth[i] && truth[i] <= bands[i].ub) ++hits;
    return static_cast<double>(hits) / static_cast<double>(bands.size());
}

FilteredWidth filtered_width(std::span<const Interval> bands, const DenseMatrix& train_inputs,
                             const DenseMatrix& test_inputs) {
    if (train_inputs.rows() == 0 || test_inputs.rows() == 0) throw EmptyInputError("filtered_width: empty inputs");
    if (bands.size() != test_inputs.rows()) throw DimensionError("filtered_width: one band per test input");
    if (train_inputs.cols() != test_inputs.cols()) throw DimensionError("filtered_width: dimension mismatch");

    const std::size_t n = train_inputs.rows();
    std::vector<std::size_t> nearest(n);
    Vector dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < test_inputs.rows(); ++j) {
            const double dij = distance(train_inputs.row(i), test_inputs.row(j));
            if (dij < best) {
                best = dij;
                arg = j;
            }
        }
        nearest[i] = arg;
        dist[i] = best;
    }
    const double eps = quantile(dist, 0.99);
    std::set<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i)
        if (dist[i] <= eps) keep.insert(nearest[i]);
    if (keep.empty()) throw EmptyInputError("filtered_width: no retained test points");

    FilteredWidth out;
    out.retained.assign(keep.begin(), keep.end());
    Vector widths;
    widths.reserve(keep.size());
    for (std::size_t j : out.retained) widths.push_back(bands[j].width());
    out.avg = mean(widths);
    out.median = quantile(widths, 0.5);
    return out;
}

double winkler(std::span<const Interval> bands, std::span<const double> responses, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("winkler: alpha must lie in (0, 1)");
    if (bands.size() != responses.size()) throw DimensionError("winkler: bands and responses differ in length");
    if (bands.empty()) throw EmptyInputError("winkler: no points");
    double s = 0.0;
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const double y = responses[i];
        s += bands[i].width() + (2.0 / alpha) * std::max(0.0, y - bands[i].ub) +
             (2.0 / alpha) * std::max(0.0, bands[i].lb - y);
    }
    return s / static_cast<double>(bands.size());
}

double mean_squared_error(std::span<const double> prediction, std::span<const double> truth) {
    if (prediction.size() != truth.size()) throw DimensionError("mse: length mismatch");
    if (prediction.empty()) throw EmptyInputError("mse: no points");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += (prediction[i] - truth[i]) * (prediction[i] - truth[i]);
    return s / static_cast<double>(truth.size());
}

MetricsReport evaluate_bands(std::span<const Interval> bands, std::span<const double> centers,
                             const Benchmark& bench, double winkler_alpha) {
    MetricsReport m;
    m.coverage = coverage(bands, bench.test_truth);
    const FilteredWidth fw = filtered_width(bands, bench.train.inputs, bench.test_inputs);
    m.avg_width = fw.avg;
    m.median_width = fw.median;
    m.winkler = winkler(bands, bench.test_responses, winkler_alpha);
    m.test_mse = mean_squared_error(centers, bench.test_truth);
    return m;
}

}  // namespace wnci
