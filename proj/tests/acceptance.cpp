// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "support.hpp"
#include "wnci/bench.hpp"
#include "wnci/cgsolver.hpp"
#include "wnci/confidence.hpp"
#include "wnci/experiment.hpp"
#include "wnci/linoracle.hpp"

using namespace wnci;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

MlpModel fit_gd(const MlpArch& arch, const Dataset& data, double lambda, std::uint64_t seed,
                std::size_t epochs = 20000, double tol = 1e-10) {
    TrainConfig cfg;
    cfg.optimizer = Optimizer::gd;
    cfg.step_size = 0.5;
    cfg.lambda = lambda;
    cfg.epochs = epochs;
    cfg.tolerance = tol;
    cfg.seed = seed;
    cfg.trace_every = epochs;
    return train(arch, data, cfg).model;
}

Outcome gradients_and_hvp() {
    Rng rng(1001);
    double worst_g = 0.0, worst_h = 0.0;
    std::size_t max_p = 0;
    for (int net = 0; net < 100; ++net) {
        std::vector<std::size_t> hidden;
        for (std::size_t k = 0, layers = 1 + rng.below(2); k < layers; ++k) hidden.push_back(2 + rng.below(11));
        const MlpArch arch = make_arch(1 + rng.below(4), hidden, Activation::tanh, net % 2 == 1);
        if (arch.num_params() > 500) continue;
        max_p = std::max(max_p, arch.num_params());
        const MlpModel m = testing::random_model(arch, rng);
        const Dataset data = testing::random_data(rng, 10, arch.input_dim());
        const double lambda = 0.01;
        worst_g = std::max(worst_g, testing::rel_err(grad_theta_loss(m, data, lambda),
                                                     testing::fd_gradient(m, data, lambda)));
        const Vector z = gaussian_vector(rng, arch.num_params());
        worst_h = std::max(worst_h, testing::rel_err(hvp_loss(m, data, lambda, z), testing::fd_hvp(m, data, lambda, z)));
    }
    return {worst_g <= 1e-5 && worst_h <= 1e-4,
            "max grad rel err " + num(worst_g) + ", max hvp rel err " + num(worst_h) + ", max p " +
                std::to_string(max_p)};
}

Outcome cg_vs_dense() {
    Rng rng(1002);
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
        const std::size_t n = 10 + rng.below(191);
        const DenseMatrix a = testing::random_spd(rng, n, 0.05 + rng.uniform());
        const Vector v = gaussian_vector(rng, n);
        const CgResult r = cg_solve([&](std::span<const double> z) { return a.multiply(z); }, v, {}, CgConfig{});
        worst = std::max(worst, testing::rel_err(r.solution, dense_sym_solve(a, v)));
    }
    double worst_net = 0.0;
    for (int s = 0; s < 10; ++s) {
        const MlpArch arch = make_arch(2, {4 + rng.below(4), 3}, Activation::tanh);
        const Dataset data = testing::random_data(rng, 12, 2);
        const MlpModel m = fit_gd(arch, data, 0.1, 50 + s);
        const RegularizedHessian h(m, data, 0.1);
        const Vector v = gaussian_vector(rng, arch.num_params());
        const CgResult r = cg_solve([&](std::span<const double> z) { return h(z); }, v, {}, CgConfig{});
        worst_net = std::max(worst_net,
                             testing::rel_err(r.solution, dense_sym_solve(testing::assemble_hessian(m, data, 0.1), v)));
    }
    return {worst <= 1e-8 && worst_net <= 1e-8,
            "max rel err SPD " + num(worst) + ", net Hessians " + num(worst_net)};
}

Outcome weighted_norm_oracle() {
    Rng rng(1003);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const MlpArch arch = make_arch(2, {5, 3}, Activation::tanh, s % 2 == 1);
        const Dataset data = testing::random_data(rng, 10, 2);
        const double lambda = 0.1;
        const MlpModel m = fit_gd(arch, data, lambda, 70 + s);
        const Vector x = gaussian_vector(rng, 2);
        const double w = weighted_norm(m, data, lambda, x, CgConfig{}).value;
        const DenseMatrix h = testing::assemble_hessian(m, data, lambda);
        const Vector u = dense_sym_solve(h, grad_theta_f(m, x));
        const Vector ju = jacobian(m, data.inputs).multiply(u);
        const double dense = dot(ju, ju) / static_cast<double>(data.size());
        worst = std::max(worst, std::abs(w - dense) / dense);
    }
    double worst_lin = 0.0;
    for (int s = 0; s < 10; ++s) {
        const std::size_t d = 1 + rng.below(6);
        const Dataset data = testing::random_data(rng, 30, d);
        const double lambda = std::pow(10.0, -1.0 - 3.0 * rng.uniform());
        const MlpModel m(make_arch(d, {}, Activation::identity), ridge_fit(data.inputs, data.responses, lambda));
        const Vector x = gaussian_vector(rng, d);
        const double w = weighted_norm(m, data, lambda, x, CgConfig{}).value;
        const double exact = ridge_weighted_norm(data.inputs, lambda, x).exact;
        worst_lin = std::max(worst_lin, std::abs(w - exact) / exact);
    }
    return {worst <= 1e-6 && worst_lin <= 1e-6,
            "max rel err nets " + num(worst) + ", linear " + num(worst_lin)};
}

Outcome alignment_invariant() {
    Rng rng(1004);
    const Dataset data = testing::random_data(rng, 50, 5);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::gd;
    cfg.step_size = 0.5;
    cfg.lambda = 0.01;
    cfg.epochs = 20000;
    cfg.tolerance = 1e-12;
    const TrainResult r = train(make_arch(5, {}, Activation::identity), data, cfg);
    const double res = alignment_residual(r.model, data, cfg.lambda);
    // increases within floating-point evaluation error of L_lambda are not counted
    const auto& l = r.trace.reg_losses;
    std::size_t rises = 0;
    double max_rise = 0.0;
    for (std::size_t t = 1; t < l.size(); ++t) {
        max_rise = std::max(max_rise, (l[t] - l[t - 1]) / l[t - 1]);
        if (l[t] > l[t - 1] * (1.0 + 1e-14)) ++rises;
    }
    return {res <= 1e-8 && rises == 0,
            "alignment residual " + num(res) + " after " + std::to_string(r.trace.updates) + " updates, " +
                std::to_string(rises) + " increases of L_lambda, largest relative change " + num(max_rise)};
}

Outcome sensitivity_identity() {
    Rng rng(1005);
    const MlpArch arch = make_arch(2, {8}, Activation::tanh);
    const Dataset data = testing::random_data(rng, 20, 2, 0.1);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::gd;
    cfg.step_size = 0.5;
    cfg.lambda = 0.1;
    cfg.epochs = 50000;
    cfg.tolerance = 1e-11;
    cfg.seed = 5;
    cfg.trace_every = cfg.epochs;
    double worst = 0.0, align = 0.0;
    for (int k = 0; k < 5; ++k) {
        const Vector x = gaussian_vector(rng, 2);
        const std::size_t i = rng.below(data.size());
        const SensitivityResult s = sensitivity_check(arch, data, cfg, x, i);
        align = std::max(align, s.alignment_residual);
        const double excess = std::abs(s.analytic - s.empirical) - 1e-2 * std::abs(s.analytic) - 1e-6;
        worst = std::max(worst, std::abs(s.analytic - s.empirical) / (std::abs(s.analytic) + 1e-6));
        if (excess > 0.0) return {false, "pair " + std::to_string(k) + ": analytic " + num(s.analytic) +
                                             " vs empirical " + num(s.empirical)};
    }
    return {true, "p = " + std::to_string(arch.num_params()) + ", max rel gap " + num(worst) +
                      ", max alignment residual " + num(align)};
}

Outcome linear_mc() {
    Rng rng(1006);
    const DenseMatrix x = testing::random_matrix(rng, 20, 2);
    const Vector theta_star = {1.0, -0.5};
    const Vector q = {0.7, 1.3};
    bool ok = true;
    std::string detail;
    for (double delta : {0.1, 0.05, 0.01}) {
        const double c = mc_coverage(x, 0.05, q, 0.5, delta, theta_star, 2000, rng);
        const double floor = 1.0 - delta - 3.0 * std::sqrt(delta * (1 - delta) / 2000.0);
        ok = ok && c >= floor;
        detail += (detail.empty() ? "" : ", ") + std::string("delta ") + num(delta) + ": " + num(c);
    }
    return {ok, "coverage " + detail};
}

Outcome nonlinear_mc() {
    // fixed design, truth and start point; only the noise is redrawn
    Rng rng(1007);
    const MlpArch arch = make_arch(1, {5}, Activation::tanh);
    const std::size_t n = 20;
    const double sigma = 0.1, lambda = 0.1, delta = 0.05;
    DenseMatrix xs(n, 1);
    Vector truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs(i, 0) = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        truth[i] = std::sin(1.5 * xs(i, 0));
    }
    TrainConfig cfg;
    cfg.optimizer = Optimizer::gd;
    cfg.step_size = 0.5;
    cfg.lambda = lambda;
    cfg.epochs = 20000;
    cfg.tolerance = 1e-9;
    cfg.trace_every = cfg.epochs;
    cfg.init = InitScheme::glorot;
    Rng init_rng(8);
    const MlpModel start = init_params(arch, cfg, init_rng);
    const Vector x = {0.3};

    auto draw = [&](Rng& r) {
        Vector y = truth;
        for (double& v : y) v += sigma * r.normal();
        return Dataset(xs, y, sigma);
    };

    Rng pilot_rng = rng.split(1);
    double w_sum = 0.0, f_sum = 0.0;
    const int pilots = 500, evals = 500;
    for (int k = 0; k < pilots; ++k) {
        const Dataset d = draw(pilot_rng);
        const MlpModel m = train_from(start, d, cfg).model;
        w_sum += weighted_norm(m, d, lambda, x, CgConfig{}).value;
        f_sum += forward(m, x);
    }
    const double expected_w = w_sum / pilots;
    const double center = f_sum / pilots;
    const double hw = halfwidth_thm31_oracle(expected_w, BoundParams{sigma, delta, 0.0, 0.0, n});

    Rng eval_rng = rng.split(2);
    int inside = 0;
    for (int k = 0; k < evals; ++k) {
        const MlpModel m = train_from(start, draw(eval_rng), cfg).model;
        if (std::abs(forward(m, x) - center) <= hw) ++inside;
    }
    const double freq = static_cast<double>(inside) / evals;
    return {freq >= 1.0 - delta, "frequency " + num(freq) + " with half-width " + num(hw) + " (E W = " +
                                     num(expected_w) + ")"};
}

ExperimentConfig shipped(const std::string& name, const fs::path& out) {
    ExperimentConfig c = load_config((fs::path(WNCI_SOURCE_DIR) / "configs" / name).string());
    c.out_dir = out.string();
    return c;
}

Outcome table1_trend(const fs::path& scratch) {
    ExperimentConfig c = shipped("desk_d10.json", scratch / "desk_d10");
    std::ostringstream log;
    const ExperimentOutcome out = run_experiment(c, false, log);
    std::map<std::string, Vector> cov;
    for (const auto& r : out.rows) cov[r.method].push_back(r.metrics.coverage);
    if (cov["proposed"].size() != c.trials || cov["bootstrap"].size() != c.trials)
        return {false, "runs failed: " + std::to_string(out.failures.size())};
    const double p = mean(cov["proposed"]), b = mean(cov["bootstrap"]);
    return {p >= b + 0.10 && p >= 0.85, "coverage proposed " + num(p) + ", bootstrap " + num(b) + " over " +
                                            std::to_string(c.trials) + " trials"};
}

Outcome figure1_check(const fs::path& scratch) {
    ExperimentConfig c = shipped("desk_d1.json", scratch / "desk_d1");
    c.methods = {"proposed"};
    std::ostringstream log;
    const ExperimentOutcome out = run_experiment(c, false, log);
    std::map<std::size_t, Vector> cut, support;
    for (const auto& r : out.rows) {
        std::ifstream is(fs::path(c.out_dir) / r.band_file);
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            const double x = std::stod(cells[2]), width = 2.0 * std::stod(cells[6]);
            if (std::abs(x) < 0.5)
                cut[r.n_train].push_back(width);
            else if (std::abs(x) <= 2.0)
                support[r.n_train].push_back(width);
        }
    }
    if (support[100].empty() || support[1000].empty())
        return {false, "runs failed: " + std::to_string(out.failures.size())};
    bool ok = true;
    std::string detail;
    for (std::size_t n : {100, 1000}) {
        const double ratio = quantile(cut[n], 0.5) / quantile(support[n], 0.5);
        ok = ok && ratio >= 1.5;
        detail += "n=" + std::to_string(n) + " cut-out/support median ratio " + num(ratio) + ", ";
    }
    const double s100 = quantile(support[100], 0.5), s1000 = quantile(support[1000], 0.5);
    ok = ok && s1000 < s100;
    return {ok, detail + "support median " + num(s100) + " -> " + num(s1000)};
}

Outcome metric_examples() {
    bool ok = true;
    auto expect = [&](bool cond) { ok = ok && cond; };
    const std::vector<Interval> unit = {{0, 1}};
    expect(std::abs(winkler(unit, Vector{0.5}, 0.1) - 1.0) < 1e-12);
    expect(std::abs(winkler(unit, Vector{1.2}, 0.1) - 5.0) < 1e-12);
    expect(std::abs(winkler(unit, Vector{-0.1}, 0.5) - 1.4) < 1e-12);
    const std::vector<Interval> two = {{0, 1}, {0, 1}};
    expect(coverage(two, Vector{0.5, 0.5}) == 1.0);
    expect(coverage(two, Vector{2, 3}) == 0.0);
    expect(coverage(two, Vector{0.5, 2}) == 0.5);
    expect(quantile(Vector{1, 2, 3, 4}, 0.5) == 2);
    expect(quantile(Vector{5}, 0.3) == 5);
    expect(quantile(Vector{3, 1, 2}, 0.99) == 3);

    const DenseMatrix same(4, 1, {0, 1, 2, 3});
    const std::vector<Interval> widths = {{0, 1}, {0, 2}, {0, 3}, {0, 4}};
    expect(filtered_width(widths, same, same).retained.size() == 4);
    expect(filtered_width(widths, same, same).avg == 2.5);

    const DenseMatrix test(5, 1, {0, 1, 2, 3, 4});
    const DenseMatrix train(5, 1, {-0.2, 0.3, 2.1, 3.9, 4.2});
    const std::vector<Interval> b = {{0, 1}, {0, 10}, {0, 2}, {0, 10}, {0, 6}};
    const FilteredWidth f = filtered_width(b, train, test);
    expect(f.retained == std::vector<std::size_t>{0, 2, 4});
    expect(f.median == 2.0);

    const std::size_t n = 150;
    DenseMatrix tr(n, 1), te(n, 1);
    std::vector<Interval> bb(n, Interval{0, 1});
    for (std::size_t j = 0; j < n; ++j) {
        te(j, 0) = static_cast<double>(j);
        tr(j, 0) = static_cast<double>(j) + 0.01;
    }
    tr(n - 1, 0) = 1000.0;
    const FilteredWidth far = filtered_width(bb, tr, te);
    expect(far.retained.size() == n - 1 && far.retained.back() == n - 2);
    return {ok, ok ? "all examples reproduced" : "an example differs"};
}

Outcome determinism(const fs::path& scratch) {
    std::string first;
    for (const char* tag : {"a", "b"}) {
        ExperimentConfig c = shipped("smoke.json", scratch / (std::string("smoke_") + tag));
        std::ostringstream log;
        run_experiment(c, false, log);
        std::ifstream is(fs::path(c.out_dir) / "results.csv", std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        if (first.empty()) {
            first = ss.str();
        } else {
            const bool same = ss.str() == first && first.find('\n') != first.size() - 1;
            return {same, same ? "results.csv identical (" + std::to_string(first.size()) + " bytes)"
                               : "results.csv differs or is empty"};
        }
    }
    return {false, "unreachable"};
}

}  // namespace

int main() {
    const fs::path scratch = fs::temp_directory_path() / "wnci_acceptance";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient and HVP match finite differences", gradients_and_hvp},
        {"CG matches dense solves", cg_vs_dense},
        {"weighted norm matches dense and ridge oracles", weighted_norm_oracle},
        {"GD reaches alignment with monotone objective", alignment_invariant},
        {"sensitivity identity matches retraining", sensitivity_identity},
        {"linear Monte-Carlo coverage", linear_mc},
        {"nonlinear Monte-Carlo coverage of the oracle bound", nonlinear_mc},
        {"desk-scale d=10 coverage trend", [&] { return table1_trend(scratch); }},
        {"d=1 band shape across sample sizes", [&] { return figure1_check(scratch); }},
        {"metric examples", metric_examples},
        {"smoke runs are byte-identical", [&] { return determinism(scratch); }},
    };

    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (k + 1) << ": " << criteria[k].first << " -- "
                  << o.detail << " [" << num(secs) << " s]" << std::endl;
    }
    fs::remove_all(scratch);
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
