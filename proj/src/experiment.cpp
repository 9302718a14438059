#include "wnci/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wnci/io.hpp"
#include "wnci/linoracle.hpp"

namespace wnci {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (std::uint64_t p : parts) {
        h ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h = Rng(h).next_u64();
    }
    return h;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

// Paper-scale defaults for the protocol at input dimension d.
void apply_defaults(ExperimentConfig& c, std::size_t d) {
    c.bench.d = d;
    c.train.optimizer = Optimizer::adamw;
    c.train.step_size = 1e-3;
    c.train.schedule = Schedule::cosine;
    c.train.epochs = 10000;
    c.trials = 5;
    c.bootstrap.replicates = 10;
    c.bootstrap.alpha = 0.01;
    c.cg = CgConfig{1000, 1e-12, true};
    c.v = c.c = 1.0;
    c.delta_total = 0.01;
    c.activation = Activation::relu;
    c.use_bias = true;
    if (d == 1) {
        c.hidden = {1024, 512};
        c.train.init = InitScheme::variance_scaling;
        c.train.init_std = 100.0;
        c.train.lambda = 1e-8;
        c.bench.matern.output_scale = 1.0;
        c.bench.test_mode = TestMode::grid;
        c.n_train = {100, 1000};
    } else {
        c.hidden = {1024};
        c.train.init = InitScheme::glorot;
        c.train.lambda = d >= 100 ? 1e-4 : 1e-3;
        c.bench.matern.output_scale = 0.1;
        c.bench.test_mode = TestMode::gaussian;
        c.bench.n_test = 500;
        c.n_train = {100, 1000};
    }
}

// Desk scale: hidden widths / 8, epochs / 5, 3 trials, 5 replicates.
void apply_desk(ExperimentConfig& c) {
    for (auto& w : c.hidden) w = std::max<std::size_t>(1, w / 8);
    c.train.epochs = std::max<std::size_t>(1, c.train.epochs / 5);
    c.trials = 3;
    c.bootstrap.replicates = 5;
}

std::string error_code(const std::exception& e) {
    if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
    if (dynamic_cast<const EnsembleError*>(&e)) return "ensemble";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const DefinitenessError*>(&e)) return "definiteness";
    if (dynamic_cast<const GenerationError*>(&e)) return "generation";
    if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
    if (dynamic_cast<const DomainError*>(&e)) return "domain";
    if (dynamic_cast<const EmptyInputError*>(&e)) return "empty_input";
    if (dynamic_cast<const FormatError*>(&e)) return "format";
    return "error";
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

// CSV with a header row -> vector of column maps.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& path) {
    std::vector<std::map<std::string, std::string>> rows;
    std::ifstream is(path);
    if (!is) return rows;
    std::string line;
    if (!std::getline(is, line)) return rows;
    const auto header = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        std::map<std::string, std::string> row;
        for (std::size_t k = 0; k < header.size() && k < cells.size(); ++k) row[header[k]] = cells[k];
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_interval_csv(std::ostream& os, const std::vector<Interval>& bands, const Vector& centers,
                        const DenseMatrix& test_inputs, const std::string& method) {
    os << "method,test_index,x,center,lb,ub,half_width,W,cg_iters,cg_residual,curvature_flag,mode\n";
    for (std::size_t j = 0; j < bands.size(); ++j) {
        os << method << ',' << j << ',';
        auto x = test_inputs.row(j);
        for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ";" : "") << fmt(x[k]);
        os << ',' << fmt(centers[j]) << ',' << fmt(bands[j].lb) << ',' << fmt(bands[j].ub) << ','
           << fmt(0.5 * bands[j].width()) << ",,,,,quantile\n";
    }
}

void write_confidence_csv(std::ostream& os, const std::vector<ConfidenceBand>& bands,
                          const DenseMatrix& test_inputs) {
    os << "method,test_index,x,center,lb,ub,half_width,W,cg_iters,cg_residual,curvature_flag,mode\n";
    for (std::size_t j = 0; j < bands.size(); ++j) {
        const auto& b = bands[j];
        os << "proposed," << j << ',';
        auto x = test_inputs.row(j);
        for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ";" : "") << fmt(x[k]);
        os << ',' << fmt(b.center) << ',' << fmt(b.lb) << ',' << fmt(b.ub) << ',' << fmt(b.half_width) << ','
           << fmt(b.norm.value) << ',' << b.norm.cg.iterations << ',' << fmt(b.norm.cg.final_residual) << ','
           << (b.norm.cg.curvature_flag ? 1 : 0) << ',' << to_string(b.mode) << '\n';
    }
}

std::vector<Interval> to_intervals(const std::vector<ConfidenceBand>& bands) {
    std::vector<Interval> out;
    out.reserve(bands.size());
    for (const auto& b : bands) out.push_back({b.lb, b.ub});
    return out;
}

DenseMatrix stack_rows(const DenseMatrix& a, const DenseMatrix& b) {
    Vector entries = a.entries();
    entries.insert(entries.end(), b.entries().begin(), b.entries().end());
    return DenseMatrix(a.rows() + b.rows(), a.cols(), std::move(entries));
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    try {
        check_keys(j,
                   {"name", "preset", "out_dir", "trials", "seed", "d", "n_train", "n_val", "n_test", "sigma",
                    "cutout", "test_mode", "grid", "matern", "model", "train", "methods", "proposed", "cg",
                    "bootstrap", "winkler_alpha", "lambda_grid", "record_wallclock", "write_bands",
                    "save_checkpoints"},
                   "config");
        const std::size_t d = j.value("d", std::size_t{1});
        if (d < 1) throw ConfigError("config: d must be >= 1");
        apply_defaults(c, d);
        read(j, "preset", c.preset);
        if (c.preset == "desk")
            apply_desk(c);
        else if (c.preset != "paper")
            throw ConfigError("config: preset must be 'paper' or 'desk'");

        read(j, "name", c.name);
        read(j, "out_dir", c.out_dir);
        read(j, "trials", c.trials);
        read(j, "seed", c.seed);
        if (j.contains("n_train")) {
            const auto& n = j.at("n_train");
            c.n_train = n.is_array() ? n.get<std::vector<std::size_t>>() : std::vector<std::size_t>{n.get<std::size_t>()};
        }
        read(j, "n_val", c.bench.n_val);
        read(j, "n_test", c.bench.n_test);
        read(j, "sigma", c.bench.sigma);
        read(j, "cutout", c.bench.cutout);
        if (j.contains("test_mode")) {
            const std::string m = j.at("test_mode");
            if (m == "grid")
                c.bench.test_mode = TestMode::grid;
            else if (m == "gaussian")
                c.bench.test_mode = TestMode::gaussian;
            else
                throw ConfigError("config: test_mode must be 'grid' or 'gaussian'");
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            check_keys(g, {"lo", "hi", "points"}, "grid");
            read(g, "lo", c.bench.grid_lo);
            read(g, "hi", c.bench.grid_hi);
            read(g, "points", c.bench.grid_points);
        }
        if (j.contains("matern")) {
            const auto& m = j.at("matern");
            check_keys(m, {"length_scale", "output_scale", "smoothness", "anchors"}, "matern");
            read(m, "length_scale", c.bench.matern.length_scale);
            read(m, "output_scale", c.bench.matern.output_scale);
            read(m, "smoothness", c.bench.matern.smoothness);
            read(m, "anchors", c.bench.matern.anchors);
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            check_keys(m, {"hidden", "activation", "use_bias"}, "model");
            read(m, "hidden", c.hidden);
            if (m.contains("activation")) c.activation = parse_activation(m.at("activation"));
            read(m, "use_bias", c.use_bias);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            check_keys(t,
                       {"optimizer", "step_size", "lambda", "epochs", "schedule", "init", "init_std", "beta1",
                        "beta2", "adam_eps", "tolerance"},
                       "train");
            if (t.contains("optimizer")) c.train.optimizer = parse_optimizer(t.at("optimizer"));
            read(t, "step_size", c.train.step_size);
            read(t, "lambda", c.train.lambda);
            read(t, "epochs", c.train.epochs);
            if (t.contains("schedule")) c.train.schedule = parse_schedule(t.at("schedule"));
            if (t.contains("init")) c.train.init = parse_init(t.at("init"));
            read(t, "init_std", c.train.init_std);
            read(t, "beta1", c.train.beta1);
            read(t, "beta2", c.train.beta2);
            read(t, "adam_eps", c.train.adam_eps);
            read(t, "tolerance", c.train.tolerance);
        }
        read(j, "methods", c.methods);
        for (const auto& m : c.methods)
            if (m != "proposed" && m != "bootstrap") throw ConfigError("config: unknown method '" + m + "'");
        if (j.contains("proposed")) {
            const auto& p = j.at("proposed");
            check_keys(p, {"delta_total", "v", "c", "band_mode"}, "proposed");
            read(p, "delta_total", c.delta_total);
            read(p, "v", c.v);
            read(p, "c", c.c);
            if (p.contains("band_mode")) c.band_mode = parse_band_mode(p.at("band_mode"));
        }
        if (j.contains("cg")) {
            const auto& g = j.at("cg");
            check_keys(g, {"max_iters", "tolerance", "curvature_guard"}, "cg");
            read(g, "max_iters", c.cg.max_iters);
            read(g, "tolerance", c.cg.tolerance);
            read(g, "curvature_guard", c.cg.curvature_guard);
        }
        if (j.contains("bootstrap")) {
            const auto& b = j.at("bootstrap");
            check_keys(b, {"replicates", "alpha", "shared_init"}, "bootstrap");
            read(b, "replicates", c.bootstrap.replicates);
            read(b, "alpha", c.bootstrap.alpha);
            read(b, "shared_init", c.bootstrap.shared_init);
        }
        read(j, "winkler_alpha", c.winkler_alpha);
        read(j, "lambda_grid", c.lambda_grid);
        read(j, "record_wallclock", c.record_wallclock);
        read(j, "write_bands", c.write_bands);
        read(j, "save_checkpoints", c.save_checkpoints);

        c.bench.validate();
        c.train.validate();
        c.cg.validate();
        if (c.trials < 1) throw ConfigError("config: trials must be >= 1");
        if (c.n_train.empty()) throw ConfigError("config: n_train must not be empty");
        if (!(c.delta_total > 0.0 && c.delta_total < 1.0)) throw ConfigError("config: delta_total must lie in (0, 1)");
        if (!(c.winkler_alpha > 0.0 && c.winkler_alpha < 1.0))
            throw ConfigError("config: winkler_alpha must lie in (0, 1)");
        if (c.bootstrap.replicates < 2) throw ConfigError("config: bootstrap needs >= 2 replicates");
        if (!(c.bench.sigma > 0.0)) throw ConfigError("config: sigma must be positive");
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

void write_results_csv(std::ostream& os, const std::vector<RunRow>& rows) {
    os << kResultsHeader << '\n';
    for (const auto& r : rows)
        os << r.trial << ',' << r.method << ',' << r.d << ',' << r.n_train << ',' << fmt(r.lambda) << ',' << r.epochs
           << ',' << fmt(r.metrics.coverage) << ',' << fmt(r.metrics.avg_width) << ',' << fmt(r.metrics.median_width)
           << ',' << fmt(r.metrics.winkler) << ',' << fmt(r.metrics.test_mse) << ',' << fmt(r.mean_cg_iters) << ','
           << fmt(r.mean_alignment_residual) << ',' << fmt(r.wallclock_s) << '\n';
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, bool sweep, std::ostream& log) {
    const fs::path out(config.out_dir);
    fs::create_directories(out / "bands");
    fs::create_directories(out / "truth");
    if (config.save_checkpoints) fs::create_directories(out / "models");

    const MlpArch arch = make_arch(config.bench.d, config.hidden, config.activation, config.use_bias);
    const std::vector<double> lambdas = sweep ? config.lambda_grid : std::vector<double>{config.train.lambda};
    if (lambdas.empty()) throw ConfigError("sweep: empty lambda grid");
    const bool want_proposed = std::find(config.methods.begin(), config.methods.end(), "proposed") != config.methods.end();
    const bool want_bootstrap =
        std::find(config.methods.begin(), config.methods.end(), "bootstrap") != config.methods.end();

    ExperimentOutcome outcome;
    using clock = std::chrono::steady_clock;

    for (std::size_t trial = 0; trial < config.trials; ++trial) {
        for (std::size_t n : config.n_train) {
            BenchmarkSpec spec = config.bench;
            spec.n_train = n;
            spec.matern.seed = derive_seed({config.seed, trial, 1});
            spec.design_seed = derive_seed({config.seed, trial, n, 2});
            spec.noise_seed = derive_seed({config.seed, trial, n, 3});
            Benchmark bench;
            try {
                bench = generate(spec);
            } catch (const Error& e) {
                for (const auto& m : config.methods)
                    for (double lam : lambdas) outcome.failures.push_back({trial, m, n, lam, error_code(e), e.what()});
                log << "trial " << trial << " n=" << n << ": generation failed: " << e.what() << '\n';
                continue;
            }
            const std::string tag = "t" + std::to_string(trial) + "_n" + std::to_string(n);
            const std::string truth_file = "truth/" + tag + ".csv";
            {
                std::ofstream tf(out / truth_file);
                tf << "test_index,truth,response\n";
                for (std::size_t j = 0; j < bench.test_truth.size(); ++j)
                    tf << j << ',' << fmt(bench.test_truth[j]) << ',' << fmt(bench.test_responses[j]) << '\n';
            }

            for (std::size_t li = 0; li < lambdas.size(); ++li) {
                TrainConfig tc = config.train;
                tc.lambda = lambdas[li];
                tc.seed = derive_seed({config.seed, trial, n, 4});
                const std::string run_tag = tag + "_l" + std::to_string(li);

                RunRow base;
                base.trial = trial;
                base.d = spec.d;
                base.n_train = n;
                base.lambda = tc.lambda;
                base.epochs = tc.epochs;
                base.truth_file = truth_file;

                if (want_proposed) {
                    const auto start = clock::now();
                    try {
                        const TrainResult tr = train(arch, bench.train, tc);
                        BoundParams params{spec.sigma, config.delta_total, config.v, config.c, n};
                        BandOptions opts;
                        opts.mode = config.band_mode;
                        opts.initial_loss = tr.trace.initial_reg_loss();
                        const auto bands =
                            band_batch(tr.model, bench.train, tc.lambda, bench.test_inputs, params, config.cg, opts);
                        const auto intervals = to_intervals(bands);
                        Vector centers;
                        double iters = 0.0;
                        for (const auto& b : bands) {
                            centers.push_back(b.center);
                            iters += static_cast<double>(b.norm.cg.iterations);
                        }
                        RunRow row = base;
                        row.method = "proposed";
                        row.metrics = evaluate_bands(intervals, centers, bench, config.winkler_alpha);
                        row.mean_cg_iters = iters / static_cast<double>(bands.size());
                        row.mean_alignment_residual = alignment_residual(tr.model, bench.train, tc.lambda);
                        if (sweep) {
                            const auto vb = band_batch(tr.model, bench.train, tc.lambda, bench.val.inputs, params,
                                                       config.cg, opts);
                            row.val_winkler = winkler(to_intervals(vb), bench.val.responses, config.winkler_alpha);
                        }
                        if (config.write_bands) {
                            row.band_file = "bands/proposed_" + run_tag + ".csv";
                            std::ofstream bf(out / row.band_file);
                            write_confidence_csv(bf, bands, bench.test_inputs);
                        }
                        if (config.save_checkpoints) save_checkpoint((out / "models" / (run_tag + ".bin")).string(), tr.model);
                        if (config.record_wallclock)
                            row.wallclock_s = std::chrono::duration<double>(clock::now() - start).count();
                        log << "proposed " << run_tag << ": coverage " << fmt(row.metrics.coverage) << " median width "
                            << fmt(row.metrics.median_width) << '\n';
                        outcome.rows.push_back(std::move(row));
                    } catch (const Error& e) {
                        outcome.failures.push_back({trial, "proposed", n, tc.lambda, error_code(e), e.what()});
                        log << "proposed " << run_tag << " failed: " << e.what() << '\n';
                    }
                }

                if (want_bootstrap) {
                    const auto start = clock::now();
                    try {
                        Rng rng(derive_seed({config.seed, trial, n, 5, li}));
                        const DenseMatrix eval_inputs =
                            sweep ? stack_rows(bench.test_inputs, bench.val.inputs) : bench.test_inputs;
                        BootstrapResult br = bootstrap_bands(arch, bench.train, tc, eval_inputs, rng, config.bootstrap);
                        const std::size_t m = bench.test_inputs.rows();
                        const std::vector<Interval> test_bands(br.bands.begin(), br.bands.begin() + m);
                        const Vector centers(br.centers.begin(), br.centers.begin() + m);
                        RunRow row = base;
                        row.method = "bootstrap";
                        row.metrics = evaluate_bands(test_bands, centers, bench, config.winkler_alpha);
                        row.mean_alignment_residual = mean(br.alignment_residuals);
                        if (sweep) {
                            const std::vector<Interval> vb(br.bands.begin() + m, br.bands.end());
                            row.val_winkler = winkler(vb, bench.val.responses, config.winkler_alpha);
                        }
                        if (config.write_bands) {
                            row.band_file = "bands/bootstrap_" + run_tag + ".csv";
                            std::ofstream bf(out / row.band_file);
                            write_interval_csv(bf, test_bands, centers, bench.test_inputs, "bootstrap");
                        }
                        for (const auto& f : br.failures)
                            outcome.failures.push_back({trial, "bootstrap", n, tc.lambda, "replicate_dropped", f});
                        if (config.record_wallclock)
                            row.wallclock_s = std::chrono::duration<double>(clock::now() - start).count();
                        log << "bootstrap " << run_tag << ": coverage " << fmt(row.metrics.coverage)
                            << " median width " << fmt(row.metrics.median_width) << '\n';
                        outcome.rows.push_back(std::move(row));
                    } catch (const Error& e) {
                        outcome.failures.push_back({trial, "bootstrap", n, tc.lambda, error_code(e), e.what()});
                        log << "bootstrap " << run_tag << " failed: " << e.what() << '\n';
                    }
                }
            }
        }
    }

    {
        std::ofstream os(out / "results.csv");
        write_results_csv(os, outcome.rows);
    }
    {
        std::ofstream os(out / "runs.csv");
        os << "trial,method,d,n_train,lambda,use_bias,band_file,truth_file\n";
        for (const auto& r : outcome.rows)
            os << r.trial << ',' << r.method << ',' << r.d << ',' << r.n_train << ',' << fmt(r.lambda) << ','
               << (config.use_bias ? 1 : 0) << ',' << r.band_file << ',' << r.truth_file << '\n';
    }
    {
        std::ofstream os(out / "errors.csv");
        os << "trial,method,n_train,lambda,code,message\n";
        for (const auto& f : outcome.failures) {
            std::string msg = f.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            os << f.trial << ',' << f.method << ',' << f.n_train << ',' << fmt(f.lambda) << ',' << f.code << ',' << msg
               << '\n';
        }
    }
    if (sweep) {
        std::ofstream os(out / "sweep_selection.csv");
        os << "trial,method,n_train,lambda,val_winkler\n";
        std::map<std::tuple<std::size_t, std::string, std::size_t>, const RunRow*> best;
        for (const auto& r : outcome.rows) {
            auto key = std::make_tuple(r.trial, r.method, r.n_train);
            auto it = best.find(key);
            if (it == best.end() || r.val_winkler < it->second->val_winkler) best[key] = &r;
        }
        for (const auto& [key, r] : best)
            os << r->trial << ',' << r->method << ',' << r->n_train << ',' << fmt(r->lambda) << ','
               << fmt(r->val_winkler) << '\n';
    }
    return outcome;
}

std::size_t emit_figure_data(const std::string& results_dir, std::ostream& log) {
    const fs::path dir(results_dir);
    std::size_t warnings = 0;
    std::ofstream fig1(dir / "fig1.csv");
    std::ofstream fig2(dir / "fig2.csv");
    if (!fig1 || !fig2) throw FormatError("cannot write figure files in " + results_dir);
    fig1 << "method,n_train,trial,lambda,x,truth,center,lb,ub\n";
    fig2 << "method,n_train,lambda,runs,median_width_mean,median_width_std,coverage_mean,coverage_std\n";

    const auto runs = read_csv(dir / "runs.csv");
    const auto results = read_csv(dir / "results.csv");
    if (runs.empty() || results.empty()) {
        log << "warning: no completed runs in " << results_dir << '\n';
        return 1;
    }

    for (const auto& r : runs) {
        if (r.at("d") != "1") continue;
        if (r.at("band_file").empty()) {
            log << "warning: run without band file (trial " << r.at("trial") << ", " << r.at("method") << ")\n";
            ++warnings;
            continue;
        }
        const auto bands = read_csv(dir / r.at("band_file"));
        const auto truth = read_csv(dir / r.at("truth_file"));
        if (bands.empty() || bands.size() != truth.size()) {
            log << "warning: missing or mismatched band/truth files for " << r.at("band_file") << '\n';
            ++warnings;
            continue;
        }
        for (std::size_t j = 0; j < bands.size(); ++j)
            fig1 << r.at("method") << ',' << r.at("n_train") << ',' << r.at("trial") << ',' << r.at("lambda") << ','
                 << bands[j].at("x") << ',' << truth[j].at("truth") << ',' << bands[j].at("center") << ','
                 << bands[j].at("lb") << ',' << bands[j].at("ub") << '\n';
    }

    struct Acc {
        Vector width, cover;
    };
    std::map<std::tuple<std::string, std::size_t, double>, Acc> groups;
    for (const auto& r : results) {
        try {
            auto& acc = groups[{r.at("method"), std::stoul(r.at("n_train")), std::stod(r.at("lambda"))}];
            acc.width.push_back(std::stod(r.at("median_width")));
            acc.cover.push_back(std::stod(r.at("coverage")));
        } catch (const std::exception&) {
            log << "warning: malformed results row skipped\n";
            ++warnings;
        }
    }
    for (const auto& [key, acc] : groups) {
        const auto& [method, n, lambda] = key;
        fig2 << method << ',' << n << ',' << fmt(lambda) << ',' << acc.width.size() << ',' << fmt(mean(acc.width))
             << ',' << fmt(stddev(acc.width)) << ',' << fmt(mean(acc.cover)) << ',' << fmt(stddev(acc.cover)) << '\n';
    }
    return warnings;
}

bool run_self_check(std::ostream& out) {
    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok, double value) {
        out << (ok ? "PASS " : "FAIL ") << name << " (" << fmt(value) << ")\n";
        all_ok = all_ok && ok;
    };

    Rng rng(12345);
    const MlpArch arch = make_arch(3, {5, 4}, Activation::tanh);
    TrainConfig tc;
    tc.init = InitScheme::variance_scaling;
    tc.init_std = 1.0;
    const MlpModel model = init_params(arch, tc, rng);
    DenseMatrix x(12, 3);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t k = 0; k < 3; ++k) x(i, k) = rng.normal();
    const Dataset data(x, gaussian_vector(rng, 12), 0.1);
    const double lambda = 0.05;
    const std::size_t p = model.num_params();

    // gradient vs central differences
    {
        const Vector g = grad_theta_loss(model, data, lambda);
        Vector fd(p);
        const double h = 1e-5;
        for (std::size_t i = 0; i < p; ++i) {
            MlpModel a = model, b = model;
            a.theta[i] += h;
            b.theta[i] -= h;
            fd[i] = (loss_reg(a, data, lambda) - loss_reg(b, data, lambda)) / (2 * h);
        }
        const double err = norm2(subtract(g, fd)) / norm2(fd);
        report("gradient matches finite differences", err <= 1e-5, err);
    }
    // Hessian-vector product vs differences of gradients
    DenseMatrix hess(p, p);
    {
        const Vector z = gaussian_vector(rng, p);
        const Vector hz = hvp_loss(model, data, lambda, z);
        const double h = 1e-5;
        MlpModel a = model, b = model;
        axpy(h, z, a.theta);
        axpy(-h, z, b.theta);
        const Vector fd = scaled(subtract(grad_theta_loss(a, data, lambda), grad_theta_loss(b, data, lambda)), 0.5 / h);
        const double err = norm2(subtract(hz, fd)) / norm2(fd);
        report("hvp matches gradient differences", err <= 1e-4, err);
        for (std::size_t j = 0; j < p; ++j) {
            Vector e(p, 0.0);
            e[j] = 1.0;
            const Vector col = hvp_loss(model, data, lambda, e);
            for (std::size_t i = 0; i < p; ++i) hess(i, j) = col[i];
        }
        report("assembled Hessian is symmetric", hess.asymmetry() <= 1e-10, hess.asymmetry());
    }
    // CG vs dense solve on a shifted SPD system
    {
        DenseMatrix a = hess;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
        for (std::size_t i = 0; i < p; ++i) a(i, i) += 1.0;
        const Vector v = gaussian_vector(rng, p);
        const Vector direct = dense_sym_solve(a, v);
        const CgResult cg = cg_solve([&](std::span<const double> z) { return a.multiply(z); }, v, {}, CgConfig{});
        const double err = norm2(subtract(cg.solution, direct)) / norm2(direct);
        report("cg matches dense solve", err <= 1e-8, err);
    }
    // linear model: weighted norm equals the ridge closed form
    {
        const MlpArch lin = make_arch(3, {}, Activation::identity);
        const Vector theta = ridge_fit(data.inputs, data.responses, lambda);
        const MlpModel m(lin, theta);
        const Vector q = {0.3, -1.2, 0.7};
        const double w = weighted_norm(m, data, lambda, q, CgConfig{}).value;
        const double exact = ridge_weighted_norm(data.inputs, lambda, q).exact;
        const double err = std::abs(w - exact) / exact;
        report("linear weighted norm matches ridge closed form", err <= 1e-6, err);
        const double align = alignment_residual(m, data, lambda);
        report("ridge solution is stationary", align <= 1e-10, align);
    }
    return all_ok;
}

}  // namespace wnci
