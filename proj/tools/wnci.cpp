#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wnci/bench.hpp"
#include "wnci/experiment.hpp"
#include "wnci/io.hpp"

namespace {

int run_command(const std::string& path, const std::string& out, bool sweep, const std::vector<double>& grid) {
    wnci::ExperimentConfig config;
    try {
        config = wnci::load_config(path);
    } catch (const wnci::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    if (!out.empty()) config.out_dir = out;
    if (!grid.empty()) config.lambda_grid = grid;
    try {
        const auto outcome = wnci::run_experiment(config, sweep, std::cerr);
        std::cerr << outcome.rows.size() << " runs completed, " << outcome.failures.size() << " failures\n";
        return outcome.exit_code();
    } catch (const wnci::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wnci: confidence bands for neural network regression"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<double> grid;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "override out_dir");

    auto* sweep = app.add_subcommand("sweep", "evaluate a lambda grid and select by validation Winkler score");
    sweep->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out_dir, "override out_dir");
    sweep->add_option("--lambda-grid", grid, "lambda values (overrides lambda_grid)")->delimiter(',');

    std::string results_dir;
    auto* figures = app.add_subcommand("figures", "write fig1.csv and fig2.csv from a results directory");
    figures->add_option("results_dir", results_dir)->required()->check(CLI::ExistingDirectory);

    auto* check = app.add_subcommand("check", "run the gradient/HVP/CG/ridge oracle checks");

    std::string gen_out;
    wnci::BenchmarkSpec spec;
    std::uint64_t truth_seed = 0;
    auto* gen = app.add_subcommand("generate", "write a benchmark training set as a dataset file");
    gen->add_option("--d", spec.d)->default_val(1);
    gen->add_option("--n", spec.n_train)->default_val(100);
    gen->add_option("--sigma", spec.sigma)->default_val(0.1);
    gen->add_option("--truth-seed", truth_seed)->default_val(0);
    gen->add_option("--design-seed", spec.design_seed)->default_val(1);
    gen->add_option("--noise-seed", spec.noise_seed)->default_val(2);
    gen->add_option("--out", gen_out, "dataset path (.json)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_command(config_path, out_dir, false, {});
        if (*sweep) return run_command(config_path, out_dir, true, grid);
        if (*figures) {
            const std::size_t warnings = wnci::emit_figure_data(results_dir, std::cerr);
            return warnings == 0 ? 0 : 2;
        }
        if (*check) return wnci::run_self_check(std::cout) ? 0 : 2;
        if (*gen) {
            spec.matern.seed = truth_seed;
            spec.n_test = 1;
            const wnci::Benchmark bench = wnci::generate(spec);
            wnci::save_dataset(gen_out, {bench.train, {spec.design_seed, truth_seed, spec.noise_seed}});
            return 0;
        }
    } catch (const wnci::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
