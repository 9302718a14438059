#pragma once

// Experiment driver: config parsing, the generate -> train -> band -> score
// pipeline over trials, sample sizes and methods, and figure-data export.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wnci/bench.hpp"
#include "wnci/bootstrap.hpp"
#include "wnci/cgsolver.hpp"
#include "wnci/confidence.hpp"
#include "wnci/errors.hpp"
#include "wnci/trainer.hpp"

namespace wnci {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string preset = "paper";
    std::string out_dir = "results";
    std::size_t trials = 5;
    std::uint64_t seed = 0;

    BenchmarkSpec bench;
    std::vector<std::size_t> n_train = {100};

    std::vector<std::size_t> hidden = {1024};
    Activation activation = Activation::relu;
    bool use_bias = true;
    TrainConfig train;

    std::vector<std::string> methods = {"proposed", "bootstrap"};
    double delta_total = 0.01;
    double v = 1.0;
    double c = 1.0;
    BandMode band_mode = BandMode::pointwise_thm31;
    CgConfig cg;
    BootstrapOptions bootstrap;
    double winkler_alpha = 0.01;

    /// evaluated by `sweep`; `run` uses train.lambda only
    std::vector<double> lambda_grid = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2};

    bool record_wallclock = true;
    bool write_bands = true;
    bool save_checkpoints = false;
};

/// Parses a JSON config. Defaults follow the paper-scale protocol for the
/// configured input dimension; "preset": "desk" shrinks widths, epochs,
/// trials and replicates. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct RunRow {
    std::size_t trial = 0;
    std::string method;
    std::size_t d = 0;
    std::size_t n_train = 0;
    double lambda = 0.0;
    std::size_t epochs = 0;
    MetricsReport metrics;
    double mean_cg_iters = 0.0;
    double mean_alignment_residual = 0.0;
    double wallclock_s = 0.0;
    /// validation Winkler score (sweep mode only)
    double val_winkler = 0.0;
    std::string band_file;
    std::string truth_file;
};

struct RunFailure {
    std::size_t trial = 0;
    std::string method;
    std::size_t n_train = 0;
    double lambda = 0.0;
    std::string code;
    std::string message;
};

struct ExperimentOutcome {
    std::vector<RunRow> rows;
    std::vector<RunFailure> failures;
    /// 0 on full success, 2 when some runs failed
    int exit_code() const { return failures.empty() ? 0 : 2; }
};

inline const char* kResultsHeader =
    "trial,method,d,n_train,lambda,epochs,coverage,avg_width,median_width,winkler,test_mse,mean_cg_iters,"
    "mean_alignment_residual,wallclock_s";

/// Runs every (trial, n_train, lambda, method) combination and writes
/// results.csv, runs.csv, errors.csv and per-run band files under out_dir.
/// In sweep mode every lambda in lambda_grid is evaluated and the
/// validation-Winkler minimizer per (trial, n_train, method) is written to
/// sweep_selection.csv.
ExperimentOutcome run_experiment(const ExperimentConfig& config, bool sweep, std::ostream& log);

void write_results_csv(std::ostream& os, const std::vector<RunRow>& rows);

/// Reads results_dir and writes fig1.csv and fig2.csv there. Returns the
/// number of warnings emitted.
std::size_t emit_figure_data(const std::string& results_dir, std::ostream& log);

/// Quick oracle/property checks; prints one line per check.
bool run_self_check(std::ostream& out);

}  // namespace wnci
