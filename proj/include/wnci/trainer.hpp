#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wnci/errors.hpp"
#include "wnci/model.hpp"
#include "wnci/numkit.hpp"

namespace wnci {

enum class Optimizer { gd, adamw };
enum class Schedule { constant, cosine };
enum class InitScheme { glorot, variance_scaling };

Optimizer parse_optimizer(const std::string& s);
Schedule parse_schedule(const std::string& s);
InitScheme parse_init(const std::string& s);
std::string to_string(Optimizer o);
std::string to_string(Schedule s);
std::string to_string(InitScheme s);

struct TrainConfig {
    Optimizer optimizer = Optimizer::adamw;
    double step_size = 1e-3;
    /// l2 coefficient; for adamw applied as decoupled decay at rate step * lambda
    double lambda = 0.0;
    std::size_t epochs = 1;
    Schedule schedule = Schedule::constant;
    InitScheme init = InitScheme::glorot;
    /// standard deviation s for variance_scaling: weights ~ N(0, s^2 / fan_in)
    double init_std = 1.0;
    std::uint64_t seed = 0;

    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    /// Stop early once ||grad L_lambda|| <= tolerance (0 disables).
    double tolerance = 0.0;
    /// CSV sampling period of the trace.
    std::size_t trace_every = 1;

    void validate() const;
};

struct TraceRow {
    std::size_t epoch = 0;
    double loss = 0.0;
    double reg_loss = 0.0;
    double step_size = 0.0;
    double alignment_residual = 0.0;
};

struct TrainTrace {
    /// L_lambda(theta_t) for t = 0..updates (one more entry than updates performed)
    std::vector<double> reg_losses;
    /// Rows sampled every trace_every epochs plus the final state.
    std::vector<TraceRow> rows;
    std::size_t updates = 0;
    double beta1 = 0.0, beta2 = 0.0, adam_eps = 0.0;

    double initial_reg_loss() const { return reg_losses.front(); }
    double final_reg_loss() const { return reg_losses.back(); }
    void write_csv(std::ostream& os) const;
};

struct TrainResult {
    MlpModel model;
    TrainTrace trace;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, MlpModel last_finite)
        : Error(what), last_finite_(std::move(last_finite)) {}
    const MlpModel& last_finite() const { return last_finite_; }

private:
    MlpModel last_finite_;
};

MlpModel init_params(const MlpArch& arch, const TrainConfig& config, Rng& rng);

/// Step size used at update `epoch` (0-based).
double step_size_at(const TrainConfig& config, std::size_t epoch);

/// Full-batch training from init_params(arch, config, Rng(config.seed)).
TrainResult train(const MlpArch& arch, const Dataset& data, const TrainConfig& config);
/// Full-batch training from a given starting point.
TrainResult train_from(MlpModel start, const Dataset& data, const TrainConfig& config);

/// ||lambda theta + grad L(theta)||
double alignment_residual(const MlpModel& model, const Dataset& data, double lambda);

}  // namespace wnci
