#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "support.hpp"
#include "wnci/errors.hpp"
#include "wnci/linoracle.hpp"
#include "wnci/trainer.hpp"

using namespace wnci;
using doctest::Approx;

TEST_CASE("init_params") {
    const MlpArch arch = make_arch(4, {4}, Activation::relu, true);
    TrainConfig cfg;
    cfg.init = InitScheme::variance_scaling;
    cfg.init_std = 0.0;
    Rng rng(1);
    const MlpModel zero = init_params(arch, cfg, rng);
    for (double t : zero.theta) CHECK(t == 0.0);

    cfg.init = InitScheme::glorot;
    Rng a(5), b(5);
    CHECK(init_params(arch, cfg, a).theta == init_params(arch, cfg, b).theta);

    // first layer is 4 -> 4: variance 2 / 8
    const MlpArch sq = make_arch(4, {4}, Activation::relu);
    Rng big(8);
    double s = 0.0;
    std::size_t count = 0;
    while (count < 100000) {
        const MlpModel m = init_params(sq, cfg, big);
        for (std::size_t i = 0; i < 16; ++i) s += m.theta[i] * m.theta[i];
        count += 16;
    }
    CHECK(s / static_cast<double>(count) == Approx(0.25).epsilon(0.05));

    // biases start at zero
    Rng c(3);
    const MlpModel mb = init_params(arch, cfg, c);
    for (std::size_t i = 16; i < 20; ++i) CHECK(mb.theta[i] == 0.0);
}

TEST_CASE("variance scaling uses s^2 / fan_in") {
    const MlpArch arch = make_arch(16, {8}, Activation::relu);
    TrainConfig cfg;
    cfg.init = InitScheme::variance_scaling;
    cfg.init_std = 2.0;
    Rng rng(4);
    double s = 0.0;
    std::size_t count = 0;
    for (int rep = 0; rep < 800; ++rep) {
        const MlpModel m = init_params(arch, cfg, rng);
        for (std::size_t i = 0; i < 128; ++i) s += m.theta[i] * m.theta[i];
        count += 128;
    }
    CHECK(s / static_cast<double>(count) == Approx(4.0 / 16.0).epsilon(0.05));
}

TEST_CASE("config validation and names") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.epochs = 1;
    cfg.step_size = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    CHECK(parse_optimizer("gd") == Optimizer::gd);
    CHECK(parse_schedule(to_string(Schedule::cosine)) == Schedule::cosine);
    CHECK(parse_init("variance_scaling") == InitScheme::variance_scaling);
    CHECK_THROWS(parse_optimizer("sgd"));
}

TEST_CASE("cosine schedule") {
    TrainConfig cfg;
    cfg.schedule = Schedule::cosine;
    cfg.step_size = 0.5;
    cfg.epochs = 100;
    CHECK(step_size_at(cfg, 0) == Approx(0.5));
    CHECK(step_size_at(cfg, 37) == Approx(0.5 * (1 + std::cos(std::numbers::pi * 37 / 100.0)) / 2));
    CHECK(step_size_at(cfg, 99) < 1e-3);
    cfg.schedule = Schedule::constant;
    CHECK(step_size_at(cfg, 99) == 0.5);
}

TEST_CASE("gd on a linear model converges to ridge") {
    Rng rng(9);
    const Dataset data = testing::random_data(rng, 30, 4);
    const MlpArch arch = make_arch(4, {}, Activation::identity);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::gd;
    cfg.step_size = 0.5;
    cfg.lambda = 0.1;
    cfg.epochs = 5000;
    cfg.tolerance = 1e-13;
    const TrainResult r = train(arch, data, cfg);
    const Vector ridge = ridge_fit(data.inputs, data.responses, cfg.lambda);
    CHECK(norm2(subtract(r.model.theta, ridge)) <= 1e-6);
    for (std::size_t t = 1; t < r.trace.reg_losses.size(); ++t)
        CHECK(r.trace.reg_losses[t] <= r.trace.reg_losses[t - 1] + 1e-15);
    CHECK(r.trace.updates < 5000);
    CHECK(r.trace.reg_losses.size() == r.trace.updates + 1);
}

TEST_CASE("single epoch performs one update") {
    Rng rng(10);
    const Dataset data = testing::random_data(rng, 5, 2);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.optimizer = Optimizer::gd;
    cfg.init = InitScheme::variance_scaling;
    cfg.init_std = 0.5;
    const MlpArch arch = make_arch(2, {3}, Activation::tanh);
    const TrainResult r = train(arch, data, cfg);
    CHECK(r.trace.updates == 1);
    CHECK(r.trace.reg_losses.size() == 2);
    Rng again(cfg.seed);
    const MlpModel start = init_params(arch, cfg, again);
    Vector expected = start.theta;
    axpy(-cfg.step_size, grad_theta_loss(start, data, cfg.lambda), expected);
    CHECK(testing::rel_err(r.model.theta, expected) < 1e-14);
}

TEST_CASE("adamw first step") {
    Rng rng(12);
    const Dataset data = testing::random_data(rng, 6, 2);
    const MlpArch arch = make_arch(2, {}, Activation::identity);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::adamw;
    cfg.step_size = 0.01;
    cfg.lambda = 0.5;
    cfg.epochs = 1;
    const MlpModel start(arch, Vector{0.3, -0.2});
    const TrainResult r = train_from(start, data, cfg);
    // bias-corrected first step: m_hat / sqrt(v_hat) = sign(g)
    const Vector g = grad_theta_loss(start, data, 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
        const double adam = g[i] / (std::abs(g[i]) + cfg.adam_eps);
        CHECK(r.model.theta[i] == Approx(start.theta[i] - 0.01 * (adam + 0.5 * start.theta[i])).epsilon(1e-12));
    }
}

TEST_CASE("alignment residual") {
    Rng rng(13);
    const Dataset data = testing::random_data(rng, 20, 3);
    const MlpArch lin = make_arch(3, {}, Activation::identity);
    const MlpModel ridge(lin, ridge_fit(data.inputs, data.responses, 0.2));
    CHECK(alignment_residual(ridge, data, 0.2) <= 1e-10);

    const MlpArch arch = make_arch(3, {4}, Activation::tanh);
    TrainConfig cfg;
    cfg.init = InitScheme::glorot;
    Rng init(14);
    const MlpModel fresh = init_params(arch, cfg, init);
    CHECK(alignment_residual(fresh, data, 0.1) > 0.0);

    cfg.optimizer = Optimizer::gd;
    cfg.step_size = 0.5;
    cfg.lambda = 0.1;
    cfg.epochs = 20000;
    cfg.tolerance = 1e-9;
    const TrainResult r = train(arch, data, cfg);
    CHECK(alignment_residual(r.model, data, 0.1) <= 1e-6 * (1 + norm2(r.model.theta)));
}

TEST_CASE("divergence is reported") {
    Rng rng(15);
    const Dataset data = testing::random_data(rng, 10, 2);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::gd;
    cfg.step_size = 1e6;
    cfg.epochs = 200;
    cfg.init = InitScheme::variance_scaling;
    const MlpArch arch = make_arch(2, {3}, Activation::identity);
    CHECK_THROWS_AS(train(arch, data, cfg), DivergenceError);
}

TEST_CASE("trace csv") {
    Rng rng(16);
    const Dataset data = testing::random_data(rng, 4, 1);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.trace_every = 5;
    const TrainResult r = train(make_arch(1, {2}, Activation::tanh), data, cfg);
    std::ostringstream os;
    r.trace.write_csv(os);
    const std::string s = os.str();
    CHECK(s.rfind("epoch,loss,reg_loss,step_size,alignment_residual\n", 0) == 0);
    CHECK(r.trace.rows.back().epoch == 10);
}
