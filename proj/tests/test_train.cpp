#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdehnn/train.hpp"

using namespace sdehnn;

namespace {

// Scalar Adam reference: one parameter, textbook update equations.
struct AdamOracle {
    double lr, b1, b2, eps, wd;
    double m = 0.0, v = 0.0;
    long t = 0;

    double step(double theta, double grad) {
        ++t;
        const double g = grad + wd * theta;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, static_cast<double>(t)));
        const double vh = v / (1 - std::pow(b2, static_cast<double>(t)));
        return theta - lr * mh / (std::sqrt(vh) + eps);
    }
};

SampleSet toy_set(int n, std::uint64_t /*seed*/) {
    // Tiny smooth 1-d regression: y = sin(x) on [0, 3].
    SampleSet set;
    for (int i = 0; i < n; ++i) {
        const double x = 3.0 * (i + 0.5) / n;
        set.inputs.push_back(Tensor(1, 1, {x}));
        set.targets.push_back(std::sin(x));
    }
    return set;
}

ModelSpec tiny_spec(std::uint64_t seed) {
    ModelSpec spec;
    spec.hidden = 8;
    spec.init = InitKind::Dense;
    spec.input_dim = 1;
    spec.terminal_time = 2.0;
    spec.step_size = 1.0;
    spec.sde_steps = 2;
    spec.solver = SolverMode::Bernoulli;
    spec.mask_probability = 0.2;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("adam matches a scalar oracle over many steps") {
    AdamConfig cfg;
    cfg.lr = 0.05;
    cfg.weight_decay = 0.01;
    AdamState adam(cfg);
    AdamOracle oracle{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay};

    Parameter p("p", Tensor(1, 1, {2.0}));
    double theta = 2.0;
    std::vector<Parameter*> params{&p};
    for (int i = 0; i < 200; ++i) {
        // d/dtheta of (theta - 0.5)^2 plus a varying term.
        const double grad = 2.0 * (theta - 0.5) + 0.1 * std::sin(i);
        p.grad[0] = grad;
        adam.step(params);
        theta = oracle.step(theta, grad);
        CHECK(p.value.v[0] == doctest::Approx(theta).epsilon(1e-12));
    }
    CHECK(adam.steps_taken() == 200);
    // Converged near the weight-decay-shifted minimum, not the raw one.
    CHECK(std::fabs(p.value.v[0] - 0.5) < 0.1);
}

TEST_CASE("adam rejects a changed parameter set") {
    AdamState adam(AdamConfig{});
    Parameter a("a", Tensor(1, 1, {0.0}));
    Parameter b("b", Tensor(1, 1, {0.0}));
    adam.step({&a});
    CHECK_THROWS_AS(adam.step({&a, &b}), DimensionError);
}

TEST_CASE("training reduces the objective and restores the best snapshot") {
    SampleSet train_set = toy_set(48, 1);
    SampleSet val_set = toy_set(16, 2);
    SdeHnnModel model(tiny_spec(7));

    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 16;
    cfg.seed = 7;
    cfg.patience = 0;
    AdamConfig adam;
    adam.lr = 5e-3;

    TrainResult result = train(model, train_set, val_set, cfg, adam);
    REQUIRE(result.curve.size() == 40);
    CHECK(result.epochs_run == 40);
    CHECK(result.curve.back().train_nll < result.curve.front().train_nll);

    // The curve's minimum val NLL is the reported best.
    double min_val = result.curve.front().val_nll;
    for (const auto& pt : result.curve) min_val = std::min(min_val, pt.val_nll);
    CHECK(result.best_val_nll == doctest::Approx(min_val));
    CHECK(result.curve[result.best_epoch].val_nll == doctest::Approx(result.best_val_nll));
}

TEST_CASE("training is bitwise reproducible") {
    SampleSet train_set = toy_set(32, 3);
    SampleSet val_set = toy_set(12, 4);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 8;
    cfg.seed = 21;
    cfg.patience = 0;

    SdeHnnModel a(tiny_spec(21)), b(tiny_spec(21));
    TrainResult ra = train(a, train_set, val_set, cfg, AdamConfig{});
    TrainResult rb = train(b, train_set, val_set, cfg, AdamConfig{});
    REQUIRE(ra.curve.size() == rb.curve.size());
    for (std::size_t i = 0; i < ra.curve.size(); ++i) {
        CHECK(ra.curve[i].train_nll == rb.curve[i].train_nll);
        CHECK(ra.curve[i].val_nll == rb.curve[i].val_nll);
        CHECK(ra.curve[i].val_cwce == rb.curve[i].val_cwce);
    }
    auto pa = a.params(), pb = b.params();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.v == pb[i]->value.v);
}

TEST_CASE("standard and bernoulli p=0 produce identical curves") {
    SampleSet train_set = toy_set(32, 5);
    SampleSet val_set = toy_set(12, 6);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.seed = 31;
    cfg.patience = 0;

    ModelSpec std_spec = tiny_spec(31);
    std_spec.solver = SolverMode::Standard;
    std_spec.mask_probability = 0.0;
    ModelSpec bern_spec = tiny_spec(31);
    bern_spec.solver = SolverMode::Bernoulli;
    bern_spec.mask_probability = 0.0;

    SdeHnnModel a(std_spec), b(bern_spec);
    TrainResult ra = train(a, train_set, val_set, cfg, AdamConfig{});
    TrainResult rb = train(b, train_set, val_set, cfg, AdamConfig{});
    for (std::size_t i = 0; i < ra.curve.size(); ++i) {
        CHECK(ra.curve[i].train_nll == rb.curve[i].train_nll);
        CHECK(ra.curve[i].val_nll == rb.curve[i].val_nll);
    }
}

TEST_CASE("patience stops training early") {
    SampleSet train_set = toy_set(32, 8);
    SampleSet val_set = toy_set(12, 9);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 32;
    cfg.seed = 3;
    cfg.patience = 3;
    AdamConfig adam;
    adam.lr = 0.5;  // deliberately unstable so validation stops improving

    SdeHnnModel model(tiny_spec(3));
    TrainResult result = train(model, train_set, val_set, cfg, adam);
    CHECK(result.epochs_run < 200);
    CHECK(result.best_epoch + cfg.patience + 1 >= result.epochs_run);
}

TEST_CASE("empty splits are rejected") {
    SampleSet empty;
    SampleSet some = toy_set(8, 1);
    SdeHnnModel model(tiny_spec(1));
    CHECK_THROWS_AS(train(model, empty, some, TrainConfig{}, AdamConfig{}), ConfigError);
    CHECK_THROWS_AS(train(model, some, empty, TrainConfig{}, AdamConfig{}), ConfigError);
}

TEST_CASE("curve csv layout") {
    TrainingCurve curve{{0, 1.5, 2.5, 0.1}, {1, 1.0, 2.0, 0.05}};
    const std::string path =
        (std::filesystem::temp_directory_path() / "sdehnn_curve_test.csv").string();
    write_curve_csv(curve, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,train_nll,val_nll,val_cwce");
    std::getline(in, line);
    CHECK(line.rfind("0,1.5,", 0) == 0);
    std::getline(in, line);
    CHECK(line.rfind("1,1,", 0) == 0);
    in.close();
    std::remove(path.c_str());
}
