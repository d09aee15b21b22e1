#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sdehnn/sde.hpp"
#include "test_util.hpp"

using namespace sdehnn;
using testutil::finite_difference;
using testutil::max_rel_error;
using testutil::random_tensor;

TEST_CASE("config validation") {
    CHECK(SdeConfig::make(3.0, 0.5, SolverMode::Standard).steps == 6);
    CHECK(SdeConfig::make(3.0, 1.0, SolverMode::Standard).steps == 3);
    CHECK_THROWS_AS(SdeConfig::make(3.0, 0.7, SolverMode::Standard), ConfigError);
    CHECK_THROWS_AS(SdeConfig::make(-1.0, 0.5, SolverMode::Standard), ConfigError);
    CHECK_THROWS_AS(SdeConfig::make(3.0, 0.5, SolverMode::Bernoulli, 1.0), ConfigError);
    CHECK(SdeConfig::degenerate().steps == 0);
}

TEST_CASE("zero drift and diffusion leave the state unchanged") {
    auto zero = [](const Tensor& z, Tape*) { return Tensor(z.rows, z.cols); };
    Tensor z0(4, 1, {1.0, -2.0, 3.0, 0.5});
    auto cfg = SdeConfig::make(3.0, 0.5, SolverMode::Standard);
    BrownianSource src{9};
    auto result = solve(z0, zero, zero, cfg, src, 0, nullptr);
    CHECK(result.z_terminal.v == z0.v);
}

TEST_CASE("pure drift integrates deterministically") {
    // dz = a dt with constant a -> z_T = z_0 + a T, exactly, for any path.
    auto drift = [](const Tensor& z, Tape*) {
        Tensor a(z.rows, z.cols);
        for (int i = 0; i < a.size(); ++i) a.v[i] = 0.5 * (i + 1);
        return a;
    };
    auto zero = [](const Tensor& z, Tape*) { return Tensor(z.rows, z.cols); };
    Tensor z0(3, 1, {1.0, 1.0, 1.0});
    auto cfg = SdeConfig::make(3.0, 0.5, SolverMode::Standard);
    BrownianSource src{1};
    auto result = solve(z0, drift, zero, cfg, src, 5, nullptr);
    CHECK(result.z_terminal.v[0] == doctest::Approx(1.0 + 0.5 * 3.0));
    CHECK(result.z_terminal.v[2] == doctest::Approx(1.0 + 1.5 * 3.0));
}

TEST_CASE("constant diffusion matches Brownian variance") {
    // dz = c dB: Var(z_T) = c^2 T. Monte Carlo estimate over many paths
    // must land within 3 standard errors.
    const double c = 0.7, T = 3.0, dt = 0.5;
    auto zero = [](const Tensor& z, Tape*) { return Tensor(z.rows, z.cols); };
    auto diffusion = [&](const Tensor& z, Tape*) {
        Tensor g(z.rows, z.cols);
        for (double& x : g.v) x = c;
        return g;
    };
    auto cfg = SdeConfig::make(T, dt, SolverMode::Standard);
    BrownianSource src{2024};
    const int n = 20000;
    double mean = 0.0, m2 = 0.0;
    Tensor z0(1, 1);
    for (int i = 0; i < n; ++i) {
        const double z = solve(z0, zero, diffusion, cfg, src, i, nullptr).z_terminal.v[0];
        mean += z;
        m2 += z * z;
    }
    mean /= n;
    const double var = m2 / n - mean * mean;
    const double expected = c * c * T;
    const double se = expected * std::sqrt(2.0 / (n - 1));
    CHECK(std::fabs(var - expected) < 3.0 * se);
}

TEST_CASE("bernoulli masking doubles the variance at p = 0.5") {
    // Inverted scaling multiplies surviving diffusion by 1/(1-p); the mask
    // second moment is 1/(1-p), so Var(z_T) = c^2 T / (1-p).
    const double c = 0.7, T = 3.0, dt = 0.5, p = 0.5;
    auto zero = [](const Tensor& z, Tape*) { return Tensor(z.rows, z.cols); };
    auto diffusion = [&](const Tensor& z, Tape*) {
        Tensor g(z.rows, z.cols);
        for (double& x : g.v) x = c;
        return g;
    };
    auto cfg = SdeConfig::make(T, dt, SolverMode::Bernoulli, p);
    BrownianSource src{31337};
    const int n = 20000;
    double mean = 0.0, m2 = 0.0;
    Tensor z0(1, 1);
    for (int i = 0; i < n; ++i) {
        const double z = solve(z0, zero, diffusion, cfg, src, i, nullptr).z_terminal.v[0];
        mean += z;
        m2 += z * z;
    }
    mean /= n;
    const double var = m2 / n - mean * mean;
    const double expected = c * c * T / (1.0 - p);
    // Masked increments are leptokurtic; use the generic variance SE bound
    // from the observed fourth moment instead of the Gaussian one.
    double m4 = 0.0;
    {
        BrownianSource src2{31337};
        for (int i = 0; i < n; ++i) {
            const double z = solve(z0, zero, diffusion, cfg, src2, i, nullptr).z_terminal.v[0];
            const double d = z - mean;
            m4 += d * d * d * d;
        }
        m4 /= n;
    }
    const double se = std::sqrt((m4 - var * var) / n);
    CHECK(std::fabs(var - expected) < 3.0 * se);
}

TEST_CASE("standard solver equals bernoulli with p = 0") {
    std::mt19937 gen(4);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor w = random_tensor(6, 6, gen, 0.3);
        auto field = [&](const Tensor& z, Tape* t) {
            return activate(t, matmul(t, w, z), Activation::Tanh);
        };
        Tensor z0 = random_tensor(6, 1, gen);
        auto std_cfg = SdeConfig::make(3.0, 0.5, SolverMode::Standard);
        auto bern_cfg = SdeConfig::make(3.0, 0.5, SolverMode::Bernoulli, 0.0);
        BrownianSource src{trial * 17u + 1};
        Tensor a = solve(z0, field, field, std_cfg, src, 0, nullptr).z_terminal;
        Tensor b = solve(z0, field, field, bern_cfg, src, 0, nullptr).z_terminal;
        CHECK(a.v == b.v);  // bitwise
    }
}

TEST_CASE("gradient through the solver with frozen noise") {
    std::mt19937 gen(8);
    Parameter wf("wf", random_tensor(4, 4, gen, 0.4));
    Parameter wg("wg", random_tensor(4, 4, gen, 0.4));
    Tensor z0 = random_tensor(4, 1, gen);
    BrownianSource src{404};
    auto cfg = SdeConfig::make(2.0, 0.5, SolverMode::Bernoulli, 0.4);

    auto value = [&](Tape* t) {
        Tensor f_w = t ? t->watch(wf) : wf.value;
        Tensor g_w = t ? t->watch(wg) : wg.value;
        auto drift = [&](const Tensor& z, Tape* tt) {
            return activate(tt, matmul(tt, f_w, z), Activation::Tanh);
        };
        auto diffusion = [&](const Tensor& z, Tape* tt) {
            return activate(tt, matmul(tt, g_w, z), Activation::Tanh);
        };
        Tensor zT = solve(z0, drift, diffusion, cfg, src, 3, t).z_terminal;
        return sum(t, hadamard(t, zT, zT));
    };

    Tape tape;
    Tensor loss = value(&tape);
    wf.zero_grad();
    wg.zero_grad();
    tape.backward(loss);
    std::vector<Parameter*> params{&wf, &wg};
    auto fd = finite_difference(params, [&] { return value(nullptr).v[0]; });
    CHECK(max_rel_error(params, fd) < 1e-6);
}

TEST_CASE("trajectory recording") {
    auto zero = [](const Tensor& z, Tape*) { return Tensor(z.rows, z.cols); };
    Tensor z0(2, 1, {1.0, 2.0});
    auto cfg = SdeConfig::make(3.0, 0.5, SolverMode::Standard, 0.0, true);
    BrownianSource src{5};
    auto result = solve(z0, zero, zero, cfg, src, 0, nullptr);
    REQUIRE(result.trajectory.has_value());
    CHECK(result.trajectory->states.size() == 7);  // z_0 .. z_6
    CHECK(result.trajectory->states.front().v == z0.v);
}

TEST_CASE("trajectory csv layout") {
    Trajectory traj;
    traj.states.push_back(Tensor(2, 1, {1.0, 2.0}));
    traj.states.push_back(Tensor(2, 1, {3.0, 4.0}));
    std::ostringstream os;
    write_trajectory_csv(traj, 7, os, true);
    const std::string text = os.str();
    CHECK(text.find("sample,step") == 0);
    CHECK(text.find("7,0,") != std::string::npos);
    CHECK(text.find("7,1,") != std::string::npos);
}

TEST_CASE("non-finite state reports the failing step") {
    auto blowup = [](const Tensor& z, Tape*) {
        Tensor f(z.rows, z.cols);
        for (double& x : f.v) x = std::numeric_limits<double>::infinity();
        return f;
    };
    auto zero = [](const Tensor& z, Tape*) { return Tensor(z.rows, z.cols); };
    Tensor z0(1, 1);
    auto cfg = SdeConfig::make(1.0, 0.5, SolverMode::Standard);
    BrownianSource src{0};
    CHECK_THROWS_WITH_AS(solve(z0, blowup, zero, cfg, src, 0, nullptr),
                         doctest::Contains("step 0"), NumericError);
}
