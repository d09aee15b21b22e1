#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "sdehnn/layers.hpp"
#include "sdehnn/rng.hpp"
#include "sdehnn/tape.hpp"

namespace sdehnn {

enum class SolverMode { Standard, Bernoulli };

struct SdeConfig {
    double terminal_time = 3.0;
    double step_size = 0.5;
    int steps = 6;
    SolverMode mode = SolverMode::Standard;
    double mask_probability = 0.0;
    bool record_trajectory = false;

    // steps = round(T/dt); rejects ratios that are not integral up to
    // floating-point rounding and validates mask probability. steps == 0 is
    // allowed only via the explicit degenerate constructor below.
    static SdeConfig make(double terminal_time, double step_size, SolverMode mode,
                          double mask_probability = 0.0, bool record_trajectory = false);
    static SdeConfig degenerate();  // zero steps: no SDE block
};

struct Trajectory {
    std::vector<Tensor> states;  // z_0 ... z_steps
};

// Value-only view of a drift/diffusion network: state tensor -> same-shape
// tensor, recordable on the tape.
using SdeFunc = std::function<Tensor(const Tensor&, Tape*)>;

// z + drift*dt + diffusion (elementwise) increment. The increment already
// carries the sqrt(dt) factor and is a constant for backpropagation.
Tensor euler_step(Tape* tape, const Tensor& z, const Tensor& drift_value,
                  const Tensor& diffusion_value, double dt, const Tensor& increment);

// Dropout-masked diffusion variant; the mask is resampled per step by the
// caller.
Tensor euler_step_bernoulli(Tape* tape, const Tensor& z, const Tensor& drift_value,
                            const Tensor& diffusion_value, double dt, const Tensor& increment,
                            const DropoutMask& mask);

struct SolveResult {
    Tensor z_terminal;
    std::optional<Trajectory> trajectory;
};

// Iterates the discretized dynamics for config.steps steps. Deterministic
// given (z0, parameters, config, master seed, sample index); gradients flow
// through drift and diffusion values jointly.
SolveResult solve(const Tensor& z0, const SdeFunc& drift, const SdeFunc& diffusion,
                  const SdeConfig& config, const BrownianSource& source, std::uint64_t sample,
                  Tape* tape);

void write_trajectory_csv(const Trajectory& traj, std::uint64_t sample, std::ostream& os,
                          bool header);

}  // namespace sdehnn
