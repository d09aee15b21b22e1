#include "sdehnn/sde.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace sdehnn {

SdeConfig SdeConfig::make(double terminal_time, double step_size, SolverMode mode,
                          double mask_probability, bool record_trajectory) {
    if (terminal_time <= 0.0) throw ConfigError("sde: terminal time must be positive");
    if (step_size <= 0.0) throw ConfigError("sde: step size must be positive");
    const int steps = static_cast<int>(std::llround(terminal_time / step_size));
    if (steps < 1 || std::abs(steps * step_size - terminal_time) >
                         1e-9 * std::max(1.0, terminal_time)) {
        throw ConfigError("sde: terminal time " + std::to_string(terminal_time) +
                          " is not an integer multiple of step size " +
                          std::to_string(step_size));
    }
    if (mask_probability < 0.0 || mask_probability >= 1.0) {
        throw ConfigError("sde: mask probability must be in [0,1)");
    }
    SdeConfig cfg;
    cfg.terminal_time = terminal_time;
    cfg.step_size = step_size;
    cfg.steps = steps;
    cfg.mode = mode;
    cfg.mask_probability = mask_probability;
    cfg.record_trajectory = record_trajectory;
    return cfg;
}

SdeConfig SdeConfig::degenerate() {
    SdeConfig cfg;
    cfg.terminal_time = 0.0;
    cfg.step_size = 1.0;
    cfg.steps = 0;
    return cfg;
}

namespace {
void check_step_shapes(const Tensor& z, const Tensor& drift_value, const Tensor& diffusion_value,
                       const Tensor& increment) {
    if (!z.same_shape(drift_value) || !z.same_shape(diffusion_value) ||
        !z.same_shape(increment)) {
        throw DimensionError("euler_step: state " + shape_str(z) + ", drift " +
                             shape_str(drift_value) + ", diffusion " + shape_str(diffusion_value) +
                             ", increment " + shape_str(increment) + " must all match");
    }
}
}  // namespace

Tensor euler_step(Tape* tape, const Tensor& z, const Tensor& drift_value,
                  const Tensor& diffusion_value, double dt, const Tensor& increment) {
    check_step_shapes(z, drift_value, diffusion_value, increment);
    return add(tape, z,
               add(tape, scale(tape, drift_value, dt), hadamard(tape, diffusion_value, increment)));
}

Tensor euler_step_bernoulli(Tape* tape, const Tensor& z, const Tensor& drift_value,
                            const Tensor& diffusion_value, double dt, const Tensor& increment,
                            const DropoutMask& mask) {
    check_step_shapes(z, drift_value, diffusion_value, increment);
    Tensor masked = dropout_apply(tape, diffusion_value, mask);
    return add(tape, z, add(tape, scale(tape, drift_value, dt), hadamard(tape, masked, increment)));
}

SolveResult solve(const Tensor& z0, const SdeFunc& drift, const SdeFunc& diffusion,
                  const SdeConfig& config, const BrownianSource& source, std::uint64_t sample,
                  Tape* tape) {
    SolveResult result;
    if (config.record_trajectory) {
        result.trajectory = Trajectory{};
        Tensor snapshot = z0;
        snapshot.node = -1;
        result.trajectory->states.push_back(std::move(snapshot));
    }
    Tensor z = z0;
    for (int k = 0; k < config.steps; ++k) {
        Tensor drift_value = drift(z, tape);
        Tensor diffusion_value = diffusion(z, tape);
        Tensor increment =
            brownian_increment(source, sample, static_cast<std::uint64_t>(k), z.rows,
                               config.step_size);
        if (config.mode == SolverMode::Bernoulli) {
            RngStream mask_rng = source.stream(StreamTag::SolverMask, sample,
                                               static_cast<std::uint64_t>(k));
            DropoutMask mask =
                make_dropout_mask(z.rows, z.cols, config.mask_probability, mask_rng);
            z = euler_step_bernoulli(tape, z, drift_value, diffusion_value, config.step_size,
                                     increment, mask);
        } else {
            z = euler_step(tape, z, drift_value, diffusion_value, config.step_size, increment);
        }
        if (!z.finite()) {
            throw NumericError("sde solve: non-finite state at step " + std::to_string(k));
        }
        if (result.trajectory) {
            Tensor snapshot = z;
            snapshot.node = -1;
            result.trajectory->states.push_back(std::move(snapshot));
        }
    }
    result.z_terminal = std::move(z);
    return result;
}

void write_trajectory_csv(const Trajectory& traj, std::uint64_t sample, std::ostream& os,
                          bool header) {
    if (header) {
        os << "sample,step";
        if (!traj.states.empty()) {
            for (int i = 0; i < traj.states.front().size(); ++i) os << ",component_" << i;
        }
        os << "\n";
    }
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        os << sample << "," << k;
        for (double x : traj.states[k].v) os << "," << x;
        os << "\n";
    }
}

}  // namespace sdehnn
