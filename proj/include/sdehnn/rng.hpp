#pragma once

#include <cstdint>

#include "sdehnn/tensor.hpp"

namespace sdehnn {

// Counter-based splitmix64 stream with Box-Muller normals. Streams derived
// from the same (seed, tags) are identical regardless of evaluation order
// elsewhere in the program.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    // Uniform in (0,1), never exactly 0 or 1.
    double next_uniform();
    double next_normal();

  private:
    std::uint64_t state_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Stream tags; keep values stable, they are part of the reproducibility
// contract of checkpointed runs.
enum class StreamTag : std::uint64_t {
    Brownian = 1,
    SolverMask = 2,
    DataNoise = 3,
    Shuffle = 4,
    WeightInit = 5,
    McSample = 6,
};

// Derives per-(sample, step) Brownian substreams from a master seed.
struct BrownianSource {
    std::uint64_t master_seed = 0;

    RngStream stream(StreamTag tag, std::uint64_t sample, std::uint64_t step) const {
        return RngStream(mix_seed(
            mix_seed(mix_seed(master_seed, static_cast<std::uint64_t>(tag)), sample), step));
    }
};

// sqrt(dt) * W with W ~ N(0, I_dim), reproducible for fixed (seed, sample, step).
Tensor brownian_increment(const BrownianSource& source, std::uint64_t sample, std::uint64_t step,
                          int dim, double dt);

}  // namespace sdehnn
