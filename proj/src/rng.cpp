#include "sdehnn/rng.hpp"

#include <cmath>

namespace sdehnn {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

std::uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::next_uniform() {
    // 53-bit mantissa, offset by half an ulp so the result is in (0,1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::next_normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(kTwoPi * u2);
    has_cached_ = true;
    return r * std::cos(kTwoPi * u2);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t state = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(state);
}

Tensor brownian_increment(const BrownianSource& source, std::uint64_t sample, std::uint64_t step,
                          int dim, double dt) {
    if (dt <= 0.0) throw ConfigError("brownian_increment: dt must be positive");
    RngStream rng = source.stream(StreamTag::Brownian, sample, step);
    const double scale = std::sqrt(dt);
    Tensor out(dim, 1);
    for (int i = 0; i < dim; ++i) out.v[i] = scale * rng.next_normal();
    return out;
}

}  // namespace sdehnn
