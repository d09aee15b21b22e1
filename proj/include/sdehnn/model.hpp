#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sdehnn/sde.hpp"

namespace sdehnn {

// Per-input predictive mean and log-variance (s = log sigma^2). The tensors
// carry tape nodes during training; scalar accessors read the values.
struct Prediction {
    Tensor mu;  // 1x1
    Tensor s;   // 1x1

    double mean() const { return mu.v[0]; }
    double log_variance() const { return s.v[0]; }
    double variance() const;
};

struct SamplingConfig {
    int mc_samples = 10;
    std::uint64_t seed = 0;
};

struct UncertaintyEstimate {
    double aleatoric = 0.0;
    double epistemic = 0.0;
    double total = 0.0;
};

enum class InitKind { Dense, Lstm };

struct ModelSpec {
    int hidden = 64;
    InitKind init = InitKind::Dense;
    int input_dim = 1;   // per-step feature count for lstm init, full vector otherwise
    int window = 1;      // rows consumed by an lstm init
    double terminal_time = 3.0;
    double step_size = 1.0;
    int sde_steps = 3;   // 0 degenerates to the plain heteroscedastic net
    SolverMode solver = SolverMode::Bernoulli;
    double mask_probability = 0.5;
    std::uint64_t seed = 0;
};

// Init layer -> SDE block -> mean/variance heads. Drift and diffusion use
// spectral normalization; init layer and heads do not.
class SdeHnnModel {
  public:
    explicit SdeHnnModel(const ModelSpec& spec);

    // x is (input_dim x 1) for a dense init, (window x input_dim) for an
    // lstm init (one row per time step).
    Prediction forward(const Tensor& x, const BrownianSource& source, std::uint64_t sample,
                       Tape* tape);

    // z_T trajectory for one input; value-only.
    Trajectory trajectory(const Tensor& x, const BrownianSource& source, std::uint64_t sample);

    // M independent passes with per-m noise/mask substreams; no recording.
    std::vector<std::pair<double, double>> sample_predictions(const Tensor& x,
                                                              const SamplingConfig& cfg,
                                                              std::uint64_t sample);

    std::vector<Parameter*> params();
    long parameter_count();
    const ModelSpec& spec() const { return spec_; }
    void set_sn_update(bool on);

    Net& drift_net() { return f_; }
    Net& diffusion_net() { return g_; }
    Net& init_net() { return init_; }
    DenseLayer& mean_head() { return h1_; }
    DenseLayer& var_head() { return h2_; }

  private:
    Tensor encode(const Tensor& x, Tape* tape);

    ModelSpec spec_;
    SdeConfig sde_;
    bool sn_update_on_ = true;
    Net init_;
    DenseLayer init2_;  // second encoder layer, dense init only
    Net f_;
    Net g_;
    DenseLayer h1_;
    DenseLayer h2_;
};

// (y - mu)^2/2 * exp(-s) + s/2, recorded on the tape when given.
Tensor nll_loss(Tape* tape, const Prediction& pred, double y);
double nll_value(double mu, double s, double y);

// (y - mu)^2 / 2; the variance head receives no gradient. Used for the
// optional mean-fit warmup phase.
Tensor squared_error_loss(Tape* tape, const Prediction& pred, double y);

UncertaintyEstimate decompose_uncertainty(
    const std::vector<std::pair<double, double>>& samples);

// Central Gaussian interval mean +- z_{(1+c)/2} * sqrt(total).
std::pair<double, double> predictive_interval(const UncertaintyEstimate& estimate, double mean,
                                              double confidence);

// One-sided Gaussian quantile mean + z_p * sqrt(variance).
double quantile(double mean, double total_variance, double p);

}  // namespace sdehnn
