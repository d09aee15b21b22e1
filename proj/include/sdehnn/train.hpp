#pragma once

#include <cstdint>
#include <vector>

#include "sdehnn/metrics.hpp"
#include "sdehnn/model.hpp"

namespace sdehnn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-3;  // L2 coupled into the gradient
};

// Classic Adam with bias correction. Weight decay is added to the gradient
// (g <- g + lambda * theta) before the moment updates.
class AdamState {
  public:
    explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

    void step(const std::vector<Parameter*>& params);
    long steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

  private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

struct TrainConfig {
    int epochs = 500;
    int batch_size = 128;
    std::uint64_t seed = 0;
    int patience = 50;       // 0 disables early stopping
    int curve_mc_samples = 4;  // 0 skips the per-epoch calibration column
    // Optional mean-fit phase: for the first warmup_epochs the loss is the
    // squared error (y - mu)^2 / 2 with the variance head left out, run at
    // warmup_lr (0 means the main lr). The optimizer restarts and best-model
    // tracking begins when the full objective takes over.
    int warmup_epochs = 0;
    double warmup_lr = 0.0;
};

struct CurvePoint {
    int epoch = 0;
    double train_nll = 0.0;
    double val_nll = 0.0;
    double val_cwce = 0.0;
};

using TrainingCurve = std::vector<CurvePoint>;

struct SampleSet {
    std::vector<Tensor> inputs;
    std::vector<double> targets;

    std::size_t size() const { return inputs.size(); }
};

struct TrainResult {
    TrainingCurve curve;
    int best_epoch = -1;
    double best_val_nll = 0.0;
    int epochs_run = 0;
};

// Minimizes the batch-summed heteroscedastic NLL; restores the
// best-validation-NLL parameter snapshot before returning.
TrainResult train(SdeHnnModel& model, const SampleSet& train_set, const SampleSet& val_set,
                  const TrainConfig& cfg, const AdamConfig& adam_cfg);

void write_curve_csv(const TrainingCurve& curve, const std::string& path);

}  // namespace sdehnn
