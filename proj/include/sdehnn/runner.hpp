#pragma once

#include <cstdint>
#include <string>

#include "sdehnn/checkpoint.hpp"
#include "sdehnn/metrics.hpp"
#include "sdehnn/train.hpp"

namespace sdehnn {

// Everything the CLI exposes. String fields use "" / 0 sentinels for
// "pick the mode default"; resolve() fills them in and validates.
struct RunConfig {
    std::string mode = "synthetic";  // synthetic | csv
    std::string data_path;
    std::string target_column;
    std::string nan_policy = "reject";  // reject | forward-fill
    int synth_n = 1000;

    int hidden = 64;
    std::string init;        // dense | lstm; "" -> dense (synthetic) / lstm (csv)
    int window = 5;
    int horizon = 1;
    double terminal_time = 3.0;
    double step_size = 0.0;  // 0 -> 1.0 (synthetic) / 0.5 (csv)
    std::string solver = "bernoulli";  // standard | bernoulli
    double mask_probability = 0.5;

    int epochs = 500;
    int batch_size = 128;
    double lr = 1e-3;
    double weight_decay = 1e-3;
    int patience = 50;
    int curve_mc_samples = 4;
    int warmup_epochs = 0;
    double warmup_lr = 0.0;  // 0 -> lr

    int mc_samples = 10;
    double interval_confidence = 0.95;
    std::uint64_t seed = 0;
    std::string out_dir = ".";

    void resolve();
    ModelSpec model_spec() const;
};

std::string config_to_json(const RunConfig& cfg);

struct PreparedData {
    SampleSet train, val, test;
    Scaler scaler;
    int target_column = 0;              // column index in the scaled feature space
    std::vector<double> test_targets_raw;  // unscaled, for reporting
};

// Generates (synthetic) or loads (csv) the series, scales, windows, splits.
PreparedData prepare_data(const RunConfig& cfg);

// Writes <out_dir>/synthetic.csv.
std::string run_synth(const RunConfig& cfg);

struct TrainOutputs {
    TrainResult result;
    std::string checkpoint_path;
    std::string curve_path;
    std::string config_path;
    long parameter_count = 0;
};

// Trains from scratch; writes model.json, curve.csv, config.json.
TrainOutputs run_train(const RunConfig& cfg);

struct EvalOutputs {
    MetricsReport report;
    std::string metrics_path;
    std::string calibration_path;
    std::string predictions_path;
};

// Evaluates a checkpoint on the test split; writes metrics.json,
// calibration.csv, predictions.csv. Deterministic for a fixed checkpoint
// and config.
EvalOutputs run_eval(const RunConfig& cfg, const std::string& checkpoint_path);

// Writes `count` sampled hidden-state paths for test input `input_index` to
// <out_dir>/trajectories.csv.
std::string run_trajectories(const RunConfig& cfg, const std::string& checkpoint_path,
                             int input_index, int count);

}  // namespace sdehnn
