#include "sdehnn/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace sdehnn {

using ordered_json = nlohmann::ordered_json;

void RunConfig::resolve() {
    if (mode != "synthetic" && mode != "csv") {
        throw ConfigError("mode must be 'synthetic' or 'csv', got '" + mode + "'");
    }
    if (mode == "csv") {
        if (data_path.empty()) throw ConfigError("csv mode requires a data path");
        if (target_column.empty()) throw ConfigError("csv mode requires a target column");
    }
    if (init.empty()) init = mode == "synthetic" ? "dense" : "lstm";
    if (init != "dense" && init != "lstm") {
        throw ConfigError("init must be 'dense' or 'lstm', got '" + init + "'");
    }
    if (step_size == 0.0) step_size = mode == "synthetic" ? 1.0 : 0.5;
    if (solver != "standard" && solver != "bernoulli") {
        throw ConfigError("solver must be 'standard' or 'bernoulli', got '" + solver + "'");
    }
    if (nan_policy != "reject" && nan_policy != "forward-fill") {
        throw ConfigError("nan-policy must be 'reject' or 'forward-fill', got '" + nan_policy +
                          "'");
    }
    if (synth_n < 10) throw ConfigError("synth-n must be at least 10");
    if (hidden < 1) throw ConfigError("hidden must be positive");
    if (window < 1) throw ConfigError("window must be positive");
    if (horizon < 1) throw ConfigError("horizon must be positive");
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (batch_size < 1) throw ConfigError("batch-size must be positive");
    if (mc_samples < 2) throw ConfigError("mc-samples must be at least 2");
    if (curve_mc_samples != 0 && curve_mc_samples < 2) {
        throw ConfigError("curve-mc-samples must be 0 (disabled) or at least 2");
    }
    if (interval_confidence <= 0.0 || interval_confidence >= 1.0) {
        throw ConfigError("interval-confidence must lie in (0, 1)");
    }
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (warmup_epochs < 0) throw ConfigError("warmup-epochs must be non-negative");
    if (warmup_lr < 0.0) throw ConfigError("warmup-lr must be non-negative");
    if (weight_decay < 0.0) throw ConfigError("weight-decay must be non-negative");
    if (patience < 0) throw ConfigError("patience must be non-negative");
}

ModelSpec RunConfig::model_spec() const {
    ModelSpec spec;
    spec.hidden = hidden;
    spec.init = init == "dense" ? InitKind::Dense : InitKind::Lstm;
    spec.terminal_time = terminal_time;
    spec.step_size = step_size;
    if (terminal_time == 0.0) {
        spec.sde_steps = 0;
    } else {
        spec.sde_steps = static_cast<int>(std::llround(terminal_time / step_size));
    }
    spec.solver = solver == "standard" ? SolverMode::Standard : SolverMode::Bernoulli;
    spec.mask_probability = mask_probability;
    spec.seed = seed;
    // input_dim and window are filled from the data by the callers.
    return spec;
}

std::string config_to_json(const RunConfig& cfg) {
    ordered_json j{
        {"mode", cfg.mode},
        {"data_path", cfg.data_path},
        {"target_column", cfg.target_column},
        {"nan_policy", cfg.nan_policy},
        {"synth_n", cfg.synth_n},
        {"hidden", cfg.hidden},
        {"init", cfg.init},
        {"window", cfg.window},
        {"horizon", cfg.horizon},
        {"terminal_time", cfg.terminal_time},
        {"step_size", cfg.step_size},
        {"solver", cfg.solver},
        {"mask_probability", cfg.mask_probability},
        {"epochs", cfg.epochs},
        {"batch_size", cfg.batch_size},
        {"lr", cfg.lr},
        {"weight_decay", cfg.weight_decay},
        {"patience", cfg.patience},
        {"curve_mc_samples", cfg.curve_mc_samples},
        {"warmup_epochs", cfg.warmup_epochs},
        {"warmup_lr", cfg.warmup_lr},
        {"mc_samples", cfg.mc_samples},
        {"interval_confidence", cfg.interval_confidence},
        {"seed", cfg.seed},
        {"out_dir", cfg.out_dir},
    };
    return j.dump(2) + "\n";
}

namespace {

struct RawSeries {
    Tensor values;  // L x D, unscaled
    int target_column = 0;
};

RawSeries load_series(const RunConfig& cfg) {
    RawSeries raw;
    if (cfg.mode == "synthetic") {
        const auto samples = gen_synthetic(cfg.synth_n, cfg.seed);
        raw.values = Tensor(static_cast<int>(samples.size()), 2);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            raw.values.at(static_cast<int>(i), 0) = samples[i].x;
            raw.values.at(static_cast<int>(i), 1) = samples[i].y;
        }
        raw.target_column = 1;
        return raw;
    }
    const NanPolicy policy =
        cfg.nan_policy == "reject" ? NanPolicy::Reject : NanPolicy::ForwardFill;
    TimeSeries series = load_csv(cfg.data_path, cfg.target_column, policy);
    raw.values = std::move(series.values);
    raw.target_column = series.target_column;
    return raw;
}

void fill_set(SampleSet& set, const WindowedDataset& wd, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
        set.inputs.push_back(wd.inputs[i]);
        set.targets.push_back(wd.targets[i]);
    }
}

PreparedData assemble(const RunConfig& cfg, const RawSeries& raw, const Scaler* fixed_scaler) {
    PreparedData data;
    const int rows = raw.values.rows;
    data.target_column = raw.target_column;

    if (cfg.mode == "synthetic") {
        const SplitIndices idx = split(static_cast<std::size_t>(rows), SplitSpec{});
        if (fixed_scaler) {
            data.scaler = *fixed_scaler;
        } else {
            data.scaler = fit_scaler(raw.values, static_cast<int>(idx.train_end));
            // Inputs stay in natural units; only the target is normalized.
            data.scaler.min[0] = 0.0;
            data.scaler.max[0] = 1.0;
            data.scaler.constant[0] = false;
        }
        const Tensor scaled = apply_scaler(data.scaler, raw.values);
        auto emit = [&](SampleSet& set, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const int r = static_cast<int>(i);
                Tensor x(1, 1);
                x.v[0] = scaled.at(r, 0);
                set.inputs.push_back(std::move(x));
                set.targets.push_back(scaled.at(r, 1));
            }
        };
        emit(data.train, idx.train_begin, idx.train_end);
        emit(data.val, idx.train_end, idx.val_end);
        emit(data.test, idx.val_end, idx.test_end);
        for (std::size_t i = idx.val_end; i < idx.test_end; ++i) {
            data.test_targets_raw.push_back(raw.values.at(static_cast<int>(i), 1));
        }
        return data;
    }

    if (fixed_scaler) {
        data.scaler = *fixed_scaler;
    } else {
        const int fit_rows = static_cast<int>(SplitSpec{}.train * rows);
        data.scaler = fit_scaler(raw.values, fit_rows);
    }
    const Tensor scaled = apply_scaler(data.scaler, raw.values);
    const WindowedDataset wd = window(scaled, cfg.window, cfg.horizon, raw.target_column);
    const SplitIndices idx = split(wd.size(), SplitSpec{});
    fill_set(data.train, wd, idx.train_begin, idx.train_end);
    fill_set(data.val, wd, idx.train_end, idx.val_end);
    fill_set(data.test, wd, idx.val_end, idx.test_end);
    for (std::size_t i = idx.val_end; i < idx.test_end; ++i) {
        data.test_targets_raw.push_back(raw.values.at(wd.target_rows[i], raw.target_column));
    }
    return data;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg) {
    const RawSeries raw = load_series(cfg);
    return assemble(cfg, raw, nullptr);
}

std::string run_synth(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    const std::string path = join_path(cfg.out_dir, "synthetic.csv");
    write_synthetic_csv(gen_synthetic(cfg.synth_n, cfg.seed), path);
    return path;
}

TrainOutputs run_train(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    PreparedData data = prepare_data(cfg);
    if (data.train.size() == 0 || data.val.size() == 0) {
        throw ConfigError("dataset too small to split into train/val/test");
    }

    ModelSpec spec = cfg.model_spec();
    if (spec.init == InitKind::Dense) {
        const Tensor& x0 = data.train.inputs.front();
        spec.input_dim = x0.rows * x0.cols;
        spec.window = 1;
    } else {
        spec.input_dim = data.train.inputs.front().cols;
        spec.window = cfg.window;
    }
    SdeHnnModel model(spec);

    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.seed = cfg.seed;
    tc.patience = cfg.patience;
    tc.curve_mc_samples = cfg.curve_mc_samples;
    tc.warmup_epochs = cfg.warmup_epochs;
    tc.warmup_lr = cfg.warmup_lr;
    AdamConfig ac;
    ac.lr = cfg.lr;
    ac.weight_decay = cfg.weight_decay;

    TrainOutputs out;
    out.result = train(model, data.train, data.val, tc, ac);
    out.parameter_count = model.parameter_count();

    out.checkpoint_path = join_path(cfg.out_dir, "model.json");
    save_checkpoint(out.checkpoint_path, model, data.scaler, data.target_column);
    out.curve_path = join_path(cfg.out_dir, "curve.csv");
    write_curve_csv(out.result.curve, out.curve_path);
    out.config_path = join_path(cfg.out_dir, "config.json");
    write_text(out.config_path, config_to_json(cfg));
    return out;
}

EvalOutputs run_eval(const RunConfig& cfg, const std::string& checkpoint_path) {
    ensure_out_dir(cfg.out_dir);
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const RawSeries raw = load_series(cfg);
    PreparedData data = assemble(cfg, raw, &loaded.scaler);
    if (data.test.size() == 0) throw ConfigError("empty test split");
    const int tcol = loaded.target_column;

    SamplingConfig sc;
    sc.mc_samples = cfg.mc_samples;
    sc.seed = cfg.seed;

    const std::size_t n = data.test.size();
    std::vector<GaussianPrediction> preds(n);
    std::vector<UncertaintyEstimate> estimates(n);
    std::vector<std::pair<double, double>> intervals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto samples = loaded.model->sample_predictions(data.test.inputs[i], sc,
                                                              static_cast<std::uint64_t>(i));
        UncertaintyEstimate est = decompose_uncertainty(samples);
        double mean = 0.0;
        for (const auto& [mu, var] : samples) mean += mu;
        mean /= static_cast<double>(samples.size());

        const double range2 = data.scaler.range(tcol) * data.scaler.range(tcol);
        est.aleatoric *= range2;
        est.epistemic *= range2;
        est.total *= range2;
        const double mean_raw = data.scaler.invert(mean, tcol);
        preds[i] = GaussianPrediction{mean_raw, est.total};
        estimates[i] = est;
        intervals[i] = predictive_interval(est, mean_raw, cfg.interval_confidence);
    }

    const ConfidenceGrid grid = ConfidenceGrid::standard();
    EvalOutputs out;
    out.report = compute_metrics(preds, data.test_targets_raw, grid,
                                 CoverageSide::TwoSidedCentral, cfg.interval_confidence);
    const CalibrationCurve curve =
        build_calibration_curve(preds, data.test_targets_raw, grid,
                                CoverageSide::TwoSidedCentral);

    ordered_json doc;
    doc["metrics"] = ordered_json{
        {"rmse", out.report.rmse},     {"r2", out.report.r2},
        {"cwce", out.report.cwce},     {"r_cwce", out.report.r_cwce},
        {"ecpe", out.report.ecpe},     {"epiw", out.report.epiw},
        {"epiw_confidence", out.report.epiw_confidence},
        {"n", out.report.n},
    };
    doc["settings"] = ordered_json{
        {"checkpoint", std::filesystem::path(checkpoint_path).filename().string()},
        {"mode", cfg.mode},
        {"mc_samples", cfg.mc_samples},
        {"interval_confidence", cfg.interval_confidence},
        {"seed", cfg.seed},
    };
    doc["parameter_count"] = loaded.model->parameter_count();
    out.metrics_path = join_path(cfg.out_dir, "metrics.json");
    write_text(out.metrics_path, doc.dump(2) + "\n");

    std::ostringstream cal;
    cal << std::setprecision(12);
    cal << "level,empirical_coverage\n";
    for (std::size_t k = 0; k < grid.levels.size(); ++k) {
        cal << grid.levels[k] << "," << curve.coverage[k] << "\n";
    }
    out.calibration_path = join_path(cfg.out_dir, "calibration.csv");
    write_text(out.calibration_path, cal.str());

    std::ostringstream pr;
    pr << std::setprecision(12);
    pr << "index,y_true,mean,aleatoric,epistemic,lo_95,hi_95\n";
    for (std::size_t i = 0; i < n; ++i) {
        pr << i << "," << data.test_targets_raw[i] << "," << preds[i].mean << ","
           << estimates[i].aleatoric << "," << estimates[i].epistemic << ","
           << intervals[i].first << "," << intervals[i].second << "\n";
    }
    out.predictions_path = join_path(cfg.out_dir, "predictions.csv");
    write_text(out.predictions_path, pr.str());
    return out;
}

std::string run_trajectories(const RunConfig& cfg, const std::string& checkpoint_path,
                             int input_index, int count) {
    if (count < 1) throw ConfigError("trajectory count must be positive");
    if (input_index < 0) throw ConfigError("trajectory input index must be non-negative");
    ensure_out_dir(cfg.out_dir);
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const RawSeries raw = load_series(cfg);
    PreparedData data = assemble(cfg, raw, &loaded.scaler);
    if (static_cast<std::size_t>(input_index) >= data.test.size()) {
        throw ConfigError("trajectory input index " + std::to_string(input_index) +
                          " out of range for test split of size " +
                          std::to_string(data.test.size()));
    }
    const Tensor& x = data.test.inputs[static_cast<std::size_t>(input_index)];

    const std::string path = join_path(cfg.out_dir, "trajectories.csv");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    BrownianSource source{
        mix_seed(cfg.seed, static_cast<std::uint64_t>(StreamTag::Brownian))};
    for (int j = 0; j < count; ++j) {
        const Trajectory traj =
            loaded.model->trajectory(x, source, static_cast<std::uint64_t>(j));
        write_trajectory_csv(traj, static_cast<std::uint64_t>(j), out, j == 0);
    }
    if (!out) throw IoError("write failed for " + path);
    return path;
}

}  // namespace sdehnn
