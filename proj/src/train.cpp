#include "sdehnn/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace sdehnn {

void AdamState::step(const std::vector<Parameter*>& params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i]->value.v.size(), 0.0);
            v_[i].assign(params[i]->value.v.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) {
        throw DimensionError("adam: parameter count changed between steps");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        if (p.grad.size() != p.value.v.size() || m_[i].size() != p.value.v.size()) {
            throw DimensionError("adam: gradient shape mismatch for " + p.name);
        }
        for (std::size_t j = 0; j < p.value.v.size(); ++j) {
            const double g = p.grad[j] + cfg_.weight_decay * p.value.v[j];
            m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
            v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m_[i][j] / bc1;
            const double v_hat = v_[i][j] / bc2;
            p.value.v[j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    RngStream rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(StreamTag::Shuffle)),
                           static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.next_u64() % i;
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

double validation_nll(SdeHnnModel& model, const SampleSet& val_set, std::uint64_t seed) {
    // Fixed noise realization across epochs so NLL comparisons track the
    // parameters, not the noise redraw.
    BrownianSource source{mix_seed(seed, 0x7a11u)};
    double total = 0.0;
    for (std::size_t i = 0; i < val_set.size(); ++i) {
        Prediction pred = model.forward(val_set.inputs[i], source, i, nullptr);
        total += nll_value(pred.mean(), pred.log_variance(), val_set.targets[i]);
    }
    return total / static_cast<double>(val_set.size());
}

double validation_cwce(SdeHnnModel& model, const SampleSet& val_set, std::uint64_t seed,
                       int mc_samples) {
    SamplingConfig cfg;
    cfg.mc_samples = mc_samples < 2 ? 2 : mc_samples;
    cfg.seed = mix_seed(seed, 0xc1cceu);
    std::vector<GaussianPrediction> preds(val_set.size());
    for (std::size_t i = 0; i < val_set.size(); ++i) {
        auto samples = model.sample_predictions(val_set.inputs[i], cfg, i);
        UncertaintyEstimate est = decompose_uncertainty(samples);
        double mean = 0.0;
        for (const auto& [mu, var] : samples) mean += mu;
        preds[i] = {mean / static_cast<double>(samples.size()), est.total};
    }
    CalibrationCurve curve = build_calibration_curve(preds, val_set.targets,
                                                     ConfidenceGrid::standard(),
                                                     CoverageSide::TwoSidedCentral);
    return cwce(curve.grid, curve.coverage);
}

}  // namespace

TrainResult train(SdeHnnModel& model, const SampleSet& train_set, const SampleSet& val_set,
                  const TrainConfig& cfg, const AdamConfig& adam_cfg) {
    if (train_set.size() == 0 || val_set.size() == 0) {
        throw ConfigError("train: train and validation splits must be non-empty");
    }
    if (cfg.batch_size < 1) throw ConfigError("train: batch size must be >= 1");
    if (cfg.warmup_epochs < 0) throw ConfigError("train: warmup epochs must be >= 0");

    AdamConfig warmup_cfg = adam_cfg;
    if (cfg.warmup_lr > 0.0) warmup_cfg.lr = cfg.warmup_lr;
    AdamState adam(cfg.warmup_epochs > 0 ? warmup_cfg : adam_cfg);
    std::vector<Parameter*> params = model.params();
    TrainResult result;
    result.best_val_nll = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_snapshot;
    int epochs_since_improvement = 0;
    Tape tape;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const bool warmup = epoch < cfg.warmup_epochs;
        if (epoch == cfg.warmup_epochs && cfg.warmup_epochs > 0) {
            adam = AdamState(adam_cfg);  // fresh moments for the new objective
        }
        const auto order = shuffled_indices(train_set.size(), cfg.seed, epoch);
        BrownianSource source{mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch))};
        double epoch_nll = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            tape.reset();
            for (Parameter* p : params) p->zero_grad();
            Tensor batch_loss;
            for (std::size_t k = begin; k < end; ++k) {
                const std::size_t i = order[k];
                Prediction pred = model.forward(train_set.inputs[i], source, i, &tape);
                Tensor loss = warmup ? squared_error_loss(&tape, pred, train_set.targets[i])
                                     : nll_loss(&tape, pred, train_set.targets[i]);
                batch_loss = k == begin ? loss : add(&tape, batch_loss, loss);
            }
            if (!batch_loss.finite()) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch starting at sample " + std::to_string(begin));
            }
            epoch_nll += batch_loss.v[0];
            tape.backward(batch_loss);
            adam.step(params);
        }
        epoch_nll /= static_cast<double>(train_set.size());

        const double val_nll = validation_nll(model, val_set, cfg.seed);
        const double val_cwce =
            cfg.curve_mc_samples > 0
                ? validation_cwce(model, val_set, cfg.seed, cfg.curve_mc_samples)
                : 0.0;
        result.curve.push_back({epoch, epoch_nll, val_nll, val_cwce});
        result.epochs_run = epoch + 1;

        // The variance head is untrained during warmup, so its NLL does not
        // enter best-model tracking or early stopping.
        if (warmup) continue;
        if (val_nll < result.best_val_nll) {
            result.best_val_nll = val_nll;
            result.best_epoch = epoch;
            best_snapshot.clear();
            for (Parameter* p : params) best_snapshot.push_back(p->value);
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
            if (cfg.patience > 0 && epochs_since_improvement >= cfg.patience) break;
        }
    }

    if (!best_snapshot.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_snapshot[i];
    }
    return result;
}

void write_curve_csv(const TrainingCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "epoch,train_nll,val_nll,val_cwce\n";
    for (const auto& point : curve) {
        out << point.epoch << "," << point.train_nll << "," << point.val_nll << ","
            << point.val_cwce << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace sdehnn
