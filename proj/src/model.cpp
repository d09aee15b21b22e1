#include "sdehnn/model.hpp"

#include <cmath>

#include "sdehnn/normal.hpp"

namespace sdehnn {

double Prediction::variance() const { return std::exp(s.v[0]); }

SdeHnnModel::SdeHnnModel(const ModelSpec& spec) : spec_(spec) {
    if (spec.hidden < 1) throw ConfigError("model: hidden width must be >= 1");
    if (spec.input_dim < 1) throw ConfigError("model: input dim must be >= 1");
    if (spec.sde_steps < 0) throw ConfigError("model: sde steps must be >= 0");
    if (spec.sde_steps == 0) {
        sde_ = SdeConfig::degenerate();
    } else {
        const double dt = spec.terminal_time / spec.sde_steps;
        sde_ = SdeConfig::make(spec.terminal_time, dt, spec.solver, spec.mask_probability);
    }
    RngStream rng(mix_seed(spec.seed, static_cast<std::uint64_t>(StreamTag::WeightInit)));
    const int h = spec.hidden;
    if (spec.init == InitKind::Dense) {
        init_ = Net::dense("init", h, spec.input_dim * spec.window, Activation::Tanh, false, rng);
        init2_ = DenseLayer("init2", h, h, Activation::Tanh, false, rng);
        f_ = Net::dense("f", h, h, Activation::Tanh, true, rng);
        g_ = Net::dense("g", h, h, Activation::Tanh, true, rng);
    } else {
        init_ = Net::lstm("init", h, spec.input_dim, false, rng);
        f_ = Net::lstm("f", h, h, true, rng);
        g_ = Net::lstm("g", h, h, true, rng);
    }
    h1_ = DenseLayer("h1", 1, h, Activation::Identity, false, rng);
    h2_ = DenseLayer("h2", 1, h, Activation::Identity, false, rng);
}

Tensor SdeHnnModel::encode(const Tensor& x, Tape* tape) {
    if (init_.kind() == Net::Kind::Lstm) {
        if (x.cols != spec_.input_dim || x.rows < 1) {
            throw DimensionError("model: expected (steps x " + std::to_string(spec_.input_dim) +
                                 ") sequence, got " + shape_str(x));
        }
        init_.reset();
        Tensor z;
        for (int t = 0; t < x.rows; ++t) {
            Tensor row(x.cols, 1);
            for (int j = 0; j < x.cols; ++j) row.v[j] = x.at(t, j);
            z = init_.apply(row, tape);
        }
        return z;
    }
    if (x.cols != 1) {
        throw DimensionError("model: expected column input, got " + shape_str(x));
    }
    return init2_.forward(init_.apply(x, tape), tape);
}

Prediction SdeHnnModel::forward(const Tensor& x, const BrownianSource& source,
                                std::uint64_t sample, Tape* tape) {
    Tensor z = encode(x, tape);
    f_.reset();
    g_.reset();
    if (sde_.steps > 0) {
        auto drift = [this, tape](const Tensor& state, Tape* t) { return f_.apply(state, t); };
        auto diffusion = [this](const Tensor& state, Tape* t) { return g_.apply(state, t); };
        z = solve(z, drift, diffusion, sde_, source, sample, tape).z_terminal;
    }
    Prediction pred;
    pred.mu = h1_.forward(z, tape);
    // Diffusion re-evaluated at the terminal state feeds the variance head.
    Tensor gz = g_.apply(z, tape);
    pred.s = h2_.forward(gz, tape);
    pred.mu.require_finite("prediction mean");
    pred.s.require_finite("prediction log-variance");
    return pred;
}

// Inference is read-only: the power-iteration warm start is frozen so that
// repeated calls with the same seed are bitwise identical.
Trajectory SdeHnnModel::trajectory(const Tensor& x, const BrownianSource& source,
                                   std::uint64_t sample) {
    const bool prev = sn_update_on_;
    set_sn_update(false);
    Tensor z = encode(x, nullptr);
    f_.reset();
    g_.reset();
    SdeConfig cfg = sde_;
    cfg.record_trajectory = true;
    if (cfg.steps == 0) {
        Trajectory traj;
        traj.states.push_back(z);
        set_sn_update(prev);
        return traj;
    }
    auto drift = [this](const Tensor& state, Tape* t) { return f_.apply(state, t); };
    auto diffusion = [this](const Tensor& state, Tape* t) { return g_.apply(state, t); };
    auto result = solve(z, drift, diffusion, cfg, source, sample, nullptr);
    set_sn_update(prev);
    return *result.trajectory;
}

std::vector<std::pair<double, double>> SdeHnnModel::sample_predictions(const Tensor& x,
                                                                       const SamplingConfig& cfg,
                                                                       std::uint64_t sample) {
    if (cfg.mc_samples < 1) throw ConfigError("sampling: mc_samples must be >= 1");
    const bool prev = sn_update_on_;
    set_sn_update(false);
    std::vector<std::pair<double, double>> out;
    out.reserve(cfg.mc_samples);
    for (int m = 0; m < cfg.mc_samples; ++m) {
        BrownianSource source{
            mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(StreamTag::McSample)),
                     static_cast<std::uint64_t>(m))};
        Prediction pred = forward(x, source, sample, nullptr);
        out.emplace_back(pred.mean(), pred.variance());
    }
    set_sn_update(prev);
    return out;
}

std::vector<Parameter*> SdeHnnModel::params() {
    std::vector<Parameter*> out;
    for (Parameter* p : init_.params()) out.push_back(p);
    if (spec_.init == InitKind::Dense) {
        for (Parameter* p : init2_.params()) out.push_back(p);
    }
    for (Net* net : {&f_, &g_}) {
        for (Parameter* p : net->params()) out.push_back(p);
    }
    for (Parameter* p : h1_.params()) out.push_back(p);
    for (Parameter* p : h2_.params()) out.push_back(p);
    return out;
}

long SdeHnnModel::parameter_count() {
    long n = 0;
    for (Parameter* p : params()) n += p->value.size();
    return n;
}

void SdeHnnModel::set_sn_update(bool on) {
    sn_update_on_ = on;
    f_.set_sn_update(on);
    g_.set_sn_update(on);
}

Tensor nll_loss(Tape* tape, const Prediction& pred, double y) {
    Tensor y_t(1, 1, {y});
    Tensor d = sub(tape, pred.mu, y_t);
    Tensor sq = hadamard(tape, d, d);
    Tensor inv_var = expt(tape, scale(tape, pred.s, -1.0));
    Tensor loss = add(tape, scale(tape, hadamard(tape, sq, inv_var), 0.5),
                      scale(tape, pred.s, 0.5));
    loss.require_finite("nll loss");
    return loss;
}

Tensor squared_error_loss(Tape* tape, const Prediction& pred, double y) {
    Tensor y_t(1, 1, {y});
    Tensor d = sub(tape, pred.mu, y_t);
    Tensor loss = scale(tape, hadamard(tape, d, d), 0.5);
    loss.require_finite("squared error loss");
    return loss;
}

double nll_value(double mu, double s, double y) {
    return (y - mu) * (y - mu) / 2.0 * std::exp(-s) + s / 2.0;
}

UncertaintyEstimate decompose_uncertainty(
    const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 2) {
        throw ConfigError("decompose_uncertainty: need at least 2 samples");
    }
    const double m = static_cast<double>(samples.size());
    double mean_var = 0.0, mean_mu = 0.0, mean_mu2 = 0.0;
    for (const auto& [mu, var] : samples) {
        mean_var += var;
        mean_mu += mu;
        mean_mu2 += mu * mu;
    }
    mean_var /= m;
    mean_mu /= m;
    mean_mu2 /= m;
    UncertaintyEstimate est;
    est.aleatoric = mean_var;
    est.epistemic = std::max(0.0, mean_mu2 - mean_mu * mean_mu);
    est.total = est.aleatoric + est.epistemic;
    return est;
}

std::pair<double, double> predictive_interval(const UncertaintyEstimate& estimate, double mean,
                                              double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw ConfigError("predictive_interval: confidence must be in (0,1)");
    }
    if (estimate.total <= 0.0) return {mean, mean};
    const double z = inverse_normal_cdf((1.0 + confidence) / 2.0);
    const double half = z * std::sqrt(estimate.total);
    return {mean - half, mean + half};
}

double quantile(double mean, double total_variance, double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("quantile: p must be in (0,1)");
    return mean + inverse_normal_cdf(p) * std::sqrt(total_variance);
}

}  // namespace sdehnn
