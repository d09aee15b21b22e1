#include "sdehnn/layers.hpp"

#include <cmath>
#include <cstring>

namespace sdehnn {

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// y = W^T u
Tensor mat_t_vec(const Tensor& w, const Tensor& u) {
    Tensor out(w.cols, 1);
    for (int i = 0; i < w.rows; ++i) {
        const double ui = u.v[i];
        if (ui == 0.0) continue;
        for (int j = 0; j < w.cols; ++j) out.v[j] += w.at(i, j) * ui;
    }
    return out;
}

Tensor mat_vec(const Tensor& w, const Tensor& v) {
    Tensor out(w.rows, 1);
    for (int i = 0; i < w.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < w.cols; ++j) s += w.at(i, j) * v.v[j];
        out.v[i] = s;
    }
    return out;
}

void init_spectral_state(const Tensor& w, SpectralState& state) {
    // Deterministic non-degenerate start vector.
    RngStream rng(mix_seed(0x5eccu, static_cast<std::uint64_t>(w.rows) * 131 + w.cols));
    state.u = Tensor(w.rows, 1);
    for (int i = 0; i < w.rows; ++i) state.u.v[i] = rng.next_normal();
    const double n = norm2(state.u.v);
    for (double& x : state.u.v) x /= n;
    state.v = Tensor(w.cols, 1);
    state.initialized = true;
}

}  // namespace

double power_iteration_sigma(const Tensor& w, int iters, SpectralState& state) {
    if (iters < 1) throw ConfigError("power_iteration_sigma: iters must be >= 1");
    if (!state.initialized || state.u.rows != w.rows || state.v.rows != w.cols) {
        init_spectral_state(w, state);
    }
    for (int it = 0; it < iters; ++it) {
        Tensor v = mat_t_vec(w, state.u);
        double nv = norm2(v.v);
        if (nv < 1e-12) return 0.0;
        for (double& x : v.v) x /= nv;
        Tensor u = mat_vec(w, v);
        double nu = norm2(u.v);
        if (nu < 1e-12) return 0.0;
        for (double& x : u.v) x /= nu;
        state.u = std::move(u);
        state.v = std::move(v);
    }
    // sigma = u^T W v
    Tensor wv = mat_vec(w, state.v);
    double sigma = 0.0;
    for (int i = 0; i < w.rows; ++i) sigma += state.u.v[i] * wv.v[i];
    return sigma;
}

double spectral_sigma(const Tensor& w, int iters, bool update, SpectralState& state,
                      bool* cache_hit) {
    if (cache_hit) *cache_hit = false;
    if (state.sigma_valid && state.cached_w.size() == w.v.size() &&
        std::memcmp(state.cached_w.data(), w.v.data(), w.v.size() * sizeof(double)) == 0) {
        if (cache_hit) *cache_hit = true;
        return state.sigma;
    }
    if (update || !state.initialized) {
        state.sigma = power_iteration_sigma(w, iters, state);
    } else {
        Tensor wv = mat_vec(w, state.v);
        double sigma = 0.0;
        for (int i = 0; i < w.rows; ++i) sigma += state.u.v[i] * wv.v[i];
        state.sigma = sigma;
    }
    state.cached_w = w.v;
    state.sigma_valid = true;
    return state.sigma;
}

Tensor spectral_normalize(const Tensor& w, int iters, SpectralState& state) {
    const double sigma = power_iteration_sigma(w, iters, state);
    if (sigma < 1e-12) return w;
    Tensor out(w.rows, w.cols);
    for (int i = 0; i < w.size(); ++i) out.v[i] = w.v[i] / sigma;
    return out;
}

DropoutMask make_dropout_mask(int rows, int cols, double p, RngStream& rng) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0,1)");
    DropoutMask m;
    m.keep_probability = 1.0 - p;
    m.mask = Tensor(rows, cols, 1.0);
    if (p > 0.0) {
        const double inv_keep = 1.0 / m.keep_probability;
        for (int i = 0; i < m.mask.size(); ++i) {
            m.mask.v[i] = rng.next_uniform() < p ? 0.0 : inv_keep;
        }
    }
    return m;
}

Tensor dropout_apply(Tape* tape, const Tensor& x, const DropoutMask& mask) {
    if (!x.same_shape(mask.mask)) {
        throw DimensionError("dropout: mask shape " + shape_str(mask.mask) + " vs input " +
                             shape_str(x));
    }
    return hadamard(tape, x, mask.mask);
}

std::pair<Tensor, DropoutMask> dropout(Tape* tape, const Tensor& x, double p, RngStream& rng,
                                       bool train_mode) {
    if (!train_mode || p == 0.0) {
        DropoutMask identity;
        identity.keep_probability = 1.0 - p;
        identity.mask = Tensor(x.rows, x.cols, 1.0);
        if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0,1)");
        return {x, identity};
    }
    DropoutMask m = make_dropout_mask(x.rows, x.cols, p, rng);
    return {dropout_apply(tape, x, m), m};
}

Tensor glorot_uniform(int out_dim, int in_dim, RngStream& rng) {
    const double limit = std::sqrt(6.0 / (in_dim + out_dim));
    Tensor t(out_dim, in_dim);
    for (int i = 0; i < t.size(); ++i) t.v[i] = (2.0 * rng.next_uniform() - 1.0) * limit;
    return t;
}

DenseLayer::DenseLayer(const std::string& name, int out_dim, int in_dim, Activation act,
                       bool use_spectral_norm, RngStream& rng)
    : w(name + ".w", glorot_uniform(out_dim, in_dim, rng)),
      b(name + ".b", Tensor(out_dim, 1)),
      activation(act),
      spectral_norm(use_spectral_norm) {}

Tensor DenseLayer::forward(const Tensor& x, Tape* tape) {
    if (x.rows != in_dim() || x.cols != 1) {
        throw DimensionError("dense " + w.name + ": input " + shape_str(x) + ", expected (" +
                             std::to_string(in_dim()) + "x1)");
    }
    if (tape && (rec_tape != tape || rec_gen != tape->generation())) {
        rec_w = tape->watch(w);
        rec_b = tape->watch(b);
        rec_sigma = Tensor();
        rec_tape = tape;
        rec_gen = tape->generation();
    }
    const Tensor& wt = tape ? rec_w : w.value;
    const Tensor& bt = tape ? rec_b : b.value;
    Tensor pre = matmul(tape, wt, x);
    if (spectral_norm) {
        bool unchanged = false;
        const double sigma_val =
            spectral_sigma(w.value, sn_iters, sn_update, sn_state, &unchanged);
        if (sigma_val >= 1e-12) {
            if (tape) {
                // (W/sigma)x computed as (Wx)/sigma; sigma is recorded as
                // u^T W v with u, v constants so its gradient flows through
                // W, once per recording epoch.
                if (!unchanged || rec_sigma.node < 0) {
                    rec_sigma = matmul(
                        tape, matmul(tape, Tensor(1, sn_state.u.rows, sn_state.u.v), wt),
                        sn_state.v);
                }
                pre = div_by_scalar(tape, pre, rec_sigma);
            } else {
                Tensor sigma(1, 1, {sigma_val});
                pre = div_by_scalar(nullptr, pre, sigma);
            }
        }
    }
    Tensor out = activate(tape, add(tape, pre, bt), activation);
    if (!out.finite()) throw NumericError("non-finite value in dense " + w.name + " output");
    return out;
}

std::vector<Parameter*> DenseLayer::params() { return {&w, &b}; }

RecurrentCell::RecurrentCell(const std::string& name, int hidden_width, int in_dim,
                             bool use_spectral_norm, RngStream& rng)
    : input_dim(in_dim), hidden(hidden_width), spectral_norm(use_spectral_norm) {
    static const char* gate_names[4] = {"i", "f", "g", "o"};
    for (int k = 0; k < 4; ++k) {
        const std::string g = std::string(name) + "." + gate_names[k];
        wx[k] = Parameter(g + ".wx", glorot_uniform(hidden, in_dim, rng));
        wh[k] = Parameter(g + ".wh", glorot_uniform(hidden, hidden, rng));
        b[k] = Parameter(g + ".b", Tensor(hidden, 1));
    }
    // Forget-gate bias 1.0
    for (int i = 0; i < hidden; ++i) b[1].value.v[i] = 1.0;
}

std::pair<Tensor, Tensor> RecurrentCell::step(const Tensor& x_t, const Tensor& h, const Tensor& c,
                                              Tape* tape) {
    if (x_t.rows != input_dim || x_t.cols != 1) {
        throw DimensionError("lstm: input " + shape_str(x_t) + ", expected (" +
                             std::to_string(input_dim) + "x1)");
    }
    if (h.rows != hidden || c.rows != hidden) {
        throw DimensionError("lstm: state shape mismatch");
    }
    auto gate_pre = [&](int k) {
        Tensor wxt = tape ? tape->watch(wx[k]) : wx[k].value;
        Tensor wht = tape ? tape->watch(wh[k]) : wh[k].value;
        Tensor bt = tape ? tape->watch(b[k]) : b[k].value;
        auto term = [&](const Tensor& m, const Parameter& p, SpectralState& st,
                        const Tensor& in) {
            Tensor product = matmul(tape, m, in);
            if (!spectral_norm) return product;
            const double sigma_val = spectral_sigma(p.value, sn_iters, sn_update, st);
            if (sigma_val < 1e-12) return product;
            Tensor sigma = tape ? matmul(tape, matmul(tape, Tensor(1, st.u.rows, st.u.v), m),
                                         st.v)
                                : Tensor(1, 1, {sigma_val});
            return div_by_scalar(tape, product, sigma);
        };
        return add(tape,
                   add(tape, term(wxt, wx[k], sn_wx[k], x_t), term(wht, wh[k], sn_wh[k], h)),
                   bt);
    };
    Tensor gi = activate(tape, gate_pre(0), Activation::Sigmoid);
    Tensor gf = activate(tape, gate_pre(1), Activation::Sigmoid);
    Tensor gc = activate(tape, gate_pre(2), Activation::Tanh);
    Tensor go = activate(tape, gate_pre(3), Activation::Sigmoid);
    Tensor c_new = add(tape, hadamard(tape, gf, c), hadamard(tape, gi, gc));
    Tensor h_new = hadamard(tape, go, activate(tape, c_new, Activation::Tanh));
    h_new.require_finite("lstm hidden state");
    return {h_new, c_new};
}

std::vector<Parameter*> RecurrentCell::params() {
    std::vector<Parameter*> out;
    for (int k = 0; k < 4; ++k) {
        out.push_back(&wx[k]);
        out.push_back(&wh[k]);
        out.push_back(&b[k]);
    }
    return out;
}

Net Net::dense(const std::string& name, int out_dim, int in_dim, Activation act,
               bool spectral_norm, RngStream& rng) {
    Net n;
    n.kind_ = Kind::Dense;
    n.dense_ = std::make_shared<DenseLayer>(name, out_dim, in_dim, act, spectral_norm, rng);
    return n;
}

Net Net::lstm(const std::string& name, int hidden, int in_dim, bool spectral_norm,
              RngStream& rng) {
    Net n;
    n.kind_ = Kind::Lstm;
    n.lstm_ = std::make_shared<RecurrentCell>(name, hidden, in_dim, spectral_norm, rng);
    n.reset();
    return n;
}

int Net::out_dim() const {
    return kind_ == Kind::Dense ? dense_->out_dim() : lstm_->hidden;
}

int Net::in_dim() const {
    return kind_ == Kind::Dense ? dense_->in_dim() : lstm_->input_dim;
}

void Net::reset() {
    if (kind_ == Kind::Lstm) {
        h_ = Tensor(lstm_->hidden, 1);
        c_ = Tensor(lstm_->hidden, 1);
    }
}

Tensor Net::apply(const Tensor& x, Tape* tape) {
    if (kind_ == Kind::Dense) return dense_->forward(x, tape);
    auto [h, c] = lstm_->step(x, h_, c_, tape);
    h_ = h;
    c_ = c;
    return h;
}

std::vector<Parameter*> Net::params() {
    return kind_ == Kind::Dense ? dense_->params() : lstm_->params();
}

void Net::set_sn_update(bool on) {
    if (kind_ == Kind::Dense) {
        dense_->sn_update = on;
    } else {
        lstm_->sn_update = on;
    }
}

}  // namespace sdehnn
