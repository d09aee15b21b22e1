#pragma once

#include <array>
#include <memory>
#include <utility>
#include <vector>

#include "sdehnn/rng.hpp"
#include "sdehnn/tape.hpp"

namespace sdehnn {

// Persistent power-iteration vectors (warm start across forward passes),
// plus the last sigma estimate keyed on the exact weight bytes so repeated
// forwards between optimizer steps skip redundant iterations.
struct SpectralState {
    Tensor u;  // rows x 1
    Tensor v;  // cols x 1
    bool initialized = false;
    std::vector<double> cached_w;
    double sigma = 0.0;
    bool sigma_valid = false;
};

// Sigma estimate for W, iterating only when W differs from the cached copy.
// update=false freezes u and v and evaluates u^T W v directly (needed for
// finite-difference checks). cache_hit reports whether W was unchanged.
double spectral_sigma(const Tensor& w, int iters, bool update, SpectralState& state,
                      bool* cache_hit = nullptr);

// Runs `iters` power iterations (updating state in place) and returns the
// largest-singular-value estimate u^T W v.
double power_iteration_sigma(const Tensor& w, int iters, SpectralState& state);

// W / sigma_max_estimate; returns W unchanged when the estimate is below
// 1e-12 (zero matrix guard).
Tensor spectral_normalize(const Tensor& w, int iters, SpectralState& state);

struct DropoutMask {
    double keep_probability = 1.0;
    Tensor mask;  // entries in {0, 1/keep_probability}
};

// Inverted-scaling dropout mask; E[mask entry] == 1.
DropoutMask make_dropout_mask(int rows, int cols, double p, RngStream& rng);

// Zeroes entries with probability p and scales survivors by 1/(1-p).
// train_mode=false is the identity (evaluation without MC sampling).
std::pair<Tensor, DropoutMask> dropout(Tape* tape, const Tensor& x, double p, RngStream& rng,
                                       bool train_mode);
Tensor dropout_apply(Tape* tape, const Tensor& x, const DropoutMask& mask);

struct DenseLayer {
    Parameter w;  // out x in
    Parameter b;  // out x 1
    Activation activation = Activation::Identity;
    bool spectral_norm = false;
    int sn_iters = 5;
    bool sn_update = true;  // freeze for gradient checks
    SpectralState sn_state;

    // Watched weight/bias and the recorded sigma node are shared across the
    // forwards of one recording epoch (one batch graph).
    Tape* rec_tape = nullptr;
    std::uint64_t rec_gen = 0;
    Tensor rec_w, rec_b, rec_sigma;

    DenseLayer() = default;
    DenseLayer(const std::string& name, int out_dim, int in_dim, Activation act,
               bool use_spectral_norm, RngStream& rng);

    int in_dim() const { return w.value.cols; }
    int out_dim() const { return w.value.rows; }

    Tensor forward(const Tensor& x, Tape* tape);
    std::vector<Parameter*> params();
};

// Standard LSTM cell. Gate order: input, forget, cell candidate, output.
struct RecurrentCell {
    int input_dim = 0;
    int hidden = 0;
    std::array<Parameter, 4> wx;  // hidden x input_dim
    std::array<Parameter, 4> wh;  // hidden x hidden
    std::array<Parameter, 4> b;   // hidden x 1
    bool spectral_norm = false;
    int sn_iters = 5;
    bool sn_update = true;
    std::array<SpectralState, 4> sn_wx;
    std::array<SpectralState, 4> sn_wh;

    RecurrentCell() = default;
    RecurrentCell(const std::string& name, int hidden_width, int in_dim, bool use_spectral_norm,
                  RngStream& rng);

    std::pair<Tensor, Tensor> step(const Tensor& x_t, const Tensor& h, const Tensor& c,
                                   Tape* tape);
    std::vector<Parameter*> params();
};

// A drift/diffusion/init network: either a dense layer or an LSTM cell with
// internally carried state. reset() clears the recurrent state; dense nets
// are stateless.
class Net {
  public:
    enum class Kind { Dense, Lstm };

    static Net dense(const std::string& name, int out_dim, int in_dim, Activation act,
                     bool spectral_norm, RngStream& rng);
    static Net lstm(const std::string& name, int hidden, int in_dim, bool spectral_norm,
                    RngStream& rng);

    Kind kind() const { return kind_; }
    int out_dim() const;
    int in_dim() const;

    void reset();
    Tensor apply(const Tensor& x, Tape* tape);
    std::vector<Parameter*> params();

    DenseLayer& as_dense() { return *dense_; }
    RecurrentCell& as_lstm() { return *lstm_; }
    void set_sn_update(bool on);

  private:
    Kind kind_ = Kind::Dense;
    std::shared_ptr<DenseLayer> dense_;
    std::shared_ptr<RecurrentCell> lstm_;
    Tensor h_, c_;
};

// Glorot-uniform matrix, U(-sqrt(6/(in+out)), +sqrt(6/(in+out))).
Tensor glorot_uniform(int out_dim, int in_dim, RngStream& rng);

}  // namespace sdehnn
