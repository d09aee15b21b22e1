#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sdehnn/tensor.hpp"

namespace sdehnn {

// A named trainable tensor. Gradients accumulate across backward passes
// until zero_grad() is called.
struct Parameter {
    std::string name;
    Tensor value;
    std::vector<double> grad;

    Parameter() = default;
    Parameter(std::string n, Tensor t)
        : name(std::move(n)), value(std::move(t)), grad(value.v.size(), 0.0) {}

    void zero_grad() { grad.assign(value.v.size(), 0.0); }
};

enum class Activation { Identity, Tanh, Relu, Softplus, Sigmoid };

double apply_activation(Activation a, double x);
double activation_grad(Activation a, double x, double fx);

// Reverse-mode differentiation tape. Single-owner during recording; one
// backward pass per recorded graph, then reset() for reuse.
class Tape {
  public:
    Tape();

    // Registers a leaf. The returned tensor aliases the parameter's current
    // value; gradients land in p.grad after backward(). Leaf values must not
    // change between recording and backward(): closures read them through
    // the tape instead of copying whole weight matrices.
    Tensor watch(Parameter& p);

    void backward(const Tensor& loss);
    void reset();

    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& grad_of(int node) const { return grads_[node]; }

    // Globally unique per recording epoch; reset() starts a new one. Lets
    // layers cache watched/recorded tensors for the duration of one graph.
    std::uint64_t generation() const { return gen_; }
    bool is_leaf(int node) const;
    const std::vector<double>* leaf_values(int node) const;

  private:
    struct Node {
        int rows = 0;
        int cols = 0;
        // Reads grads_[self] and accumulates into parents' grad buffers.
        std::function<void(Tape&, int)> back;
    };

    int push(int rows, int cols, std::function<void(Tape&, int)> back);
    void accumulate(int node, const std::vector<double>& g);

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    std::vector<std::pair<Parameter*, int>> watched_;
    std::uint64_t gen_ = 0;

    friend Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);
    friend Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
    friend Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
    friend Tensor hadamard(Tape* tape, const Tensor& a, const Tensor& b);
    friend Tensor scale(Tape* tape, const Tensor& a, double c);
    friend Tensor activate(Tape* tape, const Tensor& a, Activation act);
    friend Tensor expt(Tape* tape, const Tensor& a);
    friend Tensor sum(Tape* tape, const Tensor& a);
    friend Tensor div_by_scalar(Tape* tape, const Tensor& a, const Tensor& s);
};

// Elementwise / matrix operations. A null tape computes values only.
Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor hadamard(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& a, double c);
Tensor activate(Tape* tape, const Tensor& a, Activation act);
Tensor expt(Tape* tape, const Tensor& a);
Tensor sum(Tape* tape, const Tensor& a);
// a / s where s is a 1x1 tensor (possibly recorded); gradient flows to both.
Tensor div_by_scalar(Tape* tape, const Tensor& a, const Tensor& s);

}  // namespace sdehnn
