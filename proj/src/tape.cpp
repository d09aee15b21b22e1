#include "sdehnn/tape.hpp"

#include <algorithm>
#include <cmath>

namespace sdehnn {

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::Identity: return x;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Softplus:
            // log(1+e^x), overflow-safe
            return x > 30.0 ? x : std::log1p(std::exp(x));
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

double activation_grad(Activation a, double x, double fx) {
    switch (a) {
        case Activation::Identity: return 1.0;
        case Activation::Tanh: return 1.0 - fx * fx;
        case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::Softplus: return 1.0 / (1.0 + std::exp(-x));
        case Activation::Sigmoid: return fx * (1.0 - fx);
    }
    return 1.0;
}

namespace {
std::uint64_t tape_epoch_counter = 1;
}

Tape::Tape() : gen_(tape_epoch_counter++) {}

bool Tape::is_leaf(int node) const {
    for (const auto& [param, n] : watched_) {
        if (n == node) return true;
    }
    return false;
}

const std::vector<double>* Tape::leaf_values(int node) const {
    for (const auto& [param, n] : watched_) {
        if (n == node) return &param->value.v;
    }
    return nullptr;
}

int Tape::push(int rows, int cols, std::function<void(Tape&, int)> back) {
    nodes_.push_back(Node{rows, cols, std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::accumulate(int node, const std::vector<double>& g) {
    if (node < 0) return;
    auto& dst = grads_[node];
    if (dst.empty()) dst.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

Tensor Tape::watch(Parameter& p) {
    Tensor t = p.value;
    // One leaf per parameter per tape; repeated uses share the node so
    // gradients from all call sites accumulate.
    for (const auto& [param, node] : watched_) {
        if (param == &p) {
            t.node = node;
            return t;
        }
    }
    t.node = push(t.rows, t.cols, nullptr);
    watched_.emplace_back(&p, t.node);
    return t;
}

void Tape::backward(const Tensor& loss) {
    if (loss.rows != 1 || loss.cols != 1) {
        throw DimensionError("backward: loss must be scalar, got " + shape_str(loss));
    }
    if (loss.node < 0 || loss.node >= num_nodes()) {
        throw DimensionError("backward: loss is not recorded on this tape");
    }
    grads_.assign(nodes_.size(), {});
    grads_[loss.node] = {1.0};
    for (int i = loss.node; i >= 0; --i) {
        if (grads_[i].empty() || !nodes_[i].back) continue;
        nodes_[i].back(*this, i);
    }
    for (auto& [param, node] : watched_) {
        const auto& g = grads_[node];
        if (g.empty()) continue;
        for (std::size_t i = 0; i < g.size(); ++i) param->grad[i] += g[i];
    }
}

void Tape::reset() {
    nodes_.clear();
    grads_.clear();
    watched_.clear();
    gen_ = tape_epoch_counter++;
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                             shape_str(b));
    }
}

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: inner dimensions " + shape_str(a) + " vs " + shape_str(b));
    }
    Tensor out(a.rows, b.cols);
    if (b.cols == 1) {
        // Matrix-vector fast path: contiguous dot products.
        const double* av = a.v.data();
        const double* bv = b.v.data();
        for (int i = 0; i < a.rows; ++i) {
            const double* row = av + static_cast<std::size_t>(i) * a.cols;
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += row[k] * bv[k];
            out.v[i] = s;
        }
    } else {
        for (int i = 0; i < a.rows; ++i) {
            for (int k = 0; k < a.cols; ++k) {
                const double aik = a.at(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
            }
        }
    }
    if (tape) {
        const int pa = a.node, pb = b.node;
        const int ar = a.rows, ac = a.cols, bc = b.cols;
        // Copy operand values into the closure only when the backward pass
        // needs them and they cannot be read back from a watched leaf.
        const bool a_leaf = pa >= 0 && tape->is_leaf(pa);
        const bool b_leaf = pb >= 0 && tape->is_leaf(pb);
        std::vector<double> a_cap = pb >= 0 && !a_leaf ? a.v : std::vector<double>();
        std::vector<double> b_cap = pa >= 0 && !b_leaf ? b.v : std::vector<double>();
        out.node = tape->push(
            out.rows, out.cols,
            [pa, pb, ar, ac, bc, a_leaf, b_leaf, a_cap = std::move(a_cap),
             b_cap = std::move(b_cap)](Tape& t, int self) {
                const auto& g = t.grads_[self];
                // Accumulate into the parents' grad buffers in place.
                if (pa >= 0) {
                    const std::vector<double>& bvv = b_leaf ? *t.leaf_values(pb) : b_cap;
                    auto& ga = t.grads_[pa];
                    if (ga.empty()) ga.assign(static_cast<std::size_t>(ar) * ac, 0.0);
                    for (int i = 0; i < ar; ++i)
                        for (int j = 0; j < bc; ++j) {
                            const double gij = g[static_cast<std::size_t>(i) * bc + j];
                            if (gij == 0.0) continue;
                            double* garow = ga.data() + static_cast<std::size_t>(i) * ac;
                            if (bc == 1) {
                                const double* brow = bvv.data();
                                for (int k = 0; k < ac; ++k) garow[k] += gij * brow[k];
                            } else {
                                for (int k = 0; k < ac; ++k)
                                    garow[k] += gij * bvv[static_cast<std::size_t>(k) * bc + j];
                            }
                        }
                }
                if (pb >= 0) {
                    const std::vector<double>& avv = a_leaf ? *t.leaf_values(pa) : a_cap;
                    auto& gb = t.grads_[pb];
                    if (gb.empty()) gb.assign(static_cast<std::size_t>(ac) * bc, 0.0);
                    for (int i = 0; i < ar; ++i) {
                        const double* arow = avv.data() + static_cast<std::size_t>(i) * ac;
                        if (bc == 1) {
                            const double gi = g[i];
                            if (gi == 0.0) continue;
                            for (int k = 0; k < ac; ++k) gb[k] += gi * arow[k];
                        } else {
                            for (int k = 0; k < ac; ++k) {
                                const double aik = arow[k];
                                if (aik == 0.0) continue;
                                for (int j = 0; j < bc; ++j)
                                    gb[static_cast<std::size_t>(k) * bc + j] +=
                                        aik * g[static_cast<std::size_t>(i) * bc + j];
                            }
                        }
                    }
                }
            });
    }
    return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) out.v[i] = a.v[i] + b.v[i];
    if (tape) {
        const int pa = a.node, pb = b.node;
        out.node = tape->push(out.rows, out.cols, [pa, pb](Tape& t, int self) {
            t.accumulate(pa, t.grads_[self]);
            t.accumulate(pb, t.grads_[self]);
        });
    }
    return out;
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) out.v[i] = a.v[i] - b.v[i];
    if (tape) {
        const int pa = a.node, pb = b.node;
        out.node = tape->push(out.rows, out.cols, [pa, pb](Tape& t, int self) {
            const auto& g = t.grads_[self];
            t.accumulate(pa, g);
            if (pb >= 0) {
                std::vector<double> gb(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] = -g[i];
                t.accumulate(pb, gb);
            }
        });
    }
    return out;
}

Tensor hadamard(Tape* tape, const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "hadamard");
    Tensor out(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    if (tape) {
        const int pa = a.node, pb = b.node;
        const std::vector<double> av = a.v, bv = b.v;
        out.node = tape->push(out.rows, out.cols, [pa, pb, av, bv](Tape& t, int self) {
            const auto& g = t.grads_[self];
            if (pa >= 0) {
                std::vector<double> ga(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * bv[i];
                t.accumulate(pa, ga);
            }
            if (pb >= 0) {
                std::vector<double> gb(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * av[i];
                t.accumulate(pb, gb);
            }
        });
    }
    return out;
}

Tensor scale(Tape* tape, const Tensor& a, double c) {
    Tensor out(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) out.v[i] = a.v[i] * c;
    if (tape) {
        const int pa = a.node;
        out.node = tape->push(out.rows, out.cols, [pa, c](Tape& t, int self) {
            if (pa < 0) return;
            const auto& g = t.grads_[self];
            std::vector<double> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * c;
            t.accumulate(pa, ga);
        });
    }
    return out;
}

Tensor activate(Tape* tape, const Tensor& a, Activation act) {
    Tensor out(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) out.v[i] = apply_activation(act, a.v[i]);
    if (tape) {
        const int pa = a.node;
        const std::vector<double> xin = a.v, fx = out.v;
        out.node = tape->push(out.rows, out.cols, [pa, act, xin, fx](Tape& t, int self) {
            if (pa < 0) return;
            const auto& g = t.grads_[self];
            std::vector<double> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] = g[i] * activation_grad(act, xin[i], fx[i]);
            t.accumulate(pa, ga);
        });
    }
    return out;
}

Tensor expt(Tape* tape, const Tensor& a) {
    Tensor out(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) out.v[i] = std::exp(a.v[i]);
    if (tape) {
        const int pa = a.node;
        const std::vector<double> fx = out.v;
        out.node = tape->push(out.rows, out.cols, [pa, fx](Tape& t, int self) {
            if (pa < 0) return;
            const auto& g = t.grads_[self];
            std::vector<double> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * fx[i];
            t.accumulate(pa, ga);
        });
    }
    return out;
}

Tensor sum(Tape* tape, const Tensor& a) {
    Tensor out(1, 1);
    for (int i = 0; i < a.size(); ++i) out.v[0] += a.v[i];
    if (tape) {
        const int pa = a.node;
        const std::size_t n = a.v.size();
        out.node = tape->push(1, 1, [pa, n](Tape& t, int self) {
            if (pa < 0) return;
            t.accumulate(pa, std::vector<double>(n, t.grads_[self][0]));
        });
    }
    return out;
}

Tensor div_by_scalar(Tape* tape, const Tensor& a, const Tensor& s) {
    if (s.rows != 1 || s.cols != 1) {
        throw DimensionError("div_by_scalar: divisor must be 1x1, got " + shape_str(s));
    }
    const double sv = s.v[0];
    Tensor out(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) out.v[i] = a.v[i] / sv;
    if (tape) {
        const int pa = a.node, ps = s.node;
        const std::vector<double> av = a.v;
        out.node = tape->push(out.rows, out.cols, [pa, ps, av, sv](Tape& t, int self) {
            const auto& g = t.grads_[self];
            if (pa >= 0) {
                std::vector<double> ga(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / sv;
                t.accumulate(pa, ga);
            }
            if (ps >= 0) {
                double gs = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) gs -= g[i] * av[i] / (sv * sv);
                t.accumulate(ps, {gs});
            }
        });
    }
    return out;
}

}  // namespace sdehnn
