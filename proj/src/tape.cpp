#include "ers/tape.hpp"

#include <cmath>
#include <utility>

#include "ers/kernels.hpp"

namespace ers::autodiff {

namespace {

// Rank-1 tensors act as a single row for the row-oriented primitives.
struct RowDims {
    std::size_t rows;
    std::size_t cols;
};

RowDims row_dims(const Tensor& t, const char* op) {
    if (t.is_vector()) return {1, t.shape[0]};
    if (t.is_matrix()) return {t.shape[0], t.shape[1]};
    throw ShapeError(std::string(op) + ": expected a vector or matrix, got " +
                     shape_to_string(t.shape));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " +
                         shape_to_string(a.shape) + " vs " +
                         shape_to_string(b.shape));
    }
}

}  // namespace

std::string prim_name(Prim p) {
    switch (p) {
        case Prim::leaf: return "leaf";
        case Prim::add: return "add";
        case Prim::sub: return "sub";
        case Prim::mul: return "mul";
        case Prim::neg: return "neg";
        case Prim::scale: return "scale";
        case Prim::add_scalar: return "add_scalar";
        case Prim::matmul: return "matmul";
        case Prim::add_rowvec: return "add_rowvec";
        case Prim::exp: return "exp";
        case Prim::log: return "log";
        case Prim::tanh: return "tanh";
        case Prim::clamp: return "clamp";
        case Prim::softmax_rows: return "softmax_rows";
        case Prim::l2norm_rows: return "l2norm_rows";
        case Prim::sum_all: return "sum_all";
        case Prim::mean_all: return "mean_all";
        case Prim::colwise_mean: return "colwise_mean";
        case Prim::rowwise_dot: return "rowwise_dot";
        case Prim::dot: return "dot";
        case Prim::repeat_rows: return "repeat_rows";
    }
    return "unknown";
}

GradientMap::GradientMap(std::vector<Tensor> adjoints)
    : adjoints_(std::move(adjoints)) {}

bool GradientMap::has(Var v) const {
    return v.index < adjoints_.size() && !adjoints_[v.index].values.empty();
}

const Tensor& GradientMap::grad(Var v) const {
    if (!has(v)) {
        throw DomainError("gradient map has no entry for var " +
                          std::to_string(v.index));
    }
    return adjoints_[v.index];
}

const Tape::Node& Tape::node(Var v) const {
    if (v.index >= nodes_.size()) {
        throw DomainError("var index " + std::to_string(v.index) +
                          " not on this tape");
    }
    return nodes_[v.index];
}

Var Tape::leaf(Tensor t, bool differentiable) {
    if (t.values.empty()) throw ShapeError("leaf: empty tensor");
    if (!t.all_finite()) throw DomainError("leaf: non-finite input tensor");
    Node n;
    n.prim = Prim::leaf;
    n.differentiable = differentiable;
    n.value = std::move(t);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::differentiable(Var v) const { return node(v).differentiable; }

Var Tape::record(Prim prim, std::initializer_list<Var> inputs, double p0,
                 double p1, std::uint64_t times) {
    Node n;
    n.prim = prim;
    for (Var v : inputs) {
        node(v);  // validates the index
        n.in[n.n_in++] = v.index;
        n.differentiable = n.differentiable || nodes_[v.index].differentiable;
    }
    n.p0 = p0;
    n.p1 = p1;
    n.times = times;
    n.value = eval(n);
    if (!n.value.all_finite()) {
        throw DomainError(prim_name(prim) + ": non-finite result");
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor Tape::eval(const Node& n) const {
    const auto in = [&](int i) -> const Tensor& {
        return nodes_[n.in[i]].value;
    };
    switch (n.prim) {
        case Prim::leaf:
            return n.value;
        case Prim::add: {
            require_same_shape(in(0), in(1), "add");
            Tensor out = in(0);
            for (std::size_t i = 0; i < out.size(); ++i)
                out.values[i] += in(1).values[i];
            return out;
        }
        case Prim::sub: {
            require_same_shape(in(0), in(1), "sub");
            Tensor out = in(0);
            for (std::size_t i = 0; i < out.size(); ++i)
                out.values[i] -= in(1).values[i];
            return out;
        }
        case Prim::mul: {
            require_same_shape(in(0), in(1), "mul");
            Tensor out = in(0);
            for (std::size_t i = 0; i < out.size(); ++i)
                out.values[i] *= in(1).values[i];
            return out;
        }
        case Prim::neg: {
            Tensor out = in(0);
            for (double& v : out.values) v = -v;
            return out;
        }
        case Prim::scale: {
            Tensor out = in(0);
            for (double& v : out.values) v *= n.p0;
            return out;
        }
        case Prim::add_scalar: {
            Tensor out = in(0);
            for (double& v : out.values) v += n.p0;
            return out;
        }
        case Prim::matmul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            if (!a.is_matrix() || !b.is_matrix() || a.cols() != b.rows()) {
                throw ShapeError("matmul: incompatible shapes " +
                                 shape_to_string(a.shape) + " and " +
                                 shape_to_string(b.shape));
            }
            Tensor out = Tensor::zeros({a.rows(), b.cols()});
            kernels::matmul(a.values.data(), b.values.data(),
                            out.values.data(), a.rows(), a.cols(), b.cols());
            return out;
        }
        case Prim::add_rowvec: {
            const Tensor& a = in(0);
            const Tensor& bias = in(1);
            if (!a.is_matrix() || !bias.is_vector() ||
                bias.shape[0] != a.cols()) {
                throw ShapeError("add_rowvec: expected [r,c] and [c], got " +
                                 shape_to_string(a.shape) + " and " +
                                 shape_to_string(bias.shape));
            }
            Tensor out = a;
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t c = 0; c < a.cols(); ++c)
                    out.at(r, c) += bias.values[c];
            return out;
        }
        case Prim::exp: {
            Tensor out = in(0);
            for (double& v : out.values) v = std::exp(v);
            return out;
        }
        case Prim::log: {
            Tensor out = in(0);
            for (double& v : out.values) {
                if (v <= 0.0) {
                    throw DomainError(
                        "log: non-positive input (callers must clamp first)");
                }
                v = std::log(v);
            }
            return out;
        }
        case Prim::tanh: {
            Tensor out = in(0);
            for (double& v : out.values) v = std::tanh(v);
            return out;
        }
        case Prim::clamp: {
            Tensor out = in(0);
            for (double& v : out.values) {
                if (v < n.p0) v = n.p0;
                if (v > n.p1) v = n.p1;
            }
            return out;
        }
        case Prim::softmax_rows: {
            const Tensor& a = in(0);
            const RowDims d = row_dims(a, "softmax_rows");
            Tensor out = a;
            kernels::softmax_rows(a.values.data(), out.values.data(), d.rows,
                                  d.cols);
            return out;
        }
        case Prim::l2norm_rows: {
            const Tensor& a = in(0);
            const RowDims d = row_dims(a, "l2norm_rows");
            Tensor out = a;
            const std::size_t degenerate = kernels::l2norm_rows(
                a.values.data(), out.values.data(), d.rows, d.cols);
            if (degenerate > 0) {
                throw DomainError(
                    "l2norm_rows: row with near-zero norm is not "
                    "normalizable");
            }
            return out;
        }
        case Prim::sum_all: {
            double s = 0.0;
            for (double v : in(0).values) s += v;
            return Tensor::scalar(s);
        }
        case Prim::mean_all: {
            double s = 0.0;
            for (double v : in(0).values) s += v;
            return Tensor::scalar(s / static_cast<double>(in(0).size()));
        }
        case Prim::colwise_mean: {
            const Tensor& a = in(0);
            if (!a.is_matrix())
                throw ShapeError("colwise_mean: expected a matrix, got " +
                                 shape_to_string(a.shape));
            Tensor out = Tensor::zeros({1, a.cols()});
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t c = 0; c < a.cols(); ++c)
                    out.values[c] += a.at(r, c);
            const double inv = 1.0 / static_cast<double>(a.rows());
            for (double& v : out.values) v *= inv;
            return out;
        }
        case Prim::rowwise_dot: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            require_same_shape(a, b, "rowwise_dot");
            if (!a.is_matrix())
                throw ShapeError("rowwise_dot: expected matrices, got " +
                                 shape_to_string(a.shape));
            Tensor out = Tensor::zeros({a.rows()});
            for (std::size_t r = 0; r < a.rows(); ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < a.cols(); ++c)
                    s += a.at(r, c) * b.at(r, c);
                out.values[r] = s;
            }
            return out;
        }
        case Prim::dot: {
            require_same_shape(in(0), in(1), "dot");
            double s = 0.0;
            for (std::size_t i = 0; i < in(0).size(); ++i)
                s += in(0).values[i] * in(1).values[i];
            return Tensor::scalar(s);
        }
        case Prim::repeat_rows: {
            const Tensor& a = in(0);
            if (!a.is_matrix())
                throw ShapeError("repeat_rows: expected a matrix, got " +
                                 shape_to_string(a.shape));
            if (n.times == 0)
                throw ShapeError("repeat_rows: times must be >= 1");
            const std::size_t times = n.times;
            Tensor out = Tensor::zeros({a.rows() * times, a.cols()});
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t t = 0; t < times; ++t)
                    for (std::size_t c = 0; c < a.cols(); ++c)
                        out.at(r * times + t, c) = a.at(r, c);
            return out;
        }
    }
    throw DomainError("eval: unknown primitive");
}

Var Tape::add(Var a, Var b) { return record(Prim::add, {a, b}, 0, 0, 0); }
Var Tape::sub(Var a, Var b) { return record(Prim::sub, {a, b}, 0, 0, 0); }
Var Tape::mul(Var a, Var b) { return record(Prim::mul, {a, b}, 0, 0, 0); }
Var Tape::neg(Var a) { return record(Prim::neg, {a}, 0, 0, 0); }
Var Tape::scale(Var a, double c) { return record(Prim::scale, {a}, c, 0, 0); }
Var Tape::add_scalar(Var a, double c) {
    return record(Prim::add_scalar, {a}, c, 0, 0);
}
Var Tape::matmul(Var a, Var b) { return record(Prim::matmul, {a, b}, 0, 0, 0); }
Var Tape::add_rowvec(Var a, Var bias) {
    return record(Prim::add_rowvec, {a, bias}, 0, 0, 0);
}
Var Tape::exp(Var a) { return record(Prim::exp, {a}, 0, 0, 0); }
Var Tape::log(Var a) { return record(Prim::log, {a}, 0, 0, 0); }
Var Tape::tanh(Var a) { return record(Prim::tanh, {a}, 0, 0, 0); }
Var Tape::clamp(Var a, double lo, double hi) {
    if (!(lo <= hi)) throw DomainError("clamp: lo must be <= hi");
    return record(Prim::clamp, {a}, lo, hi, 0);
}
Var Tape::softmax_rows(Var a) {
    return record(Prim::softmax_rows, {a}, 0, 0, 0);
}
Var Tape::l2norm_rows(Var a) {
    return record(Prim::l2norm_rows, {a}, 0, 0, 0);
}
Var Tape::sum_all(Var a) { return record(Prim::sum_all, {a}, 0, 0, 0); }
Var Tape::mean_all(Var a) { return record(Prim::mean_all, {a}, 0, 0, 0); }
Var Tape::colwise_mean(Var a) {
    return record(Prim::colwise_mean, {a}, 0, 0, 0);
}
Var Tape::rowwise_dot(Var a, Var b) {
    return record(Prim::rowwise_dot, {a, b}, 0, 0, 0);
}
Var Tape::dot(Var a, Var b) { return record(Prim::dot, {a, b}, 0, 0, 0); }
Var Tape::repeat_rows(Var a, std::size_t times) {
    return record(Prim::repeat_rows, {a}, 0, 0, times);
}

GradientMap Tape::backward(Var output) const {
    const Node& out = node(output);
    if (out.value.size() != 1) {
        throw DomainError("backward: output must be scalar, got shape " +
                          shape_to_string(out.value.shape));
    }
    std::vector<Tensor> adj(nodes_.size());
    const auto touch = [&](std::uint32_t idx) -> Tensor& {
        if (adj[idx].values.empty())
            adj[idx] = Tensor::zeros(nodes_[idx].value.shape);
        return adj[idx];
    };
    if (out.differentiable) {
        Tensor seed = Tensor::zeros(out.value.shape);
        seed.values[0] = 1.0;
        adj[output.index] = std::move(seed);
    }
    for (std::uint32_t idx = output.index + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        if (adj[idx].values.empty() || n.prim == Prim::leaf) continue;
        const Tensor& g = adj[idx];
        const auto diff = [&](int i) { return nodes_[n.in[i]].differentiable; };
        const auto val = [&](int i) -> const Tensor& {
            return nodes_[n.in[i]].value;
        };
        switch (n.prim) {
            case Prim::leaf:
                break;
            case Prim::add: {
                for (int i = 0; i < 2; ++i) {
                    if (!diff(i)) continue;
                    Tensor& d = touch(n.in[i]);
                    for (std::size_t j = 0; j < g.size(); ++j)
                        d.values[j] += g.values[j];
                }
                break;
            }
            case Prim::sub: {
                if (diff(0)) {
                    Tensor& d = touch(n.in[0]);
                    for (std::size_t j = 0; j < g.size(); ++j)
                        d.values[j] += g.values[j];
                }
                if (diff(1)) {
                    Tensor& d = touch(n.in[1]);
                    for (std::size_t j = 0; j < g.size(); ++j)
                        d.values[j] -= g.values[j];
                }
                break;
            }
            case Prim::mul: {
                for (int i = 0; i < 2; ++i) {
                    if (!diff(i)) continue;
                    const Tensor& other = val(1 - i);
                    Tensor& d = touch(n.in[i]);
                    for (std::size_t j = 0; j < g.size(); ++j)
                        d.values[j] += g.values[j] * other.values[j];
                }
                break;
            }
            case Prim::neg: {
                if (!diff(0)) break;
                Tensor& d = touch(n.in[0]);
                for (std::size_t j = 0; j < g.size(); ++j)
                    d.values[j] -= g.values[j];
                break;
            }
            case Prim::scale: {
                if (!diff(0)) break;
                Tensor& d = touch(n.in[0]);
                for (std::size_t j = 0; j < g.size(); ++j)
                    d.values[j] += n.p0 * g.values[j];
                break;
            }
            case Prim::add_scalar: {
                if (!diff(0)) break;
                Tensor& d = touch(n.in[0]);
                for (std::size_t j = 0; j < g.size(); ++j)
                    d.values[j] += g.values[j];
                break;
            }
            case Prim::matmul: {
                const Tensor& a = val(0);
                const Tensor& b = val(1);
                const std::size_t m = a.rows(), k = a.cols(), nc = b.cols();
                if (diff(0)) {
                    Tensor da = Tensor::zeros(a.shape);
                    kernels::matmul_grad_lhs(g.values.data(), b.values.data(),
                                             da.values.data(), m, k, nc);
                    Tensor& d = touch(n.in[0]);
                    for (std::size_t j = 0; j < d.size(); ++j)
                        d.values[j] += da.values[j];
                }
                if (diff(1)) {
                    Tensor db = Tensor::zeros(b.shape);
                    kernels::matmul_grad_rhs(a.values.data(), g.values.data(),
                                             db.values.data(), m, k, nc);
                    Tensor& d = touch(n.in[1]);
                    for (std::size_t j = 0; j < d.size(); ++j)
                        d.values[j] += db.values[j];
                }
                break;
            }
            case Prim::add_rowvec: {
                const Tensor& a = val(0);
                if (diff(0)) {
                    Tensor& d = touch(n.in[0]);
                    for (std::size_t j = 0; j < g.size(); ++j)
                        d.values[j] += g.values[j];
                }
                if (diff(1)) {
                    Tensor& d = touch(n.in[1]);
                    for (std::size_t r = 0; r < a.rows(); ++r)
                        for (std::size_t c = 0; c < a.cols(); ++c)
                            d.values[c] += g.values[r * a.cols() + c];
                }
                break;
            }
            case Prim::exp: {
                if (!diff(0)) break;
                Tensor& d = touch(n.in[0]);
                for (std::size_t j = 0; j < g.size(); ++j)
                    d.values[j] += g.values[j] * n.value.values[j];
                break;
            }
            case Prim::log: {
                if (!diff(0)) break;
                const Tensor& a = val(0);
                Tensor& d = touch(n.in[0]);
                for (std::size_t j = 0; j < g.size(); ++j)
                    d.values[j] += g.values[j] / a.values[j];
                break;
            }
            case Prim::tanh: {
                if (!diff(0)) break;
                Tensor& d = touch(n.in[0]);
                for (std::size_t j = 0; j < g.size(); ++j) {
                    const double y = n.value.values[j];
                    d.values[j] += g.values[j] * (1.0 - y * y);
                }
                break;
            }
            case Prim::clamp: {
                if (!diff(0)) break;
                const Tensor& a = val(0);
                Tensor& d = touch(n.in[0]);
                for (std::size_t j = 0; j < g.size(); ++j) {
                    const double v = a.values[j];
                    if (v >= n.p0 && v <= n.p1) d.values[j] += g.values[j];
                }
                break;
            }
            case Prim::softmax_rows: {
                if (!diff(0)) break;
                const RowDims dm = row_dims(n.value, "softmax_rows");
                Tensor& d = touch(n.in[0]);
                for (std::size_t r = 0; r < dm.rows; ++r) {
                    const double* y = n.value.values.data() + r * dm.cols;
                    const double* gr = g.values.data() + r * dm.cols;
                    double gy = 0.0;
                    for (std::size_t c = 0; c < dm.cols; ++c)
                        gy += gr[c] * y[c];
                    for (std::size_t c = 0; c < dm.cols; ++c)
                        d.values[r * dm.cols + c] += y[c] * (gr[c] - gy);
                }
                break;
            }
            case Prim::l2norm_rows: {
                if (!diff(0)) break;
                const Tensor& a = val(0);
                const RowDims dm = row_dims(a, "l2norm_rows");
                Tensor& d = touch(n.in[0]);
                for (std::size_t r = 0; r < dm.rows; ++r) {
                    const double* x = a.values.data() + r * dm.cols;
                    const double* y = n.value.values.data() + r * dm.cols;
                    const double* gr = g.values.data() + r * dm.cols;
                    double sq = 0.0;
                    for (std::size_t c = 0; c < dm.cols; ++c) sq += x[c] * x[c];
                    const double norm = std::sqrt(sq);
                    double gy = 0.0;
                    for (std::size_t c = 0; c < dm.cols; ++c)
                        gy += gr[c] * y[c];
                    for (std::size_t c = 0; c < dm.cols; ++c)
                        d.values[r * dm.cols + c] +=
                            (gr[c] - y[c] * gy) / norm;
                }
                break;
            }
            case Prim::sum_all: {
                if (!diff(0)) break;
                Tensor& d = touch(n.in[0]);
                for (double& v : d.values) v += g.values[0];
                break;
            }
            case Prim::mean_all: {
                if (!diff(0)) break;
                Tensor& d = touch(n.in[0]);
                const double gv =
                    g.values[0] / static_cast<double>(d.size());
                for (double& v : d.values) v += gv;
                break;
            }
            case Prim::colwise_mean: {
                if (!diff(0)) break;
                const Tensor& a = val(0);
                Tensor& d = touch(n.in[0]);
                const double inv = 1.0 / static_cast<double>(a.rows());
                for (std::size_t r = 0; r < a.rows(); ++r)
                    for (std::size_t c = 0; c < a.cols(); ++c)
                        d.values[r * a.cols() + c] += g.values[c] * inv;
                break;
            }
            case Prim::rowwise_dot: {
                const Tensor& a = val(0);
                const Tensor& b = val(1);
                for (int i = 0; i < 2; ++i) {
                    if (!diff(i)) continue;
                    const Tensor& other = (i == 0) ? b : a;
                    Tensor& d = touch(n.in[i]);
                    for (std::size_t r = 0; r < a.rows(); ++r)
                        for (std::size_t c = 0; c < a.cols(); ++c)
                            d.values[r * a.cols() + c] +=
                                g.values[r] * other.at(r, c);
                }
                break;
            }
            case Prim::dot: {
                for (int i = 0; i < 2; ++i) {
                    if (!diff(i)) continue;
                    const Tensor& other = val(1 - i);
                    Tensor& d = touch(n.in[i]);
                    for (std::size_t j = 0; j < d.size(); ++j)
                        d.values[j] += g.values[0] * other.values[j];
                }
                break;
            }
            case Prim::repeat_rows: {
                if (!diff(0)) break;
                const Tensor& a = val(0);
                Tensor& d = touch(n.in[0]);
                const std::size_t times = n.times;
                for (std::size_t r = 0; r < a.rows(); ++r)
                    for (std::size_t t = 0; t < times; ++t)
                        for (std::size_t c = 0; c < a.cols(); ++c)
                            d.values[r * a.cols() + c] +=
                                g.values[(r * times + t) * a.cols() + c];
                break;
            }
        }
    }
    // Gradients are reported only for differentiable vars; drop the rest.
    for (std::size_t i = 0; i < adj.size(); ++i) {
        if (!nodes_[i].differentiable) adj[i] = Tensor();
    }
    return GradientMap(std::move(adj));
}

void Tape::replay() {
    for (Node& n : nodes_) {
        if (n.prim == Prim::leaf) continue;
        n.value = eval(n);
    }
}

}  // namespace ers::autodiff
