#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ers/tensor.hpp"

namespace ers::autodiff {

// Primitive operations recordable on a Tape. Row-oriented primitives treat a
// rank-1 tensor as a single row where noted in the Tape method contracts.
enum class Prim : std::uint8_t {
    leaf,
    add,
    sub,
    mul,
    neg,
    scale,
    add_scalar,
    matmul,
    add_rowvec,
    exp,
    log,
    tanh,
    clamp,
    softmax_rows,
    l2norm_rows,
    sum_all,
    mean_all,
    colwise_mean,
    rowwise_dot,
    dot,
    repeat_rows,
};

std::string prim_name(Prim p);

// Handle to a value recorded on a specific Tape. Only meaningful together
// with the tape that produced it.
struct Var {
    std::uint32_t index = 0;
};

// Gradients produced by Tape::backward, indexed by Var. Vars the output does
// not depend on (or that were not marked differentiable) have no entry.
class GradientMap {
  public:
    bool has(Var v) const;
    const Tensor& grad(Var v) const;  // throws DomainError if !has(v)

    bool operator==(const GradientMap& other) const = default;

  private:
    friend class Tape;
    explicit GradientMap(std::vector<Tensor> adjoints);
    std::vector<Tensor> adjoints_;
};

// Append-only record of primitive applications. Single-writer; value reads
// are safe from other threads once recording stops. Every recording method
// validates input shapes (ShapeError), math domain (DomainError), and that
// the result is finite (DomainError).
class Tape {
  public:
    // Records an input tensor. Only leaves marked differentiable receive
    // gradients from backward().
    Var leaf(Tensor t, bool differentiable = false);

    const Tensor& value(Var v) const;
    bool differentiable(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    // Elementwise on identical shapes.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var neg(Var a);
    // Elementwise against a compile-time constant.
    Var scale(Var a, double c);
    Var add_scalar(Var a, double c);
    // [m,k] x [k,n] -> [m,n].
    Var matmul(Var a, Var b);
    // Matrix [r,c] plus rank-1 bias [c] broadcast over rows.
    Var add_rowvec(Var a, Var bias);
    Var exp(Var a);
    // DomainError if any entry <= 0; callers clamp first.
    Var log(Var a);
    Var tanh(Var a);
    Var clamp(Var a, double lo, double hi);
    // Rank-1 tensors are treated as a single row; shape is preserved.
    Var softmax_rows(Var a);
    // DomainError if any row has norm < 1e-12.
    Var l2norm_rows(Var a);
    Var sum_all(Var a);   // -> scalar
    Var mean_all(Var a);  // -> scalar
    // Matrix [r,c] -> [1,c] column means.
    Var colwise_mean(Var a);
    // Matrices [r,c],[r,c] -> rank-1 [r] of per-row dot products.
    Var rowwise_dot(Var a, Var b);
    // Flat dot product of identical shapes -> scalar.
    Var dot(Var a, Var b);
    // Matrix [r,c] -> [r*times,c]; each row repeated `times` consecutively.
    Var repeat_rows(Var a, std::size_t times);

    // Gradient of a size-1 output w.r.t. every differentiable var it depends
    // on. Pure: repeated calls return equal maps.
    GradientMap backward(Var output) const;

    // Recomputes every non-leaf value in recorded order; outputs are
    // bit-identical to the originals (determinism check hook).
    void replay();

  private:
    struct Node {
        Prim prim = Prim::leaf;
        std::uint32_t in[2] = {0, 0};
        std::uint8_t n_in = 0;
        bool differentiable = false;
        double p0 = 0.0;  // scale factor / add constant / clamp lo
        double p1 = 0.0;  // clamp hi
        std::uint64_t times = 0;
        Tensor value;
    };

    const Node& node(Var v) const;
    Var record(Prim prim, std::initializer_list<Var> inputs, double p0,
               double p1, std::uint64_t times);
    Tensor eval(const Node& n) const;

    std::vector<Node> nodes_;
};

}  // namespace ers::autodiff
