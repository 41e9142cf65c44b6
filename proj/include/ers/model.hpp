#pragma once

#include <vector>

#include "ers/rng.hpp"
#include "ers/tape.hpp"
#include "ers/tensor.hpp"

namespace ers::model {

// One affine layer: weight [in, out], bias [out].
struct DenseLayer {
    Tensor weight;
    Tensor bias;

    std::size_t in_dim() const { return weight.shape[0]; }
    std::size_t out_dim() const { return weight.shape[1]; }

    bool operator==(const DenseLayer&) const = default;
};

// Multilayer perceptron encoder: tanh hidden layers, linear output,
// L2-normalized embedding rows.
struct EncoderParams {
    std::vector<DenseLayer> hidden;
    DenseLayer out;

    std::size_t input_dim() const;
    std::size_t embed_dim() const { return out.out_dim(); }
    void check_chained() const;  // ShapeError if layer shapes do not chain

    bool operator==(const EncoderParams&) const = default;
};

// Linear map from embedding space to class logits, followed by softmax.
struct ClusterHead {
    DenseLayer linear;

    std::size_t embed_dim() const { return linear.in_dim(); }
    std::size_t n_classes() const { return linear.out_dim(); }

    bool operator==(const ClusterHead&) const = default;
};

// Xavier-uniform weights, zero biases; draw order is layer by layer,
// row-major, so initialization is reproducible per Rng stream.
DenseLayer make_dense(std::size_t in_dim, std::size_t out_dim, Rng& rng);
EncoderParams make_encoder(std::size_t d_in,
                           const std::vector<std::size_t>& hidden_widths,
                           std::size_t d_emb, Rng& rng);
ClusterHead make_head(std::size_t d_emb, std::size_t n_classes, Rng& rng);

// Plain forward paths (no tape).
Tensor encode_batch(const EncoderParams& enc, const Tensor& x);  // [B,d_in]->[B,d_emb]
std::vector<double> encode(const EncoderParams& enc,
                           const std::vector<double>& x);
Tensor predict_probs_batch(const ClusterHead& head, const Tensor& emb);
std::vector<double> predict_probs(const ClusterHead& head,
                                  const std::vector<double>& emb);

// Tape lifting for training. Lifted vars alias the parameter values at lift
// time; after an SGD step, lift again on a fresh tape.
struct LiftedLayer {
    autodiff::Var w;
    autodiff::Var b;
};
struct LiftedEncoder {
    std::vector<LiftedLayer> hidden;
    LiftedLayer out;
};

LiftedLayer lift(autodiff::Tape& tape, const DenseLayer& layer,
                 bool differentiable);
LiftedEncoder lift(autodiff::Tape& tape, const EncoderParams& enc,
                   bool differentiable);
LiftedLayer lift(autodiff::Tape& tape, const ClusterHead& head,
                 bool differentiable);

// x [B,d_in] -> L2-normalized embeddings [B,d_emb].
autodiff::Var encode_graph(autodiff::Tape& tape, const LiftedEncoder& enc,
                           autodiff::Var x);
// emb [B,d_emb] -> softmax probabilities [B,n].
autodiff::Var predict_graph(autodiff::Tape& tape, const LiftedLayer& head,
                            autodiff::Var emb);

}  // namespace ers::model
