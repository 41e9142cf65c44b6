#include "ers/model.hpp"

#include <cmath>
#include <string>

#include "ers/kernels.hpp"

namespace ers::model {

std::size_t EncoderParams::input_dim() const {
    return hidden.empty() ? out.in_dim() : hidden.front().in_dim();
}

void EncoderParams::check_chained() const {
    std::size_t prev = input_dim();
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        if (hidden[i].in_dim() != prev ||
            hidden[i].bias.shape != std::vector<std::size_t>{hidden[i].out_dim()}) {
            throw ShapeError("encoder hidden layer " + std::to_string(i) +
                             " does not chain");
        }
        prev = hidden[i].out_dim();
    }
    if (out.in_dim() != prev ||
        out.bias.shape != std::vector<std::size_t>{out.out_dim()}) {
        throw ShapeError("encoder output layer does not chain");
    }
}

DenseLayer make_dense(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
    if (in_dim == 0 || out_dim == 0)
        throw ShapeError("make_dense: zero dimension");
    const double bound =
        std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    Tensor w = Tensor::zeros({in_dim, out_dim});
    for (double& v : w.values) v = (2.0 * rng.uniform() - 1.0) * bound;
    return DenseLayer{std::move(w), Tensor::zeros({out_dim})};
}

EncoderParams make_encoder(std::size_t d_in,
                           const std::vector<std::size_t>& hidden_widths,
                           std::size_t d_emb, Rng& rng) {
    EncoderParams enc;
    std::size_t prev = d_in;
    for (std::size_t w : hidden_widths) {
        enc.hidden.push_back(make_dense(prev, w, rng));
        prev = w;
    }
    enc.out = make_dense(prev, d_emb, rng);
    return enc;
}

ClusterHead make_head(std::size_t d_emb, std::size_t n_classes, Rng& rng) {
    if (n_classes < 2) throw ShapeError("make_head: need >= 2 classes");
    return ClusterHead{make_dense(d_emb, n_classes, rng)};
}

namespace {

Tensor affine(const Tensor& x, const DenseLayer& layer) {
    if (!x.is_matrix() || x.cols() != layer.in_dim()) {
        throw ShapeError("affine: input " + shape_to_string(x.shape) +
                         " does not match layer in-dim " +
                         std::to_string(layer.in_dim()));
    }
    Tensor y = Tensor::zeros({x.rows(), layer.out_dim()});
    kernels::matmul(x.values.data(), layer.weight.values.data(),
                    y.values.data(), x.rows(), x.cols(), layer.out_dim());
    for (std::size_t r = 0; r < y.rows(); ++r)
        for (std::size_t c = 0; c < y.cols(); ++c)
            y.at(r, c) += layer.bias.values[c];
    return y;
}

}  // namespace

Tensor encode_batch(const EncoderParams& enc, const Tensor& x) {
    enc.check_chained();
    Tensor h = x;
    for (const DenseLayer& layer : enc.hidden) {
        h = affine(h, layer);
        for (double& v : h.values) v = std::tanh(v);
    }
    h = affine(h, enc.out);
    Tensor y = h;
    const std::size_t degenerate = kernels::l2norm_rows(
        h.values.data(), y.values.data(), h.rows(), h.cols());
    if (degenerate > 0)
        throw DomainError("encode: zero-norm embedding row");
    return y;
}

std::vector<double> encode(const EncoderParams& enc,
                           const std::vector<double>& x) {
    const Tensor out =
        encode_batch(enc, Tensor::matrix(1, x.size(), std::vector<double>(x)));
    return out.values;
}

Tensor predict_probs_batch(const ClusterHead& head, const Tensor& emb) {
    Tensor logits = affine(emb, head.linear);
    Tensor probs = logits;
    kernels::softmax_rows(logits.values.data(), probs.values.data(),
                          logits.rows(), logits.cols());
    return probs;
}

std::vector<double> predict_probs(const ClusterHead& head,
                                  const std::vector<double>& emb) {
    const Tensor out = predict_probs_batch(
        head, Tensor::matrix(1, emb.size(), std::vector<double>(emb)));
    return out.values;
}

LiftedLayer lift(autodiff::Tape& tape, const DenseLayer& layer,
                 bool differentiable) {
    return LiftedLayer{tape.leaf(layer.weight, differentiable),
                       tape.leaf(layer.bias, differentiable)};
}

LiftedEncoder lift(autodiff::Tape& tape, const EncoderParams& enc,
                   bool differentiable) {
    enc.check_chained();
    LiftedEncoder lifted;
    for (const DenseLayer& layer : enc.hidden)
        lifted.hidden.push_back(lift(tape, layer, differentiable));
    lifted.out = lift(tape, enc.out, differentiable);
    return lifted;
}

LiftedLayer lift(autodiff::Tape& tape, const ClusterHead& head,
                 bool differentiable) {
    return lift(tape, head.linear, differentiable);
}

autodiff::Var encode_graph(autodiff::Tape& tape, const LiftedEncoder& enc,
                           autodiff::Var x) {
    autodiff::Var h = x;
    for (const LiftedLayer& layer : enc.hidden) {
        h = tape.tanh(tape.add_rowvec(tape.matmul(h, layer.w), layer.b));
    }
    h = tape.add_rowvec(tape.matmul(h, enc.out.w), enc.out.b);
    return tape.l2norm_rows(h);
}

autodiff::Var predict_graph(autodiff::Tape& tape, const LiftedLayer& head,
                            autodiff::Var emb) {
    return tape.softmax_rows(
        tape.add_rowvec(tape.matmul(emb, head.w), head.b));
}

}  // namespace ers::model
