#include "ers/losses.hpp"

#include <cmath>
#include <string>

namespace ers::model {

namespace {

using autodiff::Tape;
using autodiff::Var;

Tensor as_row_matrix(const Tensor& t, const char* what) {
    if (t.is_matrix()) return t;
    if (t.is_vector())
        return Tensor::matrix(1, t.shape[0], std::vector<double>(t.values));
    throw ShapeError(std::string(what) + ": expected a vector or matrix, got " +
                     shape_to_string(t.shape));
}

Var clamped_log(Tape& tape, Var x) {
    return tape.log(tape.clamp(x, kProbClampLo, kProbClampHi));
}

// -mean over pair rows of log(clamp(<anchor_rep_i, neighbor_i>)).
Var consistency_graph(Tape& tape, Var anchor_rep, Var neighbors) {
    const Var dots = tape.rowwise_dot(anchor_rep, neighbors);
    return tape.neg(tape.mean_all(clamped_log(tape, dots)));
}

// sum over classes and pair rows of q*log q with q = clamp(a_c * n_c),
// normalized by the anchor count.
Var cross_term_graph(Tape& tape, Var anchor_rep, Var neighbors,
                     std::size_t anchor_count) {
    const Var q = tape.clamp(tape.mul(anchor_rep, neighbors), kProbClampLo,
                             kProbClampHi);
    const Var x = tape.mul(q, tape.log(q));
    return tape.scale(tape.sum_all(x),
                      1.0 / static_cast<double>(anchor_count));
}

// sum_c v_c * log(clamp(v_c)) for a [1, n] row; the raw (unclamped) factor
// keeps one-hot rows at exactly zero.
Var neg_entropy_graph(Tape& tape, Var row) {
    return tape.sum_all(tape.mul(row, clamped_log(tape, row)));
}

void check_pair_layout(const Tensor& anchors, const Tensor& neighbors,
                       std::size_t k, const char* what) {
    if (k == 0 || neighbors.values.empty())
        throw DomainError(std::string(what) + ": empty neighbor set");
    if (anchors.values.empty())
        throw DomainError(std::string(what) + ": empty batch");
    if (anchors.cols() != neighbors.cols())
        throw ShapeError(std::string(what) + ": class count mismatch " +
                         shape_to_string(anchors.shape) + " vs " +
                         shape_to_string(neighbors.shape));
    if (neighbors.rows() != anchors.rows() * k)
        throw ShapeError(std::string(what) + ": expected " +
                         std::to_string(anchors.rows() * k) +
                         " neighbor rows, got " +
                         std::to_string(neighbors.rows()));
}

}  // namespace

Var simclr_loss_graph(Tape& tape, Var emb_a, Var emb_b, double lambda0) {
    const Tensor& a = tape.value(emb_a);
    const Tensor& b = tape.value(emb_b);
    if (!a.is_matrix() || !b.is_matrix() || !a.same_shape(b))
        throw ShapeError("simclr_ers_loss: embeddings must be matrices of "
                         "identical shape");
    for (const Tensor* t : {&a, &b}) {
        for (std::size_t r = 0; r < t->rows(); ++r) {
            double sq = 0.0;
            for (std::size_t c = 0; c < t->cols(); ++c)
                sq += t->at(r, c) * t->at(r, c);
            if (std::abs(std::sqrt(sq) - 1.0) > 1e-6)
                throw DomainError(
                    "simclr_ers_loss: input embeddings must be L2-normalized "
                    "(row " +
                    std::to_string(r) + ")");
        }
    }
    const Var s_raw = tape.rowwise_dot(emb_a, emb_b);
    const Var dist = tape.add_scalar(tape.neg(s_raw), 1.0);
    const Var s = tape.clamp(s_raw, kProbClampLo, kProbClampHi);
    const Var ent = tape.mul(s, tape.log(s));
    return tape.mean_all(tape.sub(dist, tape.scale(ent, lambda0)));
}

ScanTermVars scan_loss_graph(Tape& tape, Var anchor_probs, Var neighbor_probs,
                             std::size_t k, const LambdaVector& lambdas,
                             bool flip_lambda2) {
    const Tensor& anchors = tape.value(anchor_probs);
    const Tensor& neighbors = tape.value(neighbor_probs);
    check_pair_layout(anchors, neighbors, k, "scan_ers_loss");
    if (!lambdas.all_finite())
        throw DomainError("scan_ers_loss: non-finite lambda");

    const std::size_t batch = anchors.rows();
    const Var anchor_rep = tape.repeat_rows(anchor_probs, k);
    const Var pbar = tape.colwise_mean(anchor_probs);
    const Var pbar_rep = tape.repeat_rows(pbar, batch * k);

    ScanTermVars terms;
    terms.consistency = consistency_graph(tape, anchor_rep, neighbor_probs);
    terms.mean_entropy = neg_entropy_graph(tape, pbar);
    terms.pointwise_cross =
        cross_term_graph(tape, anchor_rep, neighbor_probs, batch);
    terms.mean_cross = cross_term_graph(tape, pbar_rep, neighbor_probs, batch);

    const double l2_sign = flip_lambda2 ? lambdas.lambda2 : -lambdas.lambda2;
    terms.total = tape.add(
        tape.add(terms.consistency,
                 tape.scale(terms.mean_entropy, lambdas.lambda1)),
        tape.add(tape.scale(terms.pointwise_cross, l2_sign),
                 tape.scale(terms.mean_cross, lambdas.lambda3)));
    return terms;
}

Var cross_entropy_graph(Tape& tape, Var probs, Var one_hot_targets) {
    const Tensor& p = tape.value(probs);
    const Tensor& t = tape.value(one_hot_targets);
    if (!p.is_matrix() || !t.is_matrix() || !p.same_shape(t))
        throw ShapeError("cross_entropy: probabilities and targets must be "
                         "matrices of identical shape");
    const Var picked = tape.rowwise_dot(probs, one_hot_targets);
    return tape.neg(tape.mean_all(clamped_log(tape, picked)));
}

double term_mean_entropy(const Tensor& probs_batch) {
    if (probs_batch.values.empty())
        throw DomainError("term_mean_entropy: empty batch");
    const Tensor m = as_row_matrix(probs_batch, "term_mean_entropy");
    Tape tape;
    const Var v = tape.leaf(m);
    return tape.value(neg_entropy_graph(tape, tape.colwise_mean(v)))
        .values[0];
}

double term_consistency(const Tensor& anchor_probs,
                        const Tensor& neighbor_probs, std::size_t k) {
    const Tensor a = as_row_matrix(anchor_probs, "term_consistency");
    const Tensor n = as_row_matrix(neighbor_probs, "term_consistency");
    check_pair_layout(a, n, k, "term_consistency");
    Tape tape;
    const Var av = tape.leaf(a);
    const Var nv = tape.leaf(n);
    const Var rep = tape.repeat_rows(av, k);
    return tape.value(consistency_graph(tape, rep, nv)).values[0];
}

double term_pointwise_cross(const Tensor& anchor_probs,
                            const Tensor& neighbor_probs, std::size_t k) {
    const Tensor a = as_row_matrix(anchor_probs, "term_pointwise_cross");
    const Tensor n = as_row_matrix(neighbor_probs, "term_pointwise_cross");
    check_pair_layout(a, n, k, "term_pointwise_cross");
    Tape tape;
    const Var av = tape.leaf(a);
    const Var nv = tape.leaf(n);
    const Var rep = tape.repeat_rows(av, k);
    return tape.value(cross_term_graph(tape, rep, nv, a.rows())).values[0];
}

double term_mean_cross(const Tensor& mean_probs, const Tensor& neighbor_probs,
                       std::size_t k) {
    const Tensor m = as_row_matrix(mean_probs, "term_mean_cross");
    const Tensor n = as_row_matrix(neighbor_probs, "term_mean_cross");
    if (m.rows() != 1)
        throw ShapeError("term_mean_cross: mean_probs must be a single row");
    if (k == 0 || n.values.empty())
        throw DomainError("term_mean_cross: empty neighbor set");
    if (m.cols() != n.cols())
        throw ShapeError("term_mean_cross: class count mismatch");
    if (n.rows() % k != 0)
        throw ShapeError(
            "term_mean_cross: neighbor rows must be a multiple of k");
    const std::size_t anchor_count = n.rows() / k;
    Tape tape;
    const Var mv = tape.leaf(m);
    const Var nv = tape.leaf(n);
    const Var rep = tape.repeat_rows(mv, n.rows());
    return tape.value(cross_term_graph(tape, rep, nv, anchor_count))
        .values[0];
}

double simclr_ers_loss(const Tensor& emb_a, const Tensor& emb_b,
                       double lambda0) {
    const Tensor a = as_row_matrix(emb_a, "simclr_ers_loss");
    const Tensor b = as_row_matrix(emb_b, "simclr_ers_loss");
    Tape tape;
    const Var av = tape.leaf(a);
    const Var bv = tape.leaf(b);
    return tape.value(simclr_loss_graph(tape, av, bv, lambda0)).values[0];
}

ScanTerms scan_ers_terms(const Tensor& anchor_probs,
                         const Tensor& neighbor_probs, std::size_t k,
                         const LambdaVector& lambdas, bool flip_lambda2) {
    const Tensor a = as_row_matrix(anchor_probs, "scan_ers_loss");
    const Tensor n = as_row_matrix(neighbor_probs, "scan_ers_loss");
    Tape tape;
    const Var av = tape.leaf(a);
    const Var nv = tape.leaf(n);
    const ScanTermVars vars =
        scan_loss_graph(tape, av, nv, k, lambdas, flip_lambda2);
    ScanTerms out;
    out.consistency = tape.value(vars.consistency).values[0];
    out.mean_entropy = tape.value(vars.mean_entropy).values[0];
    out.pointwise_cross = tape.value(vars.pointwise_cross).values[0];
    out.mean_cross = tape.value(vars.mean_cross).values[0];
    out.total = tape.value(vars.total).values[0];
    return out;
}

double scan_ers_loss(const Tensor& anchor_probs, const Tensor& neighbor_probs,
                     std::size_t k, const LambdaVector& lambdas,
                     bool flip_lambda2) {
    return scan_ers_terms(anchor_probs, neighbor_probs, k, lambdas,
                          flip_lambda2)
        .total;
}

}  // namespace ers::model
