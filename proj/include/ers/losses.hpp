#pragma once

#include "ers/lambda.hpp"
#include "ers/tape.hpp"
#include "ers/tensor.hpp"

namespace ers::model {

// Probabilities and inner products are clamped to this range before any log;
// orthogonal one-hot neighbors would otherwise hit log(0).
inline constexpr double kProbClampLo = 1e-8;
inline constexpr double kProbClampHi = 1.0;

// ---- Tape graph builders (training path) ----

// Mean over rows of  (1 - <a_i, b_i>) - lambda0 * s * log s  with
// s = clamp(<a_i, b_i>). Inputs are [B, d] matrices of L2-normalized rows
// (checked at build time: norm deviation > 1e-6 is an error).
autodiff::Var simclr_loss_graph(autodiff::Tape& tape, autodiff::Var emb_a,
                                autodiff::Var emb_b, double lambda0);

struct ScanTermVars {
    autodiff::Var consistency;
    autodiff::Var mean_entropy;
    autodiff::Var pointwise_cross;
    autodiff::Var mean_cross;
    autodiff::Var total;
};

// Full clustering objective on anchor probabilities [B, n] and neighbor
// probabilities [B*k, n] (neighbors of anchor i occupy rows i*k .. i*k+k-1):
//   total = consistency + l1 * mean_entropy - l2 * pointwise_cross
//                                           + l3 * mean_cross
// flip_lambda2 switches the lambda2 sign to + for sign-convention probes.
ScanTermVars scan_loss_graph(autodiff::Tape& tape, autodiff::Var anchor_probs,
                             autodiff::Var neighbor_probs, std::size_t k,
                             const LambdaVector& lambdas,
                             bool flip_lambda2 = false);

// Mean over rows of -log(clamp(<probs_row, target_row>)) for one-hot target
// rows, i.e. cross-entropy against pseudo-labels.
autodiff::Var cross_entropy_graph(autodiff::Tape& tape, autodiff::Var probs,
                                  autodiff::Var one_hot_targets);

// ---- Value-level term functions (evaluation path) ----
// These build the same graphs on a throwaway tape, so values agree with the
// training path bit for bit. Rank-1 inputs are treated as single rows.

// sum_c mean_c * log(clamp(mean_c)) over the column mean of the batch.
// Range [-log n, 0]; note this is the negative entropy of the mean.
double term_mean_entropy(const Tensor& probs_batch);

// Mean over all (anchor, neighbor) pairs of -log(clamp(<anchor, neighbor>)).
double term_consistency(const Tensor& anchor_probs,
                        const Tensor& neighbor_probs, std::size_t k);

// sum over classes and pairs of q*log q, q = clamp(anchor_c * neighbor_c),
// divided by the anchor count.
double term_pointwise_cross(const Tensor& anchor_probs,
                            const Tensor& neighbor_probs, std::size_t k);

// Same product form with the batch-mean probabilities in the anchor slot.
// The anchor count is neighbor_rows / k.
double term_mean_cross(const Tensor& mean_probs, const Tensor& neighbor_probs,
                       std::size_t k);

// Single-pair pretext loss; inputs are unit vectors (rank-1 or [1, d]).
double simclr_ers_loss(const Tensor& emb_a, const Tensor& emb_b,
                       double lambda0);

struct ScanTerms {
    double consistency = 0.0;
    double mean_entropy = 0.0;
    double pointwise_cross = 0.0;
    double mean_cross = 0.0;
    double total = 0.0;
};

ScanTerms scan_ers_terms(const Tensor& anchor_probs,
                         const Tensor& neighbor_probs, std::size_t k,
                         const LambdaVector& lambdas,
                         bool flip_lambda2 = false);
double scan_ers_loss(const Tensor& anchor_probs, const Tensor& neighbor_probs,
                     std::size_t k, const LambdaVector& lambdas,
                     bool flip_lambda2 = false);

}  // namespace ers::model
