#pragma once

#include <functional>
#include <vector>

#include "ers/tape.hpp"

namespace ers::autodiff {

// Builds a scalar expression from differentiable leaf vars on a fresh tape.
// The single-input form receives one leaf; the multi-input form receives one
// leaf per provided tensor, in order.
using ScalarExpr = std::function<Var(Tape&, Var)>;
using MultiExpr = std::function<Var(Tape&, const std::vector<Var>&)>;

// Compares the analytic gradient of f at x against central finite
// differences with the given step. Returns the max over coordinates of
// |analytic - numeric| / max(1, |analytic|). eps must lie in [1e-7, 1e-3].
double grad_check(const ScalarExpr& f, const Tensor& x, double eps);

// Same check over several input tensors at once; returns the max error over
// every coordinate of every input.
double grad_check(const MultiExpr& f, const std::vector<Tensor>& xs,
                  double eps);

}  // namespace ers::autodiff
