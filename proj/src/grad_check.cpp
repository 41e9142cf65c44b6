#include "ers/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace ers::autodiff {

namespace {

double eval_scalar(const MultiExpr& f, const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(xs.size());
    for (const Tensor& x : xs) vars.push_back(tape.leaf(x, false));
    const Var out = f(tape, vars);
    const Tensor& v = tape.value(out);
    if (v.size() != 1)
        throw DomainError("grad_check: expression must be scalar-valued");
    return v.values[0];
}

}  // namespace

double grad_check(const MultiExpr& f, const std::vector<Tensor>& xs,
                  double eps) {
    if (!(eps >= 1e-7 && eps <= 1e-3))
        throw DomainError("grad_check: eps must lie in [1e-7, 1e-3]");

    // Analytic pass: all inputs differentiable on one tape.
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(xs.size());
    for (const Tensor& x : xs) vars.push_back(tape.leaf(x, true));
    const Var out = f(tape, vars);
    if (tape.value(out).size() != 1)
        throw DomainError("grad_check: expression must be scalar-valued");
    const GradientMap grads = tape.backward(out);

    double worst = 0.0;
    std::vector<Tensor> probe = xs;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        for (std::size_t i = 0; i < xs[t].size(); ++i) {
            const double saved = probe[t].values[i];
            probe[t].values[i] = saved + eps;
            const double hi = eval_scalar(f, probe);
            probe[t].values[i] = saved - eps;
            const double lo = eval_scalar(f, probe);
            probe[t].values[i] = saved;
            const double numeric = (hi - lo) / (2.0 * eps);
            const double analytic =
                grads.has(vars[t]) ? grads.grad(vars[t]).values[i] : 0.0;
            const double rel = std::abs(analytic - numeric) /
                               std::max(1.0, std::abs(analytic));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

double grad_check(const ScalarExpr& f, const Tensor& x, double eps) {
    const MultiExpr wrapped = [&f](Tape& tape, const std::vector<Var>& vars) {
        return f(tape, vars[0]);
    };
    return grad_check(wrapped, {x}, eps);
}

}  // namespace ers::autodiff
