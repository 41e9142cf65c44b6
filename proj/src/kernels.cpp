#include "ers/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace ers::kernels {

namespace {
Exec g_mode = Exec::parallel;

// Below this element count the OpenMP fork overhead outweighs the work.
constexpr std::size_t kParallelCutoff = 16 * 1024;
}  // namespace

Exec exec_mode() { return g_mode; }
void set_exec_mode(Exec mode) { g_mode = mode; }

void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n) {
    const bool par = g_mode == Exec::parallel && m * k * n >= kParallelCutoff;
    const auto mm = static_cast<std::int64_t>(m);
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < mm; ++i) {
        const double* ar = a + static_cast<std::size_t>(i) * k;
        double* cr = c + static_cast<std::size_t>(i) * n;
        for (std::size_t j = 0; j < n; ++j) cr[j] = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            const double av = ar[t];
            const double* br = b + t * n;
            for (std::size_t j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

void matmul_grad_lhs(const double* g, const double* b, double* da,
                     std::size_t m, std::size_t k, std::size_t n) {
    const bool par = g_mode == Exec::parallel && m * k * n >= kParallelCutoff;
    const auto mm = static_cast<std::int64_t>(m);
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < mm; ++i) {
        const double* gr = g + static_cast<std::size_t>(i) * n;
        double* dr = da + static_cast<std::size_t>(i) * k;
        for (std::size_t t = 0; t < k; ++t) {
            const double* br = b + t * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += gr[j] * br[j];
            dr[t] = acc;
        }
    }
}

void matmul_grad_rhs(const double* a, const double* g, double* db,
                     std::size_t m, std::size_t k, std::size_t n) {
    const bool par = g_mode == Exec::parallel && m * k * n >= kParallelCutoff;
    const auto kk = static_cast<std::int64_t>(k);
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t t = 0; t < kk; ++t) {
        double* dr = db + static_cast<std::size_t>(t) * n;
        for (std::size_t j = 0; j < n; ++j) dr[j] = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = a[i * k + static_cast<std::size_t>(t)];
            const double* gr = g + i * n;
            for (std::size_t j = 0; j < n; ++j) dr[j] += av * gr[j];
        }
    }
}

void softmax_rows(const double* x, double* y, std::size_t rows,
                  std::size_t cols) {
    const bool par = g_mode == Exec::parallel && rows * cols >= kParallelCutoff;
    const auto rr = static_cast<std::int64_t>(rows);
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < rr; ++i) {
        const double* xr = x + static_cast<std::size_t>(i) * cols;
        double* yr = y + static_cast<std::size_t>(i) * cols;
        double mx = xr[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < cols; ++j) yr[j] *= inv;
    }
}

std::size_t l2norm_rows(const double* x, double* y, std::size_t rows,
                        std::size_t cols) {
    const bool par = g_mode == Exec::parallel && rows * cols >= kParallelCutoff;
    const auto rr = static_cast<std::int64_t>(rows);
    std::size_t degenerate = 0;
#pragma omp parallel for if (par) schedule(static) reduction(+ : degenerate)
    for (std::int64_t i = 0; i < rr; ++i) {
        const double* xr = x + static_cast<std::size_t>(i) * cols;
        double* yr = y + static_cast<std::size_t>(i) * cols;
        double sq = 0.0;
        for (std::size_t j = 0; j < cols; ++j) sq += xr[j] * xr[j];
        const double norm = std::sqrt(sq);
        if (norm < 1e-12) {
            for (std::size_t j = 0; j < cols; ++j) yr[j] = 0.0;
            degenerate += 1;
        } else {
            const double inv = 1.0 / norm;
            for (std::size_t j = 0; j < cols; ++j) yr[j] = xr[j] * inv;
        }
    }
    return degenerate;
}

std::vector<std::uint32_t> top_k_by_dot(const double* emb, std::size_t n,
                                        std::size_t d, std::size_t k) {
    std::vector<std::uint32_t> out(n * k);
    const bool par = g_mode == Exec::parallel && n * n * d >= kParallelCutoff;
    const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < nn; ++i) {
        const double* xi = emb + static_cast<std::size_t>(i) * d;
        std::vector<double> score(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double* xj = emb + j * d;
            double acc = 0.0;
            for (std::size_t t = 0; t < d; ++t) acc += xi[t] * xj[t];
            score[j] = acc;
        }
        std::vector<std::uint32_t> idx;
        idx.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != static_cast<std::size_t>(i))
                idx.push_back(static_cast<std::uint32_t>(j));
        }
        const auto better = [&score](std::uint32_t a, std::uint32_t b) {
            if (score[a] != score[b]) return score[a] > score[b];
            return a < b;
        };
        std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k),
                          idx.end(), better);
        std::copy(idx.begin(), idx.begin() + static_cast<long>(k),
                  out.begin() + static_cast<std::size_t>(i) * k);
    }
    return out;
}

}  // namespace ers::kernels
