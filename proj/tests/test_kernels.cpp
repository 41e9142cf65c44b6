#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "ers/kernels.hpp"
#include "ers/rng.hpp"

using namespace ers;
using kernels::Exec;

namespace {

std::vector<double> random_values(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

// Runs fn in both execution modes and returns the two outputs.
template <typename Fn>
std::pair<std::vector<double>, std::vector<double>> both_modes(
    std::size_t out_size, Fn&& fn) {
    const Exec saved = kernels::exec_mode();
    std::vector<double> serial(out_size), parallel(out_size);
    kernels::set_exec_mode(Exec::serial);
    fn(serial.data());
    kernels::set_exec_mode(Exec::parallel);
    fn(parallel.data());
    kernels::set_exec_mode(saved);
    return {serial, parallel};
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("matmul matches the naive triple loop") {
    Rng rng(3, "matmul");
    const std::size_t m = 7, k = 5, n = 9;
    const auto a = random_values(m * k, rng);
    const auto b = random_values(k * n, rng);
    std::vector<double> expected(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t)
                acc += a[i * k + t] * b[t * n + j];
            expected[i * n + j] = acc;
        }
    std::vector<double> got(m * n);
    kernels::matmul(a.data(), b.data(), got.data(), m, k, n);
    CHECK(got == expected);
}

TEST_CASE("matmul gradients are the transposed products") {
    Rng rng(5, "matmul-grad");
    const std::size_t m = 4, k = 6, n = 3;
    const auto a = random_values(m * k, rng);
    const auto b = random_values(k * n, rng);
    const auto g = random_values(m * n, rng);

    // dA = G * B^T, computed independently.
    std::vector<double> da_expected(m * k, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                acc += g[i * n + j] * b[t * n + j];
            da_expected[i * k + t] = acc;
        }
    std::vector<double> da(m * k);
    kernels::matmul_grad_lhs(g.data(), b.data(), da.data(), m, k, n);
    CHECK(da == da_expected);

    // dB = A^T * G.
    std::vector<double> db_expected(k * n, 0.0);
    for (std::size_t t = 0; t < k; ++t)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                acc += a[i * k + t] * g[i * n + j];
            db_expected[t * n + j] = acc;
        }
    std::vector<double> db(k * n);
    kernels::matmul_grad_rhs(a.data(), g.data(), db.data(), m, k, n);
    CHECK(db == db_expected);
}

TEST_CASE("serial and parallel modes agree bitwise") {
    Rng rng(7, "modes");
    for (const std::size_t size : {1ul, 17ul, 64ul, 130ul}) {
        const auto a = random_values(size * size, rng);
        const auto b = random_values(size * size, rng);
        const auto [s1, p1] = both_modes(size * size, [&](double* out) {
            kernels::matmul(a.data(), b.data(), out, size, size, size);
        });
        CHECK(s1 == p1);
        const auto [s2, p2] = both_modes(size * size, [&](double* out) {
            kernels::softmax_rows(a.data(), out, size, size);
        });
        CHECK(s2 == p2);
        const auto [s3, p3] = both_modes(size * size, [&](double* out) {
            (void)kernels::l2norm_rows(a.data(), out, size, size);
        });
        CHECK(s3 == p3);
    }
}

TEST_CASE("softmax rows sum to one and keep ordering") {
    Rng rng(11, "softmax");
    const std::size_t rows = 6, cols = 5;
    const auto x = random_values(rows * cols, rng);
    std::vector<double> y(rows * cols);
    kernels::softmax_rows(x.data(), y.data(), rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            sum += y[r * cols + c];
            CHECK(y[r * cols + c] > 0.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t c = 1; c < cols; ++c) {
            const bool x_less = x[r * cols + c - 1] < x[r * cols + c];
            const bool y_less = y[r * cols + c - 1] < y[r * cols + c];
            CHECK(x_less == y_less);
        }
    }
}

TEST_CASE("softmax survives large logits") {
    const std::vector<double> x = {1000.0, 1000.0, -1000.0};
    std::vector<double> y(3);
    kernels::softmax_rows(x.data(), y.data(), 1, 3);
    CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("l2norm reports degenerate rows and zeroes them") {
    const std::vector<double> x = {3.0, 4.0, 0.0, 0.0, 1e-13, 0.0};
    std::vector<double> y(6);
    const std::size_t degenerate = kernels::l2norm_rows(x.data(), y.data(), 3, 2);
    CHECK(degenerate == 2);
    CHECK(y[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 0.0);
    CHECK(y[4] == 0.0);
    CHECK(y[5] == 0.0);
}

TEST_CASE("top_k_by_dot matches exhaustive search") {
    Rng rng(13, "topk");
    const std::size_t n = 40, d = 8, k = 5;
    auto emb = random_values(n * d, rng);
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t c = 0; c < d; ++c) sq += emb[i * d + c] * emb[i * d + c];
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t c = 0; c < d; ++c) emb[i * d + c] *= inv;
    }
    const auto got = kernels::top_k_by_dot(emb.data(), n, d, k);
    REQUIRE(got.size() == n * k);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint32_t> order;
        for (std::uint32_t j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        const auto dot = [&](std::uint32_t j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c)
                acc += emb[i * d + c] * emb[j * d + c];
            return acc;
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t x, std::uint32_t y) {
                             const double dx = dot(x), dy = dot(y);
                             if (dx != dy) return dx > dy;
                             return x < y;
                         });
        for (std::size_t j = 0; j < k; ++j) CHECK(got[i * k + j] == order[j]);
    }
}

TEST_CASE("top_k_by_dot breaks exact ties toward the lower index") {
    // Three identical unit vectors: every pairwise dot is exactly 1.
    const std::vector<double> emb = {1, 0, 1, 0, 1, 0, 0, 1};
    const auto got = kernels::top_k_by_dot(emb.data(), 4, 2, 2);
    CHECK(got[0 * 2 + 0] == 1);
    CHECK(got[0 * 2 + 1] == 2);
    CHECK(got[1 * 2 + 0] == 0);
    CHECK(got[1 * 2 + 1] == 2);
    CHECK(got[2 * 2 + 0] == 0);
    CHECK(got[2 * 2 + 1] == 1);
    // The odd one out still lists its best matches in tie order.
    CHECK(got[3 * 2 + 0] == 0);
    CHECK(got[3 * 2 + 1] == 1);
}

TEST_CASE("exec mode round trips") {
    const Exec saved = kernels::exec_mode();
    kernels::set_exec_mode(Exec::serial);
    CHECK(kernels::exec_mode() == Exec::serial);
    kernels::set_exec_mode(Exec::parallel);
    CHECK(kernels::exec_mode() == Exec::parallel);
    kernels::set_exec_mode(saved);
}

}  // TEST_SUITE("kernels")
