#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ers::kernels {

// Every kernel has a serial reference path and an OpenMP path. The parallel
// path assigns each output element to exactly one iteration and keeps the
// inner accumulation order identical to the serial loop, so both modes
// produce bitwise-identical results; tests assert this.
enum class Exec { serial, parallel };

Exec exec_mode();
void set_exec_mode(Exec mode);

// C[m,n] = A[m,k] * B[k,n]
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);

// dA[m,k] = G[m,n] * B[k,n]^T
void matmul_grad_lhs(const double* g, const double* b, double* da,
                     std::size_t m, std::size_t k, std::size_t n);

// dB[k,n] = A[m,k]^T * G[m,n]
void matmul_grad_rhs(const double* a, const double* g, double* db,
                     std::size_t m, std::size_t k, std::size_t n);

// Row-wise softmax with max subtraction. x and y are [rows, cols].
void softmax_rows(const double* x, double* y, std::size_t rows,
                  std::size_t cols);

// Row-wise L2 normalization. Rows with norm < 1e-12 are reported through
// the return value (count of degenerate rows); their outputs are zero.
std::size_t l2norm_rows(const double* x, double* y, std::size_t rows,
                        std::size_t cols);

// For each of n embeddings (rows of emb, unit-normalized [n, d]), the k other
// rows with the highest dot product; ties broken by lower index. Output is
// row-major [n, k].
std::vector<std::uint32_t> top_k_by_dot(const double* emb, std::size_t n,
                                        std::size_t d, std::size_t k);

}  // namespace ers::kernels
