#include "ers/neighbors.hpp"

#include "ers/kernels.hpp"

namespace ers::data {

NeighborIndex mine_neighbors(const Tensor& embeddings, std::size_t k) {
    if (!embeddings.is_matrix())
        throw ShapeError("mine_neighbors: embeddings must be [N, d]");
    const std::size_t n = embeddings.rows();
    if (k < 1) throw DomainError("mine_neighbors: k must be >= 1");
    if (k >= n)
        throw DomainError("mine_neighbors: k must be smaller than the "
                          "dataset size");
    NeighborIndex index;
    index.k = k;
    index.flat = kernels::top_k_by_dot(embeddings.values.data(), n,
                                       embeddings.cols(), k);
    return index;
}

}  // namespace ers::data
