#pragma once

#include <cstdint>
#include <vector>

#include "ers/tensor.hpp"

namespace ers::data {

// Per-sample list of the k most similar other samples (by embedding dot
// product), row-major [N, k]. Self is never included; ties break toward the
// lower index.
struct NeighborIndex {
    std::size_t k = 0;
    std::vector<std::uint32_t> flat;

    std::size_t size() const { return k == 0 ? 0 : flat.size() / k; }
    const std::uint32_t* row(std::size_t i) const { return &flat[i * k]; }
    std::uint32_t at(std::size_t i, std::size_t j) const {
        return flat[i * k + j];
    }

    bool operator==(const NeighborIndex&) const = default;
};

// embeddings is [N, d]; requires 1 <= k < N.
NeighborIndex mine_neighbors(const Tensor& embeddings, std::size_t k);

}  // namespace ers::data
