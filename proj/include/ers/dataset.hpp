#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ers/tensor.hpp"

namespace ers::data {

// Synthetic two-level Gaussian mixture: n_super superclass centers, each
// surrounded by n_sub_per_super subclass centers, each subclass an isotropic
// Gaussian cloud. sub_labels are global ids (super * n_sub_per_super + sub),
// so a sub id determines its super id.
struct HierarchicalDataset {
    std::size_t n_super = 0;
    std::size_t n_sub_per_super = 0;
    std::size_t samples_per_sub = 0;
    std::size_t d_in = 0;
    double separation = 0.0;
    double sub_spread = 0.0;
    std::uint64_t seed = 0;

    Tensor samples;  // [N, d_in]
    std::vector<std::uint32_t> super_labels;
    std::vector<std::uint32_t> sub_labels;

    std::size_t size() const { return super_labels.size(); }
    std::size_t n_sub_total() const { return n_super * n_sub_per_super; }
    std::vector<double> sample(std::size_t i) const;

    // Exact text serialization; digest() hashes it, so equal datasets have
    // equal digests and vice versa.
    std::string serialize() const;
    std::uint64_t digest() const;

    bool operator==(const HierarchicalDataset&) const = default;
};

// Deterministic per seed. Super centers are random directions at radius
// `separation`, redrawn until pairwise distances reach `separation`; sub
// centers sit at radius `sub_spread` from their super center, redrawn until
// sibling distances reach `sub_spread`. Per-coordinate sample noise is
// sub_spread / 4.
HierarchicalDataset generate_dataset(std::size_t n_super,
                                     std::size_t n_sub_per_super,
                                     std::size_t d_in,
                                     std::size_t samples_per_sub,
                                     double separation, double sub_spread,
                                     std::uint64_t seed);

void save_dataset(const HierarchicalDataset& ds, const std::string& path);
HierarchicalDataset load_dataset(const std::string& path);

// Additive Gaussian noise views. Draws depend only on (seed, sample_index,
// draw counter), never on call order.
struct AugmentationSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

std::vector<double> augment(const std::vector<double>& x,
                            const AugmentationSpec& spec,
                            std::size_t sample_index, std::uint64_t draw);

}  // namespace ers::data
