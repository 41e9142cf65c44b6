#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ers/checkpoint.hpp"
#include "ers/dataset.hpp"
#include "ers/tensor.hpp"

namespace ers::evalkit {

// One network's per-sample cluster probabilities. Raw cluster ids are
// meaningless across networks; map_to_labels assigns each cluster a ground
// truth label (optimal matching), after which mapped_label() is comparable
// between members.
struct PredictionSet {
    std::uint32_t checkpoint_id = 0;
    Tensor probs;                        // [N, n_clusters]
    std::vector<std::uint32_t> argmax;   // [N]
    std::vector<std::uint32_t> mapping;  // cluster -> label; empty = unmapped
    double mapped_accuracy = -1.0;

    std::size_t size() const { return argmax.size(); }
    std::size_t n_clusters() const { return probs.cols(); }
    bool mapped() const { return !mapping.empty(); }
    std::uint32_t mapped_label(std::size_t i) const {
        return mapping[argmax[i]];
    }
    double confidence(std::size_t i) const { return probs.at(i, argmax[i]); }

    bool operator==(const PredictionSet&) const = default;
};

PredictionSet predictions_from_checkpoint(
    const pipeline::Checkpoint& c, const data::HierarchicalDataset& dataset);

// rows = true labels, columns = predicted (cluster or mapped label).
struct ConfusionMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint64_t> counts;

    std::uint64_t& at(std::size_t r, std::size_t c) {
        return counts[r * cols + c];
    }
    std::uint64_t at(std::size_t r, std::size_t c) const {
        return counts[r * cols + c];
    }
    std::uint64_t total() const;

    static ConfusionMatrix zeros(std::size_t rows, std::size_t cols);
    bool operator==(const ConfusionMatrix&) const = default;
};

std::uint64_t l1_distance(const ConfusionMatrix& a, const ConfusionMatrix& b);

struct HungarianResult {
    std::vector<std::uint32_t> permutation;  // cluster (column) -> label (row)
    std::uint64_t matched = 0;
    double accuracy = 0.0;
};

// Optimal assignment of columns (clusters) to rows (labels) maximizing the
// matched count; input must be square (ShapeError otherwise). Equals
// exhaustive search over all permutations.
HungarianResult hungarian_match(const ConfusionMatrix& raw);

// Counts of (true label, raw cluster): [n_labels, n_clusters].
ConfusionMatrix raw_confusion(const PredictionSet& preds,
                              const std::vector<std::uint32_t>& labels,
                              std::size_t n_labels);

// Fills preds.mapping and preds.mapped_accuracy via hungarian_match on the
// raw confusion, zero-padded square when cluster and label counts differ.
void map_to_labels(PredictionSet& preds,
                   const std::vector<std::uint32_t>& labels,
                   std::size_t n_labels);

// Counts of (true label, mapped label): [n_labels, n_labels]. DomainError on
// an unmapped prediction set.
ConfusionMatrix confusion_matrix(const PredictionSet& preds,
                                 const std::vector<std::uint32_t>& labels,
                                 std::size_t n_labels);

// Tabular text round trip (sample id, probabilities, argmax, mapped label).
std::string serialize_predictions(const PredictionSet& preds);
void save_predictions(const PredictionSet& preds, const std::string& path);
PredictionSet load_predictions(const std::string& path);

}  // namespace ers::evalkit
