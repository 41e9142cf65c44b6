#pragma once

#include <cstdint>
#include <vector>

#include "ers/dataset.hpp"
#include "ers/predictions.hpp"

namespace ers::evalkit {

// Fraction of samples where at least one member's mapped argmax equals the
// true label ("if any of the n networks predicts the label correctly").
// DomainError on an empty ensemble or unmapped member; ShapeError on length
// mismatch.
double n_guess_accuracy(const std::vector<const PredictionSet*>& members,
                        const std::vector<std::uint32_t>& labels);

// Fraction of samples on which both members emit the same mapped label.
// Symmetric; 1.0 when a == b.
double agreement_rate(const PredictionSet& a, const PredictionSet& b);

enum class TieRule {
    highest_confidence,  // member with the largest max-probability wins,
                         // lower member index on exact confidence ties
    lowest_member_index,
};

struct VoteResult {
    std::vector<std::uint32_t> winners;             // [N] winning label
    std::vector<std::vector<std::uint32_t>> tally;  // [N][n_labels]
    std::vector<bool> tie;                          // [N] plurality was tied
    double accuracy = 0.0;

    std::size_t size() const { return winners.size(); }
};

// Unweighted plurality over mapped labels. DomainError on an empty ensemble
// or unmapped member.
VoteResult majority_vote(const std::vector<const PredictionSet*>& members,
                         const std::vector<std::uint32_t>& labels,
                         std::size_t n_labels,
                         TieRule tie_rule = TieRule::highest_confidence);

// Members sorted by mapped accuracy (ties: lower checkpoint id first) into
// `tiers` tiers, remainder samples going to the top tiers; the best member of
// each tier votes. DomainError when the ensemble is smaller than `tiers`.
VoteResult tiered_vote(const std::vector<const PredictionSet*>& members,
                       const std::vector<std::uint32_t>& labels,
                       std::size_t n_labels, std::size_t tiers = 3,
                       TieRule tie_rule = TieRule::highest_confidence);

struct FilterResult {
    std::vector<std::uint32_t> confident;  // some label reached the quorum
    std::vector<std::uint32_t> confused;   // everything else

    std::size_t size() const { return confident.size() + confused.size(); }
};

// Sample is confident iff some label collects >= quorum * |ensemble| mapped
// votes. quorum must lie in (0.5, 1]; DomainError otherwise or on an empty
// ensemble.
FilterResult disagreement_filter(
    const std::vector<const PredictionSet*>& members, double quorum);

struct PrototypeEntry {
    std::uint32_t sample = 0;
    double confidence = 0.0;
    std::uint32_t super_label = 0;
    std::uint32_t sub_label = 0;

    bool operator==(const PrototypeEntry&) const = default;
};

struct ClusterPrototypes {
    std::uint32_t cluster = 0;
    bool partial = false;  // cluster held fewer than m samples
    std::vector<PrototypeEntry> entries;  // confidence non-increasing

    bool operator==(const ClusterPrototypes&) const = default;
};

struct PrototypeReport {
    std::uint32_t checkpoint_id = 0;
    std::size_t m = 0;
    std::vector<ClusterPrototypes> clusters;

    bool operator==(const PrototypeReport&) const = default;
};

// Per raw cluster, the m samples with the highest assigned-cluster
// probability (ties: lower sample index), annotated with true labels.
// Clusters with fewer than m members return all available, flagged partial.
// DomainError when m == 0.
PrototypeReport confident_prototypes(const PredictionSet& preds,
                                     const data::HierarchicalDataset& dataset,
                                     std::size_t m);

}  // namespace ers::evalkit
