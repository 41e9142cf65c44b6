#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ers/checkpoint.hpp"
#include "ers/dataset.hpp"
#include "ers/lambda.hpp"
#include "ers/losses.hpp"
#include "ers/neighbors.hpp"

namespace ers::pipeline {

// Knobs for one training stage. The same struct configures every stage;
// stage-irrelevant fields are ignored there.
struct TrainConfig {
    Stage stage = Stage::pretext;
    std::size_t epochs = 1;
    std::size_t batch_size = 64;
    double learning_rate = 0.05;
    model::LambdaVector lambdas;
    bool flip_lambda2 = false;
    std::uint64_t seed = 1;
    std::size_t log_every = 20;  // epochs between metric records

    // Model shape (pretext creates the encoder; scan creates the head).
    std::vector<std::size_t> hidden_widths = {64, 64};
    std::size_t d_emb = 16;
    std::size_t n_classes = 4;

    // Scan/self-label: train the encoder too instead of only the head.
    bool train_encoder = false;
    // Self-label pseudo-labeling threshold; must lie in (0.5, 1).
    double confidence_threshold = 0.9;
    // Pretext noise scale; negative means 0.5 * dataset.sub_spread.
    double augment_sigma = -1.0;

    std::uint64_t config_digest = 0;  // stamped into checkpoints
    std::uint32_t member_id = 0;

    void validate() const;  // ConfigError on bad values
};

// One metric record per logged step (= epoch). For the clustering stage the
// terms are the entropy-state diagnostics (consistency, mean_entropy,
// pointwise_cross, mean_cross, total), each recomputable offline from the
// checkpoint parameters at that step.
struct EntropyStateRecord {
    std::size_t step = 0;
    Stage stage = Stage::pretext;
    std::vector<TermValue> terms;

    bool operator==(const EntropyStateRecord&) const = default;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EntropyStateRecord> records;
    std::vector<std::string> warnings;
    double initial_epoch_loss = 0.0;
    double final_epoch_loss = 0.0;
};

// Contrastive encoder training on (sample, augmented sample) pairs.
// DivergenceError if the loss or a parameter goes non-finite.
TrainResult train_pretext(const TrainConfig& config,
                          const data::HierarchicalDataset& dataset);

// Clustering stage; requires a pretext checkpoint and neighbors mined from
// its embeddings. DomainError if pretext.stage != Stage::pretext.
TrainResult train_scan(const TrainConfig& config,
                       const data::HierarchicalDataset& dataset,
                       const data::NeighborIndex& neighbors,
                       const Checkpoint& pretext);

// Cross-entropy fine-tuning on confidently pseudo-labeled samples. If no
// sample clears the threshold, returns the input checkpoint unchanged plus a
// warning. DomainError if scan.stage != Stage::scan.
TrainResult train_selflabel(const TrainConfig& config,
                            const data::HierarchicalDataset& dataset,
                            const Checkpoint& scan);

// Embeddings of every dataset sample under the checkpoint encoder, [N, d_emb].
Tensor embed_dataset(const Checkpoint& c,
                     const data::HierarchicalDataset& dataset);

// Anchor probabilities [N, n] and neighbor probabilities [N*k, n] under the
// checkpoint, plus the loss terms they induce; used for logging and for the
// offline recompute of EntropyStateRecords.
model::ScanTerms scan_terms_of_checkpoint(
    const Checkpoint& c, const data::HierarchicalDataset& dataset,
    const data::NeighborIndex& neighbors, bool flip_lambda2 = false);

struct EnsembleSpec {
    std::vector<model::LambdaVector> members;  // >= 1
    TrainConfig pretext;
    TrainConfig scan;
    TrainConfig selflabel;
    std::size_t k_neighbors = 5;
    bool run_selflabel = true;
};

struct MemberResult {
    std::uint32_t member_id = 0;
    bool ok = false;
    std::string error;  // diagnostic when !ok
    Checkpoint final;   // last completed stage when ok
    std::vector<EntropyStateRecord> records;  // all stages, in order
    std::vector<std::string> warnings;
};

struct EnsembleResult {
    std::vector<MemberResult> members;
    std::size_t failures() const;
};

// Full pipeline per member. Members sharing a lambda0 reuse one pretext
// checkpoint and one neighbor index; member failures are recorded, not
// fatal. Deterministic: identical spec -> identical checkpoints.
EnsembleResult train_ensemble(const EnsembleSpec& spec,
                              const data::HierarchicalDataset& dataset);

}  // namespace ers::pipeline
