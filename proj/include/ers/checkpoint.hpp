#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ers/lambda.hpp"
#include "ers/model.hpp"

namespace ers::pipeline {

enum class Stage : std::uint8_t { pretext, scan, selflabel };

std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);

// One named scalar from the end of a training stage (loss terms, totals).
struct TermValue {
    std::string name;
    double value = 0.0;

    bool operator==(const TermValue&) const = default;
};

// Versioned container for one member's parameters after a stage. The head is
// absent until the clustering stage creates it.
struct Checkpoint {
    std::uint32_t member_id = 0;
    Stage stage = Stage::pretext;
    std::uint64_t config_digest = 0;
    std::uint64_t dataset_digest = 0;
    model::LambdaVector lambdas;
    model::EncoderParams encoder;
    bool has_head = false;
    model::ClusterHead head;
    std::vector<TermValue> final_terms;

    bool operator==(const Checkpoint&) const = default;
};

// Binary file: magic "ERSCKPT", u32 format version, the fields above with
// length-prefixed little-endian f64 arrays and shape manifests per tensor,
// and a trailing content digest. load(save(c)) == c exactly; truncation or
// bit rot fails the digest check, and a different version is rejected.
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint deserialize_checkpoint(const std::string& bytes,
                                  const std::string& origin);

}  // namespace ers::pipeline
