#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ers/common.hpp"
#include "ers/lambda.hpp"

namespace ers::cli {

// Geometric sweep of lambda3 away from the stem vector: count members with
// lambda3 = base * ratio^i. "none" keeps the stem as the only member.
struct SeriesSpec {
    bool none = false;
    double base = 4.0;
    double ratio = 2.0;
    std::size_t count = 4;

    std::string to_string() const;
    static SeriesSpec parse(std::string_view text);
    bool operator==(const SeriesSpec&) const = default;
};

// Full experiment description. Parsed from line-based "key = value" text
// (dotted keys, '#' comments); unknown keys, duplicates, and out-of-range
// values are rejected with the offending key and line. to_text() is the
// canonical echo: parse_config(to_text()) reproduces the config exactly.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out = "ers-run";

    // data
    std::size_t n_super = 4;
    std::size_t n_sub_per_super = 3;
    std::size_t samples_per_sub = 50;
    std::size_t d_in = 16;
    double separation = 6.0;
    double sub_spread = 2.0;
    std::size_t k_neighbors = 5;

    // model
    std::size_t d_emb = 16;
    std::vector<std::size_t> hidden = {64, 64};
    std::size_t n_classes = 4;

    // stages
    std::size_t pretext_epochs = 40;
    std::size_t pretext_batch_size = 64;
    double pretext_learning_rate = 0.05;
    std::size_t pretext_log_every = 20;
    double augment_sigma = 1.4;  // negative: 0.5 * sub_spread

    std::size_t scan_epochs = 40;
    std::size_t scan_batch_size = 64;
    double scan_learning_rate = 0.05;
    std::size_t scan_log_every = 20;
    bool scan_train_encoder = false;
    bool flip_lambda2 = false;

    bool selflabel_enabled = true;
    std::size_t selflabel_epochs = 20;
    std::size_t selflabel_batch_size = 64;
    double selflabel_learning_rate = 0.05;
    double selflabel_threshold = 0.9;
    std::size_t selflabel_log_every = 20;

    // lambda: explicit members win over templates, templates over the
    // stem + series sweep.
    model::LambdaVector stem{2.0, 5.0, 4.0, 0.0};
    SeriesSpec series;
    std::vector<model::LambdaVector> lambda_members;
    std::vector<std::string> lambda_templates;

    // eval
    std::vector<std::size_t> k_guess = {1, 2, 3, 4};
    double quorum = 0.75;
    std::size_t tiers = 3;
    std::size_t prototypes = 3;
    bool subclass_scoring = false;

    // Lambda vector of every ensemble member, in member-id order.
    std::vector<model::LambdaVector> members() const;

    void validate() const;  // cross-key constraints; ConfigError names keys
    std::string to_text() const;
    std::uint64_t digest() const { return fnv1a64(to_text()); }

    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

}  // namespace ers::cli
