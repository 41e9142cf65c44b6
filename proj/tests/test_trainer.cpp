#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "ers/dataset.hpp"
#include "ers/trainer.hpp"

using namespace ers;
using pipeline::EnsembleSpec;
using pipeline::Stage;
using pipeline::TrainConfig;

namespace {

data::HierarchicalDataset tiny_data() {
    return data::generate_dataset(3, 2, 8, 6, 6.0, 2.0, 9);
}

TrainConfig tiny_pretext(std::uint64_t seed = 1) {
    TrainConfig c;
    c.stage = Stage::pretext;
    c.epochs = 3;
    c.batch_size = 16;
    c.learning_rate = 0.05;
    c.lambdas = {2, 0, 0, 0};
    c.seed = seed;
    c.hidden_widths = {12};
    c.d_emb = 6;
    c.n_classes = 3;
    return c;
}

TrainConfig tiny_scan(std::uint64_t seed = 1) {
    TrainConfig c = tiny_pretext(seed);
    c.stage = Stage::scan;
    c.epochs = 4;
    c.lambdas = {2, 5, 4, 8};
    return c;
}

EnsembleSpec tiny_spec(std::uint64_t seed = 1) {
    EnsembleSpec spec;
    spec.members = {{2, 5, 4, 4}, {2, 5, 4, 32}};
    spec.pretext = tiny_pretext(seed);
    spec.scan = tiny_scan(seed);
    spec.selflabel = tiny_scan(seed);
    spec.selflabel.stage = Stage::selflabel;
    spec.selflabel.epochs = 2;
    spec.k_neighbors = 3;
    return spec;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("train config validation names the offense") {
    TrainConfig c = tiny_pretext();
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_pretext();
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_pretext();
    c.lambdas.lambda3 = std::nan("");
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_scan();
    c.stage = Stage::selflabel;
    c.confidence_threshold = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_NOTHROW(tiny_scan().validate());
}

TEST_CASE("pretext training is deterministic and normalizes embeddings") {
    const auto ds = tiny_data();
    const auto r1 = pipeline::train_pretext(tiny_pretext(), ds);
    const auto r2 = pipeline::train_pretext(tiny_pretext(), ds);
    CHECK(r1.checkpoint == r2.checkpoint);
    CHECK(r1.records == r2.records);
    CHECK(r1.checkpoint.stage == Stage::pretext);
    CHECK_FALSE(r1.checkpoint.has_head);

    const auto r3 = pipeline::train_pretext(tiny_pretext(2), ds);
    CHECK(r1.checkpoint != r3.checkpoint);

    const Tensor emb = pipeline::embed_dataset(r1.checkpoint, ds);
    REQUIRE(emb.rows() == ds.size());
    REQUIRE(emb.cols() == 6);
    for (std::size_t r = 0; r < emb.rows(); ++r) {
        double sq = 0.0;
        for (std::size_t c = 0; c < emb.cols(); ++c)
            sq += emb.at(r, c) * emb.at(r, c);
        CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("scan stage produces a head and logs recomputable terms") {
    const auto ds = tiny_data();
    const auto pre = pipeline::train_pretext(tiny_pretext(), ds);
    const auto neighbors =
        data::mine_neighbors(pipeline::embed_dataset(pre.checkpoint, ds), 3);

    const auto scan = pipeline::train_scan(tiny_scan(), ds, neighbors,
                                           pre.checkpoint);
    CHECK(scan.checkpoint.stage == Stage::scan);
    CHECK(scan.checkpoint.has_head);
    CHECK(scan.checkpoint.head.n_classes() == 3);
    // Frozen encoder by default.
    CHECK(scan.checkpoint.encoder == pre.checkpoint.encoder);

    // The final logged record is recomputable offline from the checkpoint.
    REQUIRE(!scan.records.empty());
    const auto& last = scan.records.back();
    CHECK(last.stage == Stage::scan);
    CHECK(last.step == 4);
    const model::ScanTerms fresh = pipeline::scan_terms_of_checkpoint(
        scan.checkpoint, ds, neighbors);
    REQUIRE(last.terms.size() == 5);
    CHECK(last.terms[0].name == "consistency");
    CHECK(last.terms[0].value == fresh.consistency);
    CHECK(last.terms[1].value == fresh.mean_entropy);
    CHECK(last.terms[2].value == fresh.pointwise_cross);
    CHECK(last.terms[3].value == fresh.mean_cross);
    CHECK(last.terms[4].value == fresh.total);
    CHECK(scan.checkpoint.final_terms == last.terms);
}

TEST_CASE("scan warns when the balancing term is absent") {
    const auto ds = tiny_data();
    const auto pre = pipeline::train_pretext(tiny_pretext(), ds);
    const auto neighbors =
        data::mine_neighbors(pipeline::embed_dataset(pre.checkpoint, ds), 3);
    TrainConfig cfg = tiny_scan();
    cfg.lambdas = {2, 0, 0, 0};
    const auto scan = pipeline::train_scan(cfg, ds, neighbors, pre.checkpoint);
    REQUIRE(!scan.warnings.empty());
    CHECK(scan.warnings.front().find("lambda1") != std::string::npos);
}

TEST_CASE("scan requires a pretext checkpoint") {
    const auto ds = tiny_data();
    const auto pre = pipeline::train_pretext(tiny_pretext(), ds);
    const auto neighbors =
        data::mine_neighbors(pipeline::embed_dataset(pre.checkpoint, ds), 3);
    const auto scan =
        pipeline::train_scan(tiny_scan(), ds, neighbors, pre.checkpoint);
    CHECK_THROWS_AS((void)pipeline::train_scan(tiny_scan(), ds, neighbors,
                                               scan.checkpoint),
                    DomainError);
}

TEST_CASE("divergent learning rates fail loudly") {
    const auto ds = tiny_data();
    TrainConfig cfg = tiny_pretext();
    // Large enough that squared pre-normalization activations overflow on
    // the second batch; the zero embedding rows are then caught and
    // rethrown with stage context.
    cfg.learning_rate = 1e305;
    CHECK_THROWS_AS((void)pipeline::train_pretext(cfg, ds), DivergenceError);
}

TEST_CASE("selflabel is a warned no-op when nothing clears the threshold") {
    const auto ds = tiny_data();
    const auto pre = pipeline::train_pretext(tiny_pretext(), ds);
    const auto neighbors =
        data::mine_neighbors(pipeline::embed_dataset(pre.checkpoint, ds), 3);
    TrainConfig scan_cfg = tiny_scan();
    scan_cfg.epochs = 1;  // near-uniform head, max prob well under 0.99
    const auto scan =
        pipeline::train_scan(scan_cfg, ds, neighbors, pre.checkpoint);

    TrainConfig sl = tiny_scan();
    sl.stage = Stage::selflabel;
    sl.confidence_threshold = 0.99;
    const auto refined = pipeline::train_selflabel(sl, ds, scan.checkpoint);
    REQUIRE(!refined.warnings.empty());
    CHECK(refined.warnings.front().find("threshold") != std::string::npos);
    // The checkpoint comes back untouched, still marked as the scan stage.
    CHECK(refined.checkpoint == scan.checkpoint);
}

TEST_CASE("selflabel requires a scan checkpoint") {
    const auto ds = tiny_data();
    const auto pre = pipeline::train_pretext(tiny_pretext(), ds);
    TrainConfig sl = tiny_scan();
    sl.stage = Stage::selflabel;
    CHECK_THROWS_AS(
        (void)pipeline::train_selflabel(sl, ds, pre.checkpoint), DomainError);
}

TEST_CASE("ensemble training is deterministic and groups by lambda0") {
    const auto ds = tiny_data();
    const auto r1 = pipeline::train_ensemble(tiny_spec(), ds);
    const auto r2 = pipeline::train_ensemble(tiny_spec(), ds);
    REQUIRE(r1.members.size() == 2);
    CHECK(r1.failures() == 0);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(r1.members[i].ok);
        CHECK(r1.members[i].final == r2.members[i].final);
        CHECK(r1.members[i].member_id == i);
        CHECK(r1.members[i].final.member_id == i);
    }
    // Shared lambda0 means one pretext run: identical frozen encoders.
    CHECK(r1.members[0].final.encoder == r1.members[1].final.encoder);
    // Scan heads differ because lambda3 differs.
    CHECK(r1.members[0].final.head != r1.members[1].final.head);
    CHECK(r1.members[0].final.lambdas.lambda3 == 4.0);
    CHECK(r1.members[1].final.lambdas.lambda3 == 32.0);

    // Each member carries pretext and scan records; the self-label stage
    // either logged records or warned that nothing cleared its threshold.
    for (const auto& m : r1.members) {
        bool saw_pretext = false, saw_scan = false, saw_selflabel = false;
        for (const auto& rec : m.records) {
            saw_pretext |= rec.stage == Stage::pretext;
            saw_scan |= rec.stage == Stage::scan;
            saw_selflabel |= rec.stage == Stage::selflabel;
        }
        CHECK(saw_pretext);
        CHECK(saw_scan);
        bool threshold_warning = false;
        for (const auto& w : m.warnings)
            threshold_warning |= w.find("threshold") != std::string::npos;
        CHECK((saw_selflabel || threshold_warning));
    }
}

TEST_CASE("a failing member is recorded, not fatal") {
    const auto ds = tiny_data();
    EnsembleSpec spec = tiny_spec();
    spec.members = {{2, 5, 4, 4},
                    {2, 5, 4, std::numeric_limits<double>::infinity()}};
    const auto res = pipeline::train_ensemble(spec, ds);
    REQUIRE(res.members.size() == 2);
    CHECK(res.failures() == 1);
    CHECK(res.members[0].ok);
    CHECK_FALSE(res.members[1].ok);
    CHECK(!res.members[1].error.empty());
}

TEST_CASE("ensemble refuses an empty member list") {
    EnsembleSpec spec = tiny_spec();
    spec.members.clear();
    CHECK_THROWS_AS((void)pipeline::train_ensemble(spec, tiny_data()),
                    ConfigError);
}

}  // TEST_SUITE("trainer")
