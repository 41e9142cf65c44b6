#include <unistd.h>

#include <filesystem>
#include <string>

#include "doctest.h"
#include "ers/checkpoint.hpp"
#include "ers/rng.hpp"

using namespace ers;
using pipeline::Checkpoint;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint(bool with_head) {
    Rng rng(77, "ckpt-test");
    Checkpoint c;
    c.member_id = 3;
    c.stage = with_head ? pipeline::Stage::scan : pipeline::Stage::pretext;
    c.config_digest = 0xdeadbeefcafe1234ULL;
    c.dataset_digest = 0x1122334455667788ULL;
    c.lambdas = {2.0, 5.0, 4.0, 8.0};
    c.encoder = model::make_encoder(8, {16, 16}, 4, rng);
    if (with_head) {
        c.has_head = true;
        c.head = model::make_head(4, 4, rng);
    }
    c.final_terms = {{"consistency", 1.375}, {"total", -2.5e-3}};
    return c;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ers-ckpt-test-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("stage names round trip") {
    for (const auto stage : {pipeline::Stage::pretext, pipeline::Stage::scan,
                             pipeline::Stage::selflabel})
        CHECK(pipeline::stage_from_name(pipeline::stage_name(stage)) == stage);
    CHECK_THROWS_AS((void)pipeline::stage_from_name("warmup"), DomainError);
}

TEST_CASE("file round trip is exact") {
    TempDir tmp;
    for (const bool with_head : {true, false}) {
        const Checkpoint c = sample_checkpoint(with_head);
        const auto file = (tmp.path / "member.ckpt").string();
        pipeline::save_checkpoint(c, file);
        const Checkpoint back = pipeline::load_checkpoint(file);
        CHECK(back == c);
    }
}

TEST_CASE("serialization round trip is exact") {
    const Checkpoint c = sample_checkpoint(true);
    const std::string bytes = pipeline::serialize_checkpoint(c);
    const Checkpoint back = pipeline::deserialize_checkpoint(bytes, "mem");
    CHECK(back == c);
    // Serialization is a pure function of the checkpoint.
    CHECK(pipeline::serialize_checkpoint(back) == bytes);
}

TEST_CASE("bit rot fails the digest check") {
    const Checkpoint c = sample_checkpoint(true);
    std::string bytes = pipeline::serialize_checkpoint(c);
    std::string flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x20;
    CHECK_THROWS_AS(
        (void)pipeline::deserialize_checkpoint(flipped, "mem"), IoError);
}

TEST_CASE("truncation is rejected") {
    const Checkpoint c = sample_checkpoint(true);
    const std::string bytes = pipeline::serialize_checkpoint(c);
    for (const std::size_t keep :
         {std::size_t{0}, std::size_t{4}, bytes.size() / 2,
          bytes.size() - 1}) {
        CHECK_THROWS_AS((void)pipeline::deserialize_checkpoint(
                            bytes.substr(0, keep), "mem"),
                        IoError);
    }
    CHECK_THROWS_AS(
        (void)pipeline::deserialize_checkpoint(bytes + "x", "mem"), IoError);
}

TEST_CASE("foreign magic and versions are rejected") {
    const Checkpoint c = sample_checkpoint(false);
    std::string bytes = pipeline::serialize_checkpoint(c);
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    CHECK_THROWS_AS(
        (void)pipeline::deserialize_checkpoint(wrong_magic, "mem"), IoError);
    std::string wrong_version = bytes;
    wrong_version[7] = char(wrong_version[7] + 1);  // u32 version after magic
    CHECK_THROWS_AS(
        (void)pipeline::deserialize_checkpoint(wrong_version, "mem"), IoError);
}

TEST_CASE("missing file reports an io error") {
    TempDir tmp;
    CHECK_THROWS_AS(
        (void)pipeline::load_checkpoint((tmp.path / "absent.ckpt").string()),
        IoError);
}

}  // TEST_SUITE("checkpoint")
