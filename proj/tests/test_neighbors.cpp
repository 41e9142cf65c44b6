#include <cmath>
#include <vector>

#include "doctest.h"
#include "ers/dataset.hpp"
#include "ers/kernels.hpp"
#include "ers/neighbors.hpp"

using namespace ers;

namespace {

Tensor unit_rows(std::vector<std::vector<double>> rows) {
    const std::size_t d = rows.front().size();
    std::vector<double> flat;
    for (auto& r : rows) {
        double sq = 0.0;
        for (double x : r) sq += x * x;
        const double inv = 1.0 / std::sqrt(sq);
        for (double x : r) flat.push_back(x * inv);
    }
    return Tensor::matrix(rows.size(), d, std::move(flat));
}

}  // namespace

TEST_SUITE("neighbors") {

TEST_CASE("hand-sized index matches the geometry") {
    // Four directions on the circle: 0deg, 10deg, 90deg, 180deg.
    const double a = 10.0 * 3.14159265358979323846 / 180.0;
    const Tensor emb = unit_rows({{1.0, 0.0},
                                  {std::cos(a), std::sin(a)},
                                  {0.0, 1.0},
                                  {-1.0, 0.0}});
    const auto idx = data::mine_neighbors(emb, 2);
    CHECK(idx.k == 2);
    CHECK(idx.size() == 4);
    // Nearest to 0deg is 10deg, then 90deg.
    CHECK(idx.at(0, 0) == 1);
    CHECK(idx.at(0, 1) == 2);
    CHECK(idx.at(1, 0) == 0);
    CHECK(idx.at(1, 1) == 2);
    CHECK(idx.at(2, 0) == 1);
    CHECK(idx.at(2, 1) == 0);
    // 180deg is closest to 90deg, then to 10deg (dot -0.98 beats -1).
    CHECK(idx.at(3, 0) == 2);
    CHECK(idx.at(3, 1) == 1);
    CHECK(idx.row(3)[0] == 2);
}

TEST_CASE("self is never a neighbor and exact ties go low") {
    const Tensor emb = unit_rows({{1, 0}, {1, 0}, {1, 0}});
    const auto idx = data::mine_neighbors(emb, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(idx.at(i, j) != i);
    CHECK(idx.at(0, 0) == 1);
    CHECK(idx.at(0, 1) == 2);
    CHECK(idx.at(1, 0) == 0);
    CHECK(idx.at(2, 0) == 0);
    CHECK(idx.at(2, 1) == 1);
}

TEST_CASE("k bounds are enforced") {
    const Tensor emb = unit_rows({{1, 0}, {0, 1}, {1, 1}});
    CHECK_THROWS_AS((void)data::mine_neighbors(emb, 0), DomainError);
    CHECK_THROWS_AS((void)data::mine_neighbors(emb, 3), DomainError);
    CHECK_THROWS_AS((void)data::mine_neighbors(Tensor::row_vector({1, 0}), 1),
                    ShapeError);
    CHECK_NOTHROW((void)data::mine_neighbors(emb, 2));
}

TEST_CASE("mined neighbors are super-pure on separated data") {
    const auto ds = data::generate_dataset(4, 3, 16, 20, 6.0, 2.0, 5);
    // Index the raw samples by direction, which is what the pretext
    // embedding sees before any training.
    Tensor normalized = Tensor::zeros({ds.size(), ds.d_in});
    (void)kernels::l2norm_rows(ds.samples.values.data(),
                               normalized.values.data(), ds.size(), ds.d_in);
    const auto idx = data::mine_neighbors(normalized, 5);
    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < idx.k; ++j) {
            hits += ds.super_labels[idx.at(i, j)] == ds.super_labels[i];
            ++total;
        }
    const double purity = double(hits) / double(total);
    CHECK(purity > 0.95);
}

TEST_CASE("index equality is structural") {
    const Tensor emb = unit_rows({{1, 0}, {0, 1}, {1, 1}, {-1, 2}});
    CHECK(data::mine_neighbors(emb, 2) == data::mine_neighbors(emb, 2));
    CHECK(data::mine_neighbors(emb, 2) != data::mine_neighbors(emb, 3));
}

}  // TEST_SUITE("neighbors")
