#include <algorithm>
#include <cmath>
#include <random>

#include "abc/retrieval.hpp"
#include "doctest.h"

using namespace abc;

namespace {

BinaryCode random_code(uint32_t m, std::mt19937_64& rng) {
    std::bernoulli_distribution bit(0.5);
    BinaryCode c(m);
    for (uint32_t j = 0; j < m; ++j)
        if (bit(rng)) c.set(j, true);
    return c;
}

// brute-force oracle: naive per-bit distance + stable sort on (distance, row)
std::vector<RankedHit> hamming_oracle(const BinaryCodeBatch& gallery, const BinaryCode& q) {
    std::vector<RankedHit> hits;
    for (std::size_t row = 0; row < gallery.codes.size(); ++row) {
        const auto a = gallery.codes[row].unpack();
        const auto b = q.unpack();
        double d = 0;
        for (std::size_t j = 0; j < a.size(); ++j) d += a[j] != b[j];
        hits.push_back({row, d});
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const RankedHit& x, const RankedHit& y) { return x.distance < y.distance; });
    return hits;
}

}  // namespace

TEST_CASE("build_index basics") {
    BinaryCodeBatch codes;
    codes.length = 8;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 3; ++i) codes.codes.push_back(random_code(8, rng));
    auto index = build_index(codes, std::vector<RowLabel>(3));
    CHECK(index.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(index.code_at(i) == codes.codes[i]);
    CHECK_THROWS_AS(build_index(BinaryCodeBatch{}, {}), Error);
    CHECK_THROWS_AS(build_index(codes, std::vector<RowLabel>(2)), Error);
}

TEST_CASE("query_hamming hand example with tie break") {
    BinaryCodeBatch codes;
    codes.length = 4;
    codes.codes = {BinaryCode::pack({0, 0, 0, 0}), BinaryCode::pack({0, 0, 1, 1}),
                   BinaryCode::pack({1, 1, 1, 1})};
    auto index = build_index(codes, std::vector<RowLabel>(3));
    auto hits = query_hamming(index, BinaryCode::pack({0, 0, 0, 1}), nullptr, 10);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].row == 0);
    CHECK(hits[0].distance == 1);
    CHECK(hits[1].row == 1);  // tie with row 0 broken by row id
    CHECK(hits[1].distance == 1);
    CHECK(hits[2].row == 2);
    CHECK(hits[2].distance == 3);

    auto none = query_hamming(index, BinaryCode::pack({0, 0, 0, 1}),
                              [](const RowLabel&) { return true; }, 10);
    CHECK(none.empty());
    CHECK_THROWS_AS(query_hamming(index, BinaryCode(8), nullptr, 10), Error);
}

TEST_CASE("query_hamming equals the brute-force oracle") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        BinaryCodeBatch codes;
        codes.length = 96;
        for (int i = 0; i < 50; ++i) codes.codes.push_back(random_code(96, rng));
        auto index = build_index(codes, std::vector<RowLabel>(50));
        BinaryCode q = random_code(96, rng);
        auto hits = query_hamming(index, q, nullptr, 50);
        auto oracle = hamming_oracle(codes, q);
        REQUIRE(hits.size() == oracle.size());
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(hits[i].row == oracle[i].row);
            CHECK(hits[i].distance == oracle[i].distance);
        }
    }
}

TEST_CASE("query_euclidean") {
    FeatureBatch gallery(2, 2);
    gallery.at(1, 0) = 3;
    gallery.at(1, 1) = 4;
    auto hits = query_euclidean(gallery, std::vector<RowLabel>(2), {0, 0}, nullptr, 10);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].row == 0);
    CHECK(hits[0].distance == doctest::Approx(0.0));
    CHECK(hits[1].row == 1);
    CHECK(hits[1].distance == doctest::Approx(5.0));

    // duplicate rows tie -> row order
    FeatureBatch dup(3, 2);
    hits = query_euclidean(dup, std::vector<RowLabel>(3), {1, 1}, nullptr, 10);
    CHECK(hits[0].row == 0);
    CHECK(hits[1].row == 1);
    CHECK(hits[2].row == 2);
    CHECK_THROWS_AS(query_euclidean(dup, std::vector<RowLabel>(3), {1}, nullptr, 1), Error);
}

TEST_CASE("hamming and euclidean orderings agree on uniform-normalized codes") {
    std::mt19937_64 rng(5);
    const double lambda = 5.65685424949238;
    BinaryCodeBatch codes;
    codes.length = 64;
    for (int i = 0; i < 40; ++i) codes.codes.push_back(random_code(64, rng));
    FeatureBatch gallery(40, 64);
    for (int i = 0; i < 40; ++i) {
        auto v = normalize_uniform(codes.codes[i], lambda);
        std::copy(v.begin(), v.end(), gallery.row(i));
    }
    auto index = build_index(codes, std::vector<RowLabel>(40));
    for (int rep = 0; rep < 10; ++rep) {
        BinaryCode q = random_code(64, rng);
        auto h = query_hamming(index, q, nullptr, 40);
        auto e = query_euclidean(gallery, std::vector<RowLabel>(40),
                                 normalize_uniform(q, lambda), nullptr, 40);
        REQUIRE(h.size() == e.size());
        for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i].row == e[i].row);
    }
}

TEST_CASE("evaluate: hand-computed CMC and AP") {
    // one query, first relevant at rank 2
    auto r = evaluate({{false, true, false}}, 3);
    CHECK(r.cmc[0] == 0.0);
    CHECK(r.cmc[1] == 1.0);
    CHECK(r.cmc[2] == 1.0);

    // relevance [1,0,1] -> AP = (1/1 + 2/3)/2 = 5/6
    r = evaluate({{true, false, true}}, 3);
    CHECK(r.per_query_ap[0] == doctest::Approx(5.0 / 6.0));
    CHECK(r.map == doctest::Approx(5.0 / 6.0));

    // all relevant
    r = evaluate({{true, true, true}}, 3);
    CHECK(r.map == doctest::Approx(1.0));
    CHECK(r.cmc[0] == 1.0);

    CHECK_THROWS_AS(evaluate({{false, false}}, 2), Error);
}

TEST_CASE("evaluate properties: CMC monotone, mAP bounded, swap improves AP") {
    std::mt19937_64 rng(7);
    std::bernoulli_distribution rel(0.3);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::vector<bool>> relevance(4, std::vector<bool>(20));
        for (auto& q : relevance) {
            bool any = false;
            for (std::size_t i = 0; i < q.size(); ++i) {
                q[i] = rel(rng);
                any = any || q[i];
            }
            if (!any) q[19] = true;
        }
        auto r = evaluate(relevance, 20);
        for (std::size_t k = 1; k < 20; ++k) CHECK(r.cmc[k] >= r.cmc[k - 1]);
        CHECK(r.map >= 0.0);
        CHECK(r.map <= 1.0);

        // removing a non-relevant item ranked above a relevant one never lowers AP
        auto& q0 = relevance[0];
        for (std::size_t i = 0; i + 1 < q0.size(); ++i) {
            if (!q0[i]) {
                bool later_relevant = false;
                for (std::size_t j = i + 1; j < q0.size(); ++j) later_relevant |= q0[j];
                if (!later_relevant) break;
                std::vector<bool> dropped;
                for (std::size_t j = 0; j < q0.size(); ++j)
                    if (j != i) dropped.push_back(q0[j]);
                const double ap0 = evaluate({q0}, 1).per_query_ap[0];
                const double ap1 = evaluate({dropped}, 1).per_query_ap[0];
                CHECK(ap1 >= ap0 - 1e-12);
                break;
            }
        }
    }
}

TEST_CASE("analytic memory model") {
    CHECK(memory_bytes_binary(1000, 2048) == 256000);
    CHECK(memory_bytes_real32(1000, 2048) == 8192000);
    CHECK(memory_bytes_binary(3, 65) == 3 * 2 * 8);
}

TEST_CASE("benchmark reports exact memory and sane timings") {
    std::mt19937_64 rng(9);
    BinaryCodeBatch codes;
    codes.length = 128;
    for (int i = 0; i < 500; ++i) codes.codes.push_back(random_code(128, rng));
    auto index = build_index(codes, std::vector<RowLabel>(500));
    std::vector<BinaryCode> queries;
    for (int i = 0; i < 4; ++i) queries.push_back(random_code(128, rng));
    auto r = benchmark_hamming(index, queries, 3);
    CHECK(r.memory_bytes == memory_bytes_binary(500, 128));
    CHECK(r.mean_query_seconds >= 0.0);
    CHECK(r.median_query_seconds >= 0.0);
    CHECK(r.gallery_size == 500);
    CHECK_THROWS_AS(benchmark_hamming(index, queries, 2), Error);
}
