#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "imret/feature_pipeline.hpp"
#include "imret/retrieval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace imret;

namespace {

// Random orthogonal transform as a product of Givens rotations.
struct Rotation {
    std::size_t dim;
    std::vector<std::tuple<std::size_t, std::size_t, double>> givens;

    FeatureVector apply(const FeatureVector& v) const {
        FeatureVector out = v;
        for (const auto& [i, j, angle] : givens) {
            double c = std::cos(angle), s = std::sin(angle);
            double a = out[i], b = out[j];
            out[i] = c * a - s * b;
            out[j] = s * a + c * b;
        }
        return out;
    }
};

Rotation random_rotation(std::mt19937_64& rng, std::size_t dim) {
    Rotation rot{dim, {}};
    std::uniform_real_distribution<double> angle(0.0, 6.28318530717958648);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i + 1; j < dim; ++j)
            rot.givens.emplace_back(i, j, angle(rng));
    return rot;
}

} // namespace

TEST_CASE("rank_l2: query present ranks itself first at distance zero") {
    std::mt19937_64 rng(61);
    FeatureSet refs = random_feature_set(rng, 15, 4);
    FeatureVector q(refs.row(7).begin(), refs.row(7).end());

    RankedList ranked = rank_l2("item7", q, refs);
    REQUIRE(ranked.entries.size() == 15);
    CHECK(ranked.entries[0].item_id == "item7");
    CHECK(ranked.entries[0].score == 0.0);
    CHECK(ranked.entries[0].rank == 1);
}

TEST_CASE("rank_l2: excluded query id is absent from the list") {
    std::mt19937_64 rng(63);
    FeatureSet refs = random_feature_set(rng, 15, 4);
    FeatureVector q(refs.row(7).begin(), refs.row(7).end());
    IdSet exclude{"item7"};

    RankedList ranked = rank_l2("item7", q, refs, &exclude);
    CHECK(ranked.entries.size() == 14);
    for (const auto& e : ranked.entries) CHECK(e.item_id != "item7");
}

TEST_CASE("rank_l2 matches the brute-force oracle on random instances") {
    std::mt19937_64 rng(67);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t d = 2 + rng() % 10;
        FeatureSet refs = random_feature_set(rng, 20, d);
        FeatureVector q = random_vector(rng, d);

        RankedList ranked = rank_l2("q", q, refs);
        auto expected = oracle::rank_ids_l2(q, refs, nullptr);
        REQUIRE(ranked.entries.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(ranked.entries[i].item_id == expected[i]);
            CHECK(ranked.entries[i].rank == static_cast<int>(i) + 1);
        }
        // scores are the actual distances, ascending
        for (std::size_t i = 1; i < ranked.entries.size(); ++i)
            CHECK(ranked.entries[i - 1].score <= ranked.entries[i].score);
    }
}

TEST_CASE("rank_l2 input validation") {
    FeatureSet empty;
    FeatureVector q = {1.0, 2.0};
    CHECK_THROWS_AS(rank_l2("q", q, empty), DataError);
    FeatureSet refs;
    refs.add("a", {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(rank_l2("q", q, refs), DataError);
}

TEST_CASE("rank_l2 order is invariant under joint orthogonal transforms") {
    std::mt19937_64 rng(71);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t d = 3 + rng() % 5;
        FeatureSet refs = random_feature_set(rng, 25, d);
        FeatureVector q = random_vector(rng, d);

        // skip instances with near-tied neighbors: a rotation may legally
        // swap items whose distances differ below rounding error
        std::vector<double> dists;
        for (std::size_t i = 0; i < refs.size(); ++i)
            dists.push_back(l2_distance(q, FeatureVector(refs.row(i).begin(),
                                                         refs.row(i).end())));
        std::sort(dists.begin(), dists.end());
        bool well_separated = true;
        for (std::size_t i = 1; i < dists.size(); ++i)
            if (dists[i] - dists[i - 1] < 1e-7) well_separated = false;
        if (!well_separated) continue;
        ++checked;

        Rotation rot = random_rotation(rng, d);
        FeatureSet rotated;
        for (std::size_t i = 0; i < refs.size(); ++i)
            rotated.add(refs.id(i),
                        rot.apply(FeatureVector(refs.row(i).begin(), refs.row(i).end())));

        RankedList before = rank_l2("q", q, refs);
        RankedList after = rank_l2("q", rot.apply(q), rotated);
        REQUIRE(before.entries.size() == after.entries.size());
        for (std::size_t i = 0; i < before.entries.size(); ++i)
            CHECK(before.entries[i].item_id == after.entries[i].item_id);
    }
    CHECK(checked >= 10); // the gap filter must not eat the test
}

TEST_CASE("expand_query_avg: R=0, identical tops, normalized midpoint") {
    FeatureSet refs;
    refs.add("a", {0.0, 1.0});
    refs.add("b", {2.0, 0.0});
    FeatureVector q = {1.0, 0.0};
    RankedList initial = rank_l2("q", q, refs);

    FeatureVector r0 = expand_query_avg(q, refs, initial, 0);
    CHECK(r0[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r0[1] == doctest::Approx(0.0).epsilon(1e-12));

    // all top-R equal to the query: mean stays on the query direction
    FeatureSet dupes;
    dupes.add("d1", {1.0, 0.0});
    dupes.add("d2", {1.0, 0.0});
    RankedList dupe_list = rank_l2("q", q, dupes);
    FeatureVector same = expand_query_avg(q, dupes, dupe_list, 2);
    CHECK(same[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same[1] == doctest::Approx(0.0).epsilon(1e-12));

    // q=(1,0), top-1=(0,1): normalized midpoint
    FeatureSet one;
    one.add("u", {0.0, 1.0});
    RankedList one_list = rank_l2("q", q, one);
    FeatureVector mid = expand_query_avg(q, one, one_list, 1);
    CHECK(mid[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(mid[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("expand_query_avg validation: R too large, antipodal cancellation") {
    FeatureSet refs;
    refs.add("a", {-2.0, 0.0});
    FeatureVector q = {1.0, 0.0};
    RankedList initial = rank_l2("q", q, refs);
    CHECK_THROWS_AS(expand_query_avg(q, refs, initial, 5), DataError);
    // mean of (1,0) and (-2,0) is (-0.5,0)... make it cancel exactly
    FeatureSet anti;
    anti.add("a", {-1.0, 0.0});
    RankedList anti_list = rank_l2("q", q, anti);
    CHECK_THROWS_AS(expand_query_avg(q, anti, anti_list, 1), DataError);
}

TEST_CASE("rank_with_qe: R=0 reproduces the first pass exactly") {
    std::mt19937_64 rng(73);
    FeatureSet refs = random_feature_set(rng, 30, 6);
    FeatureVector q = random_vector(rng, 6);

    RankedList plain = rank_l2("q", q, refs);
    RankedList qe = rank_with_qe("q", q, refs, 0);
    REQUIRE(plain.entries.size() == qe.entries.size());
    for (std::size_t i = 0; i < plain.entries.size(); ++i) {
        CHECK(plain.entries[i].item_id == qe.entries[i].item_id);
        CHECK(plain.entries[i].score == qe.entries[i].score);
        CHECK(plain.entries[i].rank == qe.entries[i].rank);
    }
}

TEST_CASE("rank_with_qe: near-duplicate tops stay on top") {
    std::mt19937_64 rng(79);
    FeatureVector q = l2_normalize(random_vector(rng, 8));
    FeatureSet refs;
    for (int i = 0; i < 5; ++i) {
        FeatureVector v = q;
        for (auto& x : v) x += 1e-3 * (rng() % 1000 / 1000.0 - 0.5);
        refs.add("dup" + std::to_string(i), l2_normalize(v));
    }
    for (int i = 0; i < 40; ++i)
        refs.add("noise" + std::to_string(i), l2_normalize(random_vector(rng, 8)));

    RankedList before = rank_l2("q", q, refs);
    RankedList after = rank_with_qe("q", q, refs, 5);
    CHECK(after.entries[0].item_id == before.entries[0].item_id);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(after.entries[i].item_id.substr(0, 3) == "dup");
}

TEST_CASE("rank_with_qe matches a two-pass composed oracle") {
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 15; ++trial) {
        std::size_t d = 3 + rng() % 6;
        FeatureSet refs;
        for (int i = 0; i < 25; ++i)
            refs.add("r" + std::to_string(i), l2_normalize(random_vector(rng, d)));
        FeatureVector q = l2_normalize(random_vector(rng, d));
        std::size_t R = 1 + rng() % 5;

        RankedList impl = rank_with_qe("q", q, refs, R);

        // composed oracle: rank, average, re-rank — all by the naive route
        auto first = oracle::rank_ids_l2(q, refs, nullptr);
        FeatureVector mean = q;
        for (std::size_t i = 0; i < R; ++i) {
            auto row = refs.get(first[i]);
            for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
        }
        for (auto& x : mean) x /= static_cast<double>(R + 1);
        double nrm = 0;
        for (double x : mean) nrm += x * x;
        nrm = std::sqrt(nrm);
        for (auto& x : mean) x /= nrm;
        auto second = oracle::rank_ids_l2(mean, refs, nullptr);

        REQUIRE(impl.entries.size() == second.size());
        for (std::size_t i = 0; i < second.size(); ++i)
            CHECK(impl.entries[i].item_id == second[i]);
    }
}

TEST_CASE("rank_with_qe clamps R to the list length") {
    FeatureSet refs;
    refs.add("a", {1.0, 0.0});
    refs.add("b", {0.0, 1.0});
    FeatureVector q = {1.0, 0.1};
    RankedList ranked = rank_with_qe("q", q, refs, 100); // R > |refs|
    CHECK(ranked.entries.size() == 2);
}

TEST_CASE("exclusions never appear and lengths add up") {
    std::mt19937_64 rng(89);
    FeatureSet refs = random_feature_set(rng, 20, 4);
    IdSet exclude{"item3", "item11", "not-present"};
    FeatureVector q = random_vector(rng, 4);

    for (bool use_qe : {false, true}) {
        RankedList ranked = use_qe ? rank_with_qe("q", q, refs, 3, &exclude)
                                   : rank_l2("q", q, refs, &exclude);
        CHECK(ranked.entries.size() == 18); // 20 - |{item3, item11}|
        for (const auto& e : ranked.entries) {
            CHECK(e.item_id != "item3");
            CHECK(e.item_id != "item11");
        }
    }
}

TEST_CASE("expanded query is always unit norm") {
    std::mt19937_64 rng(97);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t d = 2 + rng() % 8;
        FeatureSet refs;
        for (int i = 0; i < 15; ++i)
            refs.add("r" + std::to_string(i), l2_normalize(random_vector(rng, d)));
        FeatureVector q = l2_normalize(random_vector(rng, d));
        RankedList initial = rank_l2("q", q, refs);
        FeatureVector expanded = expand_query_avg(q, refs, initial, 1 + rng() % 10);
        double nrm = 0;
        for (double x : expanded) nrm += x * x;
        CHECK(std::abs(std::sqrt(nrm) - 1.0) < 1e-9);
    }
}
