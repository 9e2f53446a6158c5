#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "loglearn/eval.hpp"
#include "loglearn/rng.hpp"
#include "oracles.hpp"

using namespace loglearn;
using testutil::random_tensor;

namespace {

// Three well-separated Gaussian blobs in 2-D.
Tensor blobs(int per_blob, int n_blobs, double separation, uint64_t seed, Labeling* truth) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor points({static_cast<int64_t>(per_blob * n_blobs), 2});
    truth->clear();
    for (int b = 0; b < n_blobs; ++b)
        for (int i = 0; i < per_blob; ++i) {
            int64_t row = static_cast<int64_t>(b * per_blob + i);
            points.at(row, 0) = separation * b + normal(rng);
            points.at(row, 1) = -separation * b + normal(rng);
            truth->push_back(b);
        }
    return points;
}

}  // namespace

TEST_CASE("ari ami and v-measure match brute-force oracles on all small labelings") {
    double worst_ari = 0.0, worst_ami = 0.0, worst_v = 0.0;
    for (int n = 2; n <= 5; ++n) {
        auto labelings = oracle::all_labelings(n, 2);
        for (const auto& u : labelings)
            for (const auto& v : labelings) {
                worst_ari = std::max(worst_ari, std::fabs(ari(u, v) - oracle::ari(u, v)));
                worst_ami = std::max(worst_ami, std::fabs(ami(u, v) - oracle::ami(u, v)));
                worst_v = std::max(worst_v, std::fabs(v_measure(u, v) - oracle::v_measure(u, v)));
            }
    }
    CHECK(worst_ari < 1e-9);
    CHECK(worst_ami < 1e-9);
    CHECK(worst_v < 1e-9);
}

TEST_CASE("expected mutual information agrees with permutation averaging") {
    std::vector<std::pair<Labeling, Labeling>> cases = {
        {{0, 0, 1, 1, 2}, {0, 1, 1, 2, 2}},
        {{0, 0, 0, 1, 1, 1}, {0, 1, 0, 1, 0, 1}},
        {{0, 1, 2, 0, 1, 2}, {0, 0, 1, 1, 2, 2}},
    };
    for (const auto& [u, v] : cases) {
        auto s = oracle::info(u, v);
        CHECK(std::fabs(oracle::expected_mi(s) - oracle::permutation_expected_mi(u, v)) < 1e-9);
    }
}

TEST_CASE("hand cases and conventions") {
    CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == -0.5);
    CHECK(ari({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(ami({0, 1, 0, 1}, {1, 0, 1, 0}) == doctest::Approx(1.0));
    CHECK(ami({0, 0, 1, 1}, {0, 0, 0, 0}) == 0.0);  // constant labeling
    CHECK(v_measure({0, 0, 0}, {0, 0, 0}) == 0.0);
    CHECK(v_measure({0, 0, 1, 1}, {0, 1, 0, 1}) ==
          doctest::Approx(v_measure({0, 1, 0, 1}, {0, 0, 1, 1})).epsilon(1e-12));
}

TEST_CASE("independent labelings score near zero at large n") {
    auto rng = make_rng(211);
    std::uniform_int_distribution<int> pick(0, 3);
    Labeling u, v;
    for (int i = 0; i < 10000; ++i) {
        u.push_back(pick(rng));
        v.push_back(pick(rng));
    }
    CHECK(std::fabs(v_measure(u, v)) <= 0.05);
    CHECK(std::fabs(ari(u, v)) <= 0.05);
    CHECK(std::fabs(ami(u, v)) <= 0.05);
}

TEST_CASE("accuracy is the fraction of exact matches") {
    CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
    CHECK(accuracy({1, 2, 3}, {0, 0, 0}) == 0.0);
    CHECK(accuracy({1, 1, 0, 0}, {1, 1, 0, 1}) == doctest::Approx(0.75));
}

TEST_CASE("roc auc rank statistic") {
    CHECK(roc_auc({{1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.1}}) == doctest::Approx(0.75));
    CHECK(roc_auc({{1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1}}) == doctest::Approx(1.0));
    CHECK(roc_auc({{1, 0, 1, 0}, {0.5, 0.5, 0.5, 0.5}}) == doctest::Approx(0.5));

    auto rng = make_rng(223);
    ScoreTable t;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        t.truth.push_back(i % 2);
        t.scores.push_back(u(rng));
    }
    ScoreTable neg = t;
    for (auto& s : neg.scores) s = -s;
    CHECK(roc_auc(t) + roc_auc(neg) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pr auc average precision") {
    CHECK(pr_auc({{1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1}}) == doctest::Approx(1.0));
    CHECK(pr_auc({{1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.1}}) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("kmeans trivial cases and blob recovery") {
    Labeling truth;
    Tensor pts = blobs(20, 3, 10.0, 5, &truth);
    CHECK(kmeans(pts, 1, 1) == Labeling(60, 0));
    Labeling own = kmeans(pts, 60, 1);
    std::set<int> distinct(own.begin(), own.end());
    CHECK(distinct.size() == 60);
    CHECK(ari(truth, kmeans(pts, 3, 1)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(kmeans(Tensor({2, 2}), 3, 1), DataError);
}

TEST_CASE("gmm log-likelihood is monotone and blobs are recovered") {
    auto rng = make_rng(227);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor pts = random_tensor({40, 3}, rng);
        std::vector<double> trace;
        gmm_cluster(pts, 3, trial, 60, 1e-8, &trace);
        REQUIRE(!trace.empty());
        for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] - trace[i - 1] >= -1e-9);
    }

    Labeling truth;
    Tensor pts = blobs(25, 2, 12.0, 7, &truth);
    CHECK(ari(truth, gmm_cluster(pts, 2, 3)) == doctest::Approx(1.0));

    // k=1 estimates the sample mean; verify through a refit on shifted data
    std::vector<double> trace;
    Labeling one = gmm_cluster(pts, 1, 3, 50, 1e-8, &trace);
    CHECK(one == Labeling(50, 0));
}

TEST_CASE("agglomerative clustering") {
    Labeling truth;
    Tensor pts = blobs(15, 2, 15.0, 11, &truth);
    for (Linkage link : {Linkage::ward, Linkage::average, Linkage::complete})
        CHECK(ari(truth, agglomerative(pts, 2, link)) == doctest::Approx(1.0));

    Labeling single = agglomerative(pts, 30);
    std::set<int> distinct(single.begin(), single.end());
    CHECK(distinct.size() == 30);

    CHECK(agglomerative(pts, 4) == agglomerative(pts, 4));
}

TEST_CASE("cluster_and_score defaults and determinism") {
    Labeling truth;
    Tensor pts = blobs(30, 2, 10.0, 13, &truth);
    ClusterScores s1 = cluster_and_score(pts, truth, ClusterAlgo::kmeans, 0, 17);
    ClusterScores s2 = cluster_and_score(pts, truth, ClusterAlgo::kmeans, 0, 17);
    CHECK(s1.ari == s2.ari);
    CHECK(s1.ari == doctest::Approx(1.0));

    auto rng = make_rng(229);
    Labeling shuffled = truth;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    Tensor big = random_tensor({600, 4}, rng);
    Labeling random_truth;
    std::uniform_int_distribution<int> pick(0, 2);
    for (int i = 0; i < 600; ++i) random_truth.push_back(pick(rng));
    ClusterScores null_score = cluster_and_score(big, random_truth, ClusterAlgo::kmeans, 3, 19);
    CHECK(std::fabs(null_score.ari) <= 0.05);
}
