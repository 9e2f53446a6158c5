#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loglearn/tensor.hpp"

namespace loglearn {

// Integer cluster/class label per item.
using Labeling = std::vector<int>;

enum class Linkage { ward, average, complete };
enum class ClusterAlgo { kmeans, gmm, agglomerative };

// Lloyd's algorithm with k-means++ seeding. points is [n, d].
// Ties in assignment go to the lowest-index centroid.
Labeling kmeans(const Tensor& points, int k, uint64_t seed, int max_iter = 100);

// EM for a diagonal-covariance Gaussian mixture, k-means init, hard
// assignment by max responsibility. Appends the log-likelihood after each EM
// iteration to *loglik_trace when given (non-decreasing up to 1e-9).
Labeling gmm_cluster(const Tensor& points, int k, uint64_t seed, int max_iter = 100,
                     double tol = 1e-6, std::vector<double>* loglik_trace = nullptr);

// Bottom-up merging until k clusters remain; merge ties broken by the
// lowest (i, j) index pair.
Labeling agglomerative(const Tensor& points, int k, Linkage linkage = Linkage::ward);

// Chance-corrected agreement metrics (contingency-table forms).
double ari(const Labeling& truth, const Labeling& pred);
double ami(const Labeling& truth, const Labeling& pred);
double v_measure(const Labeling& truth, const Labeling& pred);

double accuracy(const Labeling& truth, const Labeling& pred_classes);

// Binary score table; both classes must be present for the AUC metrics.
struct ScoreTable {
    std::vector<int> truth;  // 0/1
    std::vector<double> scores;
};

// Mann-Whitney rank statistic with midrank tie correction.
double roc_auc(const ScoreTable& table);
// Precision-recall step interpolation (average precision).
double pr_auc(const ScoreTable& table);

struct ClusterScores {
    double ari = 0.0;
    double ami = 0.0;
    double v = 0.0;
};

// Clusters the embedding rows and scores the result against truth labels.
// k <= 0 means "number of distinct truth labels".
ClusterScores cluster_and_score(const Tensor& embeddings, const Labeling& truth,
                                ClusterAlgo algo, int k, uint64_t seed);

}  // namespace loglearn
