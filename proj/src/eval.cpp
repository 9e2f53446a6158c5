#include "loglearn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "loglearn/rng.hpp"

namespace loglearn {

namespace {

double sq_dist(const double* a, const double* b, int64_t d) {
    double acc = 0.0;
    for (int64_t i = 0; i < d; ++i) {
        double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

// Relabels to 0..k-1 in order of first appearance.
std::vector<int> canonical(const Labeling& l) {
    std::map<int, int> remap;
    std::vector<int> out(l.size());
    for (size_t i = 0; i < l.size(); ++i) {
        auto [it, inserted] = remap.emplace(l[i], static_cast<int>(remap.size()));
        out[i] = it->second;
    }
    return out;
}

struct Contingency {
    std::vector<std::vector<int64_t>> n;  // n_ij
    std::vector<int64_t> row, col;
    int64_t total = 0;
};

Contingency contingency(const Labeling& truth, const Labeling& pred) {
    if (truth.size() != pred.size()) throw ShapeError("metrics: labeling sizes differ");
    if (truth.empty()) throw ShapeError("metrics: empty labelings");
    auto u = canonical(truth);
    auto v = canonical(pred);
    int r = *std::max_element(u.begin(), u.end()) + 1;
    int c = *std::max_element(v.begin(), v.end()) + 1;
    Contingency ct;
    ct.n.assign(static_cast<size_t>(r), std::vector<int64_t>(static_cast<size_t>(c), 0));
    ct.row.assign(static_cast<size_t>(r), 0);
    ct.col.assign(static_cast<size_t>(c), 0);
    ct.total = static_cast<int64_t>(truth.size());
    for (size_t i = 0; i < truth.size(); ++i) {
        ct.n[static_cast<size_t>(u[i])][static_cast<size_t>(v[i])]++;
        ct.row[static_cast<size_t>(u[i])]++;
        ct.col[static_cast<size_t>(v[i])]++;
    }
    return ct;
}

double comb2(int64_t n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

double entropy_from_counts(const std::vector<int64_t>& counts, int64_t n) {
    double h = 0.0;
    for (int64_t c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    return h;
}

double mutual_information(const Contingency& ct) {
    double mi = 0.0;
    double n = static_cast<double>(ct.total);
    for (size_t i = 0; i < ct.n.size(); ++i)
        for (size_t j = 0; j < ct.n[i].size(); ++j) {
            int64_t nij = ct.n[i][j];
            if (nij == 0) continue;
            double pij = static_cast<double>(nij) / n;
            mi += pij * std::log(static_cast<double>(nij) * n /
                                 (static_cast<double>(ct.row[i]) *
                                  static_cast<double>(ct.col[j])));
        }
    return std::max(mi, 0.0);
}

// E[MI] under the permutation model (hypergeometric form).
double expected_mutual_information(const Contingency& ct) {
    int64_t n = ct.total;
    double logn = std::log(static_cast<double>(n));
    double lgn = std::lgamma(static_cast<double>(n + 1));
    double emi = 0.0;
    for (int64_t a : ct.row)
        for (int64_t b : ct.col) {
            int64_t lo = std::max<int64_t>(1, a + b - n);
            int64_t hi = std::min(a, b);
            for (int64_t nij = lo; nij <= hi; ++nij) {
                double term = static_cast<double>(nij) / static_cast<double>(n) *
                              (std::log(static_cast<double>(nij)) + logn -
                               std::log(static_cast<double>(a)) -
                               std::log(static_cast<double>(b)));
                double logp = std::lgamma(static_cast<double>(a + 1)) +
                              std::lgamma(static_cast<double>(b + 1)) +
                              std::lgamma(static_cast<double>(n - a + 1)) +
                              std::lgamma(static_cast<double>(n - b + 1)) - lgn -
                              std::lgamma(static_cast<double>(nij + 1)) -
                              std::lgamma(static_cast<double>(a - nij + 1)) -
                              std::lgamma(static_cast<double>(b - nij + 1)) -
                              std::lgamma(static_cast<double>(n - a - b + nij + 1));
                emi += term * std::exp(logp);
            }
        }
    return emi;
}

std::vector<const double*> row_ptrs(const Tensor& points) {
    std::vector<const double*> out(static_cast<size_t>(points.rows()));
    for (int64_t i = 0; i < points.rows(); ++i)
        out[static_cast<size_t>(i)] = points.data() + i * points.cols();
    return out;
}

}  // namespace

Labeling kmeans(const Tensor& points, int k, uint64_t seed, int max_iter) {
    if (points.rank() != 2) throw ShapeError("kmeans: points must be [n, d]");
    int64_t n = points.rows(), d = points.cols();
    if (k < 1 || k > n) throw DataError("kmeans: k must be in [1, n]");
    auto rng = make_rng(seed);
    auto rows = row_ptrs(points);

    // k-means++ seeding.
    std::vector<std::vector<double>> centers;
    std::uniform_int_distribution<int64_t> pick(0, n - 1);
    int64_t first = pick(rng);
    centers.emplace_back(rows[static_cast<size_t>(first)], rows[static_cast<size_t>(first)] + d);
    std::vector<double> dist(static_cast<size_t>(n), 0.0);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers)
                best = std::min(best, sq_dist(rows[static_cast<size_t>(i)], c.data(), d));
            dist[static_cast<size_t>(i)] = best;
            total += best;
        }
        int64_t chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng), acc = 0.0;
            for (int64_t i = 0; i < n; ++i) {
                acc += dist[static_cast<size_t>(i)];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);  // all points already covered; any point works
        }
        centers.emplace_back(rows[static_cast<size_t>(chosen)],
                             rows[static_cast<size_t>(chosen)] + d);
    }

    Labeling labels(static_cast<size_t>(n), 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (int64_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double dd = sq_dist(rows[static_cast<size_t>(i)],
                                    centers[static_cast<size_t>(c)].data(), d);
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            if (labels[static_cast<size_t>(i)] != best) {
                labels[static_cast<size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
        std::vector<std::vector<double>> sums(static_cast<size_t>(k),
                                              std::vector<double>(static_cast<size_t>(d), 0.0));
        std::vector<int64_t> counts(static_cast<size_t>(k), 0);
        for (int64_t i = 0; i < n; ++i) {
            int c = labels[static_cast<size_t>(i)];
            counts[static_cast<size_t>(c)]++;
            for (int64_t j = 0; j < d; ++j)
                sums[static_cast<size_t>(c)][static_cast<size_t>(j)] +=
                    rows[static_cast<size_t>(i)][j];
        }
        for (int c = 0; c < k; ++c)
            if (counts[static_cast<size_t>(c)] > 0)
                for (int64_t j = 0; j < d; ++j)
                    centers[static_cast<size_t>(c)][static_cast<size_t>(j)] =
                        sums[static_cast<size_t>(c)][static_cast<size_t>(j)] /
                        static_cast<double>(counts[static_cast<size_t>(c)]);
    }
    return labels;
}

Labeling gmm_cluster(const Tensor& points, int k, uint64_t seed, int max_iter, double tol,
                     std::vector<double>* loglik_trace) {
    if (points.rank() != 2) throw ShapeError("gmm: points must be [n, d]");
    int64_t n = points.rows(), d = points.cols();
    if (k < 1 || k > n) throw DataError("gmm: k must be in [1, n]");
    constexpr double kVarFloor = 1e-6;
    auto rows = row_ptrs(points);

    // k-means init.
    Labeling init = kmeans(points, k, seed);
    std::vector<double> weight(static_cast<size_t>(k), 1.0 / k);
    std::vector<std::vector<double>> mean(static_cast<size_t>(k),
                                          std::vector<double>(static_cast<size_t>(d), 0.0));
    std::vector<std::vector<double>> var(static_cast<size_t>(k),
                                         std::vector<double>(static_cast<size_t>(d), 1.0));
    {
        std::vector<int64_t> counts(static_cast<size_t>(k), 0);
        for (int64_t i = 0; i < n; ++i) {
            int c = init[static_cast<size_t>(i)];
            counts[static_cast<size_t>(c)]++;
            for (int64_t j = 0; j < d; ++j)
                mean[static_cast<size_t>(c)][static_cast<size_t>(j)] +=
                    rows[static_cast<size_t>(i)][j];
        }
        for (int c = 0; c < k; ++c) {
            int64_t cnt = std::max<int64_t>(counts[static_cast<size_t>(c)], 1);
            for (int64_t j = 0; j < d; ++j)
                mean[static_cast<size_t>(c)][static_cast<size_t>(j)] /= static_cast<double>(cnt);
        }
        for (int64_t i = 0; i < n; ++i) {
            int c = init[static_cast<size_t>(i)];
            for (int64_t j = 0; j < d; ++j) {
                double diff = rows[static_cast<size_t>(i)][j] -
                              mean[static_cast<size_t>(c)][static_cast<size_t>(j)];
                var[static_cast<size_t>(c)][static_cast<size_t>(j)] += diff * diff;
            }
        }
        for (int c = 0; c < k; ++c) {
            int64_t cnt = std::max<int64_t>(counts[static_cast<size_t>(c)], 1);
            for (int64_t j = 0; j < d; ++j) {
                var[static_cast<size_t>(c)][static_cast<size_t>(j)] =
                    std::max(var[static_cast<size_t>(c)][static_cast<size_t>(j)] /
                                 static_cast<double>(cnt),
                             kVarFloor);
            }
        }
    }

    std::vector<std::vector<double>> resp(static_cast<size_t>(n),
                                          std::vector<double>(static_cast<size_t>(k), 0.0));
    double prev_ll = -std::numeric_limits<double>::infinity();
    const double log2pi = std::log(2.0 * M_PI);
    for (int iter = 0; iter < max_iter; ++iter) {
        // E step.
        double ll = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            std::vector<double> logp(static_cast<size_t>(k));
            double mx = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double lp = std::log(weight[static_cast<size_t>(c)]);
                for (int64_t j = 0; j < d; ++j) {
                    double v = var[static_cast<size_t>(c)][static_cast<size_t>(j)];
                    double diff = rows[static_cast<size_t>(i)][j] -
                                  mean[static_cast<size_t>(c)][static_cast<size_t>(j)];
                    lp -= 0.5 * (log2pi + std::log(v) + diff * diff / v);
                }
                logp[static_cast<size_t>(c)] = lp;
                mx = std::max(mx, lp);
            }
            double z = 0.0;
            for (int c = 0; c < k; ++c) z += std::exp(logp[static_cast<size_t>(c)] - mx);
            ll += mx + std::log(z);
            for (int c = 0; c < k; ++c)
                resp[static_cast<size_t>(i)][static_cast<size_t>(c)] =
                    std::exp(logp[static_cast<size_t>(c)] - mx) / z;
        }
        if (loglik_trace) loglik_trace->push_back(ll);
        if (std::fabs(ll - prev_ll) < tol) break;
        prev_ll = ll;

        // M step.
        for (int c = 0; c < k; ++c) {
            double nk = 0.0;
            for (int64_t i = 0; i < n; ++i)
                nk += resp[static_cast<size_t>(i)][static_cast<size_t>(c)];
            if (nk < 1e-12) nk = 1e-12;  // component collapse; keep it alive
            weight[static_cast<size_t>(c)] = nk / static_cast<double>(n);
            for (int64_t j = 0; j < d; ++j) {
                double m = 0.0;
                for (int64_t i = 0; i < n; ++i)
                    m += resp[static_cast<size_t>(i)][static_cast<size_t>(c)] *
                         rows[static_cast<size_t>(i)][j];
                mean[static_cast<size_t>(c)][static_cast<size_t>(j)] = m / nk;
            }
            for (int64_t j = 0; j < d; ++j) {
                double v = 0.0;
                for (int64_t i = 0; i < n; ++i) {
                    double diff = rows[static_cast<size_t>(i)][j] -
                                  mean[static_cast<size_t>(c)][static_cast<size_t>(j)];
                    v += resp[static_cast<size_t>(i)][static_cast<size_t>(c)] * diff * diff;
                }
                var[static_cast<size_t>(c)][static_cast<size_t>(j)] = std::max(v / nk, kVarFloor);
            }
        }
    }

    Labeling labels(static_cast<size_t>(n), 0);
    for (int64_t i = 0; i < n; ++i) {
        int best = 0;
        for (int c = 1; c < k; ++c)
            if (resp[static_cast<size_t>(i)][static_cast<size_t>(c)] >
                resp[static_cast<size_t>(i)][static_cast<size_t>(best)])
                best = c;
        labels[static_cast<size_t>(i)] = best;
    }
    return labels;
}

Labeling agglomerative(const Tensor& points, int k, Linkage linkage) {
    if (points.rank() != 2) throw ShapeError("agglomerative: points must be [n, d]");
    int64_t n = points.rows(), d = points.cols();
    if (k < 1 || k > n) throw DataError("agglomerative: k must be in [1, n]");
    auto rows = row_ptrs(points);

    std::vector<bool> active(static_cast<size_t>(n), true);
    std::vector<int64_t> size(static_cast<size_t>(n), 1);
    std::vector<std::vector<int64_t>> members(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) members[static_cast<size_t>(i)] = {i};

    // Dissimilarity matrix; ward works on squared Euclidean distances and is
    // updated with the Lance-Williams recurrence.
    std::vector<std::vector<double>> dist(static_cast<size_t>(n),
                                          std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = i + 1; j < n; ++j) {
            double dd = sq_dist(rows[static_cast<size_t>(i)], rows[static_cast<size_t>(j)], d);
            if (linkage != Linkage::ward) dd = std::sqrt(dd);
            dist[static_cast<size_t>(i)][static_cast<size_t>(j)] = dd;
            dist[static_cast<size_t>(j)][static_cast<size_t>(i)] = dd;
        }

    int64_t clusters = n;
    while (clusters > k) {
        int64_t bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int64_t i = 0; i < n; ++i) {
            if (!active[static_cast<size_t>(i)]) continue;
            for (int64_t j = i + 1; j < n; ++j) {
                if (!active[static_cast<size_t>(j)]) continue;
                double dd = dist[static_cast<size_t>(i)][static_cast<size_t>(j)];
                if (dd < best) {  // strict <: ties resolve to the lowest (i, j)
                    best = dd;
                    bi = i;
                    bj = j;
                }
            }
        }
        // Merge bj into bi, then update distances per linkage.
        for (int64_t m = 0; m < n; ++m) {
            if (!active[static_cast<size_t>(m)] || m == bi || m == bj) continue;
            double dim = dist[static_cast<size_t>(bi)][static_cast<size_t>(m)];
            double djm = dist[static_cast<size_t>(bj)][static_cast<size_t>(m)];
            double ni = static_cast<double>(size[static_cast<size_t>(bi)]);
            double nj = static_cast<double>(size[static_cast<size_t>(bj)]);
            double updated = 0.0;
            switch (linkage) {
                case Linkage::complete:
                    updated = std::max(dim, djm);
                    break;
                case Linkage::average:
                    updated = (ni * dim + nj * djm) / (ni + nj);
                    break;
                case Linkage::ward: {
                    double nm = static_cast<double>(size[static_cast<size_t>(m)]);
                    updated = ((ni + nm) * dim + (nj + nm) * djm - nm * best) / (ni + nj + nm);
                    break;
                }
            }
            dist[static_cast<size_t>(bi)][static_cast<size_t>(m)] = updated;
            dist[static_cast<size_t>(m)][static_cast<size_t>(bi)] = updated;
        }
        size[static_cast<size_t>(bi)] += size[static_cast<size_t>(bj)];
        auto& mi = members[static_cast<size_t>(bi)];
        auto& mj = members[static_cast<size_t>(bj)];
        mi.insert(mi.end(), mj.begin(), mj.end());
        mj.clear();
        active[static_cast<size_t>(bj)] = false;
        --clusters;
    }

    Labeling labels(static_cast<size_t>(n), 0);
    int next = 0;
    for (int64_t i = 0; i < n; ++i) {
        if (!active[static_cast<size_t>(i)]) continue;
        for (int64_t m : members[static_cast<size_t>(i)])
            labels[static_cast<size_t>(m)] = next;
        ++next;
    }
    return labels;
}

double ari(const Labeling& truth, const Labeling& pred) {
    Contingency ct = contingency(truth, pred);
    double sum_nij = 0.0;
    for (const auto& row : ct.n)
        for (int64_t nij : row) sum_nij += comb2(nij);
    double sum_a = 0.0, sum_b = 0.0;
    for (int64_t a : ct.row) sum_a += comb2(a);
    for (int64_t b : ct.col) sum_b += comb2(b);
    double pairs = comb2(ct.total);
    // Single final division keeps integer-valued cases (e.g. -1/2) exact.
    double num = pairs * sum_nij - sum_a * sum_b;
    double denom = 0.5 * pairs * (sum_a + sum_b) - sum_a * sum_b;
    if (std::fabs(denom) < 1e-15) return 1.0;  // both trivial partitions
    return num / denom;
}

double ami(const Labeling& truth, const Labeling& pred) {
    Contingency ct = contingency(truth, pred);
    // A single-cluster labeling carries no information: MI and E[MI] are both
    // exactly zero, so short-circuit before the lgamma terms add noise.
    if (ct.row.size() <= 1 || ct.col.size() <= 1) return 0.0;
    double hu = entropy_from_counts(ct.row, ct.total);
    double hv = entropy_from_counts(ct.col, ct.total);
    double mi = mutual_information(ct);
    double emi = expected_mutual_information(ct);
    double denom = 0.5 * (hu + hv) - emi;
    if (std::fabs(denom) < 1e-12) return 0.0;  // degenerate entropy convention
    return (mi - emi) / denom;
}

double v_measure(const Labeling& truth, const Labeling& pred) {
    Contingency ct = contingency(truth, pred);
    double hu = entropy_from_counts(ct.row, ct.total);
    double hv = entropy_from_counts(ct.col, ct.total);
    if (hu + hv < 1e-15) return 0.0;
    return 2.0 * mutual_information(ct) / (hu + hv);
}

double accuracy(const Labeling& truth, const Labeling& pred_classes) {
    if (truth.size() != pred_classes.size()) throw ShapeError("accuracy: size mismatch");
    if (truth.empty()) throw ShapeError("accuracy: empty input");
    int64_t correct = 0;
    for (size_t i = 0; i < truth.size(); ++i)
        if (truth[i] == pred_classes[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double roc_auc(const ScoreTable& table) {
    size_t n = table.truth.size();
    if (n != table.scores.size()) throw ShapeError("roc_auc: size mismatch");
    int64_t pos = 0, neg = 0;
    for (int t : table.truth) (t ? pos : neg)++;
    if (pos == 0 || neg == 0) throw DataError("roc_auc: both classes must be present");
    for (double s : table.scores)
        if (!std::isfinite(s)) throw NumericError("roc_auc: non-finite score");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return table.scores[a] < table.scores[b]; });
    // Midranks over tied score groups.
    std::vector<double> rank(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && table.scores[order[j + 1]] == table.scores[order[i]]) ++j;
        double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (size_t t = i; t <= j; ++t) rank[order[t]] = mid;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (size_t t = 0; t < n; ++t)
        if (table.truth[t]) rank_sum_pos += rank[t];
    double u = rank_sum_pos - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1);
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double pr_auc(const ScoreTable& table) {
    size_t n = table.truth.size();
    if (n != table.scores.size()) throw ShapeError("pr_auc: size mismatch");
    int64_t pos = 0;
    for (int t : table.truth) pos += t;
    if (pos == 0 || pos == static_cast<int64_t>(n))
        throw DataError("pr_auc: both classes must be present");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return table.scores[a] > table.scores[b]; });

    double auc = 0.0;
    int64_t tp = 0, fp = 0;
    double prev_recall = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;  // process one score threshold (tied group) at a time
        while (j + 1 < n && table.scores[order[j + 1]] == table.scores[order[i]]) ++j;
        for (size_t t = i; t <= j; ++t) (table.truth[order[t]] ? tp : fp)++;
        double recall = static_cast<double>(tp) / static_cast<double>(pos);
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        auc += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    return auc;
}

ClusterScores cluster_and_score(const Tensor& embeddings, const Labeling& truth,
                                ClusterAlgo algo, int k, uint64_t seed) {
    if (embeddings.rank() != 2) throw ShapeError("cluster_and_score: embeddings must be [n, d]");
    if (static_cast<size_t>(embeddings.rows()) != truth.size())
        throw ShapeError("cluster_and_score: truth label count mismatch");
    if (k <= 0) {
        std::set<int> distinct(truth.begin(), truth.end());
        k = static_cast<int>(distinct.size());
    }
    Labeling pred;
    switch (algo) {
        case ClusterAlgo::kmeans: pred = kmeans(embeddings, k, seed); break;
        case ClusterAlgo::gmm: pred = gmm_cluster(embeddings, k, seed); break;
        case ClusterAlgo::agglomerative: pred = agglomerative(embeddings, k); break;
    }
    return ClusterScores{ari(truth, pred), ami(truth, pred), v_measure(truth, pred)};
}

}  // namespace loglearn
