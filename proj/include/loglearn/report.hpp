#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loglearn/train.hpp"

namespace loglearn {

// One scored evaluation. NaN marks a metric that does not apply to the row
// and prints as an empty CSV field.
struct MetricRow {
    std::string split;      // validation / source_pre / source_post
    std::string target;     // label target the truth column came from
    std::string algorithm;  // kmeans / gmm / agglomerative / pair_scores
    std::string mode;       // single / best_of_restarts
    double ari, ami, v, accuracy, roc_auc, pr_auc;

    MetricRow();
};

struct MetricsReport {
    std::string run_id;
    uint64_t config_hash = 0;
    uint64_t seed = 0;
    std::string objective;
    std::string method;  // transfer method, empty for pretraining
    std::vector<EpochLog> epochs;
    std::vector<MetricRow> rows;
    std::string checkpoint_path;
    bool aborted = false;
    std::string abort_reason;
    double wall_clock_seconds = 0.0;  // goes to timing.txt only
};

// Round-trip-exact decimal form of a double ("%.17g").
std::string format_double(double v);

// Emits report.csv, epochs.csv and summary.txt, all byte-deterministic for a
// fixed (config, seed, build). Wall clock lands in a separate timing.txt so
// the deterministic files never differ between identical runs.
void write_report(const MetricsReport& report, const std::string& dir);

void append_summary_csv(const std::string& path, const std::vector<MetricsReport>& children,
                        const std::vector<std::string>& axis_keys,
                        const std::vector<std::vector<std::string>>& axis_values);

}  // namespace loglearn
