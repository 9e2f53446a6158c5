#pragma once

#include <string>
#include <vector>

#include "loglearn/config.hpp"
#include "loglearn/report.hpp"

namespace loglearn {

// Wells split into training and held-out sets, standardized with statistics
// computed on the training wells only.
struct SplitDataset {
    std::vector<WellRecord> train;
    std::vector<WellRecord> test;
    ChannelStats stats;
    std::vector<std::string> warnings;
};

SplitDataset load_split(const std::string& path, const ExperimentConfig& cfg);

// Scores a model on held-out wells: one single-seed and one
// best-of-restarts row per clustering algorithm, plus a pair-scoring row
// when the model has a similarity head.
std::vector<MetricRow> evaluate_model(const Model& model, const ExperimentConfig& cfg,
                                      const std::vector<WellRecord>& test_wells, uint64_t seed,
                                      const std::string& split_name);

MetricsReport run_pretrain(const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir);
MetricsReport run_transfer(const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir);
MetricsReport run_reverse(const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir);
std::vector<MetricsReport> run_sweep(const ExperimentConfig& cfg, uint64_t seed,
                                     const std::string& out_dir, int threads);
void run_export(const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir);
MetricsReport run_eval(const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir);

}  // namespace loglearn
