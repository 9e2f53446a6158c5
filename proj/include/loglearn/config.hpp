#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loglearn/data.hpp"
#include "loglearn/eval.hpp"
#include "loglearn/models.hpp"
#include "loglearn/train.hpp"
#include "loglearn/transfer.hpp"

namespace loglearn {

// Dotted-key -> value view of a config file. Both the sectioned key = value
// format and JSON flatten into this.
using FlatConfig = std::map<std::string, std::string>;

FlatConfig parse_config_text(const std::string& text);
FlatConfig parse_config_file(const std::string& path);

enum class EvalTarget { geographical, formation, formation_class, rock_type };

EvalTarget parse_eval_target(const std::string& name);
std::string eval_target_name(EvalTarget t);

struct EvalRecipe {
    EvalTarget target = EvalTarget::formation;
    std::vector<ClusterAlgo> algorithms = {ClusterAlgo::kmeans, ClusterAlgo::gmm};
    int k = 0;           // 0 = number of distinct truth labels
    int restarts = 5;    // for the best-of-restarts row
    int geo_k = 5;       // clusters for the geographical target
    int n_intervals = 256;  // evaluation intervals drawn from held-out wells
    int n_pairs = 200;      // pair-scoring table when a similarity head exists
};

struct SweepAxis {
    std::string key;  // flat config key the axis overrides
    std::vector<std::string> values;
};

struct ExperimentConfig {
    std::string data_path;
    std::string source_path;  // source-domain table, for reverse validation
    ColumnSchema schema;

    int test_wells = 10;     // held out per formation when 25% reaches it
    int wells_used = 0;      // cap on training wells; 0 = all
    int64_t interval_len = 100;
    int64_t n_samples = 512;  // intervals / pairs / triplets drawn for training
    PairingRule pairing;

    ModelSpec model;
    TrainSettings train;        // epochs default 35, lr per objective
    TrainSettings transfer_train;  // epochs default 15
    std::optional<TransferConfig> transfer;
    std::string anchor_path;    // checkpoint of the source model
    std::string checkpoint_path;  // for export / eval subcommands

    EvalRecipe eval;
    std::vector<SweepAxis> sweep_axes;

    FlatConfig flat;  // the raw keys, kept for sweeps and hashing

    static ExperimentConfig from_flat(const FlatConfig& flat);
    static ExperimentConfig from_file(const std::string& path);
};

// FNV-1a over the canonical sorted key=value serialization; whitespace and
// key order in the source file do not affect it.
uint64_t config_hash(const FlatConfig& flat);

}  // namespace loglearn
