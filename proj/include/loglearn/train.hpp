#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "loglearn/data.hpp"
#include "loglearn/losses.hpp"
#include "loglearn/models.hpp"
#include "loglearn/transfer.hpp"

namespace loglearn {

enum class Objective { ae, vae, aae, ar, triplet, siamese };

Objective parse_objective(const std::string& name);
std::string objective_name(Objective o);

// Everything a training run may consume. Interval objectives read
// `intervals` (plus `next_values` when an autoregressive term is on);
// siamese reads `pairs`; triplet reads `triplets`. `well_class` backs the
// classification auxiliary.
struct TrainingData {
    std::vector<IntervalSample> intervals;
    std::vector<Tensor> next_values;
    std::map<std::string, int> well_class;
    std::vector<IntervalPair> pairs;
    std::vector<IntervalTriplet> triplets;
};

struct AugmentOptions {
    bool noise = false;
    double noise_sigma = 0.05;
    bool mask = false;
    double mask_p = 0.1;
};

struct TrainSettings {
    Objective objective = Objective::ae;
    int epochs = 35;
    double lr = 0.001;
    int batch_size = 16;
    std::vector<int> lr_decay_epochs;  // 1-based; lr *= factor entering these
    double lr_decay_factor = 0.1;
    double margin = 1.0;
    double kl_weight = 1.0;
    double adversarial_weight = 1.0;  // generator term in the AAE encoder step
    double aux_class_weight = 0.0;
    double aux_ar_weight = 0.0;
    AugmentOptions augment;
    bool hard_negatives = false;
    uint64_t seed = 0;
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double total = 0.0;  // batch-averaged combined loss
    std::vector<LossComponent> components;
};

struct TrainResult {
    std::vector<EpochLog> epochs;
    bool aborted = false;
    std::string abort_reason;
};

// Self-supervised pretraining (no anchor, no penalty).
TrainResult train_model(Model& model, const TrainingData& data, const TrainSettings& settings);

// Regularized fine-tuning. Methods other than scratch start from the anchor
// weights; the freeze policy is applied before training. A non-finite loss
// aborts the run and returns the epochs completed so far.
TrainResult transfer_fit(Model& target, const TrainingData& data, const SourceAnchor* anchor,
                         const TransferConfig& config, const TrainSettings& settings);

}  // namespace loglearn
