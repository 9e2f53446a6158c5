#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loglearn/autodiff.hpp"

namespace loglearn {

// Gradients keyed by parameter name; keys are exactly the trainable
// parameters (unreachable ones map to zero tensors).
using GradientMap = std::map<std::string, Tensor>;

struct ParamEntry {
    std::string name;
    int layer_group = 0;  // lower -> upper ordering; used by freeze policies
    bool trainable = true;
    NodePtr node;
};

// Named, layer-grouped trainable tensors. Entries keep insertion order,
// which is the lower-to-upper layer order and the checkpoint order.
class ParameterSet {
public:
    NodePtr add(const std::string& name, int layer_group, Tensor init, bool trainable = true);

    const std::vector<ParamEntry>& entries() const { return entries_; }
    std::vector<ParamEntry>& entries() { return entries_; }

    const ParamEntry* find(const std::string& name) const;
    ParamEntry* find(const std::string& name);

    int num_groups() const;

    // freeze_layers: policy lower_k(k) freezes the first k layer groups.
    void freeze_lower(int k);
    void unfreeze_all();

    // Deep copy; `as_frozen` marks every entry non-trainable (source anchors).
    ParameterSet clone(bool as_frozen = false) const;

    // Copies values from `other` by name; shapes must match.
    void assign_values(const ParameterSet& other);

    // Squared L2 distance to another set over trainable entries.
    double squared_distance(const ParameterSet& other) const;

private:
    std::vector<ParamEntry> entries_;
};

// Reverse pass returning d(root)/d(param) for every trainable parameter.
GradientMap backward(const NodePtr& root, const ParameterSet& trainable);

// params' = params - lr * grads, elementwise. Refuses the whole step (throws
// NumericError) if any gradient is non-finite.
void sgd_step(ParameterSet& params, const GradientMap& grads, double lr);

// Flat binary checkpoint: magic "LLCK", u32 version, u32 tensor count, then
// per tensor: u32 name length, UTF-8 name, u32 rank, u64 dims, LE f64 values.
void save_checkpoint(const std::string& path, const ParameterSet& params);
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path);
// Loads by name into an already-built structure; shapes must match exactly.
void load_checkpoint(const std::string& path, ParameterSet& params);

}  // namespace loglearn
