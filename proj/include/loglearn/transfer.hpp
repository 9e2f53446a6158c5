#pragma once

#include <string>
#include <vector>

#include "loglearn/losses.hpp"
#include "loglearn/models.hpp"

namespace loglearn {

// Frozen snapshot of a source-trained model (w0 is never mutated).
struct SourceAnchor {
    Model model;  // parameters flagged non-trainable

    static SourceAnchor from_model(const Model& source);
    static SourceAnchor load(const std::string& checkpoint_path);

    const ParameterSet& w0() const { return model.params(); }
};

enum class TransferMethod { scratch, fine_tune, l2sp, delta, delta_bss };

TransferMethod parse_transfer_method(const std::string& name);
std::string transfer_method_name(TransferMethod m);

struct TransferConfig {
    TransferMethod method = TransferMethod::scratch;
    double lambda = 1.0;  // balances empirical loss against the regularizer
    double alpha = 1.0;   // L2-sp weight inside the regularizer
    std::vector<std::string> delta_layers;  // empty = all encoder feature maps
    double eta = 0.001;                     // BSS weight
    int k = 1;                              // BSS: number of smallest singular values
    FreezePolicy freeze;

    void validate(int batch_size) const;
};

// alpha * ||w - w0||^2 over trainable tensors.
LossValue l2sp_penalty(const ParameterSet& w, const ParameterSet& w0, double alpha);

// Sum over selected layers of ||FM_j(target, w, x) - FM_j(source, w0, x)||^2,
// averaged over the batch. Source maps are evaluated with frozen parameters,
// so no gradient flows into the anchor.
LossValue delta_penalty(const Model& target, const SourceAnchor& anchor,
                        const std::vector<Tensor>& batch,
                        const std::vector<std::string>& layers);

// eta * sum of the squared k smallest singular values of the [b, d] batch
// feature matrix.
LossValue bss_penalty(const NodePtr& features, int k, double eta);

}  // namespace loglearn
