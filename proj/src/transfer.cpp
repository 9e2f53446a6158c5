#include "loglearn/transfer.hpp"

#include <algorithm>

namespace loglearn {

SourceAnchor SourceAnchor::from_model(const Model& source) {
    SourceAnchor a{Model::init(source.spec(), 0)};
    a.model.params().assign_values(source.params());
    a.model.params().freeze_lower(a.model.params().num_groups());
    return a;
}

SourceAnchor SourceAnchor::load(const std::string& checkpoint_path) {
    return from_model(Model::load(checkpoint_path));
}

TransferMethod parse_transfer_method(const std::string& name) {
    if (name == "scratch") return TransferMethod::scratch;
    if (name == "fine_tune") return TransferMethod::fine_tune;
    if (name == "l2sp") return TransferMethod::l2sp;
    if (name == "delta") return TransferMethod::delta;
    if (name == "delta_bss") return TransferMethod::delta_bss;
    throw ConfigError("unknown transfer method: " + name);
}

std::string transfer_method_name(TransferMethod m) {
    switch (m) {
        case TransferMethod::scratch: return "scratch";
        case TransferMethod::fine_tune: return "fine_tune";
        case TransferMethod::l2sp: return "l2sp";
        case TransferMethod::delta: return "delta";
        case TransferMethod::delta_bss: return "delta_bss";
    }
    return "?";
}

void TransferConfig::validate(int batch_size) const {
    if (lambda < 0.0 || alpha < 0.0 || eta < 0.0)
        throw ConfigError("transfer config: weights must be >= 0");
    if (method == TransferMethod::delta_bss && (k < 1 || k > batch_size))
        throw ConfigError("transfer config: BSS k must satisfy 1 <= k <= batch size");
}

LossValue l2sp_penalty(const ParameterSet& w, const ParameterSet& w0, double alpha) {
    if (alpha < 0.0) throw ConfigError("l2sp_penalty: alpha must be >= 0");
    NodePtr acc = constant(Tensor::scalar(0.0));
    for (const auto& e : w.entries()) {
        if (!e.trainable) continue;  // frozen tensors sit at w0 by construction
        const ParamEntry* ref = w0.find(e.name);
        if (!ref) throw ConfigError("l2sp_penalty: anchor lacks parameter " + e.name);
        acc = add(acc, sum(square(sub(e.node, constant(ref->node->value)))));
    }
    NodePtr node = affine(acc, alpha, 0.0);
    LossValue lv;
    lv.components = {LossComponent{"l2sp", 1.0, node->value.item()}};
    lv.node = std::move(node);
    return lv;
}

LossValue delta_penalty(const Model& target, const SourceAnchor& anchor,
                        const std::vector<Tensor>& batch,
                        const std::vector<std::string>& layers) {
    if (batch.empty()) throw ConfigError("delta_penalty: empty batch");
    auto available = target.feature_map_layers();
    for (const auto& name : layers)
        if (std::find(available.begin(), available.end(), name) == available.end())
            throw ConfigError("delta_penalty: unknown layer \"" + name + "\"");

    NodePtr acc = constant(Tensor::scalar(0.0));
    for (const Tensor& x : batch) {
        FeatureMaps fm_target, fm_source;
        target.encode_node(constant(x), &fm_target);
        anchor.model.encode_node(constant(x), &fm_source);
        for (const auto& name : layers) {
            NodePtr t = fm_target.find(name);
            NodePtr s = fm_source.find(name);
            if (!t || !s) throw ConfigError("delta_penalty: layer \"" + name + "\" not produced");
            acc = add(acc, sum(square(sub(t, s))));
        }
    }
    NodePtr node = affine(acc, 1.0 / static_cast<double>(batch.size()), 0.0);
    LossValue lv;
    lv.components = {LossComponent{"delta", 1.0, node->value.item()}};
    lv.node = std::move(node);
    return lv;
}

LossValue bss_penalty(const NodePtr& features, int k, double eta) {
    NodePtr node = bss_penalty_node(features, k, eta);
    LossValue lv;
    lv.components = {LossComponent{"bss", 1.0, node->value.item()}};
    lv.node = std::move(node);
    return lv;
}

}  // namespace loglearn
