#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loglearn/params.hpp"

namespace loglearn {

enum class EncoderKind { recurrent, conv1d };

// Encoder/head architecture description. Heads are opt-in; vae implies
// decoder.
struct ModelSpec {
    EncoderKind encoder = EncoderKind::recurrent;
    int embedding_dim = 16;
    int hidden = 32;
    int interval_len = 100;
    int channels = 4;

    bool decoder = false;
    bool vae = false;
    bool discriminator = false;
    bool similarity = false;
    int ar_horizon = 0;  // 0 = no autoregressive head
    int classes = 0;     // 0 = no classifier head

    void validate() const;

    // Plain "key = value" sidecar text so checkpoints are self-describing.
    std::string to_text() const;
    static ModelSpec from_text(const std::string& text);
};

// Named intermediate activations, for the feature-map (Delta) penalty.
struct FeatureMaps {
    std::vector<std::pair<std::string, NodePtr>> maps;
    NodePtr find(const std::string& name) const;
};

struct VaeDraw {
    Tensor z, mu, sigma;
};

// A model instance: spec plus its parameters as graph leaves. Inference
// entry points are pure functions of (params, input).
class Model {
public:
    static Model init(const ModelSpec& spec, uint64_t seed);

    const ModelSpec& spec() const { return spec_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    // Graph builders (used during training; gradients flow into params).
    NodePtr encode_node(const NodePtr& x, FeatureMaps* fm = nullptr) const;
    NodePtr decode_node(const NodePtr& z) const;
    // mu / sigma heads plus the reparameterized z = mu + sigma * eps.
    void vae_nodes(const NodePtr& x, const Tensor& eps, NodePtr* z, NodePtr* mu,
                   NodePtr* sigma, FeatureMaps* fm = nullptr) const;
    NodePtr discriminate_node(const NodePtr& z) const;
    NodePtr predict_next_node(const NodePtr& z) const;
    NodePtr classify_node(const NodePtr& z) const;
    NodePtr similarity_node(const NodePtr& za, const NodePtr& zb) const;

    // Tensor-level inference.
    Tensor encode(const Tensor& sample) const;  // VAE: returns the mean mu(x)
    Tensor decode(const Tensor& z) const;
    VaeDraw vae_sample(const Tensor& sample, uint64_t seed) const;
    Tensor discriminate(const Tensor& z) const;
    Tensor predict_next(const Tensor& sample, int h) const;
    Tensor classify(const Tensor& z) const;
    double similarity(const Tensor& a, const Tensor& b) const;

    // Names accepted by the Delta layer set.
    std::vector<std::string> feature_map_layers() const;

    void save(const std::string& checkpoint_path) const;
    static Model load(const std::string& checkpoint_path);

private:
    Model() = default;
    NodePtr input_node(const Tensor& sample) const;
    NodePtr embed_raw(const NodePtr& x, FeatureMaps* fm) const;  // pre-VAE embedding

    ModelSpec spec_;
    ParameterSet params_;
};

struct FreezePolicy {
    bool none = true;
    int lower_k = 0;
};

// policy none -> all trainable; lower_k(k) -> first k layer groups frozen.
void freeze_layers(ParameterSet& params, const FreezePolicy& policy);

}  // namespace loglearn
