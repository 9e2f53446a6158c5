#include "loglearn/losses.hpp"

#include <cmath>

namespace loglearn {

namespace {

constexpr double kProbEps = 1e-7;

LossValue single(const char* name, NodePtr node) {
    LossValue lv;
    lv.components = {LossComponent{name, 1.0, node->value.item()}};
    lv.node = std::move(node);
    return lv;
}

NodePtr squared_distance(const NodePtr& a, const NodePtr& b) {
    return sum(square(sub(a, b)));
}

NodePtr clamp_probs(const NodePtr& p) { return clamp(p, kProbEps, 1.0 - kProbEps); }

}  // namespace

LossValue ae_loss(const NodePtr& x, const NodePtr& x_hat, const std::vector<bool>* mask) {
    if (!x->value.same_shape(x_hat->value)) throw ShapeError("ae_loss: shape mismatch");
    NodePtr sq = square(sub(x, x_hat));
    if (mask) {
        const Tensor& v = x->value;
        if (v.rank() != 2 || static_cast<size_t>(v.rows()) != mask->size())
            throw ShapeError("ae_loss: mask length does not match time steps");
        Tensor keep(v.shape());
        for (int64_t t = 0; t < v.rows(); ++t) {
            double kv = (*mask)[static_cast<size_t>(t)] ? 0.0 : 1.0;
            for (int64_t c = 0; c < v.cols(); ++c) keep.at(t, c) = kv;
        }
        sq = mul(sq, constant(std::move(keep)));
    }
    return single("reconstruction", sum(sq));
}

LossValue vae_kl_loss(const NodePtr& mu, const NodePtr& sigma) {
    if (!mu->value.same_shape(sigma->value)) throw ShapeError("vae_kl_loss: shape mismatch");
    for (int64_t i = 0; i < sigma->value.numel(); ++i)
        if (sigma->value[i] <= 0.0)
            throw NumericError("vae_kl_loss: sigma must be strictly positive");
    NodePtr s2 = square(sigma);
    Tensor ones(mu->value.shape());
    ones.fill(1.0);
    NodePtr term = sub(sub(add(s2, square(mu)), log_op(s2)), constant(std::move(ones)));
    return single("kl", affine(sum(term), 0.5, 0.0));
}

LossValue aae_discriminator_loss(const NodePtr& d_fake, const NodePtr& d_real) {
    if (d_fake->value.numel() != d_real->value.numel())
        throw ShapeError("aae_discriminator_loss: batch sizes differ");
    double m = static_cast<double>(d_fake->value.numel());
    NodePtr log_real = log_op(clamp_probs(d_real));
    NodePtr log_one_minus_fake = log_op(affine(clamp_probs(d_fake), -1.0, 1.0));
    NodePtr total = add(sum(log_real), sum(log_one_minus_fake));
    return single("discriminator", affine(total, -1.0 / m, 0.0));
}

LossValue aae_generator_loss(const NodePtr& d_fake) {
    double m = static_cast<double>(d_fake->value.numel());
    return single("generator", affine(sum(log_op(clamp_probs(d_fake))), -1.0 / m, 0.0));
}

LossValue ar_loss(const NodePtr& predicted, const NodePtr& actual) {
    if (!predicted->value.same_shape(actual->value)) throw ShapeError("ar_loss: shape mismatch");
    return single("autoregressive", mean(square(sub(predicted, actual))));
}

LossValue contrastive_pair_loss(const NodePtr& z_i, const NodePtr& z_j, int same,
                                const Margin& margin) {
    if (same != 0 && same != 1) throw ConfigError("contrastive_pair_loss: label must be 0 or 1");
    if (margin.epsilon <= 0.0) throw ConfigError("contrastive_pair_loss: margin must be > 0");
    NodePtr d2 = squared_distance(z_i, z_j);
    NodePtr loss = same == 1 ? d2 : relu(affine(d2, -1.0, margin.epsilon));
    return single("contrastive", std::move(loss));
}

LossValue triplet_loss(const NodePtr& z_a, const NodePtr& z_p, const NodePtr& z_n,
                       const Margin& margin) {
    if (margin.epsilon <= 0.0) throw ConfigError("triplet_loss: margin must be > 0");
    NodePtr dp2 = squared_distance(z_a, z_p);
    NodePtr dn2 = squared_distance(z_a, z_n);
    return single("triplet", relu(affine(sub(dp2, dn2), 1.0, margin.epsilon)));
}

LossValue classification_aux_loss(const NodePtr& probs, int true_label) {
    if (probs->value.rank() != 1) throw ShapeError("classification_aux_loss: probs must be rank 1");
    if (true_label < 0 || true_label >= probs->value.numel())
        throw ConfigError("classification_aux_loss: label out of range");
    NodePtr p = clamp_probs(slice(probs, true_label, true_label + 1));
    return single("classification", affine(sum(log_op(p)), -1.0, 0.0));
}

LossValue combine(const LossValue& main,
                  const std::vector<std::pair<double, LossValue>>& auxiliaries) {
    if (auxiliaries.empty()) return main;
    LossValue out;
    out.components = main.components;
    out.node = main.node;
    for (const auto& [weight, aux] : auxiliaries) {
        out.node = add(out.node, affine(aux.node, weight, 0.0));
        for (const auto& c : aux.components)
            out.components.push_back(LossComponent{c.name, weight * c.weight, c.value});
    }
    return out;
}

}  // namespace loglearn
