#pragma once

#include <string>
#include <vector>

#include "loglearn/autodiff.hpp"

namespace loglearn {

struct LossComponent {
    std::string name;
    double weight = 1.0;
    double value = 0.0;
};

// A differentiable scalar with its named, weighted sub-losses preserved for
// reporting. scalar() == sum(weight_i * value_i) within 1e-12.
struct LossValue {
    NodePtr node;
    std::vector<LossComponent> components;
    double scalar() const { return node->value.item(); }
};

struct Margin {
    double epsilon = 1.0;
};

// Squared reconstruction error, summed over entries. With a per-time-step
// mask, masked steps are excluded (all-masked input gives 0 with zero
// gradient).
LossValue ae_loss(const NodePtr& x, const NodePtr& x_hat,
                  const std::vector<bool>* mask = nullptr);

// 0.5 * sum(sigma^2 + mu^2 - log sigma^2 - 1); KL to the standard normal.
LossValue vae_kl_loss(const NodePtr& mu, const NodePtr& sigma);

// -(1/m) * sum[log D(z') + log(1 - D(z))] over probability vectors.
LossValue aae_discriminator_loss(const NodePtr& d_fake, const NodePtr& d_real);

// -(1/m) * sum log D(z).
LossValue aae_generator_loss(const NodePtr& d_fake);

// Mean squared error over the h-step horizon.
LossValue ar_loss(const NodePtr& predicted, const NodePtr& actual);

// same=1: squared embedding distance; same=0: max(0, eps - distance^2).
LossValue contrastive_pair_loss(const NodePtr& z_i, const NodePtr& z_j, int same,
                                const Margin& margin);

// max(0, d(a,p)^2 - d(a,n)^2 + eps).
LossValue triplet_loss(const NodePtr& z_a, const NodePtr& z_p, const NodePtr& z_n,
                       const Margin& margin);

// Cross-entropy: -log prob[true_label].
LossValue classification_aux_loss(const NodePtr& probs, int true_label);

// Weighted sum; components of every input are preserved.
LossValue combine(const LossValue& main,
                  const std::vector<std::pair<double, LossValue>>& auxiliaries);

}  // namespace loglearn
