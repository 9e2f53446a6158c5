#include "loglearn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "loglearn/rng.hpp"

namespace loglearn {

namespace {

struct ComponentTally {
    std::map<std::string, std::pair<double, int>> sums;  // name -> (sum, count)
    std::map<std::string, double> weights;

    void add(const std::vector<LossComponent>& cs) {
        for (const auto& c : cs) {
            auto& slot = sums[c.name];
            slot.first += c.value;
            slot.second += 1;
            weights[c.name] = c.weight;
        }
    }
    std::vector<LossComponent> averaged() const {
        std::vector<LossComponent> out;
        for (const auto& [name, sc] : sums)
            out.push_back(LossComponent{name, weights.at(name), sc.first / sc.second});
        return out;
    }
};

// Noise then mask, each drawing its own child seed. The mask (when any) is
// handed back so reconstruction losses can skip masked steps.
IntervalSample apply_augment(const IntervalSample& s, const AugmentOptions& opts,
                             std::mt19937_64& rng, std::vector<bool>* mask_out) {
    IntervalSample cur = s;
    if (opts.noise) cur = augment_noise(cur, opts.noise_sigma, rng());
    if (opts.mask) {
        auto [masked, mask] = augment_mask(cur, opts.mask_p, rng());
        cur = std::move(masked);
        if (mask_out) *mask_out = std::move(mask);
    }
    return cur;
}

LossValue bce_loss(const NodePtr& p, int label) {
    NodePtr loss = label == 1 ? affine(sum(log_op(p)), -1.0, 0.0)
                              : affine(sum(log_op(affine(p, -1.0, 1.0))), -1.0, 0.0);
    LossValue lv;
    lv.components = {LossComponent{"pair_bce", 1.0, loss->value.item()}};
    lv.node = std::move(loss);
    return lv;
}

int class_of(const TrainingData& data, const std::string& well_id) {
    auto it = data.well_class.find(well_id);
    if (it == data.well_class.end())
        throw DataError("training: no class label for well " + well_id);
    return it->second;
}

Tensor draw_normal(int64_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor t({n});
    for (int64_t i = 0; i < n; ++i) t[i] = normal(rng);
    return t;
}

GradientMap filter_grads(GradientMap grads, bool keep_disc) {
    for (auto it = grads.begin(); it != grads.end();) {
        bool is_disc = it->first.rfind("disc.", 0) == 0;
        if (is_disc != keep_disc)
            it = grads.erase(it);
        else
            ++it;
    }
    return grads;
}

void check_inputs(const Model& model, const TrainingData& data, const TrainSettings& s) {
    const ModelSpec& spec = model.spec();
    switch (s.objective) {
        case Objective::ae:
        case Objective::vae:
        case Objective::aae:
            if (data.intervals.empty()) throw DataError("training: no intervals sampled");
            if (!spec.decoder) throw ConfigError("training: objective needs a decoder head");
            if (s.objective == Objective::vae && !spec.vae)
                throw ConfigError("training: vae objective needs the vae heads");
            if (s.objective == Objective::aae && !spec.discriminator)
                throw ConfigError("training: aae objective needs a discriminator");
            break;
        case Objective::ar:
            if (data.intervals.empty()) throw DataError("training: no intervals sampled");
            if (spec.ar_horizon <= 0)
                throw ConfigError("training: ar objective needs ar_horizon > 0");
            if (data.next_values.size() != data.intervals.size())
                throw DataError("training: next-step targets missing for ar objective");
            break;
        case Objective::triplet:
            if (data.triplets.empty()) throw DataError("training: no triplets sampled");
            break;
        case Objective::siamese:
            if (data.pairs.empty()) throw DataError("training: no pairs sampled");
            if (!spec.similarity) throw ConfigError("training: siamese needs the similarity head");
            break;
    }
    if (s.aux_class_weight > 0.0) {
        if (spec.classes <= 0) throw ConfigError("training: classifier aux needs classes > 0");
        if (data.well_class.empty()) throw DataError("training: classifier aux needs well classes");
    }
    if (s.aux_ar_weight > 0.0) {
        if (s.objective == Objective::ar)
            throw ConfigError("training: ar auxiliary is redundant under the ar objective");
        if (s.objective == Objective::triplet || s.objective == Objective::siamese)
            throw ConfigError("training: ar auxiliary needs interval targets (generative objectives only)");
        if (spec.ar_horizon <= 0) throw ConfigError("training: ar auxiliary needs ar_horizon > 0");
        if (data.next_values.size() != data.intervals.size())
            throw DataError("training: next-step targets missing for ar auxiliary");
    }
    if (s.epochs < 0 || s.batch_size < 1) throw ConfigError("training: bad epochs/batch size");
    if (s.lr <= 0.0) throw ConfigError("training: learning rate must be > 0");
    if (s.augment.noise && s.augment.noise_sigma < 0.0)
        throw ConfigError("training: noise sigma must be >= 0");
    if (s.augment.mask && (s.augment.mask_p < 0.0 || s.augment.mask_p >= 1.0))
        throw ConfigError("training: mask probability must be in [0, 1)");
    if (s.hard_negatives && s.objective != Objective::triplet)
        throw ConfigError("training: hard-negative mining applies to the triplet objective");
}

size_t unit_count(const TrainingData& data, Objective o) {
    if (o == Objective::triplet) return data.triplets.size();
    if (o == Objective::siamese) return data.pairs.size();
    return data.intervals.size();
}

struct PenaltyContext {
    const SourceAnchor* anchor = nullptr;
    const TransferConfig* config = nullptr;
};

// Builds, evaluates and applies one SGD step for a batch of sample indices.
// Returns the batch's combined loss value.
double run_batch(Model& model, const TrainingData& data, const TrainSettings& s,
                 const std::vector<size_t>& batch, std::mt19937_64& rng, double lr,
                 const PenaltyContext& pen, ComponentTally& tally) {
    const bool aae = s.objective == Objective::aae;
    const int d = model.spec().embedding_dim;

    // AAE trains the discriminator first, on detached embeddings vs prior
    // draws, touching only disc.* parameters.
    if (aae) {
        std::vector<NodePtr> fake, real;
        auto probe = rng;  // copy so the main stream is untouched by this step
        for (size_t idx : batch) {
            IntervalSample aug = apply_augment(data.intervals[idx], s.augment, probe, nullptr);
            fake.push_back(model.discriminate_node(constant(model.encode(aug.values))));
            real.push_back(model.discriminate_node(constant(draw_normal(d, probe))));
        }
        LossValue d_loss = aae_discriminator_loss(concat(fake), concat(real));
        tally.add(d_loss.components);
        sgd_step(model.params(), filter_grads(backward(d_loss.node, model.params()), true), lr);
    }

    std::vector<LossValue> parts;
    std::vector<NodePtr> embeddings;   // one per sample, for BSS
    std::vector<Tensor> probe_inputs;  // raw main inputs, for Delta
    std::vector<std::string> sample_wells;

    // Triplet batches are built in two passes so batch-hardest negatives can
    // be selected across the whole batch.
    if (s.objective == Objective::triplet) {
        std::vector<NodePtr> za, zp, zn;
        for (size_t idx : batch) {
            const IntervalTriplet& t = data.triplets[idx];
            IntervalSample a = apply_augment(t.anchor, s.augment, rng, nullptr);
            IntervalSample p = apply_augment(t.positive, s.augment, rng, nullptr);
            IntervalSample n = apply_augment(t.negative, s.augment, rng, nullptr);
            za.push_back(model.encode_node(constant(a.values)));
            zp.push_back(model.encode_node(constant(p.values)));
            zn.push_back(model.encode_node(constant(n.values)));
            probe_inputs.push_back(t.anchor.values);
            sample_wells.push_back(t.anchor.well_id);
        }
        for (size_t i = 0; i < za.size(); ++i) {
            size_t pick = i;
            if (s.hard_negatives) {
                double best = std::numeric_limits<double>::infinity();
                for (size_t j = 0; j < zn.size(); ++j) {
                    double dist = 0.0;
                    for (int64_t e = 0; e < d; ++e) {
                        double diff = za[i]->value[e] - zn[j]->value[e];
                        dist += diff * diff;
                    }
                    if (dist < best) {
                        best = dist;
                        pick = j;
                    }
                }
            }
            parts.push_back(triplet_loss(za[i], zp[i], zn[pick], Margin{s.margin}));
            embeddings.push_back(za[i]);
        }
    } else if (s.objective == Objective::siamese) {
        for (size_t idx : batch) {
            const IntervalPair& pr = data.pairs[idx];
            IntervalSample a = apply_augment(pr.a, s.augment, rng, nullptr);
            IntervalSample b = apply_augment(pr.b, s.augment, rng, nullptr);
            NodePtr za = model.encode_node(constant(a.values));
            NodePtr zb = model.encode_node(constant(b.values));
            parts.push_back(bce_loss(model.similarity_node(za, zb), pr.label));
            embeddings.push_back(za);
            probe_inputs.push_back(pr.a.values);
            sample_wells.push_back(pr.a.well_id);
        }
    } else {
        for (size_t idx : batch) {
            const IntervalSample& raw = data.intervals[idx];
            std::vector<bool> mask;
            IntervalSample aug = apply_augment(raw, s.augment, rng, &mask);
            NodePtr x_in = constant(aug.values);
            NodePtr x_target = constant(raw.values);
            const std::vector<bool>* mask_ptr = mask.empty() ? nullptr : &mask;

            NodePtr z;
            LossValue lv;
            if (s.objective == Objective::vae) {
                NodePtr mu, sigma;
                model.vae_nodes(x_in, draw_normal(d, rng), &z, &mu, &sigma);
                lv = combine(ae_loss(x_target, model.decode_node(z), mask_ptr),
                             {{s.kl_weight, vae_kl_loss(mu, sigma)}});
            } else if (s.objective == Objective::ar) {
                z = model.encode_node(x_in);
                lv = ar_loss(model.predict_next_node(z), constant(data.next_values[idx]));
            } else {  // ae and the aae encoder step share the reconstruction
                z = model.encode_node(x_in);
                lv = ae_loss(x_target, model.decode_node(z), mask_ptr);
            }
            if (s.aux_ar_weight > 0.0)
                lv = combine(lv, {{s.aux_ar_weight,
                                   ar_loss(model.predict_next_node(z),
                                           constant(data.next_values[idx]))}});
            parts.push_back(std::move(lv));
            embeddings.push_back(z);
            probe_inputs.push_back(raw.values);
            sample_wells.push_back(raw.well_id);
        }
    }

    if (s.aux_class_weight > 0.0)
        for (size_t i = 0; i < parts.size(); ++i)
            parts[i] = combine(parts[i],
                               {{s.aux_class_weight,
                                 classification_aux_loss(model.classify_node(embeddings[i]),
                                                         class_of(data, sample_wells[i]))}});

    NodePtr acc = constant(Tensor::scalar(0.0));
    for (const auto& p : parts) {
        acc = add(acc, p.node);
        tally.add(p.components);
    }
    NodePtr total = affine(acc, 1.0 / static_cast<double>(parts.size()), 0.0);

    if (aae) {
        LossValue g = aae_generator_loss(concat([&] {
            std::vector<NodePtr> fake;
            for (const auto& z : embeddings) fake.push_back(model.discriminate_node(z));
            return fake;
        }()));
        total = add(total, affine(g.node, s.adversarial_weight, 0.0));
        tally.add({LossComponent{"generator", s.adversarial_weight, g.scalar()}});
    }

    if (pen.config) {
        const TransferConfig& tc = *pen.config;
        if (tc.method == TransferMethod::l2sp) {
            LossValue p = l2sp_penalty(model.params(), pen.anchor->w0(), tc.alpha);
            total = add(total, affine(p.node, tc.lambda, 0.0));
            tally.add({LossComponent{"l2sp", tc.lambda, p.scalar()}});
        } else if (tc.method == TransferMethod::delta || tc.method == TransferMethod::delta_bss) {
            std::vector<std::string> layers =
                tc.delta_layers.empty() ? model.feature_map_layers() : tc.delta_layers;
            LossValue p = delta_penalty(model, *pen.anchor, probe_inputs, layers);
            total = add(total, affine(p.node, tc.lambda, 0.0));
            tally.add({LossComponent{"delta", tc.lambda, p.scalar()}});
            if (tc.method == TransferMethod::delta_bss) {
                std::vector<NodePtr> rows;
                for (const auto& z : embeddings) rows.push_back(reshape(z, {1, d}));
                NodePtr f = concat(rows);
                // the final partial batch may be smaller than k
                int kk = std::min<int>(tc.k, static_cast<int>(rows.size()));
                LossValue b = bss_penalty(f, kk, tc.eta);
                total = add(total, b.node);
                tally.add({LossComponent{"bss", 1.0, b.scalar()}});
            }
        }
    }

    double value = total->value.item();
    GradientMap grads = backward(total, model.params());
    if (aae) grads = filter_grads(std::move(grads), false);
    sgd_step(model.params(), grads, lr);
    return value;
}

TrainResult train_loop(Model& model, const TrainingData& data, const TrainSettings& s,
                       const PenaltyContext& pen) {
    check_inputs(model, data, s);
    TrainResult result;
    auto rng = make_rng(s.seed);
    size_t n = unit_count(data, s.objective);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    double lr = s.lr;

    for (int epoch = 1; epoch <= s.epochs; ++epoch) {
        if (std::find(s.lr_decay_epochs.begin(), s.lr_decay_epochs.end(), epoch) !=
            s.lr_decay_epochs.end())
            lr *= s.lr_decay_factor;
        std::shuffle(order.begin(), order.end(), rng);

        ComponentTally tally;
        double total_sum = 0.0;
        int batches = 0;
        try {
            for (size_t off = 0; off < n; off += static_cast<size_t>(s.batch_size)) {
                size_t end = std::min(n, off + static_cast<size_t>(s.batch_size));
                std::vector<size_t> batch(order.begin() + off, order.begin() + end);
                total_sum += run_batch(model, data, s, batch, rng, lr, pen, tally);
                ++batches;
            }
        } catch (const NumericError& e) {
            result.aborted = true;
            result.abort_reason = e.what();
            return result;
        }

        EpochLog log;
        log.epoch = epoch;
        log.lr = lr;
        log.total = batches > 0 ? total_sum / batches : 0.0;
        log.components = tally.averaged();
        result.epochs.push_back(std::move(log));
    }
    return result;
}

}  // namespace

Objective parse_objective(const std::string& name) {
    if (name == "ae") return Objective::ae;
    if (name == "vae") return Objective::vae;
    if (name == "aae") return Objective::aae;
    if (name == "ar") return Objective::ar;
    if (name == "triplet") return Objective::triplet;
    if (name == "siamese") return Objective::siamese;
    throw ConfigError("unknown objective: " + name);
}

std::string objective_name(Objective o) {
    switch (o) {
        case Objective::ae: return "ae";
        case Objective::vae: return "vae";
        case Objective::aae: return "aae";
        case Objective::ar: return "ar";
        case Objective::triplet: return "triplet";
        case Objective::siamese: return "siamese";
    }
    return "?";
}

TrainResult train_model(Model& model, const TrainingData& data, const TrainSettings& settings) {
    return train_loop(model, data, settings, PenaltyContext{});
}

TrainResult transfer_fit(Model& target, const TrainingData& data, const SourceAnchor* anchor,
                         const TransferConfig& config, const TrainSettings& settings) {
    config.validate(settings.batch_size);
    PenaltyContext pen;
    if (config.method != TransferMethod::scratch) {
        if (!anchor) throw ConfigError("transfer: method needs a source anchor");
        if (anchor->model.spec().to_text() != target.spec().to_text())
            throw ConfigError("transfer: anchor spec does not match the target model");
        target.params().assign_values(anchor->w0());
        pen.anchor = anchor;
        if (config.method != TransferMethod::fine_tune) pen.config = &config;
    }
    freeze_layers(target.params(), config.freeze);
    TrainResult r = train_loop(target, data, settings, pen);
    target.params().unfreeze_all();
    return r;
}

}  // namespace loglearn
