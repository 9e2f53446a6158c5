#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "loglearn/losses.hpp"
#include "loglearn/models.hpp"
#include "loglearn/rng.hpp"

using namespace loglearn;
using testutil::random_tensor;

namespace {

ModelSpec tiny_spec(EncoderKind enc) {
    ModelSpec s;
    s.encoder = enc;
    s.embedding_dim = 4;
    s.hidden = 6;
    s.interval_len = 30;
    s.channels = 4;
    s.decoder = true;
    s.vae = true;
    s.discriminator = true;
    s.similarity = true;
    s.ar_horizon = 3;
    s.classes = 2;
    return s;
}

std::string temp_path(const char* stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

}  // namespace

TEST_CASE("inference shapes for both encoders") {
    auto rng = make_rng(51);
    for (EncoderKind enc : {EncoderKind::recurrent, EncoderKind::conv1d}) {
        Model m = Model::init(tiny_spec(enc), 3);
        Tensor x = random_tensor({30, 4}, rng);

        Tensor z = m.encode(x);
        REQUIRE(z.shape() == std::vector<int64_t>{4});
        Tensor recon = m.decode(z);
        REQUIRE(recon.shape() == (std::vector<int64_t>{30, 4}));
        Tensor next = m.predict_next(x, 3);
        REQUIRE(next.shape() == (std::vector<int64_t>{3, 4}));

        Tensor probs = m.classify(z);
        REQUIRE(probs.shape() == std::vector<int64_t>{2});
        CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(probs[0] >= 0.0);

        Tensor d = m.discriminate(z);
        CHECK(d.item() > 0.0);
        CHECK(d.item() < 1.0);
        double sim = m.similarity(z, z);
        CHECK(sim > 0.0);
        CHECK(sim < 1.0);
    }
}

TEST_CASE("vae draw is mu plus sigma times eps") {
    Model m = Model::init(tiny_spec(EncoderKind::recurrent), 5);
    auto rng = make_rng(53);
    Tensor x = random_tensor({30, 4}, rng);
    NodePtr z, mu, sigma;
    m.vae_nodes(constant(x), Tensor({4}, {0.0, 0.0, 0.0, 0.0}), &z, &mu, &sigma);
    for (int64_t i = 0; i < 4; ++i) {
        CHECK(z->value[i] == doctest::Approx(mu->value[i]).epsilon(1e-15));
        CHECK(sigma->value[i] > 0.0);
    }
    // the deterministic embedding of a VAE model is the mean head
    Tensor enc = m.encode(x);
    for (int64_t i = 0; i < 4; ++i) CHECK(enc[i] == doctest::Approx(mu->value[i]).epsilon(1e-15));
}

TEST_CASE("an autoencoder overfits a single sample") {
    for (EncoderKind enc : {EncoderKind::recurrent, EncoderKind::conv1d}) {
        ModelSpec spec = tiny_spec(enc);
        spec.vae = false;
        spec.discriminator = false;
        Model m = Model::init(spec, 7);
        auto rng = make_rng(59);
        Tensor x = random_tensor({30, 4}, rng, 0.5);

        double first = 0.0, last = 0.0;
        for (int step = 0; step < 150; ++step) {
            NodePtr recon = m.decode_node(m.encode_node(constant(x)));
            LossValue lv = ae_loss(constant(x), recon);
            if (step == 0) first = lv.scalar();
            last = lv.scalar();
            sgd_step(m.params(), backward(lv.node, m.params()), 0.01);
        }
        CHECK(last < 0.5 * first);
    }
}

TEST_CASE("freezing lower layer groups pins their tensors") {
    Model m = Model::init(tiny_spec(EncoderKind::recurrent), 9);
    auto rng = make_rng(61);
    Tensor x = random_tensor({30, 4}, rng);

    ParameterSet before = m.params().clone();
    FreezePolicy policy;
    policy.none = false;
    policy.lower_k = 1;
    freeze_layers(m.params(), policy);

    LossValue lv = ae_loss(constant(x), m.decode_node(m.encode_node(constant(x))));
    sgd_step(m.params(), backward(lv.node, m.params()), 0.05);

    bool upper_moved = false;
    for (const auto& e : m.params().entries()) {
        const ParamEntry* b = before.find(e.name);
        bool moved = false;
        for (int64_t i = 0; i < e.node->value.numel(); ++i)
            if (e.node->value[i] != b->node->value[i]) moved = true;
        if (e.layer_group == 0)
            CHECK_FALSE(moved);
        else if (moved)
            upper_moved = true;
    }
    CHECK(upper_moved);
}

TEST_CASE("checkpoint round-trip preserves parameters and spec") {
    Model m = Model::init(tiny_spec(EncoderKind::conv1d), 11);
    auto rng = make_rng(67);
    Tensor x = random_tensor({30, 4}, rng);
    Tensor z0 = m.encode(x);

    std::string path = temp_path("loglearn_test_model.ckpt");
    m.save(path);
    Model loaded = Model::load(path);
    CHECK(loaded.spec().to_text() == m.spec().to_text());
    Tensor z1 = loaded.encode(x);
    for (int64_t i = 0; i < z0.numel(); ++i) CHECK(z0[i] == z1[i]);
    std::remove(path.c_str());
    std::remove((path + ".spec").c_str());
}

TEST_CASE("feature maps exist for every advertised delta layer") {
    for (EncoderKind enc : {EncoderKind::recurrent, EncoderKind::conv1d}) {
        Model m = Model::init(tiny_spec(enc), 13);
        auto rng = make_rng(71);
        FeatureMaps fm;
        m.encode_node(constant(random_tensor({30, 4}, rng)), &fm);
        for (const auto& name : m.feature_map_layers()) CHECK(fm.find(name) != nullptr);
    }
}

TEST_CASE("spec validation rejects inconsistent head sets") {
    ModelSpec s = tiny_spec(EncoderKind::recurrent);
    s.decoder = false;  // vae still set
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("encoder and head gradients match finite differences") {
    auto rng = make_rng(73);
    for (EncoderKind enc : {EncoderKind::recurrent, EncoderKind::conv1d}) {
        ModelSpec spec = tiny_spec(enc);
        Model m = Model::init(spec, 17);
        Tensor x = random_tensor({30, 4}, rng, 0.5);

        std::vector<NodePtr> leaves;
        for (const auto& e : m.params().entries()) leaves.push_back(e.node);
        CHECK(testutil::max_grad_error(leaves, [&] {
                  NodePtr z = m.encode_node(constant(x));
                  return ae_loss(constant(x), m.decode_node(z)).node;
              }) < 1e-4);
    }
}
