#include "loglearn/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "loglearn/rng.hpp"

namespace loglearn {

namespace {

constexpr double kProbEps = 1e-7;
constexpr double kLogVarLo = -10.0;
constexpr double kLogVarHi = 10.0;
constexpr int64_t kConvKernel = 5;
constexpr int64_t kConvStride = 2;

Tensor xavier(std::vector<int64_t> shape, int64_t fan_in, int64_t fan_out,
              std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = u(rng);
    return t;
}

NodePtr linear(const ParameterSet& params, const std::string& prefix, const NodePtr& x) {
    const ParamEntry* w = params.find(prefix + ".w");
    const ParamEntry* b = params.find(prefix + ".b");
    if (!w || !b) throw ConfigError("model: missing layer " + prefix);
    return add(matmul(w->node, x), b->node);
}

int64_t conv_out_len(int64_t t) { return (t - kConvKernel) / kConvStride + 1; }

}  // namespace

void ModelSpec::validate() const {
    if (embedding_dim < 1 || hidden < 1 || interval_len < 1 || channels < 1)
        throw ConfigError("model spec: dimensions must be positive");
    if (vae && !decoder) throw ConfigError("model spec: vae head requires the decoder head");
    if (ar_horizon < 0 || classes < 0) throw ConfigError("model spec: negative head size");
    if (encoder == EncoderKind::conv1d) {
        int64_t t = interval_len;
        for (int block = 0; block < 3; ++block) {
            if (t < kConvKernel)
                throw ConfigError("model spec: interval too short for 3 conv blocks");
            t = conv_out_len(t);
        }
    }
}

std::string ModelSpec::to_text() const {
    std::ostringstream os;
    os << "encoder = " << (encoder == EncoderKind::recurrent ? "recurrent" : "conv1d") << "\n"
       << "embedding_dim = " << embedding_dim << "\n"
       << "hidden = " << hidden << "\n"
       << "interval_len = " << interval_len << "\n"
       << "channels = " << channels << "\n"
       << "decoder = " << (decoder ? 1 : 0) << "\n"
       << "vae = " << (vae ? 1 : 0) << "\n"
       << "discriminator = " << (discriminator ? 1 : 0) << "\n"
       << "similarity = " << (similarity ? 1 : 0) << "\n"
       << "ar_horizon = " << ar_horizon << "\n"
       << "classes = " << classes << "\n";
    return os.str();
}

ModelSpec ModelSpec::from_text(const std::string& text) {
    ModelSpec spec;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto strip = [](std::string s) {
            size_t b = s.find_first_not_of(" \t\r");
            size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        if (key == "encoder") {
            if (value == "recurrent")
                spec.encoder = EncoderKind::recurrent;
            else if (value == "conv1d")
                spec.encoder = EncoderKind::conv1d;
            else
                throw ConfigError("model spec: unknown encoder " + value);
        } else if (key == "embedding_dim")
            spec.embedding_dim = std::stoi(value);
        else if (key == "hidden")
            spec.hidden = std::stoi(value);
        else if (key == "interval_len")
            spec.interval_len = std::stoi(value);
        else if (key == "channels")
            spec.channels = std::stoi(value);
        else if (key == "decoder")
            spec.decoder = value != "0";
        else if (key == "vae")
            spec.vae = value != "0";
        else if (key == "discriminator")
            spec.discriminator = value != "0";
        else if (key == "similarity")
            spec.similarity = value != "0";
        else if (key == "ar_horizon")
            spec.ar_horizon = std::stoi(value);
        else if (key == "classes")
            spec.classes = std::stoi(value);
    }
    spec.validate();
    return spec;
}

NodePtr FeatureMaps::find(const std::string& name) const {
    for (const auto& [n, node] : maps)
        if (n == name) return node;
    return nullptr;
}

Model Model::init(const ModelSpec& spec, uint64_t seed) {
    spec.validate();
    Model m;
    m.spec_ = spec;
    auto rng = make_rng(seed ^ 0x6d6f64656cULL);
    ParameterSet& p = m.params_;
    int64_t h = spec.hidden, d = spec.embedding_dim, ch = spec.channels;
    int64_t l = spec.interval_len;

    int group = 0;
    if (spec.encoder == EncoderKind::recurrent) {
        p.add("enc.lstm.wx", group, xavier({4 * h, ch}, ch, h, rng));
        p.add("enc.lstm.wh", group, xavier({4 * h, h}, h, h, rng));
        Tensor b({4 * h});
        for (int64_t i = h; i < 2 * h; ++i) b[i] = 1.0;  // forget gate bias
        p.add("enc.lstm.b", group, std::move(b));
        ++group;
        p.add("enc.proj.w", group, xavier({d, h}, h, d, rng));
        p.add("enc.proj.b", group, Tensor({d}));
        ++group;
    } else {
        p.add("enc.conv1.w", group, xavier({h, kConvKernel * ch}, kConvKernel * ch, h, rng));
        p.add("enc.conv1.b", group, Tensor({h}));
        ++group;
        p.add("enc.conv2.w", group, xavier({h, kConvKernel * h}, kConvKernel * h, h, rng));
        p.add("enc.conv2.b", group, Tensor({h}));
        ++group;
        p.add("enc.conv3.w", group, xavier({d, kConvKernel * h}, kConvKernel * h, d, rng));
        p.add("enc.conv3.b", group, Tensor({d}));
        ++group;
    }
    if (spec.vae) {
        p.add("vae.mu.w", group, xavier({d, d}, d, d, rng));
        p.add("vae.mu.b", group, Tensor({d}));
        p.add("vae.logvar.w", group, xavier({d, d}, d, d, rng));
        p.add("vae.logvar.b", group, Tensor({d}));
        ++group;
    }
    if (spec.decoder) {
        p.add("dec.fc1.w", group, xavier({h, d}, d, h, rng));
        p.add("dec.fc1.b", group, Tensor({h}));
        ++group;
        p.add("dec.fc2.w", group, xavier({l * ch, h}, h, l * ch, rng));
        p.add("dec.fc2.b", group, Tensor({l * ch}));
        ++group;
    }
    if (spec.discriminator) {
        p.add("disc.fc1.w", group, xavier({h, d}, d, h, rng));
        p.add("disc.fc1.b", group, Tensor({h}));
        p.add("disc.fc2.w", group, xavier({1, h}, h, 1, rng));
        p.add("disc.fc2.b", group, Tensor({1}));
        ++group;
    }
    if (spec.ar_horizon > 0) {
        int64_t hor = spec.ar_horizon;
        p.add("ar.w", group, xavier({hor * ch, d}, d, hor * ch, rng));
        p.add("ar.b", group, Tensor({hor * ch}));
        ++group;
    }
    if (spec.classes > 0) {
        int64_t c = spec.classes;
        p.add("cls.w", group, xavier({c, d}, d, c, rng));
        p.add("cls.b", group, Tensor({c}));
        ++group;
    }
    if (spec.similarity) {
        p.add("sim.w", group, xavier({1, d}, d, 1, rng));
        p.add("sim.b", group, Tensor({1}));
        ++group;
    }
    return m;
}

NodePtr Model::input_node(const Tensor& sample) const {
    if (sample.rank() != 2 || sample.rows() != spec_.interval_len ||
        sample.cols() != spec_.channels)
        throw ShapeError("model: expected input [" + std::to_string(spec_.interval_len) + "," +
                         std::to_string(spec_.channels) + "], got " +
                         Tensor::shape_str(sample.shape()));
    return constant(sample);
}

NodePtr Model::embed_raw(const NodePtr& x, FeatureMaps* fm) const {
    int64_t h = spec_.hidden, ch = spec_.channels;
    if (spec_.encoder == EncoderKind::recurrent) {
        const ParamEntry* wx = params_.find("enc.lstm.wx");
        const ParamEntry* wh = params_.find("enc.lstm.wh");
        const ParamEntry* b = params_.find("enc.lstm.b");
        NodePtr hid = constant(Tensor({h}));
        NodePtr cell = constant(Tensor({h}));
        int64_t steps = x->value.rows();
        for (int64_t t = 0; t < steps; ++t) {
            NodePtr xt = reshape(slice(x, t, t + 1), {ch});
            NodePtr pre = add(add(matmul(wx->node, xt), matmul(wh->node, hid)), b->node);
            NodePtr gi = sigmoid(slice(pre, 0, h));
            NodePtr gf = sigmoid(slice(pre, h, 2 * h));
            NodePtr gg = tanh_op(slice(pre, 2 * h, 3 * h));
            NodePtr go = sigmoid(slice(pre, 3 * h, 4 * h));
            cell = add(mul(gf, cell), mul(gi, gg));
            hid = mul(go, tanh_op(cell));
        }
        if (fm) fm->maps.emplace_back("enc.hidden", hid);
        NodePtr embed = linear(params_, "enc.proj", hid);
        if (fm) fm->maps.emplace_back("enc.embed", embed);
        return embed;
    }
    const ParamEntry* w1 = params_.find("enc.conv1.w");
    const ParamEntry* b1 = params_.find("enc.conv1.b");
    const ParamEntry* w2 = params_.find("enc.conv2.w");
    const ParamEntry* b2 = params_.find("enc.conv2.b");
    const ParamEntry* w3 = params_.find("enc.conv3.w");
    const ParamEntry* b3 = params_.find("enc.conv3.b");
    NodePtr a1 = relu(conv1d(x, w1->node, b1->node, kConvKernel, kConvStride));
    if (fm) fm->maps.emplace_back("enc.conv1", a1);
    NodePtr a2 = relu(conv1d(a1, w2->node, b2->node, kConvKernel, kConvStride));
    if (fm) fm->maps.emplace_back("enc.conv2", a2);
    NodePtr a3 = relu(conv1d(a2, w3->node, b3->node, kConvKernel, kConvStride));
    if (fm) fm->maps.emplace_back("enc.conv3", a3);
    NodePtr embed = mean_rows(a3);
    if (fm) fm->maps.emplace_back("enc.embed", embed);
    return embed;
}

NodePtr Model::encode_node(const NodePtr& x, FeatureMaps* fm) const {
    NodePtr embed = embed_raw(x, fm);
    if (!spec_.vae) return embed;
    NodePtr mu = linear(params_, "vae.mu", embed);
    if (fm) fm->maps.emplace_back("vae.mu", mu);
    return mu;
}

NodePtr Model::decode_node(const NodePtr& z) const {
    if (!spec_.decoder) throw ConfigError("model: no decoder head");
    NodePtr h1 = tanh_op(linear(params_, "dec.fc1", z));
    NodePtr flat = linear(params_, "dec.fc2", h1);
    return reshape(flat, {spec_.interval_len, spec_.channels});
}

void Model::vae_nodes(const NodePtr& x, const Tensor& eps, NodePtr* z, NodePtr* mu,
                      NodePtr* sigma, FeatureMaps* fm) const {
    if (!spec_.vae) throw ConfigError("model: no vae head");
    NodePtr embed = embed_raw(x, fm);
    *mu = linear(params_, "vae.mu", embed);
    NodePtr logvar = clamp(linear(params_, "vae.logvar", embed), kLogVarLo, kLogVarHi);
    *sigma = exp_op(affine(logvar, 0.5, 0.0));
    *z = add(*mu, mul(*sigma, constant(eps)));
    if (fm) fm->maps.emplace_back("vae.mu", *mu);
}

NodePtr Model::discriminate_node(const NodePtr& z) const {
    if (!spec_.discriminator) throw ConfigError("model: no discriminator head");
    NodePtr h1 = tanh_op(linear(params_, "disc.fc1", z));
    return clamp(sigmoid(linear(params_, "disc.fc2", h1)), kProbEps, 1.0 - kProbEps);
}

NodePtr Model::predict_next_node(const NodePtr& z) const {
    if (spec_.ar_horizon <= 0) throw ConfigError("model: no autoregressive head");
    NodePtr flat = linear(params_, "ar", z);
    return reshape(flat, {spec_.ar_horizon, spec_.channels});
}

NodePtr Model::classify_node(const NodePtr& z) const {
    if (spec_.classes <= 0) throw ConfigError("model: no classifier head");
    return softmax(linear(params_, "cls", z));
}

NodePtr Model::similarity_node(const NodePtr& za, const NodePtr& zb) const {
    if (!spec_.similarity) throw ConfigError("model: no similarity head");
    NodePtr diff = abs_op(sub(za, zb));
    return clamp(sigmoid(linear(params_, "sim", diff)), kProbEps, 1.0 - kProbEps);
}

Tensor Model::encode(const Tensor& sample) const { return encode_node(input_node(sample))->value; }

Tensor Model::decode(const Tensor& z) const { return decode_node(constant(z))->value; }

VaeDraw Model::vae_sample(const Tensor& sample, uint64_t seed) const {
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor eps({spec_.embedding_dim});
    for (int64_t i = 0; i < eps.numel(); ++i) eps[i] = normal(rng);
    NodePtr z, mu, sigma;
    vae_nodes(input_node(sample), eps, &z, &mu, &sigma);
    return VaeDraw{z->value, mu->value, sigma->value};
}

Tensor Model::discriminate(const Tensor& z) const { return discriminate_node(constant(z))->value; }

Tensor Model::predict_next(const Tensor& sample, int h) const {
    if (h != spec_.ar_horizon)
        throw ShapeError("predict_next: horizon " + std::to_string(h) +
                         " does not match the model's ar head (" +
                         std::to_string(spec_.ar_horizon) + ")");
    return predict_next_node(encode_node(input_node(sample)))->value;
}

Tensor Model::classify(const Tensor& z) const { return classify_node(constant(z))->value; }

double Model::similarity(const Tensor& a, const Tensor& b) const {
    return similarity_node(constant(a), constant(b))->value.item();
}

std::vector<std::string> Model::feature_map_layers() const {
    std::vector<std::string> out;
    if (spec_.encoder == EncoderKind::recurrent)
        out = {"enc.hidden", "enc.embed"};
    else
        out = {"enc.conv1", "enc.conv2", "enc.conv3", "enc.embed"};
    if (spec_.vae) out.push_back("vae.mu");
    return out;
}

void Model::save(const std::string& checkpoint_path) const {
    save_checkpoint(checkpoint_path, params_);
    std::ofstream os(checkpoint_path + ".spec", std::ios::trunc);
    if (!os) throw DataError("model: cannot write sidecar for " + checkpoint_path);
    os << spec_.to_text();
}

Model Model::load(const std::string& checkpoint_path) {
    std::ifstream is(checkpoint_path + ".spec");
    if (!is) throw DataError("model: missing sidecar " + checkpoint_path + ".spec");
    std::stringstream buf;
    buf << is.rdbuf();
    Model m = Model::init(ModelSpec::from_text(buf.str()), 0);
    load_checkpoint(checkpoint_path, m.params_);
    return m;
}

void freeze_layers(ParameterSet& params, const FreezePolicy& policy) {
    if (policy.none)
        params.unfreeze_all();
    else
        params.freeze_lower(policy.lower_k);
}

}  // namespace loglearn
