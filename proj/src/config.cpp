#include "loglearn/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace loglearn {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

FlatConfig parse_sectioned(const std::string& text) {
    FlatConfig flat;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unclosed section");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        flat[section.empty() ? key : section + "." + key] = value;
    }
    return flat;
}

void flatten_json(const nlohmann::json& j, const std::string& prefix, FlatConfig& flat) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), flat);
    } else if (j.is_array()) {
        std::string joined;
        for (const auto& v : j) {
            if (!joined.empty()) joined += ",";
            joined += v.is_string() ? v.get<std::string>() : v.dump();
        }
        flat[prefix] = joined;
    } else if (j.is_string()) {
        flat[prefix] = j.get<std::string>();
    } else {
        flat[prefix] = j.dump();
    }
}

// Reads flat keys while recording which ones were consumed, so typos in key
// names fail loudly instead of silently using a default.
struct Reader {
    const FlatConfig& flat;
    std::map<std::string, bool> seen;

    explicit Reader(const FlatConfig& f) : flat(f) {
        for (const auto& [k, v] : f) seen[k] = false;
    }

    const std::string* raw(const std::string& key) {
        auto it = flat.find(key);
        if (it == flat.end()) return nullptr;
        seen[key] = true;
        return &it->second;
    }
    std::string str(const std::string& key, const std::string& dflt) {
        const std::string* v = raw(key);
        return v ? *v : dflt;
    }
    int64_t integer(const std::string& key, int64_t dflt) {
        const std::string* v = raw(key);
        if (!v) return dflt;
        try {
            size_t pos = 0;
            int64_t out = std::stoll(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return out;
        } catch (...) {
            throw ConfigError("config: " + key + " must be an integer, got \"" + *v + "\"");
        }
    }
    double real(const std::string& key, double dflt) {
        const std::string* v = raw(key);
        if (!v) return dflt;
        try {
            size_t pos = 0;
            double out = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return out;
        } catch (...) {
            throw ConfigError("config: " + key + " must be a number, got \"" + *v + "\"");
        }
    }
    bool boolean(const std::string& key, bool dflt) {
        const std::string* v = raw(key);
        if (!v) return dflt;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ConfigError("config: " + key + " must be a boolean, got \"" + *v + "\"");
    }
    std::vector<std::string> list(const std::string& key) {
        const std::string* v = raw(key);
        std::vector<std::string> out;
        if (!v || v->empty()) return out;
        std::istringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(trim(item));
        return out;
    }

    void check_all_consumed() const {
        for (const auto& [k, used] : seen)
            if (!used) throw ConfigError("config: unknown key \"" + k + "\"");
    }
};

ClusterAlgo parse_algo(const std::string& name) {
    if (name == "kmeans") return ClusterAlgo::kmeans;
    if (name == "gmm") return ClusterAlgo::gmm;
    if (name == "agglomerative") return ClusterAlgo::agglomerative;
    throw ConfigError("config: unknown clustering algorithm \"" + name + "\"");
}

void fill_train(Reader& r, const std::string& prefix, TrainSettings& t, int default_epochs) {
    t.objective = parse_objective(r.str("train.objective", "ae"));
    t.epochs = static_cast<int>(r.integer(prefix + ".epochs", default_epochs));
    double lr_default = t.objective == Objective::siamese ? 0.01 : 0.001;
    t.lr = r.real(prefix + ".lr", lr_default);
    t.batch_size = static_cast<int>(r.integer(prefix + ".batch_size", 16));
    for (const auto& e : r.list(prefix + ".lr_decay_epochs"))
        t.lr_decay_epochs.push_back(std::stoi(e));
    t.lr_decay_factor = r.real(prefix + ".lr_decay_factor", 0.1);
    t.margin = r.real("train.margin", 1.0);
    t.kl_weight = r.real("train.kl_weight", 1.0);
    t.adversarial_weight = r.real("train.adversarial_weight", 1.0);
    t.aux_class_weight = r.real("train.aux_class_weight", 0.0);
    t.aux_ar_weight = r.real("train.aux_ar_weight", 0.0);
    t.augment.noise = r.boolean("train.augment_noise", false);
    t.augment.noise_sigma = r.real("train.noise_sigma", 0.05);
    t.augment.mask = r.boolean("train.augment_mask", false);
    t.augment.mask_p = r.real("train.mask_p", 0.1);
    t.hard_negatives = r.boolean("train.hard_negatives", false);
}

}  // namespace

FlatConfig parse_config_text(const std::string& text) {
    size_t b = text.find_first_not_of(" \t\r\n");
    if (b != std::string::npos && text[b] == '{') {
        nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
        if (j.is_discarded()) throw ConfigError("config: invalid JSON");
        FlatConfig flat;
        flatten_json(j, "", flat);
        return flat;
    }
    return parse_sectioned(text);
}

FlatConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

EvalTarget parse_eval_target(const std::string& name) {
    if (name == "geographical") return EvalTarget::geographical;
    if (name == "formation") return EvalTarget::formation;
    if (name == "formation_class") return EvalTarget::formation_class;
    if (name == "rock_type") return EvalTarget::rock_type;
    throw ConfigError("config: unknown evaluation target \"" + name + "\"");
}

std::string eval_target_name(EvalTarget t) {
    switch (t) {
        case EvalTarget::geographical: return "geographical";
        case EvalTarget::formation: return "formation";
        case EvalTarget::formation_class: return "formation_class";
        case EvalTarget::rock_type: return "rock_type";
    }
    return "?";
}

ExperimentConfig ExperimentConfig::from_flat(const FlatConfig& flat) {
    ExperimentConfig cfg;
    cfg.flat = flat;
    Reader r(flat);

    cfg.data_path = r.str("data.path", "");
    cfg.source_path = r.str("data.source_path", "");
    for (const auto& [k, v] : flat)
        if (k.rfind("schema.", 0) == 0) {
            cfg.schema.columns[k.substr(7)] = v;
            r.seen[k] = true;
        }

    cfg.test_wells = static_cast<int>(r.integer("split.test_wells", 10));
    cfg.wells_used = static_cast<int>(r.integer("split.wells_used", 0));
    cfg.interval_len = r.integer("sampling.interval_len", 100);
    cfg.n_samples = r.integer("sampling.n", 512);
    std::string pairing = r.str("sampling.pairing", "well_linking");
    if (pairing == "well_linking") {
        cfg.pairing.mode = PairingMode::well_linking;
    } else if (pairing == "close_well_linking") {
        cfg.pairing.mode = PairingMode::close_well_linking;
        cfg.pairing.close_param = r.real("sampling.close_param", 0.0);
        if (cfg.pairing.close_param <= 0.0)
            throw ConfigError("config: close_well_linking needs sampling.close_param > 0");
    } else {
        throw ConfigError("config: unknown pairing rule \"" + pairing + "\"");
    }
    // the axis key is read even when the base value comes from a sweep child
    r.raw("sampling.close_param");

    std::string enc = r.str("model.encoder", "recurrent");
    if (enc == "recurrent")
        cfg.model.encoder = EncoderKind::recurrent;
    else if (enc == "conv1d")
        cfg.model.encoder = EncoderKind::conv1d;
    else
        throw ConfigError("config: unknown encoder \"" + enc + "\"");
    cfg.model.embedding_dim = static_cast<int>(r.integer("model.embedding_dim", 16));
    cfg.model.hidden = static_cast<int>(r.integer("model.hidden", 32));
    cfg.model.interval_len = static_cast<int>(cfg.interval_len);
    cfg.model.channels = kNumChannels;
    cfg.model.decoder = r.boolean("model.decoder", false);
    cfg.model.vae = r.boolean("model.vae", false);
    cfg.model.discriminator = r.boolean("model.discriminator", false);
    cfg.model.similarity = r.boolean("model.similarity", false);
    cfg.model.ar_horizon = static_cast<int>(r.integer("model.ar_horizon", 0));
    cfg.model.classes = static_cast<int>(r.integer("model.classes", 0));

    fill_train(r, "train", cfg.train, 35);
    cfg.transfer_train = cfg.train;
    cfg.transfer_train.lr_decay_epochs.clear();
    fill_train(r, "transfer", cfg.transfer_train, 15);

    // heads implied by the objective
    switch (cfg.train.objective) {
        case Objective::ae: cfg.model.decoder = true; break;
        case Objective::vae: cfg.model.decoder = cfg.model.vae = true; break;
        case Objective::aae: cfg.model.decoder = cfg.model.discriminator = true; break;
        case Objective::ar:
            if (cfg.model.ar_horizon <= 0) cfg.model.ar_horizon = 3;
            break;
        case Objective::triplet: break;
        case Objective::siamese: cfg.model.similarity = true; break;
    }
    if (cfg.train.aux_ar_weight > 0.0 && cfg.model.ar_horizon <= 0) cfg.model.ar_horizon = 3;
    cfg.model.validate();

    if (const std::string* method = r.raw("transfer.method")) {
        TransferConfig tc;
        tc.method = parse_transfer_method(*method);
        tc.lambda = r.real("transfer.lambda", 1.0);
        tc.alpha = r.real("transfer.alpha", 1.0);
        tc.delta_layers = r.list("transfer.delta_layers");
        tc.eta = r.real("transfer.eta", 0.001);
        tc.k = static_cast<int>(r.integer("transfer.k", 1));
        int freeze_lower = static_cast<int>(r.integer("transfer.freeze_lower", 0));
        if (freeze_lower > 0) {
            tc.freeze.none = false;
            tc.freeze.lower_k = freeze_lower;
        }
        cfg.transfer = tc;
    }
    cfg.anchor_path = r.str("transfer.anchor", "");
    cfg.checkpoint_path = r.str("checkpoint", "");

    cfg.eval.target = parse_eval_target(r.str("eval.target", "formation"));
    auto algos = r.list("eval.algorithms");
    if (!algos.empty()) {
        cfg.eval.algorithms.clear();
        for (const auto& a : algos) cfg.eval.algorithms.push_back(parse_algo(a));
    }
    cfg.eval.k = static_cast<int>(r.integer("eval.k", 0));
    cfg.eval.restarts = static_cast<int>(r.integer("eval.restarts", 5));
    cfg.eval.geo_k = static_cast<int>(r.integer("eval.geo_k", 5));
    cfg.eval.n_intervals = static_cast<int>(r.integer("eval.n_intervals", 256));
    cfg.eval.n_pairs = static_cast<int>(r.integer("eval.n_pairs", 200));

    for (const auto& [k, v] : flat)
        if (k.rfind("sweep.", 0) == 0) {
            SweepAxis axis{k.substr(6), r.list(k)};
            if (axis.values.empty()) throw ConfigError("config: empty sweep axis " + k);
            cfg.sweep_axes.push_back(std::move(axis));
        }

    r.check_all_consumed();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_flat(parse_config_file(path));
}

uint64_t config_hash(const FlatConfig& flat) {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, v] : flat) {
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    return h;
}

}  // namespace loglearn
