#include "loglearn/params.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace loglearn {

NodePtr ParameterSet::add(const std::string& name, int layer_group, Tensor init, bool trainable) {
    if (find(name)) throw ConfigError("duplicate parameter name: " + name);
    auto node = leaf(std::move(init), trainable, name);
    entries_.push_back(ParamEntry{name, layer_group, trainable, node});
    return node;
}

const ParamEntry* ParameterSet::find(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return &e;
    return nullptr;
}

ParamEntry* ParameterSet::find(const std::string& name) {
    for (auto& e : entries_)
        if (e.name == name) return &e;
    return nullptr;
}

int ParameterSet::num_groups() const {
    int mx = -1;
    for (const auto& e : entries_) mx = std::max(mx, e.layer_group);
    return mx + 1;
}

void ParameterSet::freeze_lower(int k) {
    for (auto& e : entries_) {
        e.trainable = e.layer_group >= k;
        e.node->requires_grad = e.trainable;
    }
}

void ParameterSet::unfreeze_all() {
    for (auto& e : entries_) {
        e.trainable = true;
        e.node->requires_grad = true;
    }
}

ParameterSet ParameterSet::clone(bool as_frozen) const {
    ParameterSet out;
    for (const auto& e : entries_)
        out.add(e.name, e.layer_group, e.node->value, as_frozen ? false : e.trainable);
    return out;
}

void ParameterSet::assign_values(const ParameterSet& other) {
    for (auto& e : entries_) {
        const ParamEntry* src = other.find(e.name);
        if (!src) throw ConfigError("assign_values: missing parameter " + e.name);
        if (!src->node->value.same_shape(e.node->value))
            throw ShapeError("assign_values: shape mismatch for " + e.name);
        e.node->value = src->node->value;
    }
}

double ParameterSet::squared_distance(const ParameterSet& other) const {
    double acc = 0.0;
    for (const auto& e : entries_) {
        if (!e.trainable) continue;
        const ParamEntry* o = other.find(e.name);
        if (!o) throw ConfigError("squared_distance: missing parameter " + e.name);
        for (int64_t i = 0; i < e.node->value.numel(); ++i) {
            double d = e.node->value[i] - o->node->value[i];
            acc += d * d;
        }
    }
    return acc;
}

GradientMap backward(const NodePtr& root, const ParameterSet& trainable) {
    backward(root);
    GradientMap out;
    for (const auto& e : trainable.entries()) {
        if (!e.trainable) continue;
        if (e.node->grad.numel() > 0)
            out[e.name] = e.node->grad;
        else
            out[e.name] = Tensor(e.node->value.shape());  // unreachable -> zero
    }
    return out;
}

void sgd_step(ParameterSet& params, const GradientMap& grads, double lr) {
    for (const auto& [name, g] : grads)
        if (!g.all_finite()) throw NumericError("sgd_step: non-finite gradient for " + name);
    for (auto& e : params.entries()) {
        if (!e.trainable) continue;
        auto it = grads.find(e.name);
        if (it == grads.end()) continue;
        const Tensor& g = it->second;
        if (!g.same_shape(e.node->value))
            throw ShapeError("sgd_step: gradient shape mismatch for " + e.name);
        for (int64_t i = 0; i < g.numel(); ++i) e.node->value[i] -= lr * g[i];
    }
}

namespace {

constexpr char kMagic[4] = {'L', 'L', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterSet& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("checkpoint: cannot open for write: " + path);
    os.write(kMagic, 4);
    write_pod<uint32_t>(os, kVersion);
    write_pod<uint32_t>(os, static_cast<uint32_t>(params.entries().size()));
    for (const auto& e : params.entries()) {
        write_pod<uint32_t>(os, static_cast<uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        const Tensor& t = e.node->value;
        write_pod<uint32_t>(os, static_cast<uint32_t>(t.rank()));
        for (int64_t d : t.shape()) write_pod<uint64_t>(os, static_cast<uint64_t>(d));
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    if (!os) throw DataError("checkpoint: write failed: " + path);
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    uint32_t version = read_pod<uint32_t>(is);
    if (version != kVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    uint32_t count = read_pod<uint32_t>(is);
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = read_pod<uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        uint32_t rank = read_pod<uint32_t>(is);
        std::vector<int64_t> shape(rank);
        int64_t numel = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<int64_t>(read_pod<uint64_t>(is));
            numel *= shape[d];
        }
        std::vector<double> values(static_cast<size_t>(numel));
        is.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        if (!is) throw DataError("checkpoint: truncated tensor data in " + path);
        out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return out;
}

void load_checkpoint(const std::string& path, ParameterSet& params) {
    auto tensors = read_checkpoint(path);
    for (auto& [name, tensor] : tensors) {
        ParamEntry* e = params.find(name);
        if (!e) throw DataError("checkpoint: unknown parameter " + name);
        if (!tensor.same_shape(e->node->value))
            throw ShapeError("checkpoint: shape mismatch for " + name);
        e->node->value = std::move(tensor);
    }
}

}  // namespace loglearn
