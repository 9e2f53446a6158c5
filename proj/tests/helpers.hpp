#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "loglearn/autodiff.hpp"
#include "loglearn/data.hpp"
#include "loglearn/rng.hpp"

namespace testutil {

using loglearn::NodePtr;
using loglearn::Tensor;
using loglearn::WellRecord;

// Central-difference gradient check. `build` must construct a fresh scalar
// graph from the current leaf values each call (ops evaluate eagerly).
inline double max_grad_error(std::vector<NodePtr>& leaves,
                             const std::function<NodePtr()>& build, double h = 1e-5) {
    // stale grads survive on leaves that the current graph does not reach
    for (auto& l : leaves) l->grad = Tensor();
    NodePtr root = build();
    loglearn::backward(root);
    std::vector<Tensor> grads;
    for (auto& l : leaves) grads.push_back(l->grad);

    double worst = 0.0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        Tensor& v = leaves[li]->value;
        for (int64_t i = 0; i < v.numel(); ++i) {
            double keep = v[i];
            v[i] = keep + h;
            double f1 = build()->value.item();
            v[i] = keep - h;
            double f0 = build()->value.item();
            v[i] = keep;
            double fd = (f1 - f0) / (2.0 * h);
            double g = grads[li].numel() > 0 ? grads[li][i] : 0.0;
            double rel = std::fabs(g - fd) / std::max(1.0, std::max(std::fabs(g), std::fabs(fd)));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

// Synthetic wells from `regimes` AR(1) processes with distinct coefficients
// and per-channel offsets; formation, class, coordinates and rock type all
// follow the regime so every label target is available.
inline std::vector<WellRecord> make_synthetic_wells(int n_wells, int steps, uint64_t seed,
                                                    int regimes = 2) {
    auto rng = loglearn::make_rng(seed);
    std::normal_distribution<double> noise(0.0, 0.4);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);

    std::vector<WellRecord> wells;
    for (int w = 0; w < n_wells; ++w) {
        int r = w % regimes;
        double phi = 0.2 + 0.7 * r / std::max(1, regimes - 1);
        std::array<double, loglearn::kNumChannels> offset{};
        for (int c = 0; c < loglearn::kNumChannels; ++c)
            offset[static_cast<size_t>(c)] = r * (c % 2 == 0 ? 2.0 : -2.0);

        WellRecord well;
        char id[16];
        std::snprintf(id, sizeof id, "W%03d", w);
        well.well_id = id;
        well.formation = "F" + std::to_string(r);
        well.class_label = "C" + std::to_string(r);
        well.latitude = 10.0 * r + jitter(rng);
        well.longitude = 10.0 * r + jitter(rng);

        std::array<double, loglearn::kNumChannels> x = offset;
        for (int t = 0; t < steps; ++t) {
            well.depth.push_back(1000.0 + t);
            for (int c = 0; c < loglearn::kNumChannels; ++c) {
                auto ci = static_cast<size_t>(c);
                x[ci] = offset[ci] + phi * (x[ci] - offset[ci]) + noise(rng);
                well.channels[ci].push_back(x[ci]);
            }
            well.rock_type.push_back(x[0] > offset[0] ? "sand" : "shale");
        }
        wells.push_back(std::move(well));
    }
    return wells;
}

inline void standardize_all(std::vector<WellRecord>& wells) {
    loglearn::standardize(wells, loglearn::compute_channel_stats(wells));
}

inline void write_wells_csv(const std::string& path, const std::vector<WellRecord>& wells) {
    std::ofstream out(path, std::ios::binary);
    out << "well_id,depth,DRHO,DENS,GR,DTC,formation,class,rock_type,latitude,longitude\n";
    for (const auto& w : wells)
        for (size_t i = 0; i < w.depth.size(); ++i) {
            out << w.well_id << "," << w.depth[i];
            for (int c = 0; c < loglearn::kNumChannels; ++c)
                out << "," << w.channels[static_cast<size_t>(c)][i];
            out << "," << w.formation << "," << w.class_label << ","
                << (w.rock_type.empty() ? "" : w.rock_type[i]) << "," << *w.latitude << ","
                << *w.longitude << "\n";
        }
}

inline Tensor random_tensor(std::vector<int64_t> shape, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = normal(rng);
    return t;
}

}  // namespace testutil
